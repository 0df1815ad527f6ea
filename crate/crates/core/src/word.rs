//! Reduced words over a finite generating set.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A reduced word: adjacent letters use distinct generators, exponents are nonzero.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Word(Vec<(usize, i64)>);

impl Word {
    /// Uniform length in `0..=max_len`, then uniformly random letters avoiding cancellation.
    pub fn random(rng: &mut impl rand::Rng, generators: usize, max_len: usize) -> Self {
        let len = rng.gen_range(0..=max_len);
        let mut letters: Vec<(usize, i64)> = Vec::with_capacity(len);
        for _ in 0..len {
            loop {
                let g = rng.gen_range(0..generators);
                let s = if rng.gen_bool(0.5) { 1 } else { -1 };
                if letters.last() != Some(&(g, -s)) {
                    letters.push((g, s));
                    break;
                }
            }
        }
        Word::from_letters(letters)
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn letter(generator: usize, exponent: i64) -> Self {
        Word::from_letters([(generator, exponent)])
    }

    /// Reduces an arbitrary letter sequence (free reduction).
    pub fn from_letters(letters: impl IntoIterator<Item = (usize, i64)>) -> Self {
        let mut out: Vec<(usize, i64)> = Vec::new();
        for (g, e) in letters {
            if e == 0 {
                continue;
            }
            match out.last_mut() {
                Some((lg, le)) if *lg == g => {
                    *le += e;
                    if *le == 0 {
                        out.pop();
                    }
                }
                _ => out.push((g, e)),
            }
        }
        Word(out)
    }

    pub fn letters(&self) -> &[(usize, i64)] {
        &self.0
    }

    /// Σ |exponent|.
    pub fn len(&self) -> usize {
        self.0.iter().map(|(_, e)| e.unsigned_abs() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|&(g, e)| (g, -e)).collect())
    }

    pub fn concat(&self, other: &Word) -> Word {
        Word::from_letters(self.0.iter().chain(other.0.iter()).copied())
    }

    /// `[u, v] = u v u⁻¹ v⁻¹`.
    pub fn commutator(u: &Word, v: &Word) -> Word {
        u.concat(v).concat(&u.inverse()).concat(&v.inverse())
    }

    /// Last unit symbol `(generator, ±1)`.
    pub fn last_symbol(&self) -> Option<(usize, i64)> {
        self.0.last().map(|&(g, e)| (g, e.signum()))
    }

    pub fn render(&self, names: &[String]) -> String {
        if self.0.is_empty() {
            return "id".into();
        }
        self.0
            .iter()
            .map(|&(g, e)| {
                let n = names.get(g).cloned().unwrap_or_else(|| format!("g{g}"));
                if e == 1 {
                    n
                } else {
                    format!("{n}^{e}")
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render(&[]))
    }
}
