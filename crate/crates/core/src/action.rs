//! Finitely generated actions: the JSON action spec, word realization and
//! element enumeration.

use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::homeo::{LineMap, PlMap, SmoothMap};
use crate::rational::{serde_q, Q};
use crate::word::Word;

/// One generator as it appears in an action-spec file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorKind {
    Pl {
        #[serde(with = "serde_q::vec")]
        breakpoints: Vec<Q>,
        #[serde(with = "serde_q::vec")]
        slopes: Vec<Q>,
        #[serde(with = "serde_q::pair")]
        anchor: (Q, Q),
    },
    Affine {
        #[serde(with = "serde_q")]
        a: Q,
        #[serde(with = "serde_q")]
        b: Q,
    },
    SinePerturbedTranslation { c: f64, eps: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: GeneratorKind,
}

/// The unit of CLI input.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ActionSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub generators: Vec<GeneratorSpec>,
    /// Declared, never inferred: the circle dichotomy's torsion-freeness.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub torsion_free: Option<bool>,
    /// Declared rational values `p/q` of the scaling factor per generator name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub rational_scaling: BTreeMap<String, String>,
}

impl ActionSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            Error::InvalidInput(format!("malformed action spec: {e}"))
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("action spec serializes")
    }
}

/// A realized generating set.
#[derive(Clone, Debug, PartialEq)]
pub struct Action {
    pub names: Vec<String>,
    pub generators: Vec<LineMap>,
}

impl Action {
    pub fn new(names: Vec<String>, generators: Vec<LineMap>) -> Result<Self> {
        if names.len() != generators.len() {
            return Err(Error::InvalidInput("one name per generator required".into()));
        }
        if generators.is_empty() {
            return Err(Error::InvalidInput("an action needs at least one generator".into()));
        }
        Ok(Self { names, generators })
    }

    pub fn from_spec(spec: &ActionSpec) -> Result<Self> {
        let mut names = Vec::new();
        let mut gens = Vec::new();
        for g in &spec.generators {
            let map: LineMap = match &g.kind {
                GeneratorKind::Pl { breakpoints, slopes, anchor } => {
                    PlMap::new(breakpoints.clone(), slopes.clone(), anchor.clone())?.into()
                }
                GeneratorKind::Affine { a, b } => PlMap::affine(a.clone(), b.clone())?.into(),
                GeneratorKind::SinePerturbedTranslation { c, eps } => SmoothMap::sine_translation(*c, *eps)?.into(),
            };
            names.push(g.name.clone());
            gens.push(map);
        }
        Self::new(names, gens)
    }

    pub fn to_spec(&self) -> Result<ActionSpec> {
        let mut generators = Vec::new();
        for (name, g) in self.names.iter().zip(&self.generators) {
            let kind = match g {
                LineMap::Pl(p) if p.is_affine() => {
                    let piece = &p.pieces()[0];
                    GeneratorKind::Affine { a: piece.slope.clone(), b: piece.intercept.clone() }
                }
                LineMap::Pl(p) => {
                    let (breakpoints, slopes, anchor) = p.to_parts();
                    GeneratorKind::Pl { breakpoints, slopes, anchor }
                }
                LineMap::Smooth(SmoothMap::SineTranslation { c, eps }) => {
                    GeneratorKind::SinePerturbedTranslation { c: *c, eps: *eps }
                }
                LineMap::Smooth(SmoothMap::Affine { a, b }) => GeneratorKind::Affine {
                    a: crate::rational::from_f64(*a)?,
                    b: crate::rational::from_f64(*b)?,
                },
                other => return Err(Error::Unsupported(format!("no spec form for {other}"))),
            };
            generators.push(GeneratorSpec { name: name.clone(), kind });
        }
        Ok(ActionSpec { generators, ..Default::default() })
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    /// All generators piecewise-affine, so every check runs exactly.
    pub fn is_pl(&self) -> bool {
        self.generators.iter().all(LineMap::is_exact)
    }

    pub fn symbol(&self, generator: usize, sign: i64) -> LineMap {
        if sign > 0 {
            self.generators[generator].clone()
        } else {
            self.generators[generator].inverse()
        }
    }

    /// `w = s₁ s₂ … sₙ` acts as `s₁ ∘ s₂ ∘ … ∘ sₙ`.
    pub fn realize(&self, w: &Word) -> LineMap {
        let mut acc = LineMap::identity();
        for &(g, e) in w.letters() {
            acc = acc.compose(&self.generators[g].pow(e));
        }
        acc
    }

    pub fn render(&self, w: &Word) -> String {
        w.render(&self.names)
    }

    pub fn generator_word(&self, i: usize) -> Word {
        Word::letter(i, 1)
    }
}

/// A word together with the map it realizes.
#[derive(Clone, Debug)]
pub struct Element {
    pub word: Word,
    pub map: LineMap,
}

impl Element {
    pub fn is_identity(&self) -> bool {
        self.map.is_identity()
    }
}

fn symbols(n: usize) -> Vec<(usize, i64)> {
    (0..n).flat_map(|g| [(g, 1), (g, -1)]).collect()
}

/// Distinct group elements reachable by reduced words of length ≤ `max_len`,
/// identity first, then by word length and symbol order (`g₀, g₀⁻¹, g₁, …`).
///
/// For piecewise-affine actions elements are deduplicated by exact map
/// equality; otherwise every reduced word is its own entry.
pub fn enumerate_elements(action: &Action, max_len: usize) -> Vec<Element> {
    enumerate(action, max_len, action.is_pl())
}

/// Every reduced word of length ≤ `max_len`, with realizations.
pub fn enumerate_words(action: &Action, max_len: usize) -> Vec<Element> {
    enumerate(action, max_len, false)
}

fn enumerate(action: &Action, max_len: usize, dedup: bool) -> Vec<Element> {
    let syms = symbols(action.len());
    let sym_maps: Vec<LineMap> = syms.iter().map(|&(g, s)| action.symbol(g, s)).collect();
    let mut out = vec![Element { word: Word::empty(), map: LineMap::identity() }];
    let mut seen: HashSet<PlMap> = HashSet::new();
    if dedup {
        seen.insert(PlMap::identity());
    }
    let mut frontier: Vec<Element> = out.clone();
    for _ in 0..max_len {
        let candidates: Vec<(usize, usize)> = frontier
            .iter()
            .enumerate()
            .flat_map(|(i, e)| {
                let last = e.word.last_symbol();
                syms.iter()
                    .enumerate()
                    .filter(move |(_, &(g, s))| last != Some((g, -s)))
                    .map(move |(k, _)| (i, k))
            })
            .collect();
        let built: Vec<Element> = candidates
            .par_iter()
            .map(|&(i, k)| {
                let (g, s) = syms[k];
                Element {
                    word: frontier[i].word.concat(&Word::letter(g, s)),
                    map: frontier[i].map.compose(&sym_maps[k]),
                }
            })
            .collect();
        let mut next = Vec::with_capacity(built.len());
        for e in built {
            if dedup {
                let key = e.map.as_pl().expect("dedup only for pl actions").clone();
                if !seen.insert(key) {
                    continue;
                }
            }
            next.push(e);
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::bs12;
    use crate::rational::q;

    #[test]
    fn spec_round_trips_through_json() {
        let text = r#"{"generators":[
            {"name":"a","kind":"affine","a":"1","b":"1"},
            {"name":"p","kind":"pl","breakpoints":["0"],"slopes":["1/2","2"],"anchor":["0","0"]},
            {"name":"s","kind":"sine_perturbed_translation","c":0.3,"eps":0.1}]}"#;
        let spec = ActionSpec::from_json(text).unwrap();
        let action = Action::from_spec(&spec).unwrap();
        assert_eq!(action.len(), 3);
        let again = Action::from_spec(&ActionSpec::from_json(&action.to_spec().unwrap().to_json()).unwrap()).unwrap();
        assert_eq!(again, action);
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = ActionSpec::from_json("{\"generators\": [\n  {\"name\": }]}").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn word_counts_match_free_group_growth() {
        let action = bs12();
        let words = enumerate_words(&action, 3);
        // 1 + 4 + 12 + 36
        assert_eq!(words.len(), 53);
        let elems = enumerate_elements(&action, 3);
        assert!(elems.len() < words.len());
        assert!(elems[0].is_identity());
    }

    #[test]
    fn realize_follows_left_to_right_composition() {
        let action = bs12();
        let w = Word::from_letters([(0, 1), (1, 1)]);
        // a ∘ b = 2x + 1
        assert_eq!(action.realize(&w).eval_q(&q(3)), Some(q(7)));
    }
}
