use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use line_actions::circle::{denjoy_approximant, orbit_density, rotation_number, sine_lift, write_orbit_csv, CircleLift};
use line_actions::constructions::{blowup, bs12, BlowupSpec};
use line_actions::regularity::distortion_sum_check;
use line_actions::report::{run_analyze, run_verify, sha256_hex, write_theta_csv, Format, Loaded, RunConfig, Suite};
use line_actions::{rational, Action, ActionSpec, Error, Interval, LineMap, Real, Result};

#[derive(Parser)]
#[command(name = "line-actions", version, about = "Exact experiments on group actions on the line")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct ConfigArgs {
    #[arg(long, global = true, default_value_t = 6)]
    words_max_len: usize,
    #[arg(long, global = true, default_value_t = 64)]
    power_bound: i64,
    #[arg(long, global = true, default_value_t = 4096)]
    grid: usize,
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: FormatArg,
    /// Write the main artifact here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Run a theorem suite against an action spec.
    Verify {
        spec: PathBuf,
        #[arg(long, default_value = "all")]
        suite: String,
        /// Blow-up provenance; defaults to `<spec stem>.provenance.json` when present.
        #[arg(long)]
        provenance: Option<PathBuf>,
    },
    /// Order table, infinitesimal sample, A/τ/φ per generator.
    Analyze {
        spec: PathBuf,
        #[arg(long)]
        provenance: Option<PathBuf>,
        /// Also write θ samples as CSV.
        #[arg(long)]
        theta: Option<PathBuf>,
    },
    /// Rotation number of a rigid rotation or its blown-up approximant.
    Rotation {
        /// A rational `p/q`, or `golden`, `sqrt2m1`.
        #[arg(long)]
        alpha: String,
        #[arg(long = "N", alias = "n", default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value = "0")]
        x0: String,
        /// Use the blown-up approximant of this depth.
        #[arg(long)]
        denjoy: Option<usize>,
        #[arg(long, default_value = "1/10")]
        l0: String,
        #[arg(long, default_value = "1/2")]
        beta: String,
    },
    /// Distortion sums along an orbit of J.
    Distortion {
        /// Action spec holding the map; otherwise `--c`/`--eps` give a sine-perturbed translation.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        generator: Option<String>,
        #[arg(long, default_value_t = 0.3)]
        c: f64,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        j_lo: String,
        #[arg(long, default_value = "1/10", allow_hyphen_values = true)]
        j_hi: String,
        #[arg(long, default_value_t = 50)]
        n_max: usize,
    },
    /// Blow up an orbit and write the spec plus its provenance.
    Blowup {
        /// `bs12` or a path to an action spec.
        #[arg(long, default_value = "bs12")]
        base: String,
        #[arg(long = "x", allow_hyphen_values = true)]
        x: String,
        #[arg(long, default_value = "1/2")]
        beta: String,
        #[arg(long, default_value = "1/10")]
        l0: String,
        #[arg(long, default_value_t = 5)]
        depth: usize,
    },
}

impl ConfigArgs {
    fn run_config(&self) -> RunConfig {
        RunConfig {
            words_max_len: self.words_max_len,
            power_bound: self.power_bound,
            grid: self.grid,
            tol: self.tol,
            seed: self.seed,
            format: match self.format {
                FormatArg::Json => Format::Json,
                FormatArg::Csv => Format::Csv,
            },
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

fn default_provenance(spec: &Path) -> Option<PathBuf> {
    let stem = spec.file_stem()?.to_str()?;
    let p = spec.with_file_name(format!("{stem}.provenance.json"));
    p.exists().then_some(p)
}

fn load(spec: &Path, provenance: Option<PathBuf>) -> Result<Loaded> {
    let text = read(spec)?;
    let prov = match provenance.or_else(|| default_provenance(spec)) {
        Some(p) => Some(read(&p)?),
        None => None,
    };
    Loaded::from_text(&text, prov.as_deref())
}

fn emit(out: &Option<PathBuf>, body: &[u8]) -> Result<()> {
    match out {
        Some(p) => fs::write(p, body)?,
        None => std::io::stdout().write_all(body)?,
    }
    Ok(())
}

fn parse_alpha(s: &str) -> Result<rational::Q> {
    match s {
        "golden" => rational::from_f64((5f64.sqrt() - 1.0) / 2.0),
        "sqrt2m1" | "sqrt2-1" => rational::from_f64(2f64.sqrt() - 1.0),
        other => rational::parse_q(other),
    }
}

fn run(cli: Cli) -> Result<i32> {
    let config = cli.config.run_config();
    config.validate()?;
    let out = &cli.config.out;
    match cli.command {
        Command::Verify { spec, suite, provenance } => {
            let suite: Suite = suite.parse()?;
            let loaded = load(&spec, provenance)?;
            let report = run_verify(&loaded, suite, &config, Some(spec.display().to_string()));
            let mut body = Vec::new();
            match config.format {
                Format::Json => body.extend(report.to_json().bytes()),
                Format::Csv => report.write_csv(&mut body)?,
            }
            emit(out, &body)?;
            Ok(report.exit_code())
        }
        Command::Analyze { spec, provenance, theta } => {
            let loaded = load(&spec, provenance)?;
            let report = run_analyze(&loaded, &config, Some(spec.display().to_string()));
            let mut csv = Vec::new();
            if let Some(mu) = loaded.measure() {
                write_theta_csv(&mut csv, &mu, config.grid)?;
            }
            if let Some(p) = theta {
                fs::write(p, &csv)?;
            }
            match config.format {
                Format::Json => emit(out, report.to_json().as_bytes())?,
                Format::Csv => emit(out, &csv)?,
            }
            Ok(report.exit_code())
        }
        Command::Rotation { alpha, n, x0, denjoy, l0, beta } => {
            let a = parse_alpha(&alpha)?;
            let lift = match denjoy {
                Some(depth) => CircleLift::Periodic(
                    denjoy_approximant(&a, &rational::parse_q(&l0)?, &rational::parse_q(&beta)?, depth)?.lift,
                ),
                None => CircleLift::rotation(a.clone()),
            };
            let x = rational::parse_q(&x0)?;
            let r = rotation_number(&lift, &Real::Exact(x.clone()), n)?;
            let mut body = Vec::new();
            match config.format {
                Format::Csv => write_orbit_csv(&mut body, &lift, rational::to_f64(&x), n)?,
                Format::Json => {
                    let v = json!({
                        "alpha": alpha,
                        "alpha_q": rational::format_q(&a),
                        "denjoy_depth": denjoy,
                        "x0": x0,
                        "rotation": r,
                        "orbit": orbit_density(&lift, rational::to_f64(&x), n.min(100_000)),
                    });
                    body.extend((serde_json::to_string_pretty(&v).unwrap() + "\n").bytes());
                }
            }
            emit(out, &body)?;
            Ok(0)
        }
        Command::Distortion { spec, generator, c, eps, j_lo, j_hi, n_max } => {
            let (label, f): (String, LineMap) = match spec {
                Some(path) => {
                    let action = Action::from_spec(&ActionSpec::from_json(&read(&path)?)?)?;
                    let name = generator.unwrap_or_else(|| action.names[0].clone());
                    let i = action
                        .names
                        .iter()
                        .position(|n| *n == name)
                        .ok_or_else(|| Error::InvalidInput(format!("no generator named {name}")))?;
                    (name, action.generators[i].clone())
                }
                None => (format!("sine_perturbed_translation({c}, {eps})"), match sine_lift(c, eps)? {
                    CircleLift::Line(m) => m,
                    _ => unreachable!(),
                }),
            };
            let j = Interval::closed(rational::parse_q(&j_lo)?, rational::parse_q(&j_hi)?)?;
            let reports = distortion_sum_check(&f, &j, n_max, config.grid)?;
            let passed = reports.iter().all(|r| r.passed());
            let mut body = Vec::new();
            match config.format {
                Format::Csv => {
                    writeln!(body, "# line-actions distortion v1")?;
                    writeln!(body, "n,distortion,bound,margin")?;
                    for r in &reports {
                        writeln!(body, "{},{},{},{}", r.n, r.distortion, r.bound, r.margin)?;
                    }
                }
                Format::Json => {
                    let v = json!({ "map": label, "j": [j_lo, j_hi], "n_max": n_max, "passed": passed, "reports": reports });
                    body.extend((serde_json::to_string_pretty(&v).unwrap() + "\n").bytes());
                }
            }
            emit(out, &body)?;
            Ok(if passed { 0 } else { 1 })
        }
        Command::Blowup { base, x, beta, l0, depth } => {
            let base_action = if base == "bs12" {
                bs12()
            } else {
                Action::from_spec(&ActionSpec::from_json(&read(Path::new(&base))?)?)?
            };
            let params = BlowupSpec::new(rational::parse_q(&x)?, rational::parse_q(&beta)?, rational::parse_q(&l0)?, depth);
            let b = blowup(&base_action, &params)?;
            let spec_text = b.spec_json()?.to_json() + "\n";
            let prov_text = serde_json::to_string_pretty(&b.provenance()?).unwrap() + "\n";
            match out {
                Some(p) => {
                    fs::write(p, &spec_text)?;
                    let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("blowup");
                    let prov = p.with_file_name(format!("{stem}.provenance.json"));
                    fs::write(&prov, &prov_text)?;
                    eprintln!("wrote {} and {} (spec sha256 {})", p.display(), prov.display(), sha256_hex(spec_text.as_bytes()));
                }
                None => {
                    let v = json!({ "spec": b.spec_json()?, "provenance": b.provenance()? });
                    emit(out, (serde_json::to_string_pretty(&v).unwrap() + "\n").as_bytes())?;
                }
            }
            Ok(0)
        }
    }
}

fn exit_for(e: &Error) -> u8 {
    match e {
        Error::HypothesisViolated { .. } | Error::UncertifiedOrbit(_) | Error::LemmaHypothesis(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("LINE_ACTIONS_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global().ok();
    }
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}
