use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use loam::input::{self, InputError, Source};
use loam::parallel;
use loam::report::{
    self, CompareReport, DesignEcho, EstimateOptions, PlanReport, Provenance, TruthReport,
};
use loam_core::{
    solve_observers, solve_subjects, true_loam, BootstrapConfig, Design, LoamKind, ModelParams,
    PilotEstimates, DEFAULT_Z,
};

#[derive(Parser)]
#[command(name = "loam", version, about = "Limits of agreement with the mean")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Reproducibility,
    Repeatability,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolveFor {
    Observers,
    Subjects,
}

#[derive(Subcommand)]
enum Command {
    /// ANOVA, variance components, LOAM and intervals for one long-format CSV.
    Estimate {
        input: PathBuf,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        #[arg(long, default_value_t = DEFAULT_Z)]
        z: f64,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Include per-measurement differences from the subject and cell means.
        #[arg(long)]
        emit_differences: bool,
    },
    /// Smallest number of observers (or subjects) meeting a target CI width.
    Samplesize {
        #[arg(long = "sigma2-b0")]
        sigma2_b0: f64,
        #[arg(long = "sigma2-ab0")]
        sigma2_ab0: f64,
        #[arg(long = "sigma2-e0")]
        sigma2_e0: f64,
        /// Number of subjects; required when solving for observers.
        #[arg(long)]
        a: Option<usize>,
        /// Number of observers; required when solving for subjects.
        #[arg(long)]
        b: Option<usize>,
        #[arg(long)]
        c: usize,
        #[arg(long)]
        target_width: f64,
        #[arg(long, default_value_t = 200)]
        b_max: usize,
        #[arg(long, default_value_t = 10_000)]
        a_max: usize,
        #[arg(long, value_enum, default_value = "observers")]
        solve_for: SolveFor,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        #[arg(long, default_value_t = DEFAULT_Z)]
        z: f64,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Bootstrap comparison of two methods' LOAM.
    ///
    /// INPUT is a wide CSV (`subject,observer,replicate,<x>,<y>`), a long CSV
    /// with a `method` column, or, with `--y`, the long CSV for method X.
    Compare {
        input: PathBuf,
        /// Long CSV for method Y.
        #[arg(long)]
        y: Option<PathBuf>,
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long, default_value_t = 2000)]
        resamples: usize,
        /// Generated and printed when omitted.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_Z)]
        z: f64,
        #[arg(long, env = parallel::THREADS_ENV)]
        threads: Option<usize>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Draw a dataset from the random-effects model.
    ///
    /// Writes long-format CSV to OUT and the true limits to `OUT.truth.json`.
    Simulate {
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        #[arg(long)]
        sigma_a: f64,
        #[arg(long)]
        sigma_b: f64,
        #[arg(long)]
        sigma_ab: f64,
        #[arg(long)]
        sigma_e: f64,
        #[arg(long)]
        a: usize,
        #[arg(long)]
        b: usize,
        #[arg(long)]
        c: usize,
        /// Generated and printed when omitted.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_Z)]
        z: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Input(InputError),
    NotAchievable(String),
    Internal(String),
}

impl From<InputError> for Failure {
    fn from(e: InputError) -> Self {
        Self::Input(e)
    }
}

impl From<loam_core::Error> for Failure {
    fn from(e: loam_core::Error) -> Self {
        match e {
            loam_core::Error::NotAchievable { max, width_at_max } => Self::NotAchievable(format!(
                "NotAchievable: target width not reached at {max}; W({max}) = {width_at_max:?}"
            )),
            loam_core::Error::DegenerateResample { .. } => {
                Self::Internal(format!("{}: {e}", e.name()))
            }
            e => Self::Input(InputError::Model(e)),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {}: {e}", e.name());
            ExitCode::from(2)
        }
        Err(Failure::NotAchievable(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn emit(text: &str) -> Result<(), Failure> {
    std::io::stdout()
        .lock()
        .write_all(text.as_bytes())
        .map_err(|e| Failure::Internal(format!("writing output: {e}")))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes)
        .map_err(|e| Failure::Internal(format!("writing {}: {e}", path.display())))
}

fn seed_or_generate(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let seed = rand::random::<u64>();
        eprintln!("seed: {seed}");
        seed
    })
}

fn design_echo(d: Design) -> DesignEcho {
    DesignEcho {
        a: d.a(),
        b: d.b(),
        c: d.c(),
        n: d.n(),
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Estimate {
            input,
            level,
            z,
            format,
            emit_differences,
        } => {
            let source = Source::read(&input)?;
            let grid = input::read_grid(&source.bytes)?;
            let options = EstimateOptions {
                level,
                z,
                emit_differences,
            };
            let report =
                report::estimate(&grid, options, Provenance::new(Some(source.sha256), None))?;
            emit(&match format {
                Format::Json => report::to_json(&report),
                Format::Text => report.to_text(),
            })
        }
        Command::Samplesize {
            sigma2_b0,
            sigma2_ab0,
            sigma2_e0,
            a,
            b,
            c,
            target_width,
            b_max,
            a_max,
            solve_for,
            level,
            z,
            format,
        } => {
            let pilot = PilotEstimates::new(sigma2_b0, sigma2_ab0, sigma2_e0)?;
            let missing = |name: &'static str| {
                Failure::Input(InputError::Model(loam_core::Error::Domain(name)))
            };
            let (solve_name, fixed, plan) = match solve_for {
                SolveFor::Observers => {
                    let a =
                        a.ok_or_else(|| missing("--a is required when solving for observers"))?;
                    let plan = solve_observers(&pilot, a, c, target_width, b_max, level, z)?;
                    ("observers", a, plan)
                }
                SolveFor::Subjects => {
                    let b =
                        b.ok_or_else(|| missing("--b is required when solving for subjects"))?;
                    let plan = solve_subjects(&pilot, b, c, target_width, a_max, level, z)?;
                    ("subjects", b, plan)
                }
            };
            let report = PlanReport {
                solve_for: solve_name,
                sigma2_b0,
                sigma2_ab0,
                sigma2_e0,
                fixed,
                c,
                target_width,
                level,
                z,
                plan,
                provenance: Provenance::new(None, None),
            };
            emit(&match format {
                Format::Json => report::to_json(&report),
                Format::Text => report.to_text(),
            })
        }
        Command::Compare {
            input,
            y,
            kind,
            resamples,
            seed,
            z,
            threads,
            format,
        } => {
            let source = Source::read(&input)?;
            let (paired, digest) = match y {
                Some(path) => {
                    let other = Source::read(&path)?;
                    let digest = format!("{}+{}", source.sha256, other.sha256);
                    (input::read_paired_files(&source, &other)?, digest)
                }
                None => (input::read_paired(&source.bytes)?, source.sha256.clone()),
            };
            let seed = seed_or_generate(seed);
            let kind = match kind {
                Kind::Reproducibility => LoamKind::Reproducibility,
                Kind::Repeatability => LoamKind::Repeatability,
            };
            let config = BootstrapConfig {
                z,
                ..BootstrapConfig::new(kind, resamples, seed)
            };
            let result = parallel::pool(threads)
                .install(|| parallel::bootstrap_compare(&paired.study, &config))?;
            let report = CompareReport {
                methods: paired.methods,
                design: design_echo(paired.study.x().design()),
                result,
                provenance: Provenance::new(Some(digest), Some(seed)),
            };
            emit(&match format {
                Format::Json => report::to_json(&report),
                Format::Text => report.to_text(),
            })
        }
        Command::Simulate {
            mu,
            sigma_a,
            sigma_b,
            sigma_ab,
            sigma_e,
            a,
            b,
            c,
            seed,
            z,
            out,
        } => {
            let params = ModelParams::new(mu, sigma_a, sigma_b, sigma_ab, sigma_e)?;
            let design = Design::new(a, b, c)?;
            let seed = seed_or_generate(seed);
            let grid = loam_core::simulate(&params, design, seed);
            let csv = input::write_long(&grid);
            let truth = TruthReport {
                params,
                design: design_echo(design),
                z,
                truth: true_loam(&params, &design, z),
                provenance: Provenance::new(
                    Some(Source::from_bytes(&out, csv.clone()).sha256),
                    Some(seed),
                ),
            };
            write_file(&out, &csv)?;
            let mut sidecar = out.clone().into_os_string();
            sidecar.push(".truth.json");
            write_file(Path::new(&sidecar), report::to_json(&truth).as_bytes())
        }
    }
}
