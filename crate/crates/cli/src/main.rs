mod commands;
mod config;
mod report;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "intgeom", version, about = "Smooth valuations on the plane and the 2-sphere")]
struct Cli {
    /// Master seed of every random stream.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo draws per kinematic integral.
    #[arg(long)]
    samples: Option<usize>,
    /// Relative quadrature tolerance for fibers and evaluations.
    #[arg(long)]
    tol: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<String>,
    /// Run configuration: a config JSON, or a report produced by an earlier run.
    #[arg(long)]
    config: Option<String>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Intrinsic volumes of the bodies in a JSON file.
    Intrinsic { body: String },
    /// Product of two planar invariant valuations, with the template oracle for comparison.
    Product {
        a: String,
        b: String,
        #[command(flatten)]
        cache: CacheArg,
    },
    /// Kinematic integral of a valuation over a body pair.
    Kinematic {
        #[arg(required_unless_present = "diagram")]
        bodies: Option<String>,
        /// Valuation to integrate; may be repeated.
        #[arg(long, default_value = "chi")]
        mu: Vec<String>,
        /// Run the S² structure-constant experiment and write its JSON report here.
        #[arg(long)]
        diagram: Option<String>,
    },
    /// Compares the three-term product current with the normal cycle of the intersection.
    NcycleIntersect {
        bodies: String,
        /// Number of random test forms.
        #[arg(long, default_value_t = 50)]
        forms: usize,
        /// Write the tagged pieces as JSON here.
        #[arg(long)]
        pieces: Option<String>,
    },
    /// Residuals of the Rumin operator identities and of gauge invariance.
    RuminCheck {
        #[arg(long, default_value_t = 50)]
        forms: usize,
        #[arg(long, default_value_t = 10)]
        polygons: usize,
    },
    /// `f(μ)` for a named power series.
    Functional {
        name: String,
        valuation: String,
        #[arg(long, default_value_t = 20)]
        terms: usize,
        #[command(flatten)]
        cache: CacheArg,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct CacheArg {
    /// JSON cache of structure constants, keyed by tolerances.
    #[arg(long)]
    pub cache: Option<String>,
}

impl Command {
    /// Canonical argument list, recorded in the run config.
    fn to_args(&self) -> Vec<String> {
        let s = |x: &str| x.to_string();
        match self {
            Command::Intrinsic { body } => vec![s("intrinsic"), body.clone()],
            Command::Product { a, b, .. } => vec![s("product"), a.clone(), b.clone()],
            Command::Kinematic { bodies, mu, diagram } => {
                let mut v = vec![s("kinematic")];
                v.extend(bodies.iter().cloned());
                for m in mu {
                    v.extend([s("--mu"), m.clone()]);
                }
                if let Some(d) = diagram {
                    v.extend([s("--diagram"), d.clone()]);
                }
                v
            }
            Command::NcycleIntersect { bodies, forms, pieces } => {
                let mut v = vec![s("ncycle-intersect"), bodies.clone(), s("--forms"), forms.to_string()];
                if let Some(p) = pieces {
                    v.extend([s("--pieces"), p.clone()]);
                }
                v
            }
            Command::RuminCheck { forms, polygons } => {
                vec![s("rumin-check"), s("--forms"), forms.to_string(), s("--polygons"), polygons.to_string()]
            }
            Command::Functional { name, valuation, terms, .. } => {
                vec![s("functional"), name.clone(), valuation.clone(), s("--terms"), terms.to_string()]
            }
        }
    }

    fn input(&self) -> Option<String> {
        match self {
            Command::Intrinsic { body } => Some(body.clone()),
            Command::Kinematic { bodies, .. } => bodies.clone(),
            Command::NcycleIntersect { bodies, .. } => Some(bodies.clone()),
            _ => None,
        }
    }

    fn cache(&self) -> Option<String> {
        match self {
            Command::Product { cache, .. } | Command::Functional { cache, .. } => cache.cache.clone(),
            _ => None,
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or input files: exit code 2.
    Usage(String),
    /// A check did not pass: exit code 1.
    Check(String),
    /// Numerical failure: exit code 1.
    Numeric(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Check(_) | CliError::Numeric(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Check(m) => write!(f, "check failed: {m}"),
            CliError::Numeric(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<intgeom::Error> for CliError {
    fn from(e: intgeom::Error) -> Self {
        use intgeom::Error::*;
        match e {
            Parse(_) | UnknownValuation(_) | InvalidBody(_) | NotTransversal(_) | DegenerateBody(_) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

/// Config file values, then explicit flags.
fn resolve(cli: Cli) -> Result<(RunConfig, Command), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => report::load_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(n) = cli.samples {
        cfg.mc.samples = n;
    }
    if let Some(t) = cli.tol {
        if !(t > 0.0 && t < 1.0) {
            return Err(CliError::Usage(format!("--tol must lie in (0, 1), got {t}")));
        }
        cfg.tolerances.quad_tol = t;
        cfg.tolerances.tol_eval = t;
    }
    if cli.out.is_some() {
        cfg.paths.output = cli.out;
    }
    let command = match cli.command {
        Some(c) => {
            cfg.paths.input = c.input();
            if let Some(cache) = c.cache() {
                cfg.paths.cache = Some(cache);
            }
            c
        }
        None => {
            if cfg.command.is_empty() {
                return Err(CliError::Usage("no subcommand given and the config records none".into()));
            }
            let argv = std::iter::once("intgeom".to_string()).chain(cfg.command.iter().cloned());
            Cli::try_parse_from(argv)
                .map_err(|e| CliError::Usage(format!("recorded command is invalid: {e}")))?
                .command
                .ok_or_else(|| CliError::Usage("recorded command is empty".into()))?
        }
    };
    cfg.command = command.to_args();
    Ok((cfg, command))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = resolve(cli).and_then(|(cfg, cmd)| commands::run(&cfg, &cmd));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}
