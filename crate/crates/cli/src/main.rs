//! `hdp` — experiment harness over the hdp-core library.
//!
//! `hdp <experiment> [flags] --seed S --trials T --out PATH --format csv|json`
//!
//! Exit codes: 0 success, 1 experiment/audit failure, 2 I/O failure,
//! 3 usage error. Parameters come from defaults, then an optional JSON
//! config document, then flags; `HDP_THREADS` overrides `--threads`.

mod config;
mod experiments;
mod report;

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use config::ParamSet;
use experiments::RunError;
use report::ReportRecord;

#[derive(Parser)]
#[command(name = "hdp", version, about = "High-dimensional probability experiment harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Common {
    /// JSON config document; command-line flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Report destination; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json
    #[arg(long)]
    format: Option<String>,
    /// Worker threads (default: all cores; HDP_THREADS env overrides)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Random-projection distortion experiment
    Jl {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        num_points: Option<usize>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        c_jl: Option<f64>,
        /// Explicit target dimension (0 or omitted: use the selection rule)
        #[arg(long)]
        m: Option<usize>,
    },
    /// Block-model spectral clustering and adjacency concentration
    Sbm {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        conc_c: Option<f64>,
        /// Write one sampled graph as an edge list
        #[arg(long)]
        graph_out: Option<String>,
        /// Cluster an external edge-list graph instead of sampling
        #[arg(long)]
        graph_in: Option<String>,
    },
    /// Sample-covariance estimation error against the theory bounds
    Covariance {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<usize>,
        /// identity | spike
        #[arg(long)]
        sigma: Option<String>,
        #[arg(long)]
        spike_value: Option<f64>,
        #[arg(long)]
        ensemble: Option<String>,
        #[arg(long)]
        n_samples: Option<usize>,
        #[arg(long)]
        c_const: Option<f64>,
        /// CSV of samples (one per row): estimate instead of simulating
        #[arg(long)]
        data: Option<String>,
    },
    /// Low-rank matrix completion error against the per-entry bound
    Completion {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        r: Option<usize>,
        /// Expected number of observed entries
        #[arg(long)]
        m: Option<f64>,
        #[arg(long)]
        c_const: Option<f64>,
        /// Write <prefix>.x.csv and <prefix>.mask.csv for one instance
        #[arg(long)]
        export_prefix: Option<String>,
    },
    /// Gaussian width / complexity Monte-Carlo estimates
    Width {
        #[command(flatten)]
        common: Common,
        /// b1 | b2 | binf | singleton | ellipsoid | csv
        #[arg(long)]
        set: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        draws: Option<usize>,
        #[arg(long)]
        points_csv: Option<String>,
        /// Comma-separated covariance diagonal for set=ellipsoid
        #[arg(long)]
        ellipsoid_diag: Option<String>,
    },
    /// Uniform matrix deviation over a random finite set
    Deviation {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        num_points: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        c_const: Option<f64>,
        #[arg(long)]
        gamma_draws: Option<usize>,
        #[arg(long)]
        k_draws: Option<usize>,
    },
    /// Sparse recovery by l1 minimization
    Sparse {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        s: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        ensemble: Option<String>,
        #[arg(long)]
        c_const: Option<f64>,
        /// Solve one imported problem: A as CSV
        #[arg(long)]
        a_csv: Option<String>,
        /// ... and y as a one-row or one-column CSV
        #[arg(long)]
        y_csv: Option<String>,
        /// Write the solution record as JSON
        #[arg(long)]
        solution_out: Option<String>,
    },
    /// Certify a closed-form tail bound against the empirical tail
    BoundsAudit {
        #[command(flatten)]
        common: Common,
        /// hoeffding | bernstein | bernstein_bounded | matrix_bernstein
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        n_terms: Option<usize>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long)]
        grid_points: Option<usize>,
        #[arg(long)]
        c_exponent: Option<f64>,
    },
}

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // help/version are successful exits; everything else is usage
            let is_help = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if is_help { 0 } else { 3 };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(RunError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            3
        }
        Err(RunError::Io(msg)) => {
            eprintln!("i/o error: {msg}");
            2
        }
        Err(RunError::Experiment(msg)) => {
            eprintln!("experiment error: {msg}");
            1
        }
    }
}

struct Prep {
    ps: ParamSet,
    seed: u64,
    trials: usize,
    out: Option<PathBuf>,
    format: String,
}

/// Per-experiment default trial counts, small enough to keep ad-hoc runs
/// quick; acceptance-scale runs pass --trials explicitly.
fn default_trials(experiment: &str) -> usize {
    match experiment {
        "bounds_audit" => 20_000,
        "deviation" => 50,
        "width" => 8,
        "covariance" | "completion" => 10,
        _ => 20,
    }
}

fn prepare(experiment: &str, common: &Common, allowed: &[&'static str]) -> Result<Prep, RunError> {
    let config_map: serde_json::Map<String, serde_json::Value> = match &common.config {
        None => serde_json::Map::new(),
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| RunError::Io(format!("reading {}: {e}", path.display())))?;
            let value: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| RunError::Usage(format!("config is not valid JSON: {e}")))?;
            match value {
                serde_json::Value::Object(map) => map,
                _ => return Err(RunError::Usage("config must be a JSON object".into())),
            }
        }
    };
    if let Some(serde_json::Value::String(cfg_exp)) = config_map.get("experiment") {
        if cfg_exp != experiment {
            return Err(RunError::Usage(format!(
                "config is for experiment '{cfg_exp}' but '{experiment}' was invoked"
            )));
        }
    }

    let from_cfg_u64 = |key: &str| -> Result<Option<u64>, RunError> {
        match config_map.get(key) {
            None => Ok(None),
            Some(serde_json::Value::Number(n)) => Ok(n.as_u64()),
            Some(_) => Err(RunError::Usage(format!("'{key}' must be an integer"))),
        }
    };

    let seed = common.seed.or(from_cfg_u64("seed")?).unwrap_or(0);
    let trials = common
        .trials
        .or(from_cfg_u64("trials")?.map(|v| v as usize))
        .unwrap_or_else(|| default_trials(experiment));
    if trials == 0 {
        return Err(RunError::Usage("trials must be positive".into()));
    }

    let format = match &common.format {
        Some(f) => f.clone(),
        None => match config_map.get("format") {
            Some(serde_json::Value::String(s)) => s.clone(),
            _ => "json".to_string(),
        },
    };
    if format != "csv" && format != "json" {
        return Err(RunError::Usage(format!("format must be csv or json, got '{format}'")));
    }
    let out = common.out.clone().or_else(|| match config_map.get("out") {
        Some(serde_json::Value::String(s)) => Some(PathBuf::from(s)),
        _ => None,
    });

    // HDP_THREADS overrides --threads, which overrides the config value
    let threads = std::env::var("HDP_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .or(common.threads)
        .or(from_cfg_u64("threads")?.map(|v| v as usize));
    if let Some(t) = threads {
        if t == 0 {
            return Err(RunError::Usage("threads must be positive".into()));
        }
        // a second initialization in the same process is harmless; thread
        // count only affects scheduling, never results
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }

    let ps = ParamSet::new(experiment, &config_map, allowed)?;
    Ok(Prep { ps, seed, trials, out, format })
}

fn finish(mut record: ReportRecord, prep: &Prep, started: Instant) -> Result<i32, RunError> {
    record.wall_clock_seconds = started.elapsed().as_secs_f64();
    let body = match prep.format.as_str() {
        "csv" => report::to_csv_string(&record),
        _ => report::to_json_string(&record),
    };
    match &prep.out {
        Some(path) => fs::write(path, body)
            .map_err(|e| RunError::Io(format!("writing {}: {e}", path.display())))?,
        None => println!("{body}"),
    }
    Ok(if record.failed_audit() { 1 } else { 0 })
}

type Runner = Box<dyn FnOnce(&Prep) -> Result<ReportRecord, RunError>>;

fn execute(command: Command) -> Result<i32, RunError> {
    let started = Instant::now();
    let (prep, runner): (Prep, Runner) =
        match command {
            Command::Jl { common, n, num_points, eps, c_jl, m } => {
                let mut prep = prepare("jl", &common, experiments::JL_PARAMS)?;
                prep.ps.override_usize("n", n);
                prep.ps.override_usize("num_points", num_points);
                prep.ps.override_f64("eps", eps);
                prep.ps.override_f64("c_jl", c_jl);
                prep.ps.override_usize("m", m);
                (prep, Box::new(|p: &Prep| experiments::run_jl(&p.ps, p.seed, p.trials)))
            }
            Command::Sbm { common, n, p, q, conc_c, graph_out, graph_in } => {
                let mut prep = prepare("sbm", &common, experiments::SBM_PARAMS)?;
                prep.ps.override_usize("n", n);
                prep.ps.override_f64("p", p);
                prep.ps.override_f64("q", q);
                prep.ps.override_f64("conc_c", conc_c);
                prep.ps.override_string("graph_out", graph_out.as_deref());
                prep.ps.override_string("graph_in", graph_in.as_deref());
                (prep, Box::new(|p: &Prep| experiments::run_sbm(&p.ps, p.seed, p.trials)))
            }
            Command::Covariance {
                common,
                n,
                sigma,
                spike_value,
                ensemble,
                n_samples,
                c_const,
                data,
            } => {
                let mut prep = prepare("covariance", &common, experiments::COVARIANCE_PARAMS)?;
                prep.ps.override_usize("n", n);
                prep.ps.override_string("sigma", sigma.as_deref());
                prep.ps.override_f64("spike_value", spike_value);
                prep.ps.override_string("ensemble", ensemble.as_deref());
                prep.ps.override_usize("n_samples", n_samples);
                prep.ps.override_f64("c_const", c_const);
                prep.ps.override_string("data", data.as_deref());
                (prep, Box::new(|p: &Prep| experiments::run_covariance(&p.ps, p.seed, p.trials)))
            }
            Command::Completion { common, n, r, m, c_const, export_prefix } => {
                let mut prep = prepare("completion", &common, experiments::COMPLETION_PARAMS)?;
                prep.ps.override_usize("n", n);
                prep.ps.override_usize("r", r);
                prep.ps.override_f64("m", m);
                prep.ps.override_f64("c_const", c_const);
                prep.ps.override_string("export_prefix", export_prefix.as_deref());
                (prep, Box::new(|p: &Prep| experiments::run_completion(&p.ps, p.seed, p.trials)))
            }
            Command::Width { common, set, n, radius, draws, points_csv, ellipsoid_diag } => {
                let mut prep = prepare("width", &common, experiments::WIDTH_PARAMS)?;
                prep.ps.override_string("set", set.as_deref());
                prep.ps.override_usize("n", n);
                prep.ps.override_f64("radius", radius);
                prep.ps.override_usize("draws", draws);
                prep.ps.override_string("points_csv", points_csv.as_deref());
                prep.ps.override_string("ellipsoid_diag", ellipsoid_diag.as_deref());
                (prep, Box::new(|p: &Prep| experiments::run_width(&p.ps, p.seed, p.trials)))
            }
            Command::Deviation { common, n, num_points, m, c_const, gamma_draws, k_draws } => {
                let mut prep = prepare("deviation", &common, experiments::DEVIATION_PARAMS)?;
                prep.ps.override_usize("n", n);
                prep.ps.override_usize("num_points", num_points);
                prep.ps.override_usize("m", m);
                prep.ps.override_f64("c_const", c_const);
                prep.ps.override_usize("gamma_draws", gamma_draws);
                prep.ps.override_usize("k_draws", k_draws);
                (prep, Box::new(|p: &Prep| experiments::run_deviation(&p.ps, p.seed, p.trials)))
            }
            Command::Sparse { common, n, s, m, ensemble, c_const, a_csv, y_csv, solution_out } => {
                let mut prep = prepare("sparse", &common, experiments::SPARSE_PARAMS)?;
                prep.ps.override_usize("n", n);
                prep.ps.override_usize("s", s);
                prep.ps.override_usize("m", m);
                prep.ps.override_string("ensemble", ensemble.as_deref());
                prep.ps.override_f64("c_const", c_const);
                prep.ps.override_string("a_csv", a_csv.as_deref());
                prep.ps.override_string("y_csv", y_csv.as_deref());
                prep.ps.override_string("solution_out", solution_out.as_deref());
                (prep, Box::new(|p: &Prep| experiments::run_sparse(&p.ps, p.seed, p.trials)))
            }
            Command::BoundsAudit { common, family, n_terms, dim, t_max, grid_points, c_exponent } => {
                let mut prep = prepare("bounds_audit", &common, experiments::BOUNDS_AUDIT_PARAMS)?;
                prep.ps.override_string("family", family.as_deref());
                prep.ps.override_usize("n_terms", n_terms);
                prep.ps.override_usize("dim", dim);
                prep.ps.override_f64("t_max", t_max);
                prep.ps.override_usize("grid_points", grid_points);
                prep.ps.override_f64("c_exponent", c_exponent);
                (prep, Box::new(|p: &Prep| experiments::run_bounds_audit(&p.ps, p.seed, p.trials)))
            }
        };

    match runner(&prep) {
        Ok(record) => finish(record, &prep, started),
        Err(RunError::Experiment(msg)) => {
            // partial report with the error recorded, then exit 1
            let mut record = ReportRecord::new(prep.ps.experiment(), prep.seed, prep.trials);
            record.parameters = prep.ps.echo();
            record.error = Some(msg.clone());
            let _ = finish(record, &prep, started);
            Err(RunError::Experiment(msg))
        }
        Err(other) => Err(other),
    }
}
