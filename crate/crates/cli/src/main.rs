//! `sdirac`: forward, inverse, round-trip and asymptotics runs from problem files.

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use singular_dirac::asymptotics::{decay_table, deviation_table, fit_power_law};
use singular_dirac::inverse::{omega_grid, pair_data, reconstruct_potential};
use singular_dirac::io::{self, ProblemFile, SpectralDataFile};
use singular_dirac::types::nu_exponent;
use singular_dirac::{Error, ForwardOptions, ForwardSolver, ReconstructionOptions, ReconstructionResult};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const THREADS_ENV: &str = "SDIRAC_THREADS";

#[derive(Parser)]
#[command(name = "sdirac", version, about = "Spectral solver for Dirac systems with interior regular singularities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues and Weyl residues for |k| ≤ K.
    Forward {
        problem: PathBuf,
        #[arg(long = "K")]
        k: Option<usize>,
        /// Relative integrator tolerance (absolute tolerance is 1% of it).
        #[arg(long)]
        tolerance: Option<f64>,
        /// Spectral-data JSON output.
        #[arg(long, default_value = "spectral.json")]
        out: PathBuf,
    },
    /// Potential reconstruction from spectral data and a model problem.
    Inverse {
        data: PathBuf,
        model: PathBuf,
        #[arg(long = "K")]
        k: Option<usize>,
        #[command(flatten)]
        grid: GridArgs,
        /// Output prefix for `<out>.csv` and `<out>.diagnostics.json`.
        #[arg(long, default_value = "reconstruction")]
        out: PathBuf,
    },
    /// Forward-generate data from a problem, reconstruct with a model, report the error.
    Roundtrip {
        problem: PathBuf,
        model: PathBuf,
        #[arg(long = "K")]
        k: Option<usize>,
        /// Comma-separated truncation levels, e.g. `10,20,40`.
        #[arg(long = "k-sweep", value_delimiter = ',')]
        k_sweep: Option<Vec<usize>>,
        #[arg(long)]
        tolerance: Option<f64>,
        #[command(flatten)]
        grid: GridArgs,
        /// Optional prefix for `<out>.summary.json` and per-K reconstruction CSVs.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Characteristic function and eigenvalues against their asymptotic forms.
    Asymptotics {
        problem: PathBuf,
        #[arg(long, default_value_t = 10)]
        m_min: i64,
        #[arg(long, default_value_t = 60)]
        m_max: i64,
        #[arg(long, default_value_t = 1)]
        m_step: usize,
        /// Real offset of the sample line `λ = m + offset + i·im`.
        #[arg(long, default_value_t = 0.4)]
        offset: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        im: f64,
        #[arg(long)]
        tolerance: Option<f64>,
        /// Prefix for `<out>.decay.csv` and `<out>.eigen.csv`; the decay table goes to stdout otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone, Copy)]
struct GridArgs {
    #[arg(long)]
    grid_step: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Forward { .. } => "forward",
            Command::Inverse { .. } => "inverse",
            Command::Roundtrip { .. } => "roundtrip",
            Command::Asymptotics { .. } => "asymptotics",
        }
    }
}

fn forward_options(problem: &ProblemFile, tolerance: Option<f64>) -> ForwardOptions {
    let mut opts = ForwardOptions { matching: problem.solver.matching.clone(), ..ForwardOptions::default() };
    if let Some(r) = problem.solver.rtol {
        opts.rtol = r;
    }
    if let Some(a) = problem.solver.atol {
        opts.atol = a;
    }
    if let Some(t) = tolerance {
        opts.rtol = t;
        opts.atol = t * 1e-2;
    }
    opts
}

fn solver(problem: &ProblemFile, tolerance: Option<f64>) -> Result<ForwardSolver, Error> {
    ForwardSolver::new(problem.to_spec()?, forward_options(problem, tolerance))
}

fn recon_options(problem: &ProblemFile, grid: GridArgs) -> Result<ReconstructionOptions, Error> {
    let mut o = ReconstructionOptions::default();
    o.epsilon = grid.epsilon.or(problem.solver.epsilon).unwrap_or(o.epsilon);
    o.grid_step = grid.grid_step.or(problem.solver.grid_step).unwrap_or(o.grid_step);
    o.cond_cap = problem.solver.cond_cap.unwrap_or(o.cond_cap);
    if !(o.epsilon > 0.0) || !(o.grid_step > 0.0) {
        return Err(Error::InvalidSpec { field: "grid".into(), reason: "epsilon and grid step must be positive".into() });
    }
    Ok(o)
}

fn require_k(k: Option<usize>, problem: &ProblemFile) -> Result<usize, Error> {
    k.or(problem.solver.k)
        .ok_or_else(|| Error::InvalidSpec { field: "K".into(), reason: "pass --K or set solver.K in the problem file".into() })
}

fn diagnostics_json(r: &ReconstructionResult) -> serde_json::Value {
    json!({
        "K": r.k_max,
        "lambda_hat": r.lambda_hat,
        "alpha": r.alpha,
        "beta": r.beta,
        "grid_points": r.points.len(),
        "max_relative_residual": r.max_relative_residual(),
        "max_cond_est": r.points.iter().fold(0.0f64, |m, p| m.max(p.cond)),
        "max_projection_leakage": r.max_leakage(),
        "condition_s_violations": r.condition_s_violations(),
        "condition3": r.condition3.iter().map(|c| json!({"left": c.left, "right": c.right, "value": c.value})).collect::<Vec<_>>(),
    })
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn report_violations(r: &ReconstructionResult) {
    let v = r.condition_s_violations();
    if !v.is_empty() {
        eprintln!("warning: Condition S flagged at {} grid point(s), first at x = {}", v.len(), v[0]);
    }
}

fn run(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Forward { problem, k, tolerance, out } => {
            let file = ProblemFile::load(&problem)?;
            let k = require_k(k, &file)?;
            let fs = solver(&file, tolerance)?;
            let search = fs.find_eigenvalues(k)?;
            let data = search.spectral_data()?;
            let opts = fs.options();
            SpectralDataFile::new(data, &file, opts.rtol, opts.atol).write(&out)?;
            print!("{}", io::forward_csv(&search.eigenvalues));
            eprintln!("wrote {} eigenvalues to {}", search.eigenvalues.len(), out.display());
        }
        Command::Inverse { data, model, k, grid, out } => {
            let target = SpectralDataFile::read(&data)?;
            let model_file = ProblemFile::load(&model)?;
            let mut td = target.data;
            if let Some(k) = k {
                if k > td.k_max() {
                    return Err(Error::DataMismatch(format!("requested K = {k} but {} covers K = {}", data.display(), td.k_max())));
                }
                td = td.truncate(k)?;
            }
            let ms = solver(&model_file, None)?;
            let md = ms.spectral_data(td.k_max())?;
            let paired = pair_data(&td, &md)?;
            let opts = recon_options(&model_file, grid)?;
            let grid = omega_grid(ms.spec(), opts.epsilon, opts.grid_step);
            let r = reconstruct_potential(&ms, &paired, &grid, &opts)?;
            io::write_text(&with_suffix(&out, ".csv"), &io::reconstruction_csv(&r))?;
            let diag = serde_json::to_string_pretty(&diagnostics_json(&r)).expect("json");
            io::write_text(&with_suffix(&out, ".diagnostics.json"), &(diag + "\n"))?;
            println!("K = {}, grid points = {}, Λ̂ = {:.6e}", r.k_max, r.points.len(), r.lambda_hat);
            report_violations(&r);
        }
        Command::Roundtrip { problem, model, k, k_sweep, tolerance, grid, out } => {
            let file = ProblemFile::load(&problem)?;
            let model_file = ProblemFile::load(&model)?;
            let ks = match k_sweep {
                Some(v) if !v.is_empty() => v,
                _ => vec![require_k(k, &file)?],
            };
            let kmax = *ks.iter().max().expect("non-empty");
            let ts = solver(&file, tolerance)?;
            let ms = solver(&model_file, tolerance)?;
            let td = ts.spectral_data(kmax)?;
            let md = ms.spectral_data(kmax)?;
            let opts = recon_options(&model_file, grid)?;
            let grid = omega_grid(ms.spec(), opts.epsilon, opts.grid_step);
            let reference = ts.spec().potential().clone();
            println!("K,max_error,lambda_hat,max_relative_residual,max_cond_est,condition_s_violations");
            let mut rows = Vec::new();
            for &k in &ks {
                let paired = pair_data(&td.truncate(k)?, &md.truncate(k)?)?;
                let r = reconstruct_potential(&ms, &paired, &grid, &opts)?;
                let err = r.max_error(&reference);
                let cond = r.points.iter().fold(0.0f64, |m, p| m.max(p.cond));
                let viol = r.condition_s_violations().len();
                println!(
                    "{k},{},{},{},{},{viol}",
                    io::format_f64(err),
                    io::format_f64(r.lambda_hat),
                    io::format_f64(r.max_relative_residual()),
                    io::format_f64(cond)
                );
                report_violations(&r);
                if let Some(prefix) = &out {
                    io::write_text(&with_suffix(prefix, &format!(".K{k}.csv")), &io::reconstruction_csv(&r))?;
                }
                rows.push(json!({"K": k, "max_error": err, "diagnostics": diagnostics_json(&r)}));
            }
            if let Some(prefix) = &out {
                let summary = json!({"epsilon": opts.epsilon, "grid_step": opts.grid_step, "rows": rows});
                io::write_text(&with_suffix(prefix, ".summary.json"), &(serde_json::to_string_pretty(&summary).expect("json") + "\n"))?;
            }
        }
        Command::Asymptotics { problem, m_min, m_max, m_step, offset, im, tolerance, out } => {
            let file = ProblemFile::load(&problem)?;
            if m_min < 1 || m_max < m_min || m_step == 0 {
                return Err(Error::InvalidSpec { field: "range".into(), reason: "need 1 ≤ m_min ≤ m_max and m_step ≥ 1".into() });
            }
            let fs = solver(&file, tolerance)?;
            let ms: Vec<i64> = (m_min..=m_max).step_by(m_step).collect();
            let decay = decay_table(&fs, &ms, offset, im)?;
            let dev = deviation_table(&fs, &ms)?;
            let nu = nu_exponent(fs.spec());
            let p1 = fit_power_law(&decay.iter().map(|r| (r.lambda.re, r.scaled_diff)).collect::<Vec<_>>());
            let p2 = fit_power_law(&dev.iter().map(|r| (r.lambda0.norm(), r.diff)).collect::<Vec<_>>());
            match &out {
                Some(prefix) => {
                    io::write_text(&with_suffix(prefix, ".decay.csv"), &io::decay_csv(&decay))?;
                    io::write_text(&with_suffix(prefix, ".eigen.csv"), &io::deviation_csv(&dev))?;
                }
                None => print!("{}", io::decay_csv(&decay)),
            }
            let show = |p: Option<f64>| p.map_or("n/a".to_string(), |s| format!("{:.4}", -s));
            eprintln!("nu = {nu:.4}; fitted decay exponent: characteristic function {}, eigenvalues {}", show(p1), show(p2));
        }
    }
    Ok(())
}

fn init_threads() -> Result<(), Error> {
    let Ok(v) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = v
        .parse()
        .map_err(|_| Error::InvalidSpec { field: THREADS_ENV.into(), reason: format!("`{v}` is not a thread count") })?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Error::InvalidSpec { field: THREADS_ENV.into(), reason: e.to_string() })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let op = cli.command.name();
    match init_threads().and_then(|_| run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {op}: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
    }
}
