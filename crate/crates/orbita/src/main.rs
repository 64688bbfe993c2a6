//! Command-line front end: state construction, uncertainty sweeps, the
//! simulated measurement bench, spectrum analysis, and canonical
//! figure-reproduction runs. Outputs are plot-ready CSV/JSON with a metadata
//! header (version, seed, config hash).

use clap::{Args, Parser, Subcommand, ValueEnum};
use orbita::analysis::{self, Scenario, ScenarioState, SpectrumModel};
use orbita::circle;
use orbita::mathieu;
use orbita::optics::{self, MaskSpectrum, NoiseModel, OpticalConfig, PropagationMethod};
use orbita::states::{self, Family, StateRequest};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "orbita", version, about = "Quantum mechanics on the circle: uncertainty relations, Mathieu states, and a simulated OAM-spectrum measurement")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Build one state and report its spectrum and uncertainties
    State(StateArgs),
    /// Sweep uncertainty products over matched circular variances
    Sweep(SweepArgs),
    /// Simulate a measured OAM spectrum for one input state
    Simulate(SimulateArgs),
    /// Compute the detector response matrix
    Respmat(RespmatArgs),
    /// Deconvolve and fit a measured spectrum, or run a scenario pipeline
    Analyze(AnalyzeArgs),
    /// Re-run a canonical figure dataset with pinned defaults
    Reproduce(ReproduceArgs),
}

#[derive(Args)]
struct StateArgs {
    /// wedge | cosine | vonmises | truncated | wrapped | coherent | mathieu
    #[arg(long)]
    family: String,
    /// Width parameter of the family
    #[arg(long)]
    alpha: Option<f64>,
    /// Center angle (radians)
    #[arg(long, default_value_t = 0.0)]
    mu: f64,
    /// Mathieu parameter (family = mathieu)
    #[arg(long)]
    q: Option<f64>,
    /// Mathieu mode order
    #[arg(long, default_value_t = 0)]
    n_max: usize,
    /// Spectrum window half-width in the CSV output
    #[arg(long, default_value_t = 15)]
    window: i32,
    /// Output JSON path (a .csv sibling holds the spectrum); stdout otherwise
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated families (mathieu plus any closed-form family)
    #[arg(long, default_value = "mathieu,vonmises,cosine,truncated")]
    families: String,
    /// Number of circular-variance grid points on [0.1, 0.95]
    #[arg(long, default_value_t = 60)]
    grid_points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    family: String,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    /// Optics config JSON (defaults used otherwise)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Multiplicative detector noise level (0 disables)
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Helicity window half-width
    #[arg(long, default_value_t = 15)]
    window: i32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RespmatArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 15)]
    window: i32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Scenario JSON driving the full pipeline
    #[arg(long, conflicts_with_all = ["input", "model"])]
    scenario: Option<PathBuf>,
    /// Measured spectrum CSV (rows `N,power`), as written by `simulate`
    #[arg(long, requires = "model")]
    input: Option<PathBuf>,
    /// Parametric model to fit (family name or `mathieu`)
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 15)]
    window: i32,
    #[arg(long, default_value_t = 200)]
    bootstrap: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, ValueEnum)]
enum Figure {
    Fig2,
    Fig3,
    Fig7,
    Fig9,
}

#[derive(Args)]
struct ReproduceArgs {
    #[arg(value_enum)]
    target: Figure,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("ORBITA_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        } else {
            eprintln!("error: ORBITA_THREADS must be a positive integer (stage: startup)");
            return ExitCode::from(2);
        }
    }
    let cli = Cli::parse();
    let run = match cli.verb {
        Verb::State(a) => cmd_state(a),
        Verb::Sweep(a) => cmd_sweep(a),
        Verb::Simulate(a) => cmd_simulate(a),
        Verb::Respmat(a) => cmd_respmat(a),
        Verb::Analyze(a) => cmd_analyze(a),
        Verb::Reproduce(a) => cmd_reproduce(a),
    };
    match run {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = serde_json::json!({
                "error": e.to_string(),
                "stage": e.stage,
            });
            eprintln!("{record}");
            ExitCode::from(1)
        }
    }
}

struct StageError {
    stage: &'static str,
    inner: orbita::Error,
}

impl std::fmt::Display for StageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (stage: {})", self.inner, self.stage)
    }
}

trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T, StageError>;
}

impl<T> Stage<T> for orbita::Result<T> {
    fn stage(self, stage: &'static str) -> Result<T, StageError> {
        self.map_err(|inner| StageError { stage, inner })
    }
}

fn io_stage(e: std::io::Error, stage: &'static str) -> StageError {
    StageError {
        stage,
        inner: e.into(),
    }
}

/// Metadata header carried by every artifact.
fn meta_header(seed: Option<u64>, config_json: &str) -> String {
    let hash = Sha256::digest(config_json.as_bytes());
    let mut h = format!(
        "# orbita v{}\n# config_sha256={:x}\n",
        env!("CARGO_PKG_VERSION"),
        hash
    );
    if let Some(seed) = seed {
        let _ = writeln!(h, "# seed={seed}");
    }
    h
}

fn write_artifact(path: Option<&Path>, contents: &str, stage: &'static str) -> Result<(), StageError> {
    match path {
        Some(p) => std::fs::write(p, contents).map_err(|e| io_stage(e, stage)),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn load_optics(path: Option<&Path>) -> Result<OpticalConfig, StageError> {
    let cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| io_stage(e, "config"))?;
            serde_json::from_str(&text)
                .map_err(orbita::Error::from)
                .stage("config")?
        }
        None => OpticalConfig::default(),
    };
    cfg.validate().stage("config")?;
    Ok(cfg)
}

#[derive(Serialize)]
struct StateReport {
    family: String,
    alpha: f64,
    mu: f64,
    var_e: f64,
    var_l: f64,
    product: f64,
    state: circle::StateJson,
}

fn build_state(
    family: &str,
    alpha: Option<f64>,
    q: Option<f64>,
    n: usize,
    mu: f64,
) -> Result<
    (
        String,
        f64,
        circle::MomentumWavefunction,
        Option<(f64, f64)>,
    ),
    StageError,
> {
    if family.eq_ignore_ascii_case("mathieu") {
        let q = q.ok_or(orbita::Error::InvalidParameter {
            name: "q",
            value: f64::NAN,
            reason: "family mathieu needs --q",
        })
        .stage("state")?;
        let modes = mathieu::solve_modes(q, n, 0).stage("state")?;
        let point = mathieu::mode_uncertainties(&modes[n]).stage("state")?;
        let mut wf = modes[n].to_wavefunction().stage("state")?;
        if mu != 0.0 {
            wf = circle::shift_state(&wf, mu, 0).stage("state")?;
        }
        Ok((
            format!("mathieu[{n}]"),
            q,
            wf,
            Some((point.var_e, point.var_l)),
        ))
    } else {
        let f: Family = family.parse().stage("state")?;
        let alpha = alpha.ok_or(orbita::Error::InvalidParameter {
            name: "alpha",
            value: f64::NAN,
            reason: "this family needs --alpha",
        })
        .stage("state")?;
        let pkg = states::make_state(&StateRequest::new(f, alpha).with_center(mu)).stage("state")?;
        let closed = pkg.closed_form.map(|cf| (cf.var_e, cf.var_l));
        Ok((f.as_str().to_string(), alpha, pkg.state, closed))
    }
}

fn cmd_state(a: StateArgs) -> Result<(), StageError> {
    let (name, width, wf, closed) = build_state(&a.family, a.alpha, a.q, a.n_max, a.mu)?;
    // closed-form variances where the family provides them (the grid state
    // truncates heavy spectral tails), numeric report otherwise
    let (var_e, var_l) = match closed {
        Some(v) => v,
        None => {
            let report = circle::uncertainty_report(&wf).stage("uncertainty")?;
            (report.var_e, report.var_l)
        }
    };
    let out = StateReport {
        family: name,
        alpha: width,
        mu: a.mu,
        var_e,
        var_l,
        product: (var_e * var_l).sqrt(),
        state: circle::StateJson::from(&wf),
    };
    let json = serde_json::to_string_pretty(&out)
        .map_err(orbita::Error::from)
        .stage("state")?;
    write_artifact(a.out.as_deref(), &(json + "\n"), "state")?;

    let mut csv = meta_header(None, &format!("{}:{}", out.family, out.alpha));
    csv.push_str("m,p\n");
    for m in -a.window..=a.window {
        let _ = writeln!(csv, "{m},{:.12e}", wf.amplitude(m).norm_sqr());
    }
    match a.out.as_deref() {
        Some(p) => write_artifact(Some(&p.with_extension("csv")), &csv, "state")?,
        None => {}
    }
    Ok(())
}

fn sweep_product(model: SpectrumModel, var_e: f64, window: i32) -> orbita::Result<f64> {
    match model {
        SpectrumModel::Mathieu { n } => {
            let q = mathieu::find_q_for_var_e(n, var_e)?;
            let modes = mathieu::solve_modes(q, n, 0)?;
            Ok(mathieu::mode_uncertainties(&modes[n])?.product)
        }
        SpectrumModel::Family(Family::Wedge) => {
            // divergent varL: windowed product
            let alpha = states::find_width_for_var_e(Family::Wedge, var_e)?;
            let p = states::momentum_spectrum_closed_form(Family::Wedge, alpha, 0.0, -window, window)?;
            let total: f64 = p.iter().sum();
            let var_l: f64 = p
                .iter()
                .zip(-window..=window)
                .map(|(&p, m)| p * (m * m) as f64)
                .sum::<f64>()
                / total;
            Ok((var_e * var_l).sqrt())
        }
        SpectrumModel::Family(f) => {
            let alpha = states::find_width_for_var_e(f, var_e)?;
            Ok((states::closed_var_e(f, alpha)? * states::closed_var_l(f, alpha)?).sqrt())
        }
    }
}

fn cmd_sweep(a: SweepArgs) -> Result<(), StageError> {
    let models: Vec<SpectrumModel> = a
        .families
        .split(',')
        .map(|s| s.trim().parse())
        .collect::<orbita::Result<_>>()
        .stage("sweep")?;
    if a.grid_points < 2 {
        return Err(StageError {
            stage: "sweep",
            inner: orbita::Error::InvalidParameter {
                name: "grid-points",
                value: a.grid_points as f64,
                reason: "need at least 2 grid points",
            },
        });
    }
    let grid: Vec<f64> = (0..a.grid_points)
        .map(|i| 0.1 + (0.95 - 0.1) * i as f64 / (a.grid_points - 1) as f64)
        .collect();
    let mut csv = meta_header(None, &a.families);
    csv.push_str("var_e");
    for m in &models {
        let _ = write!(csv, ",product_{}", m.name());
    }
    csv.push('\n');
    for &v in &grid {
        let _ = write!(csv, "{v:.6}");
        for m in &models {
            let p = sweep_product(*m, v, 15).stage("sweep")?;
            let _ = write!(csv, ",{p:.10}");
        }
        csv.push('\n');
    }
    write_artifact(a.out.as_deref(), &csv, "sweep")
}

fn cmd_simulate(a: SimulateArgs) -> Result<(), StageError> {
    let mut cfg = load_optics(a.config.as_deref())?;
    cfg.helicity = [-a.window, a.window];
    let (name, width, wf, _) = build_state(&a.family, a.alpha, a.q, 0, 0.0)?;
    let mask = MaskSpectrum::from_state(&wf, -a.window, a.window).stage("mask")?;
    let resp = optics::response_matrix(&cfg, PropagationMethod::ClosedForm).stage("respmat")?;
    let noise = (a.noise > 0.0).then_some(NoiseModel {
        seed: a.seed,
        level: a.noise,
    });
    let spec = optics::simulate_spectrum(&mask, &resp, noise.as_ref());
    let cfg_json = serde_json::to_string(&cfg)
        .map_err(orbita::Error::from)
        .stage("simulate")?;
    let mut csv = meta_header(Some(a.seed), &cfg_json);
    let _ = writeln!(csv, "# state={name} width={width} noise={}", a.noise);
    csv.push_str("N,power\n");
    for (n, p) in spec {
        let _ = writeln!(csv, "{n},{p:.12e}");
    }
    write_artifact(a.out.as_deref(), &csv, "simulate")
}

fn cmd_respmat(a: RespmatArgs) -> Result<(), StageError> {
    let mut cfg = load_optics(a.config.as_deref())?;
    cfg.helicity = [-a.window, a.window];
    let resp = optics::response_matrix(&cfg, PropagationMethod::ClosedForm).stage("respmat")?;
    let cfg_json = serde_json::to_string(&cfg)
        .map_err(orbita::Error::from)
        .stage("respmat")?;
    let mut csv = meta_header(None, &cfg_json);
    csv.push_str("N");
    let (m_lo, m_hi) = resp.m_range();
    for m in m_lo..=m_hi {
        let _ = write!(csv, ",m{m}");
    }
    csv.push('\n');
    let (n_lo, n_hi) = resp.n_range();
    for n in n_lo..=n_hi {
        let _ = write!(csv, "{n}");
        for m in m_lo..=m_hi {
            let _ = write!(csv, ",{:.10e}", resp.get(n, m));
        }
        csv.push('\n');
    }
    write_artifact(a.out.as_deref(), &csv, "respmat")
}

fn read_measured(path: &Path) -> Result<Vec<(i32, f64)>, StageError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_stage(e, "analyze"))?;
    let mut rows = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("N,") {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let row = (fields.len() >= 2)
            .then(|| Some((fields[0].parse::<i32>().ok()?, fields[1].parse::<f64>().ok()?)))
            .flatten();
        match row {
            Some(row) => rows.push(row),
            None => {
                return Err(StageError {
                    stage: "analyze",
                    inner: orbita::Error::Deconvolution(format!(
                        "cannot parse measured-spectrum row: {line}"
                    )),
                })
            }
        }
    }
    Ok(rows)
}

fn cmd_analyze(a: AnalyzeArgs) -> Result<(), StageError> {
    if let Some(path) = &a.scenario {
        let text = std::fs::read_to_string(path).map_err(|e| io_stage(e, "analyze"))?;
        let scenario: Scenario = serde_json::from_str(&text)
            .map_err(orbita::Error::from)
            .stage("analyze")?;
        let report = analysis::run_pipeline(&scenario).stage("pipeline")?;
        let json = serde_json::to_string_pretty(&report)
            .map_err(orbita::Error::from)
            .stage("pipeline")?;
        return write_artifact(a.out.as_deref(), &(json + "\n"), "pipeline");
    }
    let input = a.input.as_deref().ok_or(StageError {
        stage: "analyze",
        inner: orbita::Error::InvalidParameter {
            name: "input",
            value: f64::NAN,
            reason: "analyze needs --scenario or --input with --model",
        },
    })?;
    let measured = read_measured(input)?;
    let model: SpectrumModel = a.model.as_deref().unwrap().parse().stage("analyze")?;
    let mut cfg = load_optics(a.config.as_deref())?;
    cfg.helicity = [-a.window, a.window];
    let resp = optics::response_matrix(&cfg, PropagationMethod::ClosedForm).stage("respmat")?;
    let (recovered, fit, bars) =
        analysis::uncertainty_with_errors(&measured, &resp, model, a.bootstrap, a.seed)
            .stage("fit")?;
    let out = serde_json::json!({
        "recovered": recovered,
        "fit": fit,
        "error_bars": bars,
    });
    let json = serde_json::to_string_pretty(&out)
        .map_err(orbita::Error::from)
        .stage("fit")?;
    write_artifact(a.out.as_deref(), &(json + "\n"), "fit")
}

fn cmd_reproduce(a: ReproduceArgs) -> Result<(), StageError> {
    match a.target {
        Figure::Fig2 => {
            // uncertainty curves of the first three Mathieu modes vs q
            let q_grid: Vec<f64> = (0..120)
                .map(|i| 10f64.powf(-2.0 + 5.0 * i as f64 / 119.0))
                .collect();
            let curve = mathieu::sweep_uncertainty_curve(2, &q_grid).stage("sweep")?;
            let mut csv = meta_header(Some(a.seed), "fig2");
            csv.push_str("q,n,var_e,var_l,product\n");
            for p in curve {
                let _ = writeln!(
                    csv,
                    "{:.6e},{},{:.10},{:.10},{:.10}",
                    p.q, p.n, p.var_e, p.var_l, p.product
                );
            }
            write_artifact(a.out.as_deref(), &csv, "reproduce")
        }
        Figure::Fig3 => cmd_sweep(SweepArgs {
            families: "mathieu,vonmises,cosine,truncated,wedge".into(),
            grid_points: 60,
            out: a.out,
        }),
        Figure::Fig7 => {
            let cfg = OpticalConfig {
                helicity: [-6, 6],
                ..OpticalConfig::default()
            };
            let resp =
                optics::response_matrix(&cfg, PropagationMethod::ClosedForm).stage("respmat")?;
            let cfg_json = serde_json::to_string(&cfg)
                .map_err(orbita::Error::from)
                .stage("respmat")?;
            let mut csv = meta_header(Some(a.seed), &cfg_json);
            csv.push_str("N,m,response,dominance\n");
            let (n_lo, n_hi) = resp.n_range();
            let (m_lo, m_hi) = resp.m_range();
            for n in n_lo..=n_hi {
                let d = resp.dominance(n);
                for m in m_lo..=m_hi {
                    let _ = writeln!(csv, "{n},{m},{:.10e},{d:.6}", resp.get(n, m));
                }
            }
            write_artifact(a.out.as_deref(), &csv, "reproduce")
        }
        Figure::Fig9 => {
            let mut scenario = Scenario::benchmark();
            scenario.seed = a.seed;
            scenario.noise = Some(NoiseModel {
                seed: a.seed,
                level: 0.01,
            });
            scenario.states.push(ScenarioState {
                family: "wedge".into(),
                width: None,
                var_e: Some(0.45),
            });
            scenario.states.push(ScenarioState {
                family: "wedge".into(),
                width: None,
                var_e: Some(0.75),
            });
            let report = analysis::run_pipeline(&scenario).stage("pipeline")?;
            let mut csv = meta_header(Some(a.seed), "fig9");
            csv.push_str(
                "family,width,var_e_theory,product_theory,width_recovered,var_e_recovered,product_recovered,product_err\n",
            );
            for r in &report.rows {
                let _ = writeln!(
                    csv,
                    "{},{:.6},{:.6},{:.8},{:.6},{:.6},{:.8},{:.3e}",
                    r.family,
                    r.width,
                    r.var_e_theory,
                    r.product_theory,
                    r.width_recovered,
                    r.var_e_recovered,
                    r.product_recovered,
                    r.product_err
                );
            }
            write_artifact(a.out.as_deref(), &csv, "reproduce")
        }
    }
}
