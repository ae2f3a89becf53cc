//! Command-line front end: `analyze`, `simulate` and `sweep`.

pub mod config;
pub mod report;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{AnalysisConfig, BoundsConfig, BoundsMode, Mode, SimulateConfig, SweepConfig};
pub use report::{BoundDetail, DecisionReport};

use crate::bounds::{
    highres_epsilon_norm_bound, highres_sufficient_test, midtread_bounds, midtread_sufficient_test,
    nonuniform_norm_bounds, nonuniform_sufficient_test, s_bounds, PriorBounds,
};
use crate::causality::{binary_causality_test, build_causality_matrix, MatrixKind};
use crate::error::{Error, Result};
use crate::moments::{estimate_moments, quantized_true_moments};
use crate::quantize::{make_saturated_uniform, quantize_series, QuantizerSpec};
use crate::signals::{paper_example_model, simulate_var, stationary_covariances, SeriesPair};

#[derive(Debug, Parser)]
#[command(name = "qgranger", version, about = "Granger causality from quantized Gaussian measurements")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide causality from a CSV of quantized x and z.
    Analyze(CommonArgs),
    /// Simulate the example model and write `k,x,z,xq,zq` rows.
    Simulate(CommonArgs),
    /// Margin table over quantizer bit depths, averaged over seeds.
    Sweep(CommonArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub emit_matrices: bool,
}

impl CommonArgs {
    pub fn resolve(&self) -> Result<AnalysisConfig> {
        let mut c = match &self.config {
            Some(p) => AnalysisConfig::load(p)?,
            None => AnalysisConfig::default(),
        };
        if let Some(v) = &self.input {
            c.input = Some(v.clone());
        }
        if let Some(v) = &self.output {
            c.output = Some(v.clone());
        }
        if let Some(v) = self.mode {
            c.mode = v;
        }
        if let Some(v) = self.m {
            c.m = v;
        }
        if let Some(v) = self.q {
            c.q = Some(v);
        }
        if let Some(v) = self.theta {
            c.theta = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        c.emit_matrices |= self.emit_matrices;
        if c.m < 1 {
            return Err(Error::InvalidArgument("m must be at least 1".into()));
        }
        Ok(c)
    }
}

/// Parse arguments, run, and return the process exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn run(command: &Command) -> Result<i32> {
    match command {
        Command::Analyze(a) => {
            let cfg = a.resolve()?;
            let input = cfg.input.clone().ok_or_else(|| Error::InvalidArgument("analyze needs --input".into()))?;
            let pair = read_quantized_csv(&input)?;
            let report = cmd_analyze(&cfg, &pair)?;
            write_output(cfg.output.as_deref(), &serde_json::to_string_pretty(&report)?)?;
            Ok(report.exit_code())
        }
        Command::Simulate(a) => {
            let cfg = a.resolve()?;
            let text = cmd_simulate(&cfg)?;
            write_output(cfg.output.as_deref(), &text)?;
            Ok(0)
        }
        Command::Sweep(a) => {
            let cfg = a.resolve()?;
            let rows = cmd_sweep(&cfg)?;
            write_output(cfg.output.as_deref(), &sweep_csv(&rows)?)?;
            Ok(0)
        }
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                out.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

/// Read quantized series from a CSV with an `xq,zq` (or `x,z`) header.
pub fn read_quantized_csv(path: &Path) -> Result<SeriesPair> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let find = |names: &[&str]| names.iter().find_map(|n| headers.iter().position(|h| h.trim() == *n));
    let (xi, zi) = match (find(&["xq"]), find(&["zq"])) {
        (Some(x), Some(z)) => (x, z),
        _ => match (find(&["x"]), find(&["z"])) {
            (Some(x), Some(z)) => (x, z),
            _ => return Err(Error::InvalidArgument(format!("{}: header needs xq,zq or x,z columns", path.display()))),
        },
    };
    let mut pair = SeriesPair { x: vec![], z: vec![] };
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let cell = |i: usize, name: &str| -> Result<f64> {
            let raw = rec.get(i).ok_or_else(|| Error::InvalidArgument(format!("line {line}: missing {name} column")))?;
            raw.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::InvalidArgument(format!("line {line}: {name} value {raw:?} is not a finite number")))
        };
        pair.x.push(cell(xi, "x")?);
        pair.z.push(cell(zi, "z")?);
    }
    Ok(pair)
}

/// Run the configured test on quantized series.
pub fn cmd_analyze(cfg: &AnalysisConfig, pair: &SeriesPair) -> Result<DecisionReport> {
    let n = pair.len();
    let depths = cfg.depths(n)?;
    let (spec_x, spec_z) = cfg.quantizers()?;
    let q_max = *depths.last().unwrap();
    let moments = estimate_moments(pair, cfg.m, q_max.max(cfg.m), cfg.zero_mean())?;
    let mut report = DecisionReport {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        mode: cfg.mode,
        verdict: crate::causality::Verdict::NotDecided,
        m: cfg.m,
        sample_count: n,
        sigma_min: None,
        theta: None,
        depths: vec![],
        bounds: None,
        moments: moments.clone(),
        matrices: None,
        config: cfg.clone(),
    };
    let m = cfg.m;
    match cfg.mode {
        Mode::Binary => {
            let d = binary_causality_test(&moments, m, cfg.theta)?;
            report.verdict = d.verdict;
            report.sigma_min = Some(d.sigma_min);
            report.theta = Some(d.theta);
            if cfg.emit_matrices {
                report.matrices = Some(vec![d.matrix]);
            }
            return Ok(report);
        }
        Mode::Nonuniform => {
            let priors = cfg.require_priors()?;
            let s = s_bounds(&priors, &spec_x, &spec_z, cfg.bounds.method())?;
            let d = nonuniform_sufficient_test(&moments, &s, m, &depths)?;
            report.verdict = d.verdict;
            report.depths = d.depths;
            report.bounds = Some(BoundDetail::Nonuniform { s });
        }
        Mode::Midtread | Mode::Highres => {
            let priors = cfg.require_priors()?;
            let (dx, dz) = match (&spec_x, &spec_z) {
                (QuantizerSpec::Uniform { delta: a }, QuantizerSpec::Uniform { delta: b }) => (*a, *b),
                _ => unreachable!("checked by quantizers()"),
            };
            if cfg.mode == Mode::Midtread {
                let d = midtread_sufficient_test(&moments, &priors, dx, dz, m, &depths)?;
                let per_q = depths.iter().map(|&q| midtread_bounds(&priors, dx, dz, m, q)).collect::<Result<_>>()?;
                report.verdict = d.verdict;
                report.depths = d.depths;
                report.bounds = Some(BoundDetail::Midtread { per_q });
            } else {
                let d = highres_sufficient_test(&moments, &priors, dx, dz, m, &depths)?;
                let per_q = depths
                    .iter()
                    .map(|&q| highres_epsilon_norm_bound(&priors, dx, dz, m, q))
                    .collect::<Result<_>>()?;
                report.verdict = d.verdict;
                report.depths = d.depths;
                report.bounds = Some(BoundDetail::Highres { per_q, explicit: true });
            }
        }
    }
    if cfg.emit_matrices {
        let mats = depths
            .iter()
            .map(|&q| build_causality_matrix(&moments, m, q, MatrixKind::Quantized))
            .collect::<Result<_>>()?;
        report.matrices = Some(mats);
    }
    Ok(report)
}

/// Simulate the example model and return CSV text with `k,x,z,xq,zq` rows.
pub fn cmd_simulate(cfg: &AnalysisConfig) -> Result<String> {
    let sim = &cfg.simulate;
    if sim.n == 0 {
        return Err(Error::InvalidArgument("simulate needs n >= 1".into()));
    }
    let model = paper_example_model(sim.causal);
    let pair = simulate_var(&model, sim.n, sim.burn_in, cfg.seed)?;
    let (sx, sz) = match cfg.mode {
        Mode::Binary => cfg.quantizers()?,
        _ => (
            cfg.quantizer_x.clone().unwrap_or(QuantizerSpec::Binary { threshold: 0.0 }),
            cfg.quantizer_z.clone().unwrap_or(QuantizerSpec::Binary { threshold: 0.0 }),
        ),
    };
    let xq = quantize_series(&pair.x, &sx)?;
    let zq = quantize_series(&pair.z, &sz)?;
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(["k", "x", "z", "xq", "zq"])?;
    for k in 0..sim.n {
        w.write_record(&[
            (k + 1).to_string(),
            pair.x[k].to_string(),
            pair.z[k].to_string(),
            xq[k].to_string(),
            zq[k].to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub bits_x: u32,
    pub bits_z: u32,
    pub q: usize,
    pub seeds: usize,
    pub bound: f64,
    pub mean_sigma_min_q: f64,
    /// `bound - sigma_min_q` averaged over seeds.
    pub mean_margin: f64,
    /// Margin on exact quantized moments.
    pub true_margin: f64,
}

/// Saturated-quantizer margins over `(bits_x, bits_z) in [1, B]^2`.
///
/// Priors are centered on the simulated model's exact standard deviations;
/// every cell averages the margin at depth `q` over `seeds` runs.
pub fn cmd_sweep(cfg: &AnalysisConfig) -> Result<Vec<SweepRow>> {
    let sw = &cfg.sweep;
    if sw.max_bits < 1 || sw.seeds < 1 {
        return Err(Error::InvalidArgument("sweep needs max_bits >= 1 and seeds >= 1".into()));
    }
    let cells: Vec<(u32, u32)> = (1..=sw.max_bits).flat_map(|bx| (1..=sw.max_bits).map(move |bz| (bx, bz))).collect();
    sweep_cells(cfg, &cells)
}

/// Same as [`cmd_sweep`] restricted to the given `(bits_x, bits_z)` cells.
pub fn sweep_cells(cfg: &AnalysisConfig, cells: &[(u32, u32)]) -> Result<Vec<SweepRow>> {
    let sw = &cfg.sweep;
    let sim = &cfg.simulate;
    let m = cfg.m;
    let q = cfg.q.unwrap_or(3 * m);
    if q < m || q > sim.n / 4 {
        return Err(Error::LagTooLarge { lag: q as i64, limit: sim.n / 4 });
    }
    let model = paper_example_model(sim.causal);
    let truth = stationary_covariances(&model, q)?;
    let priors = PriorBounds::centered(truth.sigma_x(), truth.sigma_z(), sw.prior_width, sw.rho_xz_max, sw.rho_zz_max)?;
    let method = cfg.bounds.method();
    let zero_mean = cfg.zero_mean.unwrap_or(false);

    let runs: Vec<SeriesPair> = (0..sw.seeds)
        .into_par_iter()
        .map(|i| simulate_var(&model, sim.n, sim.burn_in, cfg.seed.wrapping_add(i as u64)))
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(cells.len());
    for &(bx, bz) in cells {
        let spec_x = make_saturated_uniform(sw.x_range.0, sw.x_range.1, bx)?;
        let spec_z = make_saturated_uniform(sw.z_range.0, sw.z_range.1, bz)?;
        let s = s_bounds(&priors, &spec_x, &spec_z, method)?;
        let (no, ni) = nonuniform_norm_bounds(s.s_xz, s.s_zz, s.s_z, m, q)?;
        let bound = (no * ni).sqrt();
        let sig: Vec<f64> = runs
            .par_iter()
            .map(|r| {
                let quant = SeriesPair { x: quantize_series(&r.x, &spec_x)?, z: quantize_series(&r.z, &spec_z)? };
                let mom = estimate_moments(&quant, m, q, zero_mean)?;
                build_causality_matrix(&mom, m, q, MatrixKind::Quantized)?.sigma_min()
            })
            .collect::<Result<_>>()?;
        let mean_sigma = sig.iter().sum::<f64>() / sig.len() as f64;
        let exact = quantized_true_moments(&truth, &spec_x, &spec_z, m, q)?;
        let true_sigma = build_causality_matrix(&exact, m, q, MatrixKind::Quantized)?.sigma_min()?;
        rows.push(SweepRow {
            bits_x: bx,
            bits_z: bz,
            q,
            seeds: sw.seeds,
            bound,
            mean_sigma_min_q: mean_sigma,
            mean_margin: bound - mean_sigma,
            true_margin: bound - true_sigma,
        });
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(vec![]);
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
