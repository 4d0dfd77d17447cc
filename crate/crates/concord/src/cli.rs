//! Command-line grammar and the analysis dispatch behind each subcommand.
//! Every reported number comes straight from a `concord-core` call.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use concord_core::classic::{bland_altman, calibrate_and_agree, ccc_decompose, ccc_inference_seeded, pearson};
use concord_core::image::{agreement_report, contaminate, AgreementReport, Contamination, ContaminationMode, Image, NoiseScale};
use concord_core::multivariate::{matrix_ccc_sample, rm_ccc, VectorPairSample, WeightMatrix};
use concord_core::pa::{pa_curve, pa_inference, DEFAULT_RESAMPLES};
use concord_core::robust::{rho1_normal, rho_g_sample, DistanceFunction};
use concord_core::sample::{fit_bivariate_normal, summarize, Divisor};
use concord_core::spatial::{
    empirical_variogram, fit_bivariate_ml, spatial_ccc_from_fit, spatial_pa, Family, GridField, LatticeSpec, Smoothness,
};
use concord_core::spatial::{gmcar_covariance, lattice_ccc};
use concord_core::temporal::{
    comovement, comovement_block_bootstrap, default_block_len, functional_ccc, kernel_weights, silverman_bandwidth, Kernel, SeriesPair,
    WeightFunction,
};
use concord_core::{PairedSample, Rng};
use nalgebra::DVector;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};
use crate::io::{self, Column};
use crate::report::{to_value, Format, Report, Series};

/// Seed used when neither `--seed` nor `CONCORD_SEED` is given.
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Parser)]
#[command(name = "concord", version, about = "Agreement analysis for paired continuous measurements")]
pub struct Cli {
    /// Seed for every stochastic step (bootstrap, contamination).
    #[arg(long, global = true, env = "CONCORD_SEED")]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Report destination (default: standard output).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Directory receiving one CSV per plot-ready data series.
    #[arg(long, global = true)]
    pub series_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

impl Cli {
    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }
}

fn ser_column<S: serde::Serializer>(c: &Column, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&c.to_string())
}

fn ser_columns<S: serde::Serializer>(c: &[Column], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(c.iter().map(|c| c.to_string()))
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PairsInput {
    /// Delimited input file.
    pub input: PathBuf,
    /// First measurement column: header name or 0-based position.
    #[arg(long, default_value = "0")]
    #[serde(serialize_with = "ser_column")]
    pub x: Column,
    /// Second measurement column.
    #[arg(long, default_value = "1")]
    #[serde(serialize_with = "ser_column")]
    pub y: Column,
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
}

impl PairsInput {
    fn ingest(&self) -> CliResult<io::IngestedPairs> {
        io::ingest_pairs(&self.input, &self.x, &self.y, delimiter_byte(self.delimiter)?)
    }
}

fn delimiter_byte(c: char) -> CliResult<u8> {
    u8::try_from(c).ok().filter(u8::is_ascii).ok_or_else(|| CliError::Config(format!("delimiter {c:?} must be ASCII")))
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Pearson, Lin's CCC with Fisher-z interval, decomposition, Bland–Altman.
    Classic {
        #[command(flatten)]
        pairs: PairsInput,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Limits-of-agreement multiplier.
        #[arg(long, default_value_t = 1.96)]
        loa: f64,
    },
    /// Distance-based coefficients ρ_g.
    Robust {
        #[command(flatten)]
        pairs: PairsInput,
        /// squared | absolute | power:δ | winsorized:δ:cap (repeatable).
        #[arg(long = "distance", value_delimiter = ',', default_values_t = ["squared".to_string(), "absolute".to_string(), "power:1.5".to_string()])]
        distances: Vec<String>,
    },
    /// Probability of agreement with parametric-bootstrap intervals.
    Pa {
        #[command(flatten)]
        pairs: PairsInput,
        /// Tolerances c (default: standard deviation of the x column).
        #[arg(long, value_delimiter = ',')]
        c: Vec<f64>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = DEFAULT_RESAMPLES)]
        resamples: usize,
    },
    /// Functional CCC or comovement of series.
    Temporal {
        #[command(subcommand)]
        mode: TemporalMode,
    },
    /// Repeated-measures and matrix-based CCC for vector measurements.
    Mv {
        input: PathBuf,
        /// Columns of the first vector (comma separated).
        #[arg(long, value_delimiter = ',', required = true)]
        #[serde(serialize_with = "ser_columns")]
        x: Vec<Column>,
        /// Columns of the second vector, matched in order.
        #[arg(long, value_delimiter = ',', required = true)]
        #[serde(serialize_with = "ser_columns")]
        y: Vec<Column>,
        #[arg(long, default_value_t = ',')]
        delimiter: char,
    },
    /// ML fit of a bivariate field, plug-in spatial CCC and spatial PA.
    Spatial {
        #[arg(long)]
        x_grid: PathBuf,
        #[arg(long)]
        y_grid: PathBuf,
        /// Grid spacing for whitespace-matrix grid files.
        #[arg(long, default_value_t = 1.0)]
        spacing: f64,
        /// exponential | matern-0.5 | matern-1.5 | matern-2.5
        #[arg(long, default_value = "exponential")]
        family: String,
        /// Lag distances ‖h‖.
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 1.0, 2.0])]
        lags: Vec<f64>,
        /// Tolerances c for ψ_c(h) (default: standard deviation of the x field).
        #[arg(long, value_delimiter = ',')]
        c: Vec<f64>,
    },
    /// GMCAR lattice concordance coefficient.
    Lattice {
        /// Edge list CSV of 0-based node pairs.
        #[arg(long)]
        adjacency: PathBuf,
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long, allow_hyphen_values = true)]
        rho1: f64,
        #[arg(long, allow_hyphen_values = true)]
        rho2: f64,
        #[arg(long, allow_hyphen_values = true)]
        eta0: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        eta1: f64,
        #[arg(long, default_value_t = 1.0)]
        tau1: f64,
        #[arg(long, default_value_t = 1.0)]
        tau2: f64,
        /// Two-column file of node means (μ₁, μ₂); zero when omitted.
        #[arg(long)]
        means: Option<PathBuf>,
    },
    /// Image agreement: Pearson, CCC, SSIM, PA curve and Bland–Altman limits.
    Image {
        #[arg(long)]
        reference: PathBuf,
        /// Images to compare against the reference.
        #[arg(long, value_delimiter = ',')]
        compare: Vec<PathBuf>,
        /// Contamination levels δ applied to the reference.
        #[arg(long, value_delimiter = ',')]
        contaminate: Vec<f64>,
        /// Seeded replicates per contamination level.
        #[arg(long, default_value_t = 1)]
        replicates: u64,
        #[arg(long, value_enum, default_value_t = ModeArg::Additive)]
        mode: ModeArg,
        #[arg(long, value_enum, default_value_t = ScaleArg::Relative)]
        noise_scale: ScaleArg,
        #[arg(long, default_value_t = 1.0)]
        sigma2: f64,
        #[arg(long, default_value_t = 10.0)]
        tau2: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [0.05, 0.1, 0.2, 0.3])]
        c: Vec<f64>,
        /// Also emit the Bland–Altman point series of every comparison.
        #[arg(long)]
        bland_altman: bool,
    },
    /// Calibrate y on x by least squares, then CCC and PA between observed
    /// y and the predictions.
    Calibrate {
        #[command(flatten)]
        pairs: PairsInput,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Tolerances c (default: standard deviation of y).
        #[arg(long, value_delimiter = ',')]
        c: Vec<f64>,
    },
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TemporalMode {
    /// Functional CCC from a long-format file (subject, time, x, y).
    Functional {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = KernelArg::Gaussian)]
        kernel: KernelArg,
        /// Kernel bandwidth (default: Silverman's rule on the times).
        #[arg(long)]
        bandwidth: Option<f64>,
        #[arg(long, default_value_t = ',')]
        delimiter: char,
    },
    /// Comovement of two series with a block-bootstrap interval.
    Comovement {
        #[command(flatten)]
        pairs: PairsInput,
        /// Block length (default: ⌈m^{1/3}⌉ for m differences).
        #[arg(long)]
        block_len: Option<usize>,
        #[arg(long, default_value_t = 2000)]
        resamples: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelArg {
    Gaussian,
    Epanechnikov,
    Constant,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    Additive,
    Replace,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleArg {
    Relative,
    Absolute,
}

pub fn parse_distance(s: &str) -> CliResult<DistanceFunction> {
    let bad = || CliError::Config(format!("unknown distance {s:?}"));
    let parts: Vec<&str> = s.trim().split(':').collect();
    let num = |t: &str| t.parse::<f64>().map_err(|_| bad());
    let g = match parts.as_slice() {
        ["squared"] => DistanceFunction::Squared,
        ["absolute"] => DistanceFunction::Absolute,
        ["power", d] => DistanceFunction::Power(num(d)?),
        ["winsorized", d, cap] => DistanceFunction::WinsorizedPower { delta: num(d)?, cap: num(cap)? },
        _ => return Err(bad()),
    };
    g.validate().map_err(|e| CliError::Config(format!("distance {s:?}: {e}")))?;
    Ok(g)
}

pub fn parse_family(s: &str) -> CliResult<Family> {
    match s.trim() {
        "exponential" => Ok(Family::Exponential),
        "matern-0.5" => Ok(Family::matern_common(Smoothness::Half)),
        "matern-1.5" => Ok(Family::matern_common(Smoothness::ThreeHalves)),
        "matern-2.5" => Ok(Family::matern_common(Smoothness::FiveHalves)),
        other => Err(CliError::Config(format!("unknown covariance family {other:?}"))),
    }
}

fn input_note(p: &io::IngestedPairs) -> Value {
    json!({ "n": p.sample.len(), "dropped": p.dropped, "x": p.x_name, "y": p.y_name })
}

fn sd_of(v: &[f64]) -> f64 {
    concord_core::math::sd(v)
}

/// `k · c_max / 20` for `k = 1..=60`: a plot grid reaching three times the
/// largest requested tolerance.
fn plot_grid(c_max: f64) -> Vec<f64> {
    (1..=60).map(|k| k as f64 * c_max / 20.0).collect()
}

fn num(v: f64) -> Value {
    to_value(&v)
}

/// Execute one parsed command line and build its report.
pub fn run(cli: &Cli) -> CliResult<Report> {
    let seed = cli.seed();
    let mut report = Report::new(command_name(&cli.command), seed, to_value(&cli.command));
    match &cli.command {
        Command::Classic { pairs, alpha, loa } => classic(&mut report, pairs, *alpha, *loa, seed)?,
        Command::Robust { pairs, distances } => robust(&mut report, pairs, distances)?,
        Command::Pa { pairs, c, alpha, resamples } => pa(&mut report, pairs, c, *alpha, *resamples, seed)?,
        Command::Temporal { mode } => temporal(&mut report, mode, seed)?,
        Command::Mv { input, x, y, delimiter } => mv(&mut report, input, x, y, *delimiter)?,
        Command::Spatial { x_grid, y_grid, spacing, family, lags, c } => spatial(&mut report, x_grid, y_grid, *spacing, family, lags, c)?,
        Command::Lattice { adjacency, nodes, rho1, rho2, eta0, eta1, tau1, tau2, means } => {
            let w = io::read_edge_list(adjacency, *nodes)?;
            let n = w.nrows();
            let (mu1, mu2) = match means {
                Some(p) => io::read_means(p, n)?,
                None => (DVector::zeros(n), DVector::zeros(n)),
            };
            let spec = LatticeSpec::new(w, (*rho1, *rho2), (*eta0, *eta1), (*tau1, *tau2), mu1, mu2)?;
            let blocks = gmcar_covariance(&spec)?;
            report.results = json!({
                "nodes": n,
                "edges": (spec.w1.sum() / 2.0) as usize,
                "lattice_ccc": lattice_ccc(&spec)?,
                "block_sums": { "sigma11": blocks.s11.sum(), "sigma12": blocks.s12.sum(), "sigma22": blocks.s22.sum() },
            });
        }
        Command::Image { .. } => image(&mut report, &cli.command, seed)?,
        Command::Calibrate { pairs, alpha, c } => calibrate(&mut report, pairs, *alpha, c)?,
    }
    Ok(report)
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Classic { .. } => "classic",
        Command::Robust { .. } => "robust",
        Command::Pa { .. } => "pa",
        Command::Temporal { mode: TemporalMode::Functional { .. } } => "temporal functional",
        Command::Temporal { mode: TemporalMode::Comovement { .. } } => "temporal comovement",
        Command::Mv { .. } => "mv",
        Command::Spatial { .. } => "spatial",
        Command::Lattice { .. } => "lattice",
        Command::Image { .. } => "image",
        Command::Calibrate { .. } => "calibrate",
    }
}

fn bland_altman_series(s: &PairedSample, multiplier: f64) -> CliResult<(Value, Series)> {
    let ba = bland_altman(s, multiplier)?;
    let mut series = Series::new(&["mean", "difference"]);
    for (m, d) in ba.means.iter().zip(&ba.diffs) {
        series.push(vec![num(*m), num(*d)]);
    }
    Ok((json!({ "limits": to_value(&ba.limits), "coverage": ba.coverage() }), series))
}

fn classic(report: &mut Report, pairs: &PairsInput, alpha: f64, loa: f64, seed: u64) -> CliResult<()> {
    let p = pairs.ingest()?;
    let m = summarize(&p.sample, Divisor::Unbiased);
    let fit = fit_bivariate_normal(&p.sample);
    let (ba, series) = bland_altman_series(&p.sample, loa)?;
    report.results = json!({
        "input": input_note(&p),
        "moments": to_value(&m),
        "pearson": to_value(&pearson(&m).ok()),
        "ccc": to_value(&ccc_inference_seeded(&p.sample, alpha, seed)?),
        "decomposition": to_value(&ccc_decompose(&fit.params).ok()),
        "bland_altman": ba,
    });
    report.series.insert("bland_altman".into(), series);
    Ok(())
}

fn robust(report: &mut Report, pairs: &PairsInput, distances: &[String]) -> CliResult<()> {
    let p = pairs.ingest()?;
    let mut rows = Vec::new();
    for d in distances {
        let g = parse_distance(d)?;
        rows.push(json!({ "distance": d, "rho_g": rho_g_sample(&p.sample, g)? }));
    }
    let fit = fit_bivariate_normal(&p.sample);
    report.results = json!({
        "input": input_note(&p),
        "rho_g": rows,
        "rho1_normal_plugin": to_value(&rho1_normal(&fit.params).ok()),
    });
    Ok(())
}

fn pa(report: &mut Report, pairs: &PairsInput, c: &[f64], alpha: f64, b: usize, seed: u64) -> CliResult<()> {
    let p = pairs.ingest()?;
    let cs = if c.is_empty() { vec![sd_of(p.sample.x())] } else { c.to_vec() };
    let fit = fit_bivariate_normal(&p.sample);
    let mut rng = Rng::new(seed);
    let inference = cs.iter().map(|&c| pa_inference(&p.sample, c, alpha, b, &mut rng)).collect::<Result<Vec<_>, _>>()?;
    let c_max = cs.iter().copied().fold(0.0, f64::max);
    let curve = pa_curve(&fit.params, &plot_grid(c_max))?;
    report.results = json!({
        "input": input_note(&p),
        "mu_d": fit.params.mu_d(),
        "sigma_d": fit.params.var_d().max(0.0).sqrt(),
        "degenerate_fit": fit.degenerate,
        "pa": to_value(&inference),
    });
    report.series.insert("pa_curve".into(), curve_series(&curve.c_grid, &curve.values));
    Ok(())
}

fn curve_series(cs: &[f64], values: &[f64]) -> Series {
    let mut s = Series::new(&["c", "pa"]);
    for (c, v) in cs.iter().zip(values) {
        s.push(vec![num(*c), num(*v)]);
    }
    s
}

fn temporal(report: &mut Report, mode: &TemporalMode, seed: u64) -> CliResult<()> {
    match mode {
        TemporalMode::Functional { input, kernel, bandwidth, delimiter } => {
            let data = io::read_longitudinal(input, delimiter_byte(*delimiter)?)?;
            let times = data.times().to_vec();
            let w = match kernel {
                KernelArg::Constant => WeightFunction::constant(&times, 1.0)?,
                k => {
                    let kern = if matches!(k, KernelArg::Gaussian) { Kernel::Gaussian } else { Kernel::Epanechnikov };
                    let h = match bandwidth {
                        Some(h) => *h,
                        None => silverman_bandwidth(&times)?,
                    };
                    kernel_weights(&times, kern, h)?
                }
            };
            let r = functional_ccc(&data, &w)?;
            let mut s = Series::new(&["time", "weight"]);
            for (t, v) in w.times.iter().zip(&w.values) {
                s.push(vec![num(*t), num(*v)]);
            }
            report.results = json!({
                "subjects": data.subjects(),
                "times": times.len(),
                "bandwidth": w.bandwidth,
                "functional_ccc": to_value(&r),
            });
            report.series.insert("weights".into(), s);
        }
        TemporalMode::Comovement { pairs, block_len, resamples, alpha } => {
            let p = pairs.ingest()?;
            if p.dropped > 0 {
                return Err(CliError::Config(format!(
                    "{}: {} rows have missing values; series must be complete",
                    pairs.input.display(),
                    p.dropped
                )));
            }
            let (x, y) = p.sample.clone().into_parts();
            let pair = SeriesPair::new(x, y)?;
            let l = block_len.unwrap_or_else(|| default_block_len(pair.len() - 1));
            let est = comovement_block_bootstrap(&pair, l, *resamples, *alpha, &mut Rng::new(seed))?;
            report.results = json!({
                "input": input_note(&p),
                "comovement": comovement(&pair)?,
                "block_len": l,
                "bootstrap": to_value(&est),
            });
        }
    }
    Ok(())
}

fn mv(report: &mut Report, input: &Path, x: &[Column], y: &[Column], delimiter: char) -> CliResult<()> {
    let (xm, ym, dropped) = io::ingest_vector_pairs(input, x, y, delimiter_byte(delimiter)?)?;
    let s = VectorPairSample::new(xm, ym).map_err(|source| CliError::Input { path: input.to_path_buf(), source })?;
    report.results = json!({
        "n": s.len(),
        "dropped": dropped,
        "dim": s.dim(),
        "rm_ccc": rm_ccc(&s.moments(), &WeightMatrix::identity(s.dim()))?,
        "matrix_ccc": to_value(&matrix_ccc_sample(&s)?),
    });
    Ok(())
}

fn spatial(report: &mut Report, x_grid: &Path, y_grid: &Path, spacing: f64, family: &str, lags: &[f64], c: &[f64]) -> CliResult<()> {
    let family = parse_family(family)?;
    let gx = io::read_grid(x_grid, spacing)?;
    let gy = io::read_grid(y_grid, spacing)?;
    if gx.values.shape() != gy.values.shape() || gx.spacing != gy.spacing {
        return Err(CliError::Config("x and y grids differ in shape or spacing".into()));
    }
    let field =
        GridField::new(gx.values, gy.values, gx.spacing).map_err(|source| CliError::Input { path: x_grid.to_path_buf(), source })?;
    let cs = if c.is_empty() { vec![sd_of(field.x().as_slice())] } else { c.to_vec() };
    let fit = fit_bivariate_ml(&field, family)?;
    let mut per_lag = Vec::new();
    let mut sccc = Series::new(&["lag", "sccc"]);
    let mut pa_series = Series::new(&["lag", "c", "pa"]);
    for &h in lags {
        let est = spatial_ccc_from_fit(&fit, [h, 0.0])?;
        let pas = cs.iter().map(|&c| spatial_pa(&fit.model, [h, 0.0], c)).collect::<Result<Vec<_>, _>>()?;
        sccc.push(vec![num(h), num(est.estimate.estimate)]);
        for (c, v) in cs.iter().zip(&pas) {
            pa_series.push(vec![num(h), num(*c), num(*v)]);
        }
        per_lag.push(json!({
            "lag": h,
            "sccc": est.estimate.estimate,
            "eta": est.eta,
            "v": est.v,
            "u": est.u,
            "rho_xy": est.rho_xy,
            "pa": cs.iter().zip(&pas).map(|(c, v)| json!({ "c": c, "pa": v })).collect::<Vec<_>>(),
        }));
    }
    let variogram: Vec<Value> = (1..=3)
        .map(|k| {
            json!({
                "lag_steps": k,
                "x": to_value(&empirical_variogram(field.x(), (k, 0))),
                "y": to_value(&empirical_variogram(field.y(), (k, 0))),
            })
        })
        .collect();
    report.results = json!({
        "grid": { "nx": field.nx(), "ny": field.ny(), "spacing": field.spacing() },
        "fit": to_value(&fit),
        "lags": per_lag,
        "empirical_variogram_diagnostic": variogram,
    });
    report.series.insert("sccc".into(), sccc);
    report.series.insert("spatial_pa".into(), pa_series);
    Ok(())
}

fn comparison_value(label: &str, r: &AgreementReport) -> Value {
    json!({
        "label": label,
        "pearson": r.pearson,
        "lin_ccc": r.lin_ccc,
        "ssim": to_value(&r.ssim),
        "pa": r.pa_curve.c_grid.iter().zip(&r.pa_curve.values).map(|(c, v)| json!({ "c": c, "pa": v })).collect::<Vec<_>>(),
        "bland_altman": { "limits": to_value(&r.bland_altman.limits), "coverage": r.bland_altman.coverage() },
    })
}

fn image(report: &mut Report, cmd: &Command, seed: u64) -> CliResult<()> {
    let Command::Image { reference, compare, contaminate: deltas, replicates, mode, noise_scale, sigma2, tau2, c, bland_altman } = cmd
    else {
        unreachable!("dispatched on the image variant")
    };
    if compare.is_empty() && deltas.is_empty() {
        return Err(CliError::Config("give --compare images and/or --contaminate levels".into()));
    }
    let base = io::read_image(reference)?;
    let mut comparisons = Vec::new();
    let mut curves = Series::new(&["label", "c", "pa"]);
    let mut ba_series: Vec<(String, Series)> = Vec::new();
    let mut add = |label: String, other: &Image| -> CliResult<AgreementReport> {
        let r = agreement_report(&base, other, c)?;
        for (cv, v) in r.pa_curve.c_grid.iter().zip(&r.pa_curve.values) {
            curves.push(vec![Value::from(label.clone()), num(*cv), num(*v)]);
        }
        if *bland_altman {
            let mut s = Series::new(&["mean", "difference"]);
            for (m, d) in r.bland_altman.means.iter().zip(&r.bland_altman.diffs) {
                s.push(vec![num(*m), num(*d)]);
            }
            ba_series.push((format!("bland_altman_{label}"), s));
        }
        comparisons.push(comparison_value(&label, &r));
        Ok(r)
    };
    for path in compare {
        let other = io::read_image(path)?;
        let label = path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
        add(label, &other)?;
    }
    let cfg_mode = match mode {
        ModeArg::Additive => ContaminationMode::Additive,
        ModeArg::Replace => ContaminationMode::Replace,
    };
    let cfg_scale = match noise_scale {
        ScaleArg::Relative => NoiseScale::RelativeToImage,
        ScaleArg::Absolute => NoiseScale::Absolute,
    };
    let mut summary = Vec::new();
    for (di, &delta) in deltas.iter().enumerate() {
        let cfg = Contamination { delta, sigma2: *sigma2, tau2: *tau2, mode: cfg_mode, scale: cfg_scale };
        let (mut sp, mut sc, mut ss) = (0.0, 0.0, 0.0);
        for r in 0..*replicates {
            let stream = di as u64 * replicates + r;
            let noisy = contaminate(&base, &cfg, &mut Rng::with_stream(seed, stream))?;
            let rep = add(format!("delta{delta}_rep{r}"), &noisy.image)?;
            sp += rep.pearson;
            sc += rep.lin_ccc;
            ss += rep.ssim.value;
        }
        let k = *replicates as f64;
        summary
            .push(json!({ "delta": delta, "replicates": replicates, "mean_pearson": sp / k, "mean_lin_ccc": sc / k, "mean_ssim": ss / k }));
    }
    report.results = json!({
        "reference": { "rows": base.dims().0, "cols": base.dims().1 },
        "comparisons": comparisons,
        "contamination_summary": summary,
    });
    report.series.insert("pa_curves".into(), curves);
    for (name, s) in ba_series {
        report.series.insert(name, s);
    }
    Ok(())
}

fn calibrate(report: &mut Report, pairs: &PairsInput, alpha: f64, c: &[f64]) -> CliResult<()> {
    let p = pairs.ingest()?;
    let cal = calibrate_and_agree(&p.sample, alpha)?;
    let agree = cal.agreement_sample(&p.sample)?;
    let reference_sd = sd_of(p.sample.y());
    let cs = if c.is_empty() { vec![reference_sd] } else { c.to_vec() };
    let params = fit_bivariate_normal(&agree).params;
    let at = pa_curve(&params, &cs)?;
    let c_max = cs.iter().copied().fold(0.0, f64::max);
    let curve = pa_curve(&params, &plot_grid(c_max))?;
    let mut fitted = Series::new(&["x", "observed", "predicted"]);
    for ((x, y), yhat) in p.sample.pairs().zip(&cal.predicted) {
        fitted.push(vec![num(x), num(y), num(*yhat)]);
    }
    report.results = json!({
        "input": input_note(&p),
        "regression": {
            "intercept": cal.intercept,
            "slope": cal.slope,
            "r2": cal.r2,
            "r2_adj": cal.r2_adj,
            "residual_sd": cal.residual_sd,
        },
        "ccc": to_value(&cal.ccc),
        "reference_sd": reference_sd,
        "pa": at.c_grid.iter().zip(&at.values).map(|(c, v)| json!({ "c": c, "pa": v, "interchangeable": *v >= concord_core::pa::INTERCHANGEABILITY_THRESHOLD })).collect::<Vec<_>>(),
    });
    report.series.insert("calibration".into(), fitted);
    report.series.insert("pa_curve".into(), curve_series(&curve.c_grid, &curve.values));
    Ok(())
}
