//! `twinbeam` command line.
//!
//! Exit codes: 0 success, 2 input error (bad flags, unreadable or malformed
//! files), 3 unphysical state, 4 too few samples. `estimate` additionally
//! reports the PPT band of the estimate: 0 entangled, 5 boundary,
//! 6 separable.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::channels::{attenuate, ChannelSpec, LossTarget};
use crate::criteria::{duan_sum, ppt_test, DuanReport, PptReport, PptVerdict};
use crate::error::{Error, Result};
use crate::esd::{
    self, classify_analytic, classify_oracle, critical_transmission_with, Axis, Classification,
    FixedPair, OracleOptions, Region, DEFAULT_FIXED_PAIR, DEFAULT_MAP_GRID, DEFAULT_MAP_RANGE,
    DEFAULT_SWEEP_POINTS,
};
use crate::ingest::{
    estimate_covariance, gaussianity_check, synthesize_record, EstimateOptions,
    GaussianityReport, DEFAULT_BOOTSTRAP_RESAMPLES, DEFAULT_GAUSSIANITY_SIGMAS,
    DEFAULT_MIN_SAMPLES, DEFAULT_SEED, GAUSSIANITY_MIN_SAMPLES,
};
use crate::io::{
    read_sample_file, read_state_file, write_json, write_region_map_csv, write_samples,
    write_sweep_csv, StateFile, StateSpec,
};
use crate::state::{
    extract, CovarianceMatrix, TwinBeamVariances, DEFAULT_PHYSICALITY_TOL,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_UNPHYSICAL: i32 = 3;
pub const EXIT_TOO_FEW_SAMPLES: i32 = 4;
pub const EXIT_BOUNDARY: i32 = 5;
pub const EXIT_SEPARABLE: i32 = 6;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Unphysical { .. } => EXIT_UNPHYSICAL,
        Error::TooFewSamples { .. } => EXIT_TOO_FEW_SAMPLES,
        _ => EXIT_INPUT,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "twinbeam",
    version,
    about = "Entanglement of two-mode Gaussian states under channel loss"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify a state as separable, robust or subject to sudden death.
    Classify(ClassifyArgs),
    /// nu_min of the partially transposed state versus channel transmission.
    Sweep(SweepArgs),
    /// Classification map over the (p_minus, q_plus) plane.
    RegionMap(RegionMapArgs),
    /// Reconstruct and test a covariance matrix from quadrature samples.
    Estimate(EstimateArgs),
    /// Draw seeded Gaussian quadrature samples for a state.
    Synthesize(SynthesizeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    Both,
}

impl From<ModeArg> for LossTarget {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::One => LossTarget::One,
            ModeArg::Two => LossTarget::Two,
            ModeArg::Both => LossTarget::Both,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct VarianceArgs {
    #[arg(long)]
    pub p_minus: Option<f64>,
    #[arg(long)]
    pub p_plus: Option<f64>,
    #[arg(long)]
    pub q_plus: Option<f64>,
    #[arg(long)]
    pub q_minus: Option<f64>,
    #[arg(long)]
    pub label: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ChannelArgs {
    /// Transmission applied to beam 1 before the analysis.
    #[arg(long, default_value_t = 1.0)]
    pub t1: f64,
    /// Transmission applied to beam 2 before the analysis.
    #[arg(long, default_value_t = 1.0)]
    pub t2: f64,
    /// Beam(s) sent through the lossy channel under study.
    #[arg(long, value_enum, default_value = "1")]
    pub mode: ModeArg,
}

#[derive(Debug, Clone, Args)]
pub struct ToleranceArgs {
    /// Half-width of the indeterminate band around nu_min = 1.
    #[arg(long, default_value_t = crate::criteria::DEFAULT_SEPARABILITY_TOL)]
    pub tol: f64,
    /// Allowed violation of the uncertainty principle.
    #[arg(long, default_value_t = DEFAULT_PHYSICALITY_TOL)]
    pub phys_tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub variances: VarianceArgs,
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[command(flatten)]
    pub tolerances: ToleranceArgs,
    /// Transmission grid used by the brute-force classifier.
    #[arg(long, default_value_t = DEFAULT_SWEEP_POINTS)]
    pub grid: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// State file; repeat for batch mode (one output file per state).
    #[arg(long)]
    pub input: Vec<PathBuf>,
    #[command(flatten)]
    pub variances: VarianceArgs,
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[command(flatten)]
    pub tolerances: ToleranceArgs,
    /// Number of transmission points.
    #[arg(long, default_value_t = DEFAULT_SWEEP_POINTS)]
    pub grid: usize,
    /// Output file, or output directory in batch mode.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct RegionMapArgs {
    #[arg(long, default_value_t = DEFAULT_MAP_RANGE.0)]
    pub p_minus_min: f64,
    #[arg(long, default_value_t = DEFAULT_MAP_RANGE.1)]
    pub p_minus_max: f64,
    #[arg(long, default_value_t = DEFAULT_MAP_RANGE.0)]
    pub q_plus_min: f64,
    #[arg(long, default_value_t = DEFAULT_MAP_RANGE.1)]
    pub q_plus_max: f64,
    #[arg(long, default_value_t = DEFAULT_FIXED_PAIR.0)]
    pub p_plus: f64,
    #[arg(long, default_value_t = DEFAULT_FIXED_PAIR.1)]
    pub q_minus: f64,
    /// Use p_plus = 1/q_plus and q_minus = 1/p_minus (pure states) instead
    /// of the fixed pair.
    #[arg(long)]
    pub pure: bool,
    /// Cells per axis.
    #[arg(long, default_value_t = DEFAULT_MAP_GRID)]
    pub grid: usize,
    /// Transmission grid for oracle arbitration.
    #[arg(long, default_value_t = DEFAULT_SWEEP_POINTS)]
    pub sweep_grid: usize,
    #[arg(long, value_enum, default_value = "1")]
    pub mode: ModeArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    /// Sample CSV with header p1,q1,p2,q2.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_BOOTSTRAP_RESAMPLES)]
    pub resamples: usize,
    #[arg(long, default_value_t = DEFAULT_MIN_SAMPLES)]
    pub min_samples: usize,
    /// Width of the nu_min band in bootstrap standard errors.
    #[arg(long, default_value_t = 3.0)]
    pub band_sigmas: f64,
    #[arg(long, default_value_t = DEFAULT_GAUSSIANITY_SIGMAS)]
    pub gaussianity_sigmas: f64,
    /// Allowed violation of the uncertainty principle for the estimate.
    #[arg(long, default_value_t = 1e-3)]
    pub phys_tol: f64,
    #[arg(long, value_enum, default_value = "1")]
    pub mode: ModeArg,
    #[arg(long, default_value_t = DEFAULT_SWEEP_POINTS)]
    pub grid: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct SynthesizeArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub variances: VarianceArgs,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Classify(a) => cmd_classify(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::RegionMap(a) => cmd_region_map(&a),
        Command::Estimate(a) => cmd_estimate(&a),
        Command::Synthesize(a) => cmd_synthesize(&a),
    }
}

fn output(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

struct LoadedState {
    label: Option<String>,
    spec: StateSpec,
}

fn inline_state(v: &VarianceArgs) -> Result<Option<LoadedState>> {
    let given = [v.p_minus, v.p_plus, v.q_plus, v.q_minus];
    if given.iter().all(Option::is_none) {
        return Ok(None);
    }
    match given {
        [Some(a), Some(b), Some(c), Some(d)] => Ok(Some(LoadedState {
            label: v.label.clone(),
            spec: StateSpec::Variances(TwinBeamVariances::new(a, b, c, d)?),
        })),
        _ => Err(Error::StateFile(
            "inline states need all four of --p-minus --p-plus --q-plus --q-minus".into(),
        )),
    }
}

fn load_file(path: &Path) -> Result<LoadedState> {
    let file = read_state_file(path)?;
    Ok(LoadedState {
        label: file.label.clone(),
        spec: file.spec()?,
    })
}

fn load_states(inputs: &[PathBuf], inline: &VarianceArgs) -> Result<Vec<LoadedState>> {
    let inline = inline_state(inline)?;
    match (inputs.is_empty(), inline) {
        (false, Some(_)) => Err(Error::StateFile(
            "give either --input or inline variance flags, not both".into(),
        )),
        (true, None) => Err(Error::StateFile(
            "no state given: use --input or the inline variance flags".into(),
        )),
        (true, Some(s)) => Ok(vec![s]),
        (false, None) => inputs.iter().map(|p| load_file(p)).collect(),
    }
}

fn load_single(input: &Option<PathBuf>, inline: &VarianceArgs) -> Result<LoadedState> {
    let inputs: Vec<PathBuf> = input.iter().cloned().collect();
    Ok(load_states(&inputs, inline)?.remove(0))
}

/// Full witness report for one state.
#[derive(Debug, Clone, Serialize)]
pub struct ClassifyReport {
    pub label: Option<String>,
    pub channel: ChannelSpec,
    pub loss_target: LossTarget,
    pub region: Region,
    pub region_code: i8,
    pub decided_by: esd::Decider,
    /// Analytic verdict before arbitration, when the state is a twin-beam state.
    pub analytic_region: Option<Region>,
    pub duan: DuanReport,
    pub ppt: PptReport,
    pub symplectic_eigenvalues: (f64, f64),
    pub purity: f64,
    pub variances: Option<TwinBeamVariances>,
    pub witnesses: Option<esd::WQuantities>,
    pub critical_transmission: Option<f64>,
    pub matrix: [[f64; 4]; 4],
}

pub fn classify_state(
    spec: &StateSpec,
    channel: &ChannelSpec,
    opts: &OracleOptions,
) -> Result<ClassifyReport> {
    let v = attenuate(&spec.covariance(opts.physicality_tol)?, channel)?;
    let twin = if *channel == ChannelSpec::identity() {
        spec.twin_beam()
    } else {
        extract(&v).ok()
    };
    // the closed condition describes loss on a single beam
    let analytic = match (twin, opts.target) {
        (Some(tb), LossTarget::One | LossTarget::Two) => Some(classify_analytic(&tb)?),
        _ => None,
    };
    let mut decision: Classification = match analytic {
        Some(a) if a.region != Region::AnalyticIndeterminate => a,
        _ => {
            let mut c = classify_oracle(&v, opts)?;
            if c.witnesses.is_none() {
                c.witnesses = analytic.and_then(|a| a.witnesses);
            }
            c
        }
    };
    if decision.region == Region::FragileEntangled && decision.critical_transmission.is_none() {
        decision.critical_transmission = critical_transmission_with(&v, opts)?;
    }
    Ok(ClassifyReport {
        label: None,
        channel: *channel,
        loss_target: opts.target,
        region: decision.region,
        region_code: decision.region.code(),
        decided_by: decision.decided_by,
        analytic_region: analytic.map(|a| a.region),
        duan: duan_sum(&v),
        ppt: ppt_test(&v, opts.tol_sep)?,
        symplectic_eigenvalues: v.symplectic_eigenvalues()?,
        purity: v.purity(),
        variances: twin,
        witnesses: decision.witnesses,
        critical_transmission: decision.critical_transmission,
        matrix: v.to_rows(),
    })
}

fn oracle_options(channel: &ChannelArgs, tol: &ToleranceArgs, grid: usize) -> OracleOptions {
    OracleOptions {
        grid_points: grid,
        target: channel.mode.into(),
        tol_sep: tol.tol,
        physicality_tol: tol.phys_tol,
        ..OracleOptions::default()
    }
}

fn opt_str(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn write_classify_csv<W: Write>(r: &ClassifyReport, w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record([
        "label",
        "region",
        "region_code",
        "decided_by",
        "duan",
        "duan_violated",
        "nu_min",
        "purity",
        "w_sum",
        "w_sum_bar",
        "w_prod",
        "w_prod_bar",
        "esd_quantity",
        "critical_transmission",
    ])?;
    let wq = r.witnesses;
    w.write_record([
        r.label.clone().unwrap_or_default(),
        serde_json::to_value(r.region)?.as_str().unwrap_or_default().to_string(),
        r.region_code.to_string(),
        serde_json::to_value(r.decided_by)?.as_str().unwrap_or_default().to_string(),
        r.duan.value.to_string(),
        r.duan.violated.to_string(),
        r.ppt.nu_min.to_string(),
        r.purity.to_string(),
        opt_str(wq.map(|w| w.w_sum)),
        opt_str(wq.map(|w| w.w_sum_bar)),
        opt_str(wq.map(|w| w.w_prod)),
        opt_str(wq.map(|w| w.w_prod_bar)),
        opt_str(wq.map(|w| w.esd_quantity)),
        opt_str(r.critical_transmission),
    ])?;
    w.flush()?;
    Ok(())
}

pub fn cmd_classify(a: &ClassifyArgs) -> Result<i32> {
    let state = load_single(&a.input, &a.variances)?;
    let channel = ChannelSpec::new(a.channel.t1, a.channel.t2)?;
    let opts = oracle_options(&a.channel, &a.tolerances, a.grid);
    let mut report = classify_state(&state.spec, &channel, &opts)?;
    report.label = state.label;
    let out = output(a.out.as_deref())?;
    match a.format {
        Format::Json => write_json(&report, out)?,
        Format::Csv => write_classify_csv(&report, out)?,
    }
    Ok(EXIT_OK)
}

fn file_stem(label: &Option<String>, path: Option<&PathBuf>, index: usize) -> String {
    let raw = label
        .clone()
        .or_else(|| path.and_then(|p| p.file_stem()).map(|s| s.to_string_lossy().into_owned()))
        .unwrap_or_else(|| format!("state{index}"));
    raw.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect()
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<i32> {
    let states = load_states(&a.input, &a.variances)?;
    let channel = ChannelSpec::new(a.channel.t1, a.channel.t2)?;
    let target: LossTarget = a.channel.mode.into();
    let ext = match a.format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let batch = states.len() > 1;
    if batch {
        let dir = a.out.as_ref().ok_or_else(|| {
            Error::StateFile("batch sweeps need --out pointing at a directory".into())
        })?;
        std::fs::create_dir_all(dir)?;
    }
    for (k, state) in states.iter().enumerate() {
        let v = attenuate(&state.spec.covariance(a.tolerances.phys_tol)?, &channel)?;
        let curve = esd::transmission_sweep(&v, target, a.grid)?;
        let out = if batch {
            let dir = a.out.as_ref().expect("checked above");
            let name = format!("{}.{ext}", file_stem(&state.label, a.input.get(k), k));
            output(Some(&dir.join(name)))?
        } else {
            output(a.out.as_deref())?
        };
        match a.format {
            Format::Csv => write_sweep_csv(&curve, out)?,
            Format::Json => write_json(
                &SweepFile {
                    label: state.label.clone(),
                    curve: &curve,
                },
                out,
            )?,
        }
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct SweepFile<'a> {
    label: Option<String>,
    #[serde(flatten)]
    curve: &'a esd::SweepCurve,
}

pub fn cmd_region_map(a: &RegionMapArgs) -> Result<i32> {
    let fixed = if a.pure {
        FixedPair::MinimumUncertainty
    } else {
        FixedPair::Constant {
            p_plus: a.p_plus,
            q_minus: a.q_minus,
        }
    };
    let opts = OracleOptions {
        grid_points: a.sweep_grid,
        target: a.mode.into(),
        ..OracleOptions::default()
    };
    let map = esd::region_map(
        Axis::new(a.p_minus_min, a.p_minus_max, a.grid),
        Axis::new(a.q_plus_min, a.q_plus_max, a.grid),
        fixed,
        &opts,
    )?;
    let out = output(a.out.as_deref())?;
    match a.format {
        Format::Csv => write_region_map_csv(&map, out)?,
        Format::Json => write_json(&map, out)?,
    }
    Ok(EXIT_OK)
}

/// Output of `estimate`; a valid state file (it carries `label` and `matrix`).
#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    #[serde(flatten)]
    pub state: StateFile,
    pub std_errors: [[f64; 4]; 4],
    pub samples: usize,
    pub resamples: usize,
    pub seed: u64,
    pub physical: bool,
    pub nu_min: f64,
    pub nu_min_std_error: f64,
    pub nu_min_band: (f64, f64),
    pub ppt: PptReport,
    pub duan: DuanReport,
    pub gaussianity: Option<GaussianityReport>,
    pub classification: Option<Classification>,
}

pub fn cmd_estimate(a: &EstimateArgs) -> Result<i32> {
    let record = read_sample_file(&a.input)?;
    let est = estimate_covariance(
        &record,
        &EstimateOptions {
            min_samples: a.min_samples,
            resamples: a.resamples,
            seed: a.seed,
            physicality_tol: a.phys_tol,
        },
    )?;
    let half = a.band_sigmas * est.nu_min_std_error;
    let band = if half.is_finite() { half } else { 0.0 };
    let ppt = ppt_test(&est.matrix, band)?;
    let gaussianity = if record.len() >= GAUSSIANITY_MIN_SAMPLES {
        Some(gaussianity_check(&record, a.gaussianity_sigmas)?)
    } else {
        None
    };
    let opts = OracleOptions {
        grid_points: a.grid,
        target: a.mode.into(),
        tol_sep: band,
        physicality_tol: a.phys_tol,
        ..OracleOptions::default()
    };
    let classification = if est.physical {
        Some(classify_oracle(&est.matrix, &opts)?)
    } else {
        None
    };
    let std_errors = CovarianceMatrixRows::from(&est.std_errors).0;
    let report = EstimateReport {
        state: StateFile::from_matrix(&est.matrix, record.label.clone()),
        std_errors,
        samples: est.samples,
        resamples: est.resamples,
        seed: a.seed,
        physical: est.physical,
        nu_min: est.nu_min,
        nu_min_std_error: est.nu_min_std_error,
        nu_min_band: (est.nu_min - band, est.nu_min + band),
        ppt,
        duan: duan_sum(&est.matrix),
        gaussianity,
        classification,
    };
    let out = output(a.out.as_deref())?;
    match a.format {
        Format::Json => write_json(&report, out)?,
        Format::Csv => write_estimate_csv(&report, out)?,
    }
    Ok(match ppt.verdict {
        PptVerdict::Entangled => EXIT_OK,
        PptVerdict::Boundary => EXIT_BOUNDARY,
        PptVerdict::Separable => EXIT_SEPARABLE,
    })
}

struct CovarianceMatrixRows([[f64; 4]; 4]);

impl From<&nalgebra::Matrix4<f64>> for CovarianceMatrixRows {
    fn from(m: &nalgebra::Matrix4<f64>) -> Self {
        let mut rows = [[0.0; 4]; 4];
        for (i, row) in rows.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = m[(i, j)];
            }
        }
        CovarianceMatrixRows(rows)
    }
}

fn write_estimate_csv<W: Write>(r: &EstimateReport, w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["row", "col", "value", "std_error"])?;
    let m = r.state.matrix.expect("estimate always carries a matrix");
    for i in 0..4 {
        for j in 0..4 {
            w.write_record([
                i.to_string(),
                j.to_string(),
                m[i][j].to_string(),
                r.std_errors[i][j].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_synthesize(a: &SynthesizeArgs) -> Result<i32> {
    let state = load_single(&a.input, &a.variances)?;
    let v: CovarianceMatrix = state.spec.covariance(DEFAULT_PHYSICALITY_TOL)?;
    let record = synthesize_record(&v, a.samples, a.seed)?;
    if let (Some(label), Some(path)) = (&state.label, &a.out) {
        write_json(
            &serde_json::json!({ "label": label }),
            File::create(crate::io::sidecar_path(path))?,
        )?;
    }
    write_samples(&record, output(a.out.as_deref())?)?;
    Ok(EXIT_OK)
}
