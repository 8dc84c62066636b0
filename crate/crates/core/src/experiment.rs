//! Batch experiments and their CSV outputs.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certify::{error_curve, queries_for_pass_probability, ErrorCurve};
use crate::ensembles::{eps_cue_unitary, PerturbationParams, SamplerConfig};
use crate::error::{Error, Result};
use crate::linalg::EigenangleSet;

/// Error-probability target defining N*.
pub const TARGET_ERROR: f64 = 1.0 / 3.0;

/// Geometric grid of query counts, rounded to integers and deduplicated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricGrid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Default for GeometricGrid {
    fn default() -> Self {
        Self { start: 1e2, stop: 1e7, points: 60 }
    }
}

impl GeometricGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.start >= 1.0) || !(self.stop >= self.start) || !self.stop.is_finite() || self.points < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid needs 1 <= start <= stop and at least 2 points, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<u64> {
        let ratio = (self.stop / self.start).ln() / (self.points - 1) as f64;
        let mut v: Vec<u64> =
            (0..self.points).map(|i| (self.start * (ratio * i as f64).exp()).round() as u64).collect();
        v.dedup();
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Fig5Curves,
    Certify,
    Sample,
    Bounds,
    QsvtDemo,
}

/// Experiment description, loadable from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub d: usize,
    pub epsilon: f64,
    pub channels: usize,
    #[serde(rename = "N_grid", default)]
    pub n_grid: GeometricGrid,
    pub seed: u64,
    /// Sampler settings; `None` picks the defaults for (d, ε).
    #[serde(default)]
    pub sampler: Option<SamplerConfig>,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn fig5(d: usize, epsilon: f64, channels: usize, seed: u64, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            experiment: ExperimentKind::Fig5Curves,
            d,
            epsilon,
            channels,
            n_grid: GeometricGrid::default(),
            seed,
            sampler: None,
            output_dir: output_dir.into(),
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
        serde_json::from_str(&text).map_err(|e| Error::Format { path: path.into(), message: e.to_string() })
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels < 1 {
            return Err(Error::InvalidArgument("channels must be at least 1".into()));
        }
        self.n_grid.validate()
    }
}

/// Per-channel stream seed: SplitMix64 finalizer applied to (master, index).
pub fn channel_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A row type with a fixed CSV header.
pub trait CsvRecord: Sized {
    const HEADER: &'static [&'static str];
    fn fields(&self) -> Vec<String>;
    fn parse(record: &csv::StringRecord) -> std::result::Result<Self, String>;
}

/// 17 significant digits, enough to round-trip any f64.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn field<T: std::str::FromStr>(record: &csv::StringRecord, i: usize) -> std::result::Result<T, String> {
    let raw = record.get(i).ok_or_else(|| format!("missing column {i}"))?;
    raw.parse().map_err(|_| format!("cannot parse {raw:?} in column {i}"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub d: usize,
    pub epsilon: f64,
    pub channel_index: usize,
    pub trace_abs: f64,
    pub pass_prob: f64,
    pub n: u64,
    pub p_error: f64,
}

impl CsvRecord for CurveRow {
    const HEADER: &'static [&'static str] = &["d", "epsilon", "channel_index", "trace_abs", "pass_prob", "N", "p_error"];

    fn fields(&self) -> Vec<String> {
        vec![
            self.d.to_string(),
            format_float(self.epsilon),
            self.channel_index.to_string(),
            format_float(self.trace_abs),
            format_float(self.pass_prob),
            self.n.to_string(),
            format_float(self.p_error),
        ]
    }

    fn parse(r: &csv::StringRecord) -> std::result::Result<Self, String> {
        Ok(Self {
            d: field(r, 0)?,
            epsilon: field(r, 1)?,
            channel_index: field(r, 2)?,
            trace_abs: field(r, 3)?,
            pass_prob: field(r, 4)?,
            n: field(r, 5)?,
            p_error: field(r, 6)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub d: usize,
    pub epsilon: f64,
    pub channel_index: usize,
    pub trace_abs: f64,
    pub n_star: u64,
}

impl CsvRecord for SummaryRow {
    const HEADER: &'static [&'static str] = &["d", "epsilon", "channel_index", "trace_abs", "N_star"];

    fn fields(&self) -> Vec<String> {
        vec![
            self.d.to_string(),
            format_float(self.epsilon),
            self.channel_index.to_string(),
            format_float(self.trace_abs),
            self.n_star.to_string(),
        ]
    }

    fn parse(r: &csv::StringRecord) -> std::result::Result<Self, String> {
        Ok(Self {
            d: field(r, 0)?,
            epsilon: field(r, 1)?,
            channel_index: field(r, 2)?,
            trace_abs: field(r, 3)?,
            n_star: field(r, 4)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRow {
    pub kind: String,
    pub d: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub index: usize,
    pub angle: f64,
}

impl CsvRecord for SampleRow {
    const HEADER: &'static [&'static str] = &["kind", "d", "epsilon", "seed", "index", "angle"];

    fn fields(&self) -> Vec<String> {
        vec![
            self.kind.clone(),
            self.d.to_string(),
            format_float(self.epsilon),
            self.seed.to_string(),
            self.index.to_string(),
            format_float(self.angle),
        ]
    }

    fn parse(r: &csv::StringRecord) -> std::result::Result<Self, String> {
        Ok(Self {
            kind: field(r, 0)?,
            d: field(r, 1)?,
            epsilon: field(r, 2)?,
            seed: field(r, 3)?,
            index: field(r, 4)?,
            angle: field(r, 5)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseRow {
    pub index: usize,
    pub phase_radians: f64,
}

impl CsvRecord for PhaseRow {
    const HEADER: &'static [&'static str] = &["index", "phase_radians"];

    fn fields(&self) -> Vec<String> {
        vec![self.index.to_string(), format_float(self.phase_radians)]
    }

    fn parse(r: &csv::StringRecord) -> std::result::Result<Self, String> {
        Ok(Self { index: field(r, 0)?, phase_radians: field(r, 1)? })
    }
}

/// Writes a header line and one line per record, LF-terminated.
pub fn write_csv<T: CsvRecord>(records: &[T], path: &Path) -> Result<()> {
    let csv_err = |source| Error::Csv { path: path.into(), source };
    let file = File::create(path).map_err(|source| Error::Io { path: path.into(), source })?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file);
    w.write_record(T::HEADER).map_err(csv_err)?;
    for r in records {
        w.write_record(r.fields()).map_err(csv_err)?;
    }
    let mut file = w.into_inner().map_err(|e| Error::Io { path: path.into(), source: e.into_error() })?;
    file.flush().map_err(|source| Error::Io { path: path.into(), source })
}

/// Reads a file written by [`write_csv`], checking the header.
pub fn read_csv<T: CsvRecord>(path: &Path) -> Result<Vec<T>> {
    let csv_err = |source| Error::Csv { path: path.into(), source };
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_path(path).map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?.clone();
    if header.iter().ne(T::HEADER.iter().copied()) {
        return Err(Error::Format {
            path: path.into(),
            message: format!("expected header {:?}, found {:?}", T::HEADER, header),
        });
    }
    r.records()
        .enumerate()
        .map(|(line, rec)| {
            let rec = rec.map_err(csv_err)?;
            T::parse(&rec).map_err(|m| Error::Format { path: path.into(), message: format!("row {}: {m}", line + 1) })
        })
        .collect()
}

/// Rows for a set of eigenangle samples, indexed by sample then angle.
pub fn sample_rows(kind: &str, epsilon: f64, seed: u64, samples: &[EigenangleSet]) -> Vec<SampleRow> {
    samples
        .iter()
        .flat_map(|set| {
            set.as_slice().iter().enumerate().map(move |(index, &angle)| SampleRow {
                kind: kind.to_string(),
                d: set.dim(),
                epsilon,
                seed,
                index,
                angle,
            })
        })
        .collect()
}

pub fn phase_rows(phases: &[f64]) -> Vec<PhaseRow> {
    phases.iter().enumerate().map(|(index, &phase_radians)| PhaseRow { index, phase_radians }).collect()
}

/// One channel's curve and its N*.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelResult {
    pub index: usize,
    pub curve: ErrorCurve,
    pub n_star: u64,
}

#[derive(Debug, Clone)]
pub struct Fig5Output {
    pub curves_path: PathBuf,
    pub summary_path: PathBuf,
    pub channels: Vec<ChannelResult>,
}

/// Samples ε-CUE channels and evaluates their closed-form error curves.
/// Channel i draws everything from its own stream `channel_seed(seed, i)`,
/// so the result is independent of scheduling.
pub fn fig5_channels(config: &ExperimentConfig) -> Result<Vec<ChannelResult>> {
    config.validate()?;
    let eps = PerturbationParams::new(config.epsilon)?;
    let ns = config.n_grid.values();
    (0..config.channels)
        .into_par_iter()
        .map(|index| {
            let seed = channel_seed(config.seed, index as u64);
            let mut cfg = config.sampler.clone().unwrap_or_else(|| SamplerConfig::defaults(config.d, &eps, seed));
            cfg.seed = seed;
            let run = || -> Result<ChannelResult> {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let u = eps_cue_unitary(config.d, &eps, &cfg, &mut rng)?;
                let curve = error_curve(&u, &ns, config.epsilon);
                let n_star = queries_for_pass_probability(curve.pass_prob, TARGET_ERROR)?;
                Ok(ChannelResult { index, curve, n_star })
            };
            run().map_err(|e| Error::Channel { index, source: Box::new(e) })
        })
        .collect()
}

/// Runs [`fig5_channels`] and writes `curves_d{d}.csv` and `summary_d{d}.csv`.
pub fn run_fig5(config: &ExperimentConfig) -> Result<Fig5Output> {
    if config.experiment != ExperimentKind::Fig5Curves {
        return Err(Error::InvalidArgument(format!("expected a fig5_curves config, got {:?}", config.experiment)));
    }
    let channels = fig5_channels(config)?;
    let dir = &config.output_dir;
    std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.clone(), source })?;

    let curves: Vec<CurveRow> = channels
        .iter()
        .flat_map(|c| {
            c.curve.points.iter().map(move |p| CurveRow {
                d: c.curve.d,
                epsilon: c.curve.epsilon,
                channel_index: c.index,
                trace_abs: c.curve.trace_abs,
                pass_prob: c.curve.pass_prob,
                n: p.n,
                p_error: p.p_error,
            })
        })
        .collect();
    let summary: Vec<SummaryRow> = channels
        .iter()
        .map(|c| SummaryRow {
            d: c.curve.d,
            epsilon: c.curve.epsilon,
            channel_index: c.index,
            trace_abs: c.curve.trace_abs,
            n_star: c.n_star,
        })
        .collect();

    let curves_path = dir.join(format!("curves_d{}.csv", config.d));
    let summary_path = dir.join(format!("summary_d{}.csv", config.d));
    write_csv(&curves, &curves_path)?;
    write_csv(&summary, &summary_path)?;
    Ok(Fig5Output { curves_path, summary_path, channels })
}

/// Median and sample standard deviation of log₁₀ of the values.
pub fn log_spread(values: &[u64]) -> (f64, f64) {
    let mut sorted: Vec<f64> = values.iter().map(|&v| v as f64).collect();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let median = if n % 2 == 1 { sorted[n / 2] } else { 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]) };
    let logs: Vec<f64> = sorted.iter().map(|v| v.log10()).collect();
    let mean = logs.iter().sum::<f64>() / n as f64;
    let var = if n > 1 { logs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
    (median, var.sqrt())
}
