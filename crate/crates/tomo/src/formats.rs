//! On-disk formats: record JSONL, reconstruction JSON, metric and Wigner CSVs.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use werner_core::montecarlo::MeasurementRecord;
use werner_core::tomography::{BlockEstimate, SpinSetting, SETTING_DIAGONAL, SETTING_IMAG, SETTING_REAL};
use werner_core::werner::MetricRow;
use werner_core::wigner::{block_label, WignerGrid, BLOCK_ORDER};
use werner_core::{DMatrix, C64};

use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";
pub const RESULT: &str = "reconstruction.json";
pub const SUMMARY: &str = "summary.txt";
pub const METRICS: &str = "metrics.csv";
pub const WIGNER_SIDECAR: &str = "wigner.json";

/// Record file name of a setting group.
pub fn record_file(setting: SpinSetting) -> &'static str {
    if setting == SETTING_DIAGONAL {
        "records_theta0_phi0.jsonl"
    } else if setting == SETTING_REAL {
        "records_thetapi4_phi-pi2.jsonl"
    } else if setting == SETTING_IMAG {
        "records_thetapi4_phi0.jsonl"
    } else {
        "records_other.jsonl"
    }
}

/// Writes `contents` through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let tmp = path.with_extension("partial");
    let mut f = BufWriter::new(fs::File::create(&tmp).map_err(|e| CliError::io(&tmp, e))?);
    f.write_all(contents).map_err(|e| CliError::io(&tmp, e))?;
    f.into_inner()
        .map_err(|e| CliError::io(&tmp, e.into_error()))?
        .sync_all()
        .map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::format(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SettingJson {
    pub theta: f64,
    pub phi_spin: f64,
    pub beta_abs: f64,
}

/// One line of a record file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordLine {
    pub setting: SettingJson,
    pub phase_index: usize,
    pub n_phases: usize,
    pub total_events: u64,
    pub seed: u64,
    pub config_hash: String,
    pub counts_up: Vec<u64>,
    pub counts_down: Vec<u64>,
    #[serde(default)]
    pub overflow: u64,
}

impl RecordLine {
    pub fn from_record(r: &MeasurementRecord, config_hash: &str) -> Self {
        Self {
            setting: SettingJson {
                theta: r.theta,
                phi_spin: r.phi_spin,
                beta_abs: r.beta_abs,
            },
            phase_index: r.phase_index,
            n_phases: r.n_phases,
            total_events: r.total_events,
            seed: r.seed,
            config_hash: config_hash.to_string(),
            counts_up: r.counts_up.clone(),
            counts_down: r.counts_down.clone(),
            overflow: r.overflow,
        }
    }

    pub fn to_record(&self) -> MeasurementRecord {
        MeasurementRecord {
            theta: self.setting.theta,
            phi_spin: self.setting.phi_spin,
            beta_abs: self.setting.beta_abs,
            phase_index: self.phase_index,
            n_phases: self.n_phases,
            total_events: self.total_events,
            seed: self.seed,
            counts_up: self.counts_up.clone(),
            counts_down: self.counts_down.clone(),
            overflow: self.overflow,
        }
    }
}

pub fn render_records<'a>(records: impl IntoIterator<Item = &'a MeasurementRecord>, config_hash: &str) -> String {
    let mut s = String::new();
    for r in records {
        s.push_str(&serde_json::to_string(&RecordLine::from_record(r, config_hash)).expect("serializable"));
        s.push('\n');
    }
    s
}

pub fn read_records(path: &Path) -> Result<Vec<RecordLine>, CliError> {
    let f = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: RecordLine =
            serde_json::from_str(&line).map_err(|e| CliError::format(path, format!("line {}: {e}", i + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFile {
    pub name: String,
    pub setting: SettingJson,
    pub records: usize,
}

/// Written next to the record files by `simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub seed: u64,
    pub config: String,
    pub backend: String,
    pub events_per_phase: u64,
    pub files: Vec<ManifestFile>,
}

/// A complex matrix as rows of `[re, im]` pairs with parallel σ arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockJson {
    pub values: Vec<Vec<[f64; 2]>>,
    pub sigma_re: Vec<Vec<f64>>,
    pub sigma_im: Vec<Vec<f64>>,
    pub cov_re_im: Vec<Vec<f64>>,
}

fn rows<T: Copy, U>(m: &DMatrix<T>, f: impl Fn(T) -> U) -> Vec<Vec<U>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| f(m[(i, j)])).collect()).collect()
}

fn matrix<T, U: werner_core::nalgebra::Scalar>(rows: &[Vec<T>], f: impl Fn(&T) -> U) -> Result<DMatrix<U>, String> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(format!("block is not square ({n} rows)"));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| f(&rows[i][j])))
}

impl BlockJson {
    pub fn from_estimate(b: &BlockEstimate) -> Self {
        Self {
            values: rows(&b.values, |z: C64| [z.re, z.im]),
            sigma_re: rows(&b.sigma_re(), |x| x),
            sigma_im: rows(&b.sigma_im(), |x| x),
            cov_re_im: rows(&b.cov_re_im, |x| x),
        }
    }

    pub fn to_estimate(&self) -> Result<BlockEstimate, String> {
        Ok(BlockEstimate {
            values: matrix(&self.values, |p| C64::new(p[0], p[1]))?,
            var_re: matrix(&self.sigma_re, |s| s * s)?,
            var_im: matrix(&self.sigma_im, |s| s * s)?,
            cov_re_im: matrix(&self.cov_re_im, |c| *c)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlocksJson {
    pub uu: BlockJson,
    pub ud: BlockJson,
    pub du: BlockJson,
    pub dd: BlockJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthComparison {
    pub alpha: f64,
    pub max_abs_error: [f64; 4],
    pub median_abs_error_uu_diagonal: f64,
    pub components: usize,
    pub coverage_1sigma: f64,
    pub coverage_3sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionJson {
    pub config_hash: String,
    pub seed: u64,
    pub config: String,
    /// `records` or `exact`.
    pub source: String,
    pub n_cutoff: usize,
    pub condition_numbers: Vec<f64>,
    pub blocks: BlocksJson,
    pub truth: Option<TruthComparison>,
}

/// Comment line carried at the top of every CSV output.
pub fn provenance_line(config_hash: &str, seed: u64) -> String {
    format!("# config_hash={config_hash} seed={seed}\n")
}

/// Config hash and seed from a leading provenance comment.
pub fn parse_provenance(line: &str) -> Option<(String, u64)> {
    let rest = line.strip_prefix("# ")?;
    let mut hash = None;
    let mut seed = None;
    for part in rest.split_whitespace() {
        if let Some(h) = part.strip_prefix("config_hash=") {
            hash = Some(h.to_string());
        } else if let Some(s) = part.strip_prefix("seed=") {
            seed = s.parse().ok();
        }
    }
    Some((hash?, seed?))
}

pub const METRICS_HEADER: [&str; 5] = ["alpha", "kappa", "entropy_bits", "negativity", "fidelity"];

pub fn render_metrics(rows: &[MetricRow], alpha_star: f64, config_hash: &str, seed: u64) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(METRICS_HEADER).expect("in-memory write");
    for r in rows {
        w.write_record([r.alpha, r.kappa, r.entropy_bits, r.negativity, r.fidelity].map(|x| x.to_string()))
            .expect("in-memory write");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8");
    format!("{}{body}# threshold alpha_star={alpha_star}\n", provenance_line(config_hash, seed))
}

pub fn parse_metrics(text: &str) -> Result<Vec<MetricRow>, String> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| e.to_string())?.clone();
    if header.iter().ne(METRICS_HEADER) {
        return Err(format!("unexpected header {header:?}"));
    }
    r.records()
        .map(|rec| {
            let rec = rec.map_err(|e| e.to_string())?;
            let v: Vec<f64> = rec
                .iter()
                .map(|x| x.parse::<f64>().map_err(|e| e.to_string()))
                .collect::<Result<_, _>>()?;
            Ok(MetricRow {
                alpha: v[0],
                kappa: v[1],
                entropy_bits: v[2],
                negativity: v[3],
                fidelity: v[4],
            })
        })
        .collect()
}

pub const WIGNER_HEADER: [&str; 5] = ["re_gamma", "im_gamma", "block", "re_W", "im_W"];

pub fn render_wigner(grid: &WignerGrid, config_hash: &str, seed: u64) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(WIGNER_HEADER).expect("in-memory write");
    for (b, &(s, t)) in BLOCK_ORDER.iter().enumerate() {
        for (i, x) in grid.re_axis.iter().enumerate() {
            for (j, y) in grid.im_axis.iter().enumerate() {
                let v = grid.values[b][(i, j)];
                w.write_record([
                    x.to_string(),
                    y.to_string(),
                    block_label(s, t).to_string(),
                    v.re.to_string(),
                    v.im.to_string(),
                ])
                .expect("in-memory write");
            }
        }
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8");
    format!("{}{body}", provenance_line(config_hash, seed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakJson {
    pub re: f64,
    pub im: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WignerSourceJson {
    pub file: String,
    /// `Σ W ΔRe ΔIm` per block, `[re, im]`.
    pub normalization: [[f64; 2]; 4],
    pub normalization_ok: bool,
    pub peaks_uu: Vec<PeakJson>,
    pub real_axis_maxima_uu: Vec<PeakJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridJson {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub step: f64,
    pub n_re: usize,
    pub n_im: usize,
    pub blocks: Vec<String>,
    pub layers: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WignerSidecar {
    pub config_hash: String,
    pub seed: u64,
    pub config: String,
    pub convention: String,
    pub grid: GridJson,
    pub true_state: Option<WignerSourceJson>,
    pub reconstructed: Option<WignerSourceJson>,
    pub max_gap: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_line_round_trip() {
        let mut r = MeasurementRecord::new(SETTING_REAL, 0.6, 7, 96, 42);
        r.counts_up = vec![1, 2, 3];
        r.counts_down = vec![4, 5, 6];
        r.overflow = 1;
        r.total_events = 22;
        let text = render_records([&r], "abc");
        let line: RecordLine = serde_json::from_str(text.trim()).unwrap();
        assert_eq!(line.to_record(), r);
        assert_eq!(line.config_hash, "abc");
        assert!(text.contains("\"setting\":{\"theta\":0.7853981633974483"));
    }

    #[test]
    fn metrics_round_trip() {
        let rows = vec![MetricRow {
            alpha: 0.1 + 0.2,
            kappa: 1.0 / 3.0,
            entropy_bits: 0.8112781244591328,
            negativity: 0.0,
            fidelity: 2.0 / 3.0,
        }];
        let text = render_metrics(&rows, 0.2476, "h", 3);
        assert_eq!(parse_metrics(&text).unwrap(), rows);
        assert_eq!(parse_provenance(text.lines().next().unwrap()), Some(("h".into(), 3)));
    }

    #[test]
    fn block_json_round_trip() {
        let mut b = BlockEstimate::zeros(2);
        b.values[(1, 0)] = C64::new(0.25, -0.5);
        b.var_re[(1, 0)] = 0.0625;
        let back = BlockJson::from_estimate(&b).to_estimate().unwrap();
        assert_eq!(back, b);
    }
}
