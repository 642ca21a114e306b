//! The subcommands, independent of argument parsing.

use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use werner_core::montecarlo::{coverage, estimate_marginals, simulate_acquisition, MeasurementRecord};
use werner_core::tomography::{exact_marginal_set, Reconstruction, Reconstructor, SETTING_GROUPS};
use werner_core::trap::simulate_trap_acquisition;
use werner_core::werner::{build_hybrid_mixture, fidelity_threshold, metric_sweep, HybridDensityOperator, MetricRow, MetricTable};
use werner_core::wigner::{block_label, wigner_grid, GridSpec, WignerGrid, BLOCK_ORDER};

use crate::config::{hash_text, Backend, RunConfig};
use crate::error::CliError;
use crate::formats::*;
use crate::lock::{OutputLock, LOCK_FILE};

/// Applies the global overrides and validates.
pub fn resolve_config(path: Option<&Path>, seed: Option<u64>, out: Option<PathBuf>) -> Result<RunConfig, CliError> {
    let mut cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(o) = out {
        cfg.out = o;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn truth(cfg: &RunConfig) -> Result<HybridDensityOperator, CliError> {
    Ok(build_hybrid_mixture(cfg.alpha, cfg.cutoff)?)
}

#[derive(Debug)]
pub struct MetricsOutcome {
    pub path: PathBuf,
    pub alpha_star: f64,
    pub table: MetricTable,
}

/// Sweep table with an extra row at the fidelity threshold.
pub fn cmd_metrics(cfg: &RunConfig) -> Result<MetricsOutcome, CliError> {
    let _lock = OutputLock::acquire(&cfg.out)?;
    let mut table = metric_sweep(cfg.alpha_min, cfg.alpha_max, cfg.steps, cfg.fidelity)?;
    let alpha_star = fidelity_threshold(cfg.fidelity)?;
    if (cfg.alpha_min..=cfg.alpha_max).contains(&alpha_star) {
        table.insert(MetricRow::at(alpha_star, cfg.fidelity)?);
    }
    if !(table.entropy_nondecreasing && table.negativity_nondecreasing && table.fidelity_nondecreasing) {
        warn!("metric columns are not monotone over the sweep");
    }
    let path = cfg.out.join(METRICS);
    write_atomic(&path, render_metrics(&table.rows, alpha_star, &cfg.hash(), cfg.seed).as_bytes())?;
    info!("wrote {} ({} rows, alpha* = {alpha_star:.6})", path.display(), table.rows.len());
    Ok(MetricsOutcome { path, alpha_star, table })
}

#[derive(Debug)]
pub struct SimulateOutcome {
    pub files: Vec<PathBuf>,
    pub records: usize,
}

pub fn generate_records(cfg: &RunConfig) -> Result<Vec<MeasurementRecord>, CliError> {
    let settings = cfg.tomography();
    Ok(match cfg.backend {
        Backend::DensityOperator => simulate_acquisition(&truth(cfg)?, &settings, cfg.events, cfg.seed)?,
        Backend::TrapSim => simulate_trap_acquisition(cfg.alpha, cfg.cutoff, &settings, cfg.events, cfg.seed)?,
    })
}

/// Record files for the three setting groups plus the manifest.
pub fn cmd_simulate(cfg: &RunConfig, force: bool) -> Result<SimulateOutcome, CliError> {
    let _lock = OutputLock::acquire(&cfg.out)?;
    let targets: Vec<PathBuf> = SETTING_GROUPS
        .iter()
        .map(|&g| cfg.out.join(record_file(g)))
        .chain([cfg.out.join(MANIFEST)])
        .collect();
    if !force {
        if let Some(existing) = targets.iter().find(|p| p.exists()) {
            return Err(CliError::io(
                existing,
                std::io::Error::new(
                    std::io::ErrorKind::AlreadyExists,
                    "refusing to overwrite simulation output (pass --force)",
                ),
            ));
        }
    }
    let records = generate_records(cfg)?;
    let hash = cfg.hash();
    let mut manifest = Manifest {
        config_hash: hash.clone(),
        seed: cfg.seed,
        config: cfg.canonical(),
        backend: cfg.backend.as_str().to_string(),
        events_per_phase: cfg.events,
        files: Vec::new(),
    };
    for (g, path) in SETTING_GROUPS.iter().zip(&targets) {
        let group: Vec<&MeasurementRecord> = records.iter().filter(|r| r.setting() == *g).collect();
        write_atomic(path, render_records(group.iter().copied(), &hash).as_bytes())?;
        manifest.files.push(ManifestFile {
            name: record_file(*g).to_string(),
            setting: SettingJson {
                theta: g.theta,
                phi_spin: g.phi,
                beta_abs: cfg.beta_abs,
            },
            records: group.len(),
        });
    }
    write_atomic(&targets[3], to_json(&manifest).as_bytes())?;
    info!("wrote {} records to {}", records.len(), cfg.out.display());
    Ok(SimulateOutcome {
        files: targets,
        records: records.len(),
    })
}

/// Reads the record files present in the output directory.
pub fn load_records(cfg: &RunConfig) -> Result<Vec<MeasurementRecord>, CliError> {
    let hash = cfg.hash();
    let mut out = Vec::new();
    for g in SETTING_GROUPS {
        let path = cfg.out.join(record_file(g));
        if !path.exists() {
            continue;
        }
        for line in read_records(&path)? {
            if line.config_hash != hash {
                return Err(CliError::Validation(format!(
                    "{}: records carry config hash {}, the current config hashes to {hash}",
                    path.display(),
                    line.config_hash
                )));
            }
            out.push(line.to_record());
        }
    }
    Ok(out)
}

#[derive(Debug)]
pub struct ReconstructOutcome {
    pub reconstruction: Reconstruction,
    pub json: ReconstructionJson,
}

pub fn compare_with_truth(rec: &Reconstruction, rho: &HybridDensityOperator, alpha: f64) -> TruthComparison {
    let tally = coverage(rec, rho);
    let blocks = rec.blocks();
    let max_abs_error = [0, 1, 2, 3].map(|i| {
        let (a, b, est) = blocks[i];
        est.max_abs_error(rho.block(a, b))
    });
    let d = rec.block_uu.dim().min(rho.cutoff());
    let mut diag: Vec<f64> = (0..d)
        .map(|i| (rec.block_uu.values[(i, i)] - rho.block_uu[(i, i)]).norm())
        .collect();
    diag.sort_by(f64::total_cmp);
    TruthComparison {
        alpha,
        max_abs_error,
        median_abs_error_uu_diagonal: median(&diag),
        components: tally.total,
        coverage_1sigma: tally.fraction_1(),
        coverage_3sigma: tally.fraction_3(),
    }
}

pub fn median(sorted: &[f64]) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => sorted[n / 2],
        n => 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]),
    }
}

/// Inverts records (or exact marginals) into the four blocks.
pub fn cmd_reconstruct(cfg: &RunConfig, exact: bool, with_truth: bool) -> Result<ReconstructOutcome, CliError> {
    let _lock = OutputLock::acquire(&cfg.out)?;
    let settings = cfg.tomography();
    let data = if exact {
        exact_marginal_set(&truth(cfg)?, &settings)
    } else {
        estimate_marginals(&load_records(cfg)?, &settings)?
    };
    let reconstruction = Reconstructor::new(settings)?.full(&data)?;
    let truth_cmp = if with_truth {
        Some(compare_with_truth(&reconstruction, &truth(cfg)?, cfg.alpha))
    } else {
        None
    };
    let json = ReconstructionJson {
        config_hash: cfg.hash(),
        seed: cfg.seed,
        config: cfg.canonical(),
        source: if exact { "exact" } else { "records" }.to_string(),
        n_cutoff: cfg.n_cutoff,
        condition_numbers: reconstruction.condition_numbers.clone(),
        blocks: BlocksJson {
            uu: BlockJson::from_estimate(&reconstruction.block_uu),
            ud: BlockJson::from_estimate(&reconstruction.block_ud),
            du: BlockJson::from_estimate(&reconstruction.block_du),
            dd: BlockJson::from_estimate(&reconstruction.block_dd),
        },
        truth: truth_cmp,
    };
    write_atomic(&cfg.out.join(RESULT), to_json(&json).as_bytes())?;
    write_atomic(&cfg.out.join(SUMMARY), summary(&reconstruction, &json).as_bytes())?;
    info!("wrote {} and {}", RESULT, SUMMARY);
    Ok(ReconstructOutcome { reconstruction, json })
}

fn summary(rec: &Reconstruction, json: &ReconstructionJson) -> String {
    let mut s = provenance_line(&json.config_hash, json.seed);
    s.push_str(&format!("source: {}\n\n", json.source));
    s.push_str("block  trace                     sigma(trace re, im)      max sigma   max |error|\n");
    for (i, (a, b, est)) in rec.blocks().iter().enumerate() {
        let tr = est.trace();
        let (sr, si) = est.trace_sigma();
        let max_sigma = est.sigma_re().max().max(est.sigma_im().max());
        let err = json
            .truth
            .as_ref()
            .map(|t| format!("{:.3e}", t.max_abs_error[i]))
            .unwrap_or_else(|| "-".into());
        s.push_str(&format!(
            "{:<6} {:>+.6} {:>+.6}i   {:.3e} {:.3e}   {:.3e}   {}\n",
            block_label(*a, *b),
            tr.re,
            tr.im,
            sr,
            si,
            max_sigma,
            err
        ));
    }
    if let Some(t) = &json.truth {
        s.push_str(&format!(
            "\ncoverage over {} components: {:.4} within 1 sigma, {:.4} within 3 sigma\n",
            t.components, t.coverage_1sigma, t.coverage_3sigma
        ));
        s.push_str(&format!("median |error| on the uu diagonal: {:.3e}\n", t.median_abs_error_uu_diagonal));
    }
    s.push_str("\norder  condition\n");
    for (r, c) in json.condition_numbers.iter().enumerate() {
        s.push_str(&format!("{r:>5}  {c:.3e}\n"));
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum WignerSource {
    True,
    Reconstructed,
    Both,
}

#[derive(Debug)]
pub struct WignerOutcome {
    pub true_grid: Option<WignerGrid>,
    pub reconstructed_grid: Option<WignerGrid>,
    pub sidecar: WignerSidecar,
}

pub fn grid_spec(cfg: &RunConfig) -> GridSpec {
    GridSpec {
        re_min: -cfg.alpha - 3.0,
        re_max: cfg.alpha + 3.0,
        im_min: -cfg.grid_im_extent,
        im_max: cfg.grid_im_extent,
        step: cfg.grid_step,
    }
}

fn source_json(grid: &WignerGrid, rho: &HybridDensityOperator, file: &str) -> WignerSourceJson {
    let peak = |p: &werner_core::wigner::Peak| PeakJson {
        re: p.re,
        im: p.im,
        value: p.value,
    };
    WignerSourceJson {
        file: file.to_string(),
        normalization: [0, 1, 2, 3].map(|b| {
            let z = grid.normalization(b);
            [z.re, z.im]
        }),
        normalization_ok: grid.normalization_ok(rho),
        peaks_uu: grid.peaks.iter().map(peak).collect(),
        real_axis_maxima_uu: grid.real_axis_maxima(0).iter().map(peak).collect(),
    }
}

/// Wigner surfaces of the true state and of `reconstruction.json`, when present.
pub fn cmd_wigner(cfg: &RunConfig, source: WignerSource) -> Result<WignerOutcome, CliError> {
    let _lock = OutputLock::acquire(&cfg.out)?;
    let spec = grid_spec(cfg);
    let hash = cfg.hash();
    let mut sidecar = WignerSidecar {
        config_hash: hash.clone(),
        seed: cfg.seed,
        config: cfg.canonical(),
        convention: "W(g) = (2/pi) Tr[rho_block D(g) P D(g)^dagger], P = parity".into(),
        grid: GridJson {
            re_min: spec.re_min,
            re_max: spec.re_max,
            im_min: spec.im_min,
            im_max: spec.im_max,
            step: spec.step,
            n_re: spec.re_axis().len(),
            n_im: spec.im_axis().len(),
            blocks: BLOCK_ORDER.iter().map(|&(a, b)| block_label(a, b).to_string()).collect(),
            layers: vec!["re_W".into(), "im_W".into(), "modulus = hypot(re_W, im_W)".into()],
        },
        true_state: None,
        reconstructed: None,
        max_gap: None,
    };
    let mut true_grid = None;
    if matches!(source, WignerSource::True | WignerSource::Both) {
        let rho = truth(cfg)?;
        let grid = wigner_grid(&rho, spec);
        let file = "wigner_true.csv";
        write_atomic(&cfg.out.join(file), render_wigner(&grid, &hash, cfg.seed).as_bytes())?;
        let js = source_json(&grid, &rho, file);
        if !js.normalization_ok {
            warn!("true-state grid does not reproduce the block traces within tolerance; widen the grid");
        }
        sidecar.true_state = Some(js);
        true_grid = Some(grid);
    }
    let mut reconstructed_grid = None;
    if matches!(source, WignerSource::Reconstructed | WignerSource::Both) {
        let path = cfg.out.join(RESULT);
        if path.exists() {
            let result: ReconstructionJson = read_json(&path)?;
            if result.config_hash != hash {
                return Err(CliError::Validation(format!(
                    "{}: reconstruction carries config hash {}, the current config hashes to {hash}",
                    path.display(),
                    result.config_hash
                )));
            }
            let block = |b: &BlockJson| b.to_estimate().map(|e| e.values).map_err(|m| CliError::format(&path, m));
            let rho = HybridDensityOperator::from_blocks(
                block(&result.blocks.uu)?,
                block(&result.blocks.ud)?,
                block(&result.blocks.du)?,
                block(&result.blocks.dd)?,
            )?;
            let grid = wigner_grid(&rho, spec);
            let file = "wigner_reconstructed.csv";
            write_atomic(&cfg.out.join(file), render_wigner(&grid, &hash, cfg.seed).as_bytes())?;
            sidecar.reconstructed = Some(source_json(&grid, &rho, file));
            reconstructed_grid = Some(grid);
        } else if source == WignerSource::Reconstructed {
            return Err(CliError::io(
                &path,
                std::io::Error::new(std::io::ErrorKind::NotFound, "run `reconstruct` first"),
            ));
        } else {
            info!("no {} in {}; exporting the true state only", RESULT, cfg.out.display());
        }
    }
    if let (Some(a), Some(b)) = (&true_grid, &reconstructed_grid) {
        sidecar.max_gap = Some(a.max_gap(b));
    }
    write_atomic(&cfg.out.join(WIGNER_SIDECAR), to_json(&sidecar).as_bytes())?;
    Ok(WignerOutcome {
        true_grid,
        reconstructed_grid,
        sidecar,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FileCheck {
    pub file: String,
    pub ok: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub expected_hash: String,
    pub checks: Vec<FileCheck>,
}

impl VerifyReport {
    pub fn all_ok(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.ok)
    }
}

#[derive(serde::Deserialize)]
struct Embedded {
    config_hash: String,
    seed: u64,
    config: Option<String>,
}

/// Re-derives the config hash and checks every output file in the directory against it.
///
/// Without `--config`, the reference is the config embedded in the first JSON output.
pub fn cmd_verify(cfg: Option<&RunConfig>, out: &Path) -> Result<VerifyReport, CliError> {
    let mut entries: Vec<PathBuf> = fs::read_dir(out)
        .map_err(|e| CliError::io(out, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.file_name().is_some_and(|n| n != LOCK_FILE))
        .collect();
    entries.sort();
    let mut expected = cfg.map(|c| (c.hash(), c.seed));
    let mut checks = Vec::new();
    for path in &entries {
        let name = path.file_name().unwrap_or_default().to_string_lossy().to_string();
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        let found: Result<Vec<(String, u64)>, String> = match ext {
            "json" => match read_json::<Embedded>(path) {
                Err(err) => Err(err.to_string()),
                Ok(e) => {
                if let Some(text) = &e.config {
                    let rederived = hash_text(text);
                    if rederived != e.config_hash {
                        checks.push(FileCheck {
                            file: name.clone(),
                            ok: false,
                            detail: format!("embedded config hashes to {rederived}, file claims {}", e.config_hash),
                        });
                        continue;
                    }
                    if expected.is_none() {
                        let parsed = RunConfig::parse(text)?;
                        expected = Some((parsed.hash(), parsed.seed));
                    }
                }
                Ok(vec![(e.config_hash, e.seed)])
                }
            },
            "jsonl" => read_records(path)
                .map(|lines| lines.into_iter().map(|l| (l.config_hash, l.seed)).collect())
                .map_err(|e| e.to_string()),
            "csv" | "txt" => {
                let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                text.lines()
                    .next()
                    .and_then(parse_provenance)
                    .map(|p| vec![p])
                    .ok_or_else(|| "no provenance line".to_string())
            }
            _ => continue,
        };
        checks.push(match found {
            Err(detail) => FileCheck {
                file: name,
                ok: false,
                detail,
            },
            Ok(found) => FileCheck {
                file: name,
                ok: true,
                detail: String::new(),
            }
            .with(found),
        });
    }
    let (hash, seed) = expected.ok_or_else(|| {
        CliError::Validation(format!("no config given and no embedded config found in {}", out.display()))
    })?;
    for c in &mut checks {
        if c.ok {
            c.settle(&hash, seed);
        }
    }
    Ok(VerifyReport {
        expected_hash: hash,
        checks,
    })
}

impl FileCheck {
    fn with(mut self, found: Vec<(String, u64)>) -> Self {
        // stash the distinct (hash, seed) pairs until the reference is known
        let mut pairs: Vec<String> = found.iter().map(|(h, s)| format!("{h}:{s}")).collect();
        pairs.sort();
        pairs.dedup();
        self.detail = pairs.join(",");
        self
    }

    fn settle(&mut self, hash: &str, seed: u64) {
        let want = format!("{hash}:{seed}");
        if self.detail.is_empty() {
            self.ok = false;
            self.detail = "no provenance".into();
        } else if self.detail == want {
            self.detail = "ok".into();
        } else {
            self.ok = false;
            self.detail = format!("found {}, expected {want}", self.detail);
        }
    }
}
