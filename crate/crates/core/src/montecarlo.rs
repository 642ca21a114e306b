//! Finite-statistics acquisition, frequency estimates and error-bar checks.

use alloc::vec::Vec;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::spin::Spin;
use crate::tomography::{
    setting_distributions, MarginalSet, MarginalTable, Reconstruction, Reconstructor, SpinSetting,
    TomographySettings, SETTING_GROUPS,
};
use crate::werner::HybridDensityOperator;
use crate::{Error, Result};

/// Frequency estimates with their Poissonian variances; same layout as exact marginals.
pub type MarginalEstimate = MarginalSet;

/// Histogram of one `(setting, phase)` cell.
///
/// `Σ counts_up + Σ counts_down + overflow = total_events`; `overflow`
/// collects detections above `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub theta: f64,
    pub phi_spin: f64,
    pub beta_abs: f64,
    pub phase_index: usize,
    pub n_phases: usize,
    pub total_events: u64,
    pub seed: u64,
    pub counts_up: Vec<u64>,
    pub counts_down: Vec<u64>,
    pub overflow: u64,
}

impl MeasurementRecord {
    pub fn new(setting: SpinSetting, beta_abs: f64, phase_index: usize, n_phases: usize, seed: u64) -> Self {
        Self {
            theta: setting.theta,
            phi_spin: setting.phi,
            beta_abs,
            phase_index,
            n_phases,
            total_events: 0,
            seed,
            counts_up: Vec::new(),
            counts_down: Vec::new(),
            overflow: 0,
        }
    }

    pub fn setting(&self) -> SpinSetting {
        SpinSetting::new(self.theta, self.phi_spin)
    }

    pub fn counted(&self) -> u64 {
        self.counts_up.iter().chain(&self.counts_down).sum::<u64>() + self.overflow
    }

    /// Histogram of outcome `s`.
    pub fn counts(&self, s: Spin) -> &[u64] {
        match s {
            Spin::Up => &self.counts_up,
            Spin::Down => &self.counts_down,
        }
    }

    pub(crate) fn record(&mut self, s: Spin, n: usize, n_max: usize) {
        if self.counts_up.is_empty() {
            self.counts_up = alloc::vec![0; n_max + 1];
            self.counts_down = alloc::vec![0; n_max + 1];
        }
        self.total_events += 1;
        if n > n_max {
            self.overflow += 1;
        } else {
            match s {
                Spin::Up => self.counts_up[n] += 1,
                Spin::Down => self.counts_down[n] += 1,
            }
        }
    }
}

/// Generator for the cell `(group, phase)`: the seed picks the key, the cell picks the stream.
pub fn cell_rng(seed: u64, group: usize, phase_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((group as u64) << 32) | phase_index as u64);
    rng
}

/// Detected outcome probabilities `[↑ 0..=N, ↓ 0..=N, overflow]` per group and phase.
#[derive(Debug, Clone)]
pub struct AcquisitionModel {
    pub settings: TomographySettings,
    /// `cells[group][phase]`.
    pub cells: Vec<Vec<Vec<f64>>>,
}

impl AcquisitionModel {
    pub fn from_density(rho: &HybridDensityOperator, settings: &TomographySettings) -> Result<Self> {
        settings.validate()?;
        let cells = SETTING_GROUPS
            .iter()
            .map(|&g| {
                let [up, down] = setting_distributions(rho, settings, g);
                up.iter()
                    .zip(&down)
                    .map(|(u, d)| {
                        let mut p: Vec<f64> = u.counts.iter().chain(&d.counts).copied().collect();
                        let total: f64 = p.iter().sum();
                        p.push((1.0 - total).max(0.0));
                        p
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            settings: *settings,
            cells,
        })
    }

    /// Multinomial histograms of `events` outcomes per phase.
    pub fn sample(&self, events: u64, seed: u64) -> Vec<MeasurementRecord> {
        let s = &self.settings;
        let mut out = Vec::with_capacity(SETTING_GROUPS.len() * s.n_phases);
        for (g, group) in self.cells.iter().enumerate() {
            for (j, probs) in group.iter().enumerate() {
                let mut rng = cell_rng(seed, g, j);
                let counts = multinomial(&mut rng, events, probs);
                let mut rec = MeasurementRecord::new(SETTING_GROUPS[g], s.beta_abs, j, s.n_phases, seed);
                let k = s.n_max + 1;
                rec.counts_up = counts[..k].to_vec();
                rec.counts_down = counts[k..2 * k].to_vec();
                rec.overflow = counts[2 * k];
                rec.total_events = events;
                out.push(rec);
            }
        }
        out
    }
}

/// Multinomial draw by sequential conditional binomials.
pub fn multinomial<R: Rng + ?Sized>(rng: &mut R, events: u64, probs: &[f64]) -> Vec<u64> {
    let mut out = alloc::vec![0u64; probs.len()];
    let mut left = events;
    let mut mass: f64 = probs.iter().map(|p| p.max(0.0)).sum();
    for (i, &p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        let p = p.max(0.0);
        if i + 1 == probs.len() {
            out[i] = left;
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let k = if q >= 1.0 {
            left
        } else if q <= 0.0 {
            0
        } else {
            Binomial::new(left, q).expect("probability in (0, 1)").sample(rng)
        };
        out[i] = k;
        left -= k;
        mass -= p;
    }
    out
}

/// `events` outcomes per phase for all three setting groups, deterministic in `seed`.
pub fn simulate_acquisition(
    rho: &HybridDensityOperator,
    settings: &TomographySettings,
    events: u64,
    seed: u64,
) -> Result<Vec<MeasurementRecord>> {
    Ok(AcquisitionModel::from_density(rho, settings)?.sample(events, seed))
}

/// `w_est = counts / 𝒩_φ` and `var = w_est / 𝒩_φ` for every group.
pub fn estimate_marginals(records: &[MeasurementRecord], settings: &TomographySettings) -> Result<MarginalEstimate> {
    let mut tables = Vec::new();
    for g in SETTING_GROUPS {
        let group: Vec<&MeasurementRecord> = records
            .iter()
            .filter(|r| g.matches(r.theta, r.phi_spin))
            .collect();
        if group.is_empty() {
            return Err(Error::MissingSettingGroup { theta: g.theta, phi: g.phi });
        }
        tables.push(group_table(g, &group, settings)?);
    }
    if let Some(stray) = records
        .iter()
        .find(|r| !SETTING_GROUPS.iter().any(|g| g.matches(r.theta, r.phi_spin)))
    {
        return Err(Error::InconsistentSettings(alloc::format!(
            "record with unknown setting (theta={}, phi={})",
            stray.theta,
            stray.phi_spin
        )));
    }
    MarginalSet::from_tables(tables)
}

fn group_table(g: SpinSetting, group: &[&MeasurementRecord], s: &TomographySettings) -> Result<MarginalTable> {
    let rows = s.n_max + 1;
    let mut seen = alloc::vec![false; s.n_phases];
    let mut table = MarginalTable {
        setting: g,
        beta_abs: s.beta_abs,
        up: DMatrix::zeros(rows, s.n_phases),
        down: DMatrix::zeros(rows, s.n_phases),
        var_up: DMatrix::zeros(rows, s.n_phases),
        var_down: DMatrix::zeros(rows, s.n_phases),
    };
    for r in group {
        if r.n_phases != s.n_phases || r.phase_index >= s.n_phases {
            return Err(Error::InconsistentSettings(alloc::format!(
                "record phase {}/{} for N_phi = {}",
                r.phase_index,
                r.n_phases,
                s.n_phases
            )));
        }
        if (r.beta_abs - s.beta_abs).abs() > 1e-12 * s.beta_abs.max(1.0) {
            return Err(Error::InconsistentSettings(alloc::format!(
                "record |beta| = {}, configured {}",
                r.beta_abs,
                s.beta_abs
            )));
        }
        if r.counts_up.len() != rows || r.counts_down.len() != rows {
            return Err(Error::InconsistentSettings(alloc::format!(
                "record histogram length {} for N = {}",
                r.counts_up.len(),
                s.n_max
            )));
        }
        if r.total_events == 0 || r.counted() != r.total_events {
            return Err(Error::InconsistentSettings(alloc::format!(
                "record at phase {} counts {} of {} events",
                r.phase_index,
                r.counted(),
                r.total_events
            )));
        }
        if core::mem::replace(&mut seen[r.phase_index], true) {
            return Err(Error::InconsistentSettings(alloc::format!(
                "duplicate record for phase {}",
                r.phase_index
            )));
        }
        let total = r.total_events as f64;
        for n in 0..rows {
            let (u, d) = (r.counts_up[n] as f64 / total, r.counts_down[n] as f64 / total);
            table.up[(n, r.phase_index)] = u;
            table.down[(n, r.phase_index)] = d;
            table.var_up[(n, r.phase_index)] = u / total;
            table.var_down[(n, r.phase_index)] = d / total;
        }
    }
    let found = seen.iter().filter(|&&x| x).count();
    if found != s.n_phases {
        return Err(Error::InsufficientPhases {
            theta: g.theta,
            phi: g.phi,
            found,
            expected: s.n_phases,
        });
    }
    Ok(table)
}

/// Standard deviations of the real and imaginary parts of the operator
/// reconstructed from data with cell variances `variances` (rows `n`, columns phases).
pub fn propagate_errors(
    reconstructor: &Reconstructor,
    variances: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let zeros = DMatrix::zeros(variances.nrows(), variances.ncols());
    let est = reconstructor.hermitian_operator(&zeros, variances)?;
    Ok((est.sigma_re(), est.sigma_im()))
}

/// Counts of error-bar hits over the real and imaginary components of the
/// independent elements (lower triangles of the diagonal blocks, all of `ρ^{↑↓}`).
/// Components with zero reported σ are skipped.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CoverageTally {
    pub total: usize,
    pub within_1: usize,
    pub within_3: usize,
}

impl CoverageTally {
    pub fn add(&mut self, other: CoverageTally) {
        self.total += other.total;
        self.within_1 += other.within_1;
        self.within_3 += other.within_3;
    }

    pub fn fraction_1(&self) -> f64 {
        self.within_1 as f64 / self.total.max(1) as f64
    }

    pub fn fraction_3(&self) -> f64 {
        self.within_3 as f64 / self.total.max(1) as f64
    }
}

pub fn coverage(rec: &Reconstruction, truth: &HybridDensityOperator) -> CoverageTally {
    let mut tally = CoverageTally::default();
    let mut count = |err: f64, var: f64| {
        if var > 0.0 {
            let sigma = libm::sqrt(var);
            tally.total += 1;
            tally.within_1 += (err.abs() <= sigma) as usize;
            tally.within_3 += (err.abs() <= 3.0 * sigma) as usize;
        }
    };
    for (a, b, est) in rec.blocks() {
        if a == Spin::Down && b == Spin::Up {
            continue;
        }
        let t = truth.block(a, b);
        let d = est.dim().min(t.nrows());
        for i in 0..d {
            for j in 0..d {
                if a == b && j > i {
                    continue;
                }
                let e = est.values[(i, j)] - t[(i, j)];
                count(e.re, est.var_re[(i, j)]);
                count(e.im, est.var_im[(i, j)]);
            }
        }
    }
    tally
}
