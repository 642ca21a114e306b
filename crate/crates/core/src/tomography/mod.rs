//! Displaced-number-state tomography of the four spin blocks.
//!
//! A measurement setting rotates the spin by `U(θ, φ)`, displaces the
//! oscillator by `β = |β| e^{iφ_j}` on `N_φ` uniform phases and records the
//! joint distribution of the spin outcome and the excitation number. The
//! phase dependence is Fourier-analysed order by order and each order is
//! inverted in the least-squares sense.

mod forward;
mod inverse;

pub use forward::*;
pub use inverse::*;

use core::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use nalgebra::DMatrix;

use crate::math::CompensatedSum;
use crate::{Error, Result, C64};

/// Spin pre-rotation `U(θ, φ)` of a setting group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinSetting {
    pub theta: f64,
    pub phi: f64,
}

impl SpinSetting {
    pub const fn new(theta: f64, phi: f64) -> Self {
        Self { theta, phi }
    }

    pub fn matches(&self, theta: f64, phi: f64) -> bool {
        (self.theta - theta).abs() < 1e-9 && (self.phi - phi).abs() < 1e-9
    }
}

/// `(θ, φ) = (0, 0)`: diagonal blocks from the `↑` and `↓` outcomes.
pub const SETTING_DIAGONAL: SpinSetting = SpinSetting::new(0.0, 0.0);
/// `(π/4, −π/2)`: the `↑` projector becomes `(I − σ₁)/2`.
pub const SETTING_REAL: SpinSetting = SpinSetting::new(FRAC_PI_4, -FRAC_PI_2);
/// `(π/4, 0)`: the `↑` projector becomes `(I − σ₂)/2`.
pub const SETTING_IMAG: SpinSetting = SpinSetting::new(FRAC_PI_4, 0.0);
/// The three setting groups in acquisition order.
pub const SETTING_GROUPS: [SpinSetting; 3] = [SETTING_DIAGONAL, SETTING_REAL, SETTING_IMAG];

/// Displacement and detection parameters shared by all setting groups.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TomographySettings {
    /// `|β|`.
    pub beta_abs: f64,
    /// `N_φ`, phases `φ_j = 2πj/N_φ`.
    pub n_phases: usize,
    /// `N`: histograms cover `n ∈ [0, N]`.
    pub n_max: usize,
    /// `N_c`: reconstruction cutoff.
    pub n_cutoff: usize,
    /// Detection efficiency `η`.
    pub eta: f64,
}

impl TomographySettings {
    /// Values of the reference simulation: `|β| = 0.6`, `N_φ = 96`, `N = N_c = 31`, `η = 0.9`.
    pub const REFERENCE: TomographySettings = TomographySettings {
        beta_abs: 0.6,
        n_phases: 96,
        n_max: 31,
        n_cutoff: 31,
        eta: 0.9,
    };

    pub fn validate(&self) -> Result<()> {
        if !(self.beta_abs > 0.0 && self.beta_abs.is_finite()) {
            return Err(Error::InvalidSettings(alloc::format!(
                "|beta| must be positive and finite, got {}",
                self.beta_abs
            )));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::InvalidSettings(alloc::format!(
                "eta must lie in (0, 1], got {}",
                self.eta
            )));
        }
        if self.n_max < self.n_cutoff {
            return Err(Error::InvalidSettings(alloc::format!(
                "N = {} must be at least N_c = {}",
                self.n_max,
                self.n_cutoff
            )));
        }
        if self.n_phases <= 2 * self.n_cutoff {
            return Err(Error::InvalidSettings(alloc::format!(
                "N_phi = {} must exceed 2 N_c = {}",
                self.n_phases,
                2 * self.n_cutoff
            )));
        }
        Ok(())
    }

    pub fn phase(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.n_phases as f64
    }

    pub fn beta(&self, j: usize) -> C64 {
        C64::from_polar(self.beta_abs, self.phase(j))
    }
}

/// Outcome probabilities of one setting group, rows `n ∈ [0, N]`, columns phases.
///
/// Variances are zero for exact marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalTable {
    pub setting: SpinSetting,
    pub beta_abs: f64,
    pub up: DMatrix<f64>,
    pub down: DMatrix<f64>,
    pub var_up: DMatrix<f64>,
    pub var_down: DMatrix<f64>,
}

impl MarginalTable {
    pub fn n_phases(&self) -> usize {
        self.up.ncols()
    }

    pub fn n_max(&self) -> usize {
        self.up.nrows().saturating_sub(1)
    }

    pub fn outcome(&self, s: crate::spin::Spin) -> (&DMatrix<f64>, &DMatrix<f64>) {
        match s {
            crate::spin::Spin::Up => (&self.up, &self.var_up),
            crate::spin::Spin::Down => (&self.down, &self.var_down),
        }
    }
}

/// One table per setting group.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalSet {
    pub diagonal: MarginalTable,
    pub real_part: MarginalTable,
    pub imag_part: MarginalTable,
}

impl MarginalSet {
    /// Picks the three groups out of `tables`, failing on the first absent one.
    pub fn from_tables(tables: impl IntoIterator<Item = MarginalTable>) -> Result<Self> {
        let mut slots: [Option<MarginalTable>; 3] = [None, None, None];
        for t in tables {
            if let Some(i) = SETTING_GROUPS
                .iter()
                .position(|g| g.matches(t.setting.theta, t.setting.phi))
            {
                slots[i] = Some(t);
            }
        }
        let [d, r, i] = slots;
        let missing = |g: SpinSetting| Error::MissingSettingGroup { theta: g.theta, phi: g.phi };
        Ok(Self {
            diagonal: d.ok_or_else(|| missing(SETTING_DIAGONAL))?,
            real_part: r.ok_or_else(|| missing(SETTING_REAL))?,
            imag_part: i.ok_or_else(|| missing(SETTING_IMAG))?,
        })
    }
}

/// `(1/N_φ) Σ_j w(φ_j) e^{i r φ_j}` over uniform phases.
pub fn fourier_coefficient(w: &[f64], r: usize) -> Result<C64> {
    let n_phases = w.len();
    if 2 * r >= n_phases {
        return Err(Error::OrderTooHigh { order: r, n_phases });
    }
    let mut re = CompensatedSum::new();
    let mut im = CompensatedSum::new();
    for (j, &x) in w.iter().enumerate() {
        let (s, c) = fourier_weight(r, j, n_phases);
        re.add(x * c);
        im.add(x * s);
    }
    let scale = 1.0 / n_phases as f64;
    Ok(C64::new(re.value() * scale, im.value() * scale))
}

/// Coefficients for orders `0..=r_max` at once.
pub fn fourier_coefficients(w: &[f64], r_max: usize) -> Result<alloc::vec::Vec<C64>> {
    (0..=r_max).map(|r| fourier_coefficient(w, r)).collect()
}

/// `(sin, cos)` of `r φ_j` with the angle reduced exactly on the integer grid.
pub(crate) fn fourier_weight(r: usize, j: usize, n_phases: usize) -> (f64, f64) {
    let k = (r * j) % n_phases;
    let angle = 2.0 * PI * k as f64 / n_phases as f64;
    (libm::sin(angle), libm::cos(angle))
}
