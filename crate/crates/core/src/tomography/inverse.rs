//! Order-by-order least-squares inversion with linear error propagation.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use super::forward::{efficiency_matrix, g_from_magnitudes, SMEAR_MARGIN};
use super::{fourier_weight, MarginalSet, MarginalTable, SpinSetting, TomographySettings};
use super::{SETTING_DIAGONAL, SETTING_IMAG, SETTING_REAL};
use crate::fock::displacement_magnitudes;
use crate::linalg::{pseudo_inverse, PseudoInverse, DEFAULT_SINGULAR_FLOOR, MAX_CONDITION};
use crate::math::CompensatedSum;
use crate::spin::Spin;
use crate::werner::HybridDensityOperator;
use crate::{Error, Result, C64};

/// Estimated oscillator block with per-element second moments of its real and imaginary parts.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockEstimate {
    pub values: DMatrix<C64>,
    pub var_re: DMatrix<f64>,
    pub var_im: DMatrix<f64>,
    pub cov_re_im: DMatrix<f64>,
}

impl BlockEstimate {
    pub fn zeros(dim: usize) -> Self {
        Self {
            values: DMatrix::zeros(dim, dim),
            var_re: DMatrix::zeros(dim, dim),
            var_im: DMatrix::zeros(dim, dim),
            cov_re_im: DMatrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn sigma_re(&self) -> DMatrix<f64> {
        self.var_re.map(|v| libm::sqrt(v.max(0.0)))
    }

    pub fn sigma_im(&self) -> DMatrix<f64> {
        self.var_im.map(|v| libm::sqrt(v.max(0.0)))
    }

    /// Conjugate transpose; variances follow, the covariance flips sign.
    pub fn adjoint(&self) -> Self {
        Self {
            values: self.values.adjoint(),
            var_re: self.var_re.transpose(),
            var_im: self.var_im.transpose(),
            cov_re_im: -self.cov_re_im.transpose(),
        }
    }

    pub fn trace(&self) -> C64 {
        self.values.trace()
    }

    /// Standard deviations of the real and imaginary parts of the trace.
    pub fn trace_sigma(&self) -> (f64, f64) {
        let d = self.dim();
        let re: f64 = (0..d).map(|i| self.var_re[(i, i)]).sum();
        let im: f64 = (0..d).map(|i| self.var_im[(i, i)]).sum();
        (libm::sqrt(re), libm::sqrt(im))
    }

    /// Largest `|estimate − truth|` over the overlapping top-left square.
    pub fn max_abs_error(&self, truth: &DMatrix<C64>) -> f64 {
        let d = self.dim().min(truth.nrows());
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                worst = worst.max((self.values[(i, j)] - truth[(i, j)]).norm());
            }
        }
        worst
    }
}

/// Pseudo-inverses of the folded systems `B(η)·G^{(r)}` for `r ∈ [0, N_c]`.
#[derive(Debug, Clone)]
pub struct Reconstructor {
    settings: TomographySettings,
    orders: Vec<PseudoInverse>,
}

impl Reconstructor {
    pub fn new(settings: TomographySettings) -> Result<Self> {
        Self::with_floor(settings, DEFAULT_SINGULAR_FLOOR)
    }

    /// Singular directions below `floor` are left out of the inverse.
    pub fn with_floor(settings: TomographySettings, floor: f64) -> Result<Self> {
        settings.validate()?;
        let TomographySettings {
            beta_abs,
            n_max,
            n_cutoff,
            eta,
            ..
        } = settings;
        let rows = if eta < 1.0 { n_max + SMEAR_MARGIN } else { n_max };
        let mags = displacement_magnitudes(beta_abs, n_cutoff + 1, rows + 1);
        let b = efficiency_matrix(eta, n_max + 1, rows + 1);
        let mut orders = Vec::with_capacity(n_cutoff + 1);
        for r in 0..=n_cutoff {
            let model = &b * g_from_magnitudes(&mags, r, rows, n_cutoff);
            let inverse = pseudo_inverse(&model, floor);
            let condition = inverse.condition();
            if condition.is_nan() || condition > MAX_CONDITION {
                return Err(Error::Singular {
                    order: r,
                    beta_abs,
                    n_max,
                    n_cutoff,
                    condition,
                });
            }
            orders.push(inverse);
        }
        Ok(Self { settings, orders })
    }

    pub fn settings(&self) -> &TomographySettings {
        &self.settings
    }

    /// `M^{(r)}`, shape `(N_c + 1 − r) × (N + 1)`.
    pub fn inverse(&self, r: usize) -> &PseudoInverse {
        &self.orders[r]
    }

    /// Condition number of the folded system per order `r`.
    pub fn condition_numbers(&self) -> Vec<f64> {
        self.orders.iter().map(|p| p.condition()).collect()
    }

    fn check_table(&self, table: &MarginalTable, expected: SpinSetting) -> Result<()> {
        let s = &self.settings;
        if !expected.matches(table.setting.theta, table.setting.phi) {
            return Err(Error::InconsistentSettings(alloc::format!(
                "expected (theta={}, phi={}), records carry (theta={}, phi={})",
                expected.theta,
                expected.phi,
                table.setting.theta,
                table.setting.phi
            )));
        }
        if (table.beta_abs - s.beta_abs).abs() > 1e-12 * s.beta_abs.max(1.0) {
            return Err(Error::InconsistentSettings(alloc::format!(
                "|beta| = {} in records, {} configured",
                table.beta_abs,
                s.beta_abs
            )));
        }
        if table.n_phases() != s.n_phases {
            return Err(Error::InsufficientPhases {
                theta: expected.theta,
                phi: expected.phi,
                found: table.n_phases(),
                expected: s.n_phases,
            });
        }
        if table.up.nrows() != s.n_max + 1 {
            return Err(Error::InconsistentSettings(alloc::format!(
                "histograms cover n <= {}, expected n <= {}",
                table.n_max(),
                s.n_max
            )));
        }
        Ok(())
    }

    /// Hermitian operator `A` with marginals `w(n; φ_j) = ⟨n|D†(β_j) A D(β_j)|n⟩`.
    ///
    /// `w` and `var` have rows `n ∈ [0, N]` and columns phases.
    pub fn hermitian_operator(&self, w: &DMatrix<f64>, var: &DMatrix<f64>) -> Result<BlockEstimate> {
        let s = &self.settings;
        if w.shape() != (s.n_max + 1, s.n_phases) || var.shape() != w.shape() {
            return Err(Error::Shape(alloc::format!(
                "marginal table {:?}, expected {:?}",
                w.shape(),
                (s.n_max + 1, s.n_phases)
            )));
        }
        let dim = s.n_cutoff + 1;
        let mut out = BlockEstimate::zeros(dim);
        let norm = 1.0 / s.n_phases as f64;
        for r in 0..=s.n_cutoff {
            let rows = s.n_max + 1;
            let mut c_re = DVector::zeros(rows);
            let mut c_im = DVector::zeros(rows);
            let mut s_cc = DVector::zeros(rows);
            let mut s_ss = DVector::zeros(rows);
            let mut s_cs = DVector::zeros(rows);
            for n in 0..rows {
                let (mut re, mut im) = (CompensatedSum::new(), CompensatedSum::new());
                let (mut cc, mut ss, mut cs) = (0.0, 0.0, 0.0);
                for j in 0..s.n_phases {
                    let (sn, cn) = fourier_weight(r, j, s.n_phases);
                    let x = w[(n, j)];
                    re.add(x * cn);
                    im.add(x * sn);
                    let v = var[(n, j)];
                    cc += cn * cn * v;
                    ss += sn * sn * v;
                    cs += cn * sn * v;
                }
                c_re[n] = re.value() * norm;
                c_im[n] = im.value() * norm;
                s_cc[n] = cc * norm * norm;
                s_ss[n] = ss * norm * norm;
                s_cs[n] = cs * norm * norm;
            }
            let m = &self.orders[r].matrix;
            let x_re = m * &c_re;
            let x_im = m * &c_im;
            let m2 = m.component_mul(m);
            let v_re = &m2 * &s_cc;
            let v_im = &m2 * &s_ss;
            let v_cs = &m2 * &s_cs;
            for k in 0..dim - r {
                let (i, j) = (k + r, k);
                let im_part = if r == 0 { 0.0 } else { x_im[k] };
                out.values[(i, j)] = C64::new(x_re[k], im_part);
                out.var_re[(i, j)] = v_re[k];
                out.var_im[(i, j)] = if r == 0 { 0.0 } else { v_im[k] };
                out.cov_re_im[(i, j)] = if r == 0 { 0.0 } else { v_cs[k] };
                if r > 0 {
                    out.values[(j, i)] = out.values[(i, j)].conj();
                    out.var_re[(j, i)] = v_re[k];
                    out.var_im[(j, i)] = v_im[k];
                    out.cov_re_im[(j, i)] = -v_cs[k];
                }
            }
        }
        Ok(out)
    }

    /// `ρ^{↑↑}` (or `ρ^{↓↓}`) from the `(0, 0)` group, outcome `which`.
    pub fn diagonal_block(&self, table: &MarginalTable, which: Spin) -> Result<BlockEstimate> {
        self.check_table(table, SETTING_DIAGONAL)?;
        let (w, var) = table.outcome(which);
        self.hermitian_operator(w, var)
    }

    /// `ρ^{↑↓}` from the `↑` outcomes of the two rotated groups and the diagonal blocks.
    pub fn offdiagonal_block(
        &self,
        real_part: &MarginalTable,
        imag_part: &MarginalTable,
        uu: &BlockEstimate,
        dd: &BlockEstimate,
    ) -> Result<BlockEstimate> {
        self.check_table(real_part, SETTING_REAL)?;
        self.check_table(imag_part, SETTING_IMAG)?;
        // A1 = (ρ↑↑+ρ↓↓)/2 − H, A2 = (ρ↑↑+ρ↓↓)/2 + K, ρ↑↓ = H + iK
        let a1 = self.hermitian_operator(&real_part.up, &real_part.var_up)?;
        let a2 = self.hermitian_operator(&imag_part.up, &imag_part.var_up)?;
        let dim = self.settings.n_cutoff + 1;
        let mut out = BlockEstimate::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                let ix = (i, j);
                let d = uu.values[ix] + dd.values[ix];
                let d_vre = uu.var_re[ix] + dd.var_re[ix];
                let d_vim = uu.var_im[ix] + dd.var_im[ix];
                let d_cov = uu.cov_re_im[ix] + dd.cov_re_im[ix];
                let h = d * 0.5 - a1.values[ix];
                let k = a2.values[ix] - d * 0.5;
                out.values[ix] = h + C64::new(0.0, 1.0) * k;
                out.var_re[ix] = 0.25 * (d_vre + d_vim + 2.0 * d_cov) + a1.var_re[ix] + a2.var_im[ix];
                out.var_im[ix] = 0.25 * (d_vre + d_vim - 2.0 * d_cov) + a1.var_im[ix] + a2.var_re[ix];
                out.cov_re_im[ix] = 0.25 * (d_vim - d_vre) + a1.cov_re_im[ix] - a2.cov_re_im[ix];
            }
        }
        Ok(out)
    }

    /// All four blocks; `ρ^{↓↑}` is the adjoint of `ρ^{↑↓}`.
    pub fn full(&self, data: &MarginalSet) -> Result<Reconstruction> {
        let uu = self.diagonal_block(&data.diagonal, Spin::Up)?;
        let dd = self.diagonal_block(&data.diagonal, Spin::Down)?;
        let ud = self.offdiagonal_block(&data.real_part, &data.imag_part, &uu, &dd)?;
        let du = ud.adjoint();
        Ok(Reconstruction {
            block_uu: uu,
            block_ud: ud,
            block_du: du,
            block_dd: dd,
            condition_numbers: self.condition_numbers(),
        })
    }
}

/// Four reconstructed blocks and the conditioning of the systems used.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub block_uu: BlockEstimate,
    pub block_ud: BlockEstimate,
    pub block_du: BlockEstimate,
    pub block_dd: BlockEstimate,
    pub condition_numbers: Vec<f64>,
}

impl Reconstruction {
    pub fn block(&self, a: Spin, b: Spin) -> &BlockEstimate {
        match (a, b) {
            (Spin::Up, Spin::Up) => &self.block_uu,
            (Spin::Up, Spin::Down) => &self.block_ud,
            (Spin::Down, Spin::Up) => &self.block_du,
            (Spin::Down, Spin::Down) => &self.block_dd,
        }
    }

    pub fn blocks(&self) -> [(Spin, Spin, &BlockEstimate); 4] {
        [
            (Spin::Up, Spin::Up, &self.block_uu),
            (Spin::Up, Spin::Down, &self.block_ud),
            (Spin::Down, Spin::Up, &self.block_du),
            (Spin::Down, Spin::Down, &self.block_dd),
        ]
    }

    /// The raw estimate as an operator; it need not be positive.
    pub fn to_operator(&self) -> HybridDensityOperator {
        HybridDensityOperator {
            block_uu: self.block_uu.values.clone(),
            block_ud: self.block_ud.values.clone(),
            block_du: self.block_du.values.clone(),
            block_dd: self.block_dd.values.clone(),
        }
    }

    /// Largest `|estimate − truth|` over all four blocks.
    pub fn max_abs_error(&self, truth: &HybridDensityOperator) -> f64 {
        self.blocks()
            .iter()
            .map(|(a, b, est)| est.max_abs_error(truth.block(*a, *b)))
            .fold(0.0, f64::max)
    }
}

pub fn reconstruct_block_diagonal(
    table: &MarginalTable,
    which: Spin,
    settings: &TomographySettings,
) -> Result<BlockEstimate> {
    Reconstructor::new(*settings)?.diagonal_block(table, which)
}

pub fn reconstruct_block_offdiagonal(
    real_part: &MarginalTable,
    imag_part: &MarginalTable,
    uu: &BlockEstimate,
    dd: &BlockEstimate,
    settings: &TomographySettings,
) -> Result<BlockEstimate> {
    Reconstructor::new(*settings)?.offdiagonal_block(real_part, imag_part, uu, dd)
}

pub fn reconstruct_full(data: &MarginalSet, settings: &TomographySettings) -> Result<Reconstruction> {
    Reconstructor::new(*settings)?.full(data)
}
