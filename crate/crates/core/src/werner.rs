//! Werner and Werner-like states and their mixedness, entanglement and
//! teleportation metrics.

use alloc::vec::Vec;
use nalgebra::{DMatrix, Matrix2, Matrix3, Matrix4, Vector4};

use crate::fock::{coherent_state, FockVector};
use crate::linalg::{hermitian_deviation, hermitian_eigenvalues};
use crate::spin::{self, Spin, SpinOperator};
use crate::{Error, Result, C64};

/// Eigenvalues with magnitude below this are treated as zero in the entropy.
pub const EIGEN_CLAMP: f64 = 1e-12;
/// Partial-transpose eigenvalues must fall below `-NEGATIVE_THRESHOLD` to count as negative.
pub const NEGATIVE_THRESHOLD: f64 = 1e-10;
/// Bracket used by [`fidelity_crossing`].
pub const THRESHOLD_BRACKET: (f64, f64) = (1e-4, 2.0);
/// Classical teleportation fidelity bound.
pub const CLASSICAL_FIDELITY: f64 = 2.0 / 3.0;

const ZERO: C64 = C64::new(0.0, 0.0);

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Two-qubit density matrix in the basis `{↓↓, ↓↑, ↑↓, ↑↑}`.
///
/// Index `2·a + b` with `a` the first and `b` the second subsystem, `↓ = 0`, `↑ = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitPairDensity {
    pub elements: Matrix4<C64>,
}

/// Single-qubit Pauli matrix in the `(↓, ↑)` ordering of the two-qubit basis.
pub fn pauli_b(k: usize) -> Matrix2<C64> {
    let swap = Matrix2::new(ZERO, re(1.0), re(1.0), ZERO);
    swap * spin::pauli(k) * swap
}

fn ket_b(first: Spin, second: Spin) -> Vector4<C64> {
    // ↓ = 0, ↑ = 1 in the two-qubit basis
    let bit = |s: Spin| match s {
        Spin::Down => 0,
        Spin::Up => 1,
    };
    let mut v = Vector4::zeros();
    v[2 * bit(first) + bit(second)] = re(1.0);
    v
}

impl QubitPairDensity {
    pub fn new(elements: Matrix4<C64>) -> Self {
        Self { elements }
    }

    pub fn from_pure(psi: &Vector4<C64>) -> Self {
        Self::new(psi * psi.adjoint())
    }

    /// `ρ₁ ⊗ ρ₂` from single-qubit operators in `(↓, ↑)` order.
    pub fn product(a: &Matrix2<C64>, b: &Matrix2<C64>) -> Self {
        Self::new(a.kronecker(b))
    }

    pub fn trace(&self) -> C64 {
        self.elements.trace()
    }

    pub fn dynamic(&self) -> DMatrix<C64> {
        DMatrix::from_iterator(4, 4, self.elements.iter().copied())
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        hermitian_eigenvalues(&self.dynamic())
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        (self.elements * self.elements).trace().re
    }
}

/// `|Ψ⁻⟩ = (|↓↑⟩ − |↑↓⟩)/√2`.
pub fn singlet() -> Vector4<C64> {
    (ket_b(Spin::Down, Spin::Up) - ket_b(Spin::Up, Spin::Down)) * re(core::f64::consts::FRAC_1_SQRT_2)
}

/// `ρ = I⊗I/8 + |Ψ⁻⟩⟨Ψ⁻|/2`.
pub fn build_werner_qubit() -> QubitPairDensity {
    let psi = singlet();
    QubitPairDensity::new(Matrix4::identity() * re(0.125) + psi * psi.adjoint() * re(0.5))
}

/// Werner-like mixture mapped onto two qubits by `|−α⟩ → |↓⟩`, `|α⟩ → |ψ⟩ = κ|↓⟩ + √(1−κ²)|↑⟩`.
pub fn build_mapped_qubit(kappa: f64) -> Result<QubitPairDensity> {
    if !(0.0..=1.0).contains(&kappa) {
        return Err(Error::OutOfRange { what: "kappa", value: kappa });
    }
    let down = nalgebra::Vector2::new(re(1.0), ZERO);
    let up = nalgebra::Vector2::new(ZERO, re(1.0));
    let psi = down * re(kappa) + up * re(libm::sqrt(1.0 - kappa * kappa));
    let proj = |v: &nalgebra::Vector2<C64>| v * v.adjoint();
    let (pd, pu, pp) = (proj(&down), proj(&up), proj(&psi));
    let mut rho = (pd.kronecker(&pd) + pu.kronecker(&pd) + pd.kronecker(&pp) + pu.kronecker(&pp)) * re(0.125);
    let pseudo: Vector4<C64> = down.kronecker(&psi) - up.kronecker(&down);
    rho += pseudo * pseudo.adjoint() * re(0.25);
    Ok(QubitPairDensity::new(rho))
}

/// `κ = ⟨α|−α⟩ = exp(−2α²)` for real `α`.
pub fn kappa(alpha: f64) -> f64 {
    libm::exp(-2.0 * alpha * alpha)
}

/// Hybrid spin ⊗ oscillator operator stored as four `D × D` blocks `ρ^{ss'} = ⟨s|ρ|s'⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridDensityOperator {
    pub block_uu: DMatrix<C64>,
    pub block_ud: DMatrix<C64>,
    pub block_du: DMatrix<C64>,
    pub block_dd: DMatrix<C64>,
}

impl HybridDensityOperator {
    /// Assemble from blocks without density checks (reconstructions need not be positive).
    pub fn from_blocks(
        block_uu: DMatrix<C64>,
        block_ud: DMatrix<C64>,
        block_du: DMatrix<C64>,
        block_dd: DMatrix<C64>,
    ) -> Result<Self> {
        let d = block_uu.nrows();
        for b in [&block_uu, &block_ud, &block_du, &block_dd] {
            if b.shape() != (d, d) {
                return Err(Error::Shape(alloc::format!(
                    "block of shape {:?}, expected {d}x{d}",
                    b.shape()
                )));
            }
        }
        Ok(Self {
            block_uu,
            block_ud,
            block_du,
            block_dd,
        })
    }

    /// Split a `2D × 2D` operator indexed `spin * D + n` (`↑ = 0`).
    pub fn from_full(full: &DMatrix<C64>) -> Result<Self> {
        if full.nrows() != full.ncols() || !full.nrows().is_multiple_of(2) {
            return Err(Error::Shape(alloc::format!("full operator {:?}", full.shape())));
        }
        let d = full.nrows() / 2;
        let blk = |a: usize, b: usize| full.view((a * d, b * d), (d, d)).into_owned();
        Self::from_blocks(blk(0, 0), blk(0, 1), blk(1, 0), blk(1, 1))
    }

    pub fn cutoff(&self) -> usize {
        self.block_uu.nrows()
    }

    pub fn block(&self, a: Spin, b: Spin) -> &DMatrix<C64> {
        match (a, b) {
            (Spin::Up, Spin::Up) => &self.block_uu,
            (Spin::Up, Spin::Down) => &self.block_ud,
            (Spin::Down, Spin::Up) => &self.block_du,
            (Spin::Down, Spin::Down) => &self.block_dd,
        }
    }

    pub fn to_full(&self) -> DMatrix<C64> {
        let d = self.cutoff();
        let mut full = DMatrix::zeros(2 * d, 2 * d);
        for a in Spin::BOTH {
            for b in Spin::BOTH {
                full.view_mut((a.index() * d, b.index() * d), (d, d))
                    .copy_from(self.block(a, b));
            }
        }
        full
    }

    pub fn trace(&self) -> C64 {
        self.block_uu.trace() + self.block_dd.trace()
    }

    /// Oscillator operator `Tr_spin[ρ (X ⊗ I)] = Σ_{ab} ρ^{ab} X_{ba}`.
    pub fn spin_reduced(&self, x: &SpinOperator) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(self.cutoff(), self.cutoff());
        for a in Spin::BOTH {
            for b in Spin::BOTH {
                let w = x[(b.index(), a.index())];
                if w != ZERO {
                    out += self.block(a, b) * w;
                }
            }
        }
        out
    }

    /// Reduced spin state `Tr_osc ρ` in `(↑, ↓)` order.
    pub fn spin_marginal(&self) -> SpinOperator {
        SpinOperator::from_fn(|a, b| self.block(Spin::from_index(a), Spin::from_index(b)).trace())
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        hermitian_eigenvalues(&self.to_full())
    }

    pub fn purity(&self) -> f64 {
        let f = self.to_full();
        (&f * &f).trace().re
    }

    /// Checks Hermiticity, unit trace and positivity within `tol`.
    pub fn check_density(&self, tol: f64) -> Result<()> {
        let full = self.to_full();
        let deviation = hermitian_deviation(&full);
        if deviation > tol {
            return Err(Error::NotHermitian { deviation });
        }
        let tr = self.trace().re;
        if (tr - 1.0).abs() > tol {
            return Err(Error::InvalidTrace { trace: tr });
        }
        let ev = hermitian_eigenvalues(&full)?;
        if let Some(&min) = ev.last() {
            if min < -tol {
                return Err(Error::OutOfRange { what: "minimum eigenvalue", value: min });
            }
        }
        Ok(())
    }

    /// Largest element-wise deviation between two operators of equal cutoff.
    pub fn max_deviation(&self, other: &Self) -> f64 {
        (self.to_full() - other.to_full()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// `|ψ⟩ = |s⟩ ⊗ |φ⟩` as a `2D` vector.
pub(crate) fn spin_tensor(s: Spin, osc: &FockVector) -> nalgebra::DVector<C64> {
    let d = osc.len();
    let mut v = nalgebra::DVector::zeros(2 * d);
    v.rows_mut(s.index() * d, d).copy_from(osc);
    v
}

/// The Werner-like mixture with coherent amplitudes `±α`, assembled termwise.
pub fn build_hybrid_mixture(alpha: f64, cutoff: usize) -> Result<HybridDensityOperator> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::OutOfRange { what: "alpha", value: alpha });
    }
    let plus = coherent_state(re(alpha), cutoff)?;
    let minus = coherent_state(re(-alpha), cutoff)?;
    let mut full = DMatrix::zeros(2 * cutoff, 2 * cutoff);
    for s in Spin::BOTH {
        for osc in [&plus, &minus] {
            let v = spin_tensor(s, osc);
            full += &v * v.adjoint() * re(0.125);
        }
    }
    let pseudo = spin_tensor(Spin::Down, &plus) - spin_tensor(Spin::Up, &minus);
    full += &pseudo * pseudo.adjoint() * re(0.25);
    HybridDensityOperator::from_full(&full)
}

/// Anything with a spectrum and a trace.
pub trait DensityOperator {
    fn trace_re(&self) -> f64;
    fn spectrum(&self) -> Result<Vec<f64>>;
}

impl DensityOperator for QubitPairDensity {
    fn trace_re(&self) -> f64 {
        self.trace().re
    }
    fn spectrum(&self) -> Result<Vec<f64>> {
        self.eigenvalues()
    }
}

impl DensityOperator for HybridDensityOperator {
    fn trace_re(&self) -> f64 {
        self.trace().re
    }
    fn spectrum(&self) -> Result<Vec<f64>> {
        self.eigenvalues()
    }
}

/// Entropy in bits of a spectrum, with `0 · log 0 = 0`.
pub fn entropy_of_spectrum(eigenvalues: &[f64]) -> f64 {
    eigenvalues
        .iter()
        .filter(|&&l| l > EIGEN_CLAMP)
        .map(|&l| -l * libm::log2(l))
        .sum()
}

/// Von Neumann entropy `S = −Σ λ log₂ λ` in bits.
pub fn von_neumann_entropy<R: DensityOperator + ?Sized>(rho: &R) -> Result<f64> {
    let tr = rho.trace_re();
    if (tr - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidTrace { trace: tr });
    }
    Ok(entropy_of_spectrum(&rho.spectrum()?))
}

/// `ρ^{T₂}_{mμ,nν} = ρ_{mν,nμ}`.
pub fn partial_transpose(rho: &QubitPairDensity) -> Matrix4<C64> {
    Matrix4::from_fn(|i, j| {
        let (m, mu) = (i / 2, i % 2);
        let (n, nu) = (j / 2, j % 2);
        rho.elements[(2 * m + nu, 2 * n + mu)]
    })
}

/// `E = −2 Σ λ⁻` over the negative eigenvalues of the partial transpose.
pub fn negativity(rho: &QubitPairDensity) -> Result<f64> {
    let pt = partial_transpose(rho);
    let ev = hermitian_eigenvalues(&DMatrix::from_iterator(4, 4, pt.iter().copied()))?;
    Ok(-2.0 * ev.iter().filter(|&&l| l < -NEGATIVE_THRESHOLD).sum::<f64>())
}

/// `ρ = ¼[I⊗I + r·σ⊗I + I⊗s·σ + Σ t_{nm} σ_n⊗σ_m]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HilbertSchmidtDecomposition {
    pub r: [f64; 3],
    pub s: [f64; 3],
    /// `t[n][m] = Tr[ρ σ_n ⊗ σ_m]`, rows indexed by the first subsystem.
    pub t: [[f64; 3]; 3],
}

impl HilbertSchmidtDecomposition {
    pub fn correlation(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.t[i][j])
    }

    pub fn reassemble(&self) -> QubitPairDensity {
        let id = Matrix2::<C64>::identity();
        let mut m = id.kronecker(&id);
        for i in 0..3 {
            let p = pauli_b(i + 1);
            m += p.kronecker(&id) * re(self.r[i]);
            m += id.kronecker(&p) * re(self.s[i]);
            for j in 0..3 {
                m += p.kronecker(&pauli_b(j + 1)) * re(self.t[i][j]);
            }
        }
        QubitPairDensity::new(m * re(0.25))
    }
}

pub fn hilbert_schmidt_decomposition(rho: &QubitPairDensity) -> HilbertSchmidtDecomposition {
    let id = Matrix2::<C64>::identity();
    let expect = |op: Matrix4<C64>| (rho.elements * op).trace().re;
    let mut out = HilbertSchmidtDecomposition {
        r: [0.0; 3],
        s: [0.0; 3],
        t: [[0.0; 3]; 3],
    };
    for i in 0..3 {
        let p = pauli_b(i + 1);
        out.r[i] = expect(p.kronecker(&id));
        out.s[i] = expect(id.kronecker(&p));
        for j in 0..3 {
            out.t[i][j] = expect(p.kronecker(&pauli_b(j + 1)));
        }
    }
    out
}

/// How `Tr√(T†T)` is evaluated in the teleportation fidelity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FidelityConvention {
    /// `Σ_j √((T†T)_jj)`, the sum of the column norms of `T`. Reproduces the
    /// published fidelity curve and its threshold α = 0.2476.
    #[default]
    ColumnNorm,
    /// The trace norm `Σ σ_i(T)` (singular values of `T`).
    TraceNorm,
}

impl FidelityConvention {
    pub fn trace_root(self, t: &Matrix3<f64>) -> f64 {
        match self {
            FidelityConvention::TraceNorm => t.singular_values().iter().sum(),
            FidelityConvention::ColumnNorm => (0..3).map(|j| t.column(j).norm()).sum(),
        }
    }
}

/// `F = ½[1 + ⅓ Tr√(T†T)]` evaluated with the trace norm.
pub fn teleportation_fidelity(rho: &QubitPairDensity) -> f64 {
    teleportation_fidelity_with(rho, FidelityConvention::TraceNorm)
}

pub fn teleportation_fidelity_with(rho: &QubitPairDensity, convention: FidelityConvention) -> f64 {
    let t = hilbert_schmidt_decomposition(rho).correlation();
    0.5 * (1.0 + convention.trace_root(&t) / 3.0)
}

/// Teleportation fidelity of the mapped Werner-like state at amplitude `alpha`.
pub fn fidelity_at(alpha: f64, convention: FidelityConvention) -> f64 {
    // kappa(alpha) lies in (0, 1] for real alpha, so the builder cannot fail
    let rho = build_mapped_qubit(kappa(alpha)).expect("kappa in [0, 1]");
    teleportation_fidelity_with(&rho, convention)
}

/// Root of `F(α) − target` on [`THRESHOLD_BRACKET`] by bisection.
pub fn fidelity_crossing(target: f64, convention: FidelityConvention) -> Result<f64> {
    let (mut lo, mut hi) = THRESHOLD_BRACKET;
    let g = |a: f64| fidelity_at(a, convention) - target;
    let (mut glo, ghi) = (g(lo), g(hi));
    if glo.signum() == ghi.signum() {
        return Err(Error::NoSignChange { target, lo, hi });
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if gm.signum() == glo.signum() {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Amplitude below which the mixture is useless for teleportation (`F < 2/3`).
pub fn fidelity_threshold(convention: FidelityConvention) -> Result<f64> {
    fidelity_crossing(CLASSICAL_FIDELITY, convention)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricRow {
    pub alpha: f64,
    pub kappa: f64,
    pub entropy_bits: f64,
    pub negativity: f64,
    pub fidelity: f64,
}

impl MetricRow {
    pub fn at(alpha: f64, convention: FidelityConvention) -> Result<Self> {
        let k = kappa(alpha);
        let rho = build_mapped_qubit(k)?;
        Ok(Self {
            alpha,
            kappa: k,
            entropy_bits: von_neumann_entropy(&rho)?,
            negativity: negativity(&rho)?,
            fidelity: teleportation_fidelity_with(&rho, convention),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricTable {
    pub rows: Vec<MetricRow>,
    pub entropy_nondecreasing: bool,
    pub negativity_nondecreasing: bool,
    pub fidelity_nondecreasing: bool,
}

impl MetricTable {
    pub fn from_rows(mut rows: Vec<MetricRow>) -> Self {
        rows.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
        let mono = |f: fn(&MetricRow) -> f64| rows.windows(2).all(|w| f(&w[1]) >= f(&w[0]) - 1e-12);
        Self {
            entropy_nondecreasing: mono(|r| r.entropy_bits),
            negativity_nondecreasing: mono(|r| r.negativity),
            fidelity_nondecreasing: mono(|r| r.fidelity),
            rows,
        }
    }

    /// Adds a row at `alpha`, keeping the table ordered.
    pub fn insert(&mut self, row: MetricRow) {
        let mut rows = core::mem::take(&mut self.rows);
        rows.push(row);
        *self = Self::from_rows(rows);
    }
}

/// `(α, κ, S, E, F)` on `steps` equally spaced amplitudes.
pub fn metric_sweep(
    alpha_min: f64,
    alpha_max: f64,
    steps: usize,
    convention: FidelityConvention,
) -> Result<MetricTable> {
    if steps < 2 {
        return Err(Error::InvalidSettings(alloc::format!("sweep needs at least 2 steps, got {steps}")));
    }
    if !(alpha_min >= 0.0 && alpha_max > alpha_min) {
        return Err(Error::InvalidSettings(alloc::format!(
            "alpha range [{alpha_min}, {alpha_max}]"
        )));
    }
    let rows = (0..steps)
        .map(|i| {
            let a = alpha_min + (alpha_max - alpha_min) * i as f64 / (steps - 1) as f64;
            MetricRow::at(a, convention)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricTable::from_rows(rows))
}
