//! Wigner-function matrix `W^{ss'}(γ)` of the four spin blocks.

use alloc::vec::Vec;
use core::f64::consts::FRAC_2_PI;
use nalgebra::DMatrix;

use crate::fock::displacement_magnitudes;
use crate::spin::Spin;
use crate::werner::HybridDensityOperator;
use crate::C64;

/// Tolerance of the grid normalization check.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-3;

/// `⟨m|D(2γ)Π|k⟩ = (−1)^k ⟨m|D(2γ)|k⟩` for `m, k < dim`.
fn displaced_parity(gamma: C64, dim: usize) -> DMatrix<C64> {
    let mags = displacement_magnitudes(2.0 * gamma.norm(), dim, dim);
    let phi = gamma.arg();
    DMatrix::from_fn(dim, dim, |m, k| {
        let f = mags[(m, k)];
        if f == 0.0 {
            return C64::new(0.0, 0.0);
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        C64::from_polar(sign * f, (m as f64 - k as f64) * phi)
    })
}

fn weighted_trace(block: &DMatrix<C64>, dp: &DMatrix<C64>) -> C64 {
    // Tr[A · D(2γ)Π] = Σ_{k,m} A_{km} (D(2γ)Π)_{mk}
    block.iter().zip(dp.transpose().iter()).map(|(a, b)| a * b).sum::<C64>() * FRAC_2_PI
}

/// `W(γ) = (2/π) Tr[A D(γ) Π D†(γ)]`.
pub fn wigner_point(block: &DMatrix<C64>, gamma: C64) -> C64 {
    weighted_trace(block, &displaced_parity(gamma, block.nrows()))
}

/// Rectangular grid in the `γ` plane; both ranges inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub step: f64,
}

impl GridSpec {
    /// `Re γ ∈ [−α−3, α+3]`, `Im γ ∈ [−3, 3]`, spacing 0.1.
    pub fn covering(alpha: f64) -> Self {
        Self {
            re_min: -alpha - 3.0,
            re_max: alpha + 3.0,
            im_min: -3.0,
            im_max: 3.0,
            step: 0.1,
        }
    }

    fn axis(lo: f64, hi: f64, step: f64) -> Vec<f64> {
        let n = libm::round((hi - lo) / step) as usize;
        (0..=n).map(|i| lo + i as f64 * step).collect()
    }

    pub fn re_axis(&self) -> Vec<f64> {
        Self::axis(self.re_min, self.re_max, self.step)
    }

    pub fn im_axis(&self) -> Vec<f64> {
        Self::axis(self.im_min, self.im_max, self.step)
    }
}

/// Which real surface of a complex block to read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layer {
    Re,
    Im,
    Modulus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub re: f64,
    pub im: f64,
    pub value: f64,
}

/// Block surfaces sampled on a grid; `values[b][(i, j)]` is at `(re_axis[i], im_axis[j])`,
/// blocks in the order `↑↑, ↑↓, ↓↑, ↓↓`.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub spec: GridSpec,
    pub re_axis: Vec<f64>,
    pub im_axis: Vec<f64>,
    pub values: [DMatrix<C64>; 4],
    /// Local maxima of `Re W^{↑↑}`.
    pub peaks: Vec<Peak>,
}

pub const BLOCK_ORDER: [(Spin, Spin); 4] = [
    (Spin::Up, Spin::Up),
    (Spin::Up, Spin::Down),
    (Spin::Down, Spin::Up),
    (Spin::Down, Spin::Down),
];

pub fn block_label(a: Spin, b: Spin) -> &'static str {
    match (a, b) {
        (Spin::Up, Spin::Up) => "uu",
        (Spin::Up, Spin::Down) => "ud",
        (Spin::Down, Spin::Up) => "du",
        (Spin::Down, Spin::Down) => "dd",
    }
}

pub fn wigner_grid(rho: &HybridDensityOperator, spec: GridSpec) -> WignerGrid {
    let re_axis = spec.re_axis();
    let im_axis = spec.im_axis();
    let (nr, ni) = (re_axis.len(), im_axis.len());
    let mut values = [(); 4].map(|_| DMatrix::zeros(nr, ni));
    for (i, &x) in re_axis.iter().enumerate() {
        for (j, &y) in im_axis.iter().enumerate() {
            let dp = displaced_parity(C64::new(x, y), rho.cutoff());
            for (b, &(s, t)) in BLOCK_ORDER.iter().enumerate() {
                values[b][(i, j)] = weighted_trace(rho.block(s, t), &dp);
            }
        }
    }
    let mut grid = WignerGrid {
        spec,
        re_axis,
        im_axis,
        values,
        peaks: Vec::new(),
    };
    grid.peaks = grid.local_maxima(0);
    grid
}

impl WignerGrid {
    pub fn layer(&self, block: usize, layer: Layer) -> DMatrix<f64> {
        self.values[block].map(|z| match layer {
            Layer::Re => z.re,
            Layer::Im => z.im,
            Layer::Modulus => z.norm(),
        })
    }

    /// `Σ W(γ) ΔRe ΔIm`, which approximates the block trace.
    pub fn normalization(&self, block: usize) -> C64 {
        self.values[block].iter().sum::<C64>() * (self.spec.step * self.spec.step)
    }

    /// True when the diagonal-block sums match the block traces within [`NORMALIZATION_TOLERANCE`].
    pub fn normalization_ok(&self, rho: &HybridDensityOperator) -> bool {
        [0, 3].iter().all(|&b| {
            let (s, t) = BLOCK_ORDER[b];
            (self.normalization(b) - rho.block(s, t).trace()).norm() <= NORMALIZATION_TOLERANCE
        })
    }

    /// Interior points of `Re W` strictly above their eight neighbours.
    pub fn local_maxima(&self, block: usize) -> Vec<Peak> {
        let w = self.layer(block, Layer::Re);
        let (nr, ni) = w.shape();
        let mut out = Vec::new();
        for i in 1..nr.saturating_sub(1) {
            for j in 1..ni.saturating_sub(1) {
                let v = w[(i, j)];
                let is_max = (i - 1..=i + 1)
                    .flat_map(|a| (j - 1..=j + 1).map(move |b| (a, b)))
                    .filter(|&p| p != (i, j))
                    .all(|p| w[p] < v);
                if is_max {
                    out.push(Peak {
                        re: self.re_axis[i],
                        im: self.im_axis[j],
                        value: v,
                    });
                }
            }
        }
        out
    }

    /// Maxima of `Re W` along the grid row closest to `Im γ = 0`.
    pub fn real_axis_maxima(&self, block: usize) -> Vec<Peak> {
        let j = self
            .im_axis
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(j, _)| j)
            .unwrap_or(0);
        let w = self.layer(block, Layer::Re);
        (1..self.re_axis.len().saturating_sub(1))
            .filter(|&i| w[(i, j)] > w[(i - 1, j)] && w[(i, j)] > w[(i + 1, j)])
            .map(|i| Peak {
                re: self.re_axis[i],
                im: self.im_axis[j],
                value: w[(i, j)],
            })
            .collect()
    }

    /// `W` at the grid point closest to `(re, im)`.
    pub fn nearest(&self, block: usize, re: f64, im: f64) -> C64 {
        let idx = |axis: &[f64], x: f64| {
            axis.iter()
                .enumerate()
                .min_by(|a, b| (a.1 - x).abs().total_cmp(&(b.1 - x).abs()))
                .map(|(i, _)| i)
                .unwrap_or(0)
        };
        self.values[block][(idx(&self.re_axis, re), idx(&self.im_axis, im))]
    }

    /// Largest pointwise `|ΔW|` over all blocks of two grids on the same axes.
    pub fn max_gap(&self, other: &WignerGrid) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_state, displacement_operator, fock_state, outer};
    use crate::werner::build_hybrid_mixture;

    #[test]
    fn vacuum_at_origin() {
        let vac = outer(&fock_state(0, 8), &fock_state(0, 8));
        let w = wigner_point(&vac, C64::new(0.0, 0.0));
        assert!((w.re - core::f64::consts::FRAC_2_PI).abs() < 1e-15 && w.im.abs() < 1e-15);
    }

    #[test]
    fn displaced_vacuum_is_gaussian() {
        let vac = outer(&fock_state(0, 24), &fock_state(0, 24));
        for g in [C64::new(0.3, -0.2), C64::new(-1.1, 0.5), C64::new(0.0, 1.7)] {
            let w = wigner_point(&vac, g);
            let expected = FRAC_2_PI * libm::exp(-2.0 * g.norm_sqr());
            assert!((w - C64::new(expected, 0.0)).norm() < 1e-12, "{g}");
        }
    }

    #[test]
    fn matches_parity_series() {
        let d = 32;
        let a = coherent_state(C64::new(0.7, 0.0), d).unwrap();
        let b = coherent_state(C64::new(-0.7, 0.0), d).unwrap();
        let block = outer(&b, &a) * C64::new(-0.25, 0.0);
        for g in [C64::new(0.0, 0.0), C64::new(0.4, 0.3)] {
            // Σ (−1)ⁿ ⟨n|D†(γ) A D(γ)|n⟩ in a larger space
            let big = 64;
            let mut a_big = DMatrix::zeros(big, big);
            a_big.view_mut((0, 0), (d, d)).copy_from(&block);
            let dm = displacement_operator(g, big);
            let conj = dm.adjoint() * a_big * dm;
            let series: C64 = (0..40)
                .map(|n| conj[(n, n)] * if n % 2 == 0 { 1.0 } else { -1.0 })
                .sum::<C64>()
                * FRAC_2_PI;
            assert!((wigner_point(&block, g) - series).norm() < 1e-8, "{g}");
        }
    }

    #[test]
    fn blocks_are_mirrored_and_conjugate() {
        let rho = build_hybrid_mixture(0.7, 32).unwrap();
        let grid = wigner_grid(
            &rho,
            GridSpec {
                re_min: -1.5,
                re_max: 1.5,
                im_min: -1.0,
                im_max: 1.0,
                step: 0.25,
            },
        );
        let n = grid.re_axis.len();
        for i in 0..n {
            for j in 0..grid.im_axis.len() {
                assert!(grid.values[0][(i, j)].im.abs() < 1e-10);
                assert!((grid.values[0][(i, j)] - grid.values[3][(n - 1 - i, j)]).norm() < 1e-10);
                assert!((grid.values[2][(i, j)] - grid.values[1][(i, j)].conj()).norm() < 1e-10);
            }
        }
    }
}
