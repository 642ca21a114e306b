//! Forward model: marginal distributions, Fourier matrices and detector smearing.

use alloc::vec::Vec;
use nalgebra::DMatrix;

use super::{MarginalSet, MarginalTable, SpinSetting, TomographySettings, SETTING_GROUPS};
use crate::fock::displacement_magnitudes;
use crate::math::binomial_weight;
use crate::spin::{rotated_projector, Spin};
use crate::werner::HybridDensityOperator;
use crate::C64;

/// Ideal counts above `N` that are still folded into the smeared model.
pub const SMEAR_MARGIN: usize = 32;

/// `Tr_spin[ρ (U|s⟩⟨s|U† ⊗ I)]`: the oscillator operator probed by outcome `s`.
pub fn measured_operator(rho: &HybridDensityOperator, s: Spin, setting: SpinSetting) -> DMatrix<C64> {
    rho.spin_reduced(&rotated_projector(s, setting.theta, setting.phi))
}

/// `⟨n|D†(β) A D(β)|n⟩` for `n ∈ [0, n_top]`, from precomputed `f_{k,n}(|β|)`.
fn displaced_diagonal(a: &DMatrix<C64>, mags: &DMatrix<f64>, phase: f64) -> Vec<f64> {
    let (d, cols) = mags.shape();
    // ⟨k|D(β)|n⟩ = f_{k,n} e^{i(k−n)φ}
    let dmat = DMatrix::from_fn(d, cols, |k, n| {
        let f = mags[(k, n)];
        if f == 0.0 {
            C64::new(0.0, 0.0)
        } else {
            C64::from_polar(f, (k as f64 - n as f64) * phase)
        }
    });
    let x = a * &dmat;
    (0..cols)
        .map(|n| {
            dmat.column(n)
                .iter()
                .zip(x.column(n).iter())
                .map(|(dk, xk)| (dk.conj() * xk).re)
                .sum()
        })
        .collect()
}

/// Ideal distribution `w(n) = ⟨n|D†(β) A D(β)|n⟩` for `n ∈ [0, n_top]`.
pub fn ideal_distribution(a: &DMatrix<C64>, beta: C64, n_top: usize) -> Vec<f64> {
    let mags = displacement_magnitudes(beta.norm(), a.nrows(), n_top + 1);
    displaced_diagonal(a, &mags, beta.arg())
}

/// `w(s, n; θ, φ, β) = Tr{ρ D(β)U(θ,φ)(|s⟩⟨s| ⊗ |n⟩⟨n|)U†(θ,φ)D†(β)}`.
pub fn marginal_w(rho: &HybridDensityOperator, s: Spin, n: usize, setting: SpinSetting, beta: C64) -> f64 {
    let a = measured_operator(rho, s, setting);
    ideal_distribution(&a, beta, n)[n]
}

/// `B_{n,k} = C(k, n) ηⁿ (1 − η)^{k−n}`.
pub fn efficiency_matrix(eta: f64, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |n, k| binomial_weight(k, n, eta))
}

/// `w_η(n) = Σ_{k≥n} C(k,n) ηⁿ (1−η)^{k−n} w(k)` on the same support as `w`.
pub fn efficiency_smear(w: &[f64], eta: f64) -> Vec<f64> {
    (0..w.len())
        .map(|n| (n..w.len()).map(|k| binomial_weight(k, n, eta) * w[k]).sum())
        .collect()
}

/// `G^{(r)}_{n,m}(|β|) = f_{m+r,n}(|β|) f_{m,n}(|β|)`, rows `n ∈ [0, n_max]`, columns `m ∈ [0, N_c − r]`.
pub fn build_g(r: usize, beta_abs: f64, n_max: usize, n_cutoff: usize) -> DMatrix<f64> {
    assert!(r <= n_cutoff, "order {r} exceeds N_c = {n_cutoff}");
    let mags = displacement_magnitudes(beta_abs, n_cutoff + 1, n_max + 1);
    g_from_magnitudes(&mags, r, n_max, n_cutoff)
}

pub(crate) fn g_from_magnitudes(mags: &DMatrix<f64>, r: usize, n_max: usize, n_cutoff: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n_max + 1, n_cutoff + 1 - r, |n, m| mags[(m + r, n)] * mags[(m, n)])
}

/// Detected distribution on `[0, N]` plus the probability of counting more than `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectedDistribution {
    pub counts: Vec<f64>,
    pub overflow: f64,
}

/// Smears the ideal distribution (evaluated up to `N + SMEAR_MARGIN`) and cuts at `N`.
pub fn detected_distribution(
    a: &DMatrix<C64>,
    mags: &DMatrix<f64>,
    phase: f64,
    n_max: usize,
    eta: f64,
) -> DetectedDistribution {
    let ideal = displaced_diagonal(a, mags, phase);
    let smeared = efficiency_smear(&ideal, eta);
    let counts: Vec<f64> = smeared[..=n_max].iter().map(|&p| p.max(0.0)).collect();
    let total: f64 = ideal.iter().sum::<f64>().max(0.0);
    let overflow = (total - counts.iter().sum::<f64>()).max(0.0);
    DetectedDistribution { counts, overflow }
}

/// Detected distributions of both outcomes for every phase of one setting group.
pub fn setting_distributions(
    rho: &HybridDensityOperator,
    settings: &TomographySettings,
    setting: SpinSetting,
) -> [Vec<DetectedDistribution>; 2] {
    let mags = displacement_magnitudes(settings.beta_abs, rho.cutoff(), settings.n_max + SMEAR_MARGIN + 1);
    Spin::BOTH.map(|s| {
        let a = measured_operator(rho, s, setting);
        (0..settings.n_phases)
            .map(|j| detected_distribution(&a, &mags, settings.phase(j), settings.n_max, settings.eta))
            .collect()
    })
}

/// Infinite-statistics marginals of one setting group (zero variances).
pub fn exact_marginals(
    rho: &HybridDensityOperator,
    settings: &TomographySettings,
    setting: SpinSetting,
) -> MarginalTable {
    let [up, down] = setting_distributions(rho, settings, setting);
    let table = |d: &[DetectedDistribution]| {
        DMatrix::from_fn(settings.n_max + 1, settings.n_phases, |n, j| d[j].counts[n])
    };
    let zeros = DMatrix::zeros(settings.n_max + 1, settings.n_phases);
    MarginalTable {
        setting,
        beta_abs: settings.beta_abs,
        up: table(&up),
        down: table(&down),
        var_up: zeros.clone(),
        var_down: zeros,
    }
}

pub fn exact_marginal_set(rho: &HybridDensityOperator, settings: &TomographySettings) -> MarginalSet {
    let [d, r, i] = SETTING_GROUPS.map(|g| exact_marginals(rho, settings, g));
    MarginalSet {
        diagonal: d,
        real_part: r,
        imag_part: i,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::displacement_element;
    use crate::tomography::{fourier_coefficient, SETTING_DIAGONAL};
    use crate::werner::build_hybrid_mixture;

    fn mixture() -> HybridDensityOperator {
        build_hybrid_mixture(0.7, 32).unwrap()
    }

    #[test]
    fn probabilities_are_complete() {
        let rho = mixture();
        let setting = SpinSetting::new(0.3, 1.1);
        let beta = C64::from_polar(0.6, 0.4);
        let mut total = 0.0;
        for s in Spin::BOTH {
            let a = measured_operator(&rho, s, setting);
            total += ideal_distribution(&a, beta, 80).iter().sum::<f64>();
        }
        assert!((total - 1.0).abs() < 1e-8, "{total}");
    }

    #[test]
    fn vacuum_probability_without_displacement() {
        let w = marginal_w(&mixture(), Spin::Up, 0, SETTING_DIAGONAL, C64::new(0.0, 0.0));
        assert!((w - 0.5 * libm::exp(-0.49)).abs() < 1e-12);
        assert!((w - 0.306313).abs() < 1e-6);
    }

    #[test]
    fn marginal_matches_double_sum() {
        let rho = mixture();
        let beta = C64::from_polar(0.6, 2.0);
        for n in [0, 1, 4, 9] {
            let mut direct = C64::new(0.0, 0.0);
            for k in 0..32 {
                for m in 0..32 {
                    direct += displacement_element(k, n, beta).conj()
                        * rho.block_uu[(k, m)]
                        * displacement_element(m, n, beta);
                }
            }
            let w = marginal_w(&rho, Spin::Up, n, SETTING_DIAGONAL, beta);
            assert!((w - direct.re).abs() < 1e-10, "n={n}");
        }
    }

    #[test]
    fn g_at_zero_displacement_is_identity_or_zero() {
        let g0 = build_g(0, 0.0, 7, 5);
        assert_eq!(g0, DMatrix::from_fn(8, 6, |n, m| if n == m { 1.0 } else { 0.0 }));
        for r in 1..=5 {
            assert!(build_g(r, 0.0, 7, 5).iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn g_zero_columns_are_stochastic() {
        let g = build_g(0, 0.6, 31, 31);
        assert!(g.iter().all(|&x| x >= 0.0));
        for m in 0..=8 {
            assert!((g.column(m).sum() - 1.0).abs() < 1e-6, "m={m}");
        }
    }

    #[test]
    fn fourier_data_follow_g() {
        let rho = mixture();
        let s = TomographySettings { eta: 1.0, ..TomographySettings::REFERENCE };
        let table = exact_marginals(&rho, &s, SETTING_DIAGONAL);
        for r in [0, 1, 2, 5] {
            let g = build_g(r, s.beta_abs, s.n_max, s.n_cutoff);
            let x = nalgebra::DVector::from_fn(s.n_cutoff + 1 - r, |m, _| rho.block_uu[(m + r, m)]);
            let predicted = g.map(|v| C64::new(v, 0.0)) * x;
            for n in 0..=s.n_max {
                let row: Vec<f64> = table.up.row(n).iter().copied().collect();
                let c = fourier_coefficient(&row, r).unwrap();
                assert!((c - predicted[n]).norm() < 1e-8, "r={r} n={n}");
            }
        }
    }

    #[test]
    fn single_loss() {
        let w = efficiency_smear(&[0.0, 1.0], 0.9);
        assert!((w[0] - 0.1).abs() < 1e-15 && (w[1] - 0.9).abs() < 1e-15);
        assert_eq!(efficiency_smear(&[0.2, 0.3, 0.5], 1.0), alloc::vec![0.2, 0.3, 0.5]);
    }

    #[test]
    fn smearing_preserves_probability() {
        let b = efficiency_matrix(0.7, 40, 40);
        for k in 0..40 {
            assert!((b.column(k).sum() - 1.0).abs() < 1e-12);
        }
    }
}
