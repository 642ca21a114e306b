//! Values frozen from an independent 40-digit mpmath / numpy computation.
#![allow(clippy::excessive_precision)]

use approx::assert_abs_diff_eq;
use werner_core::fock::{displacement_element, displacement_real, laguerre};
use werner_core::math::binomial_weight;
use werner_core::tomography::build_g;
use werner_core::werner::{
    build_hybrid_mixture, build_mapped_qubit, fidelity_threshold, kappa, negativity, teleportation_fidelity_with,
    von_neumann_entropy, FidelityConvention,
};
use werner_core::wigner::wigner_point;
use werner_core::C64;

#[test]
fn displacement_magnitudes() {
    let cases = [
        (0, 0, 0.835_270_211_411_272_03),
        (1, 0, 0.501_162_126_846_763_2),
        (3, 5, 0.451_585_167_099_812_63),
        (7, 2, 0.023_994_136_696_896_142),
        (12, 12, -0.371_472_293_761_430_16),
        (20, 3, 2.382_133_216_945_072_4e-10),
    ];
    for (m, n, want) in cases {
        let got = displacement_real(m, n, 0.6);
        assert!((got - want).abs() <= 1e-14 + 1e-12 * want.abs(), "f({m},{n}) = {got}, want {want}");
    }
}

#[test]
fn complex_displacement_element() {
    let beta = C64::from_polar(1.3, 0.4);
    let got = displacement_element(5, 2, beta);
    assert_abs_diff_eq!(got.re, 0.131_475_593_291_501_56, epsilon = 1e-13);
    assert_abs_diff_eq!(got.im, 0.338_175_160_554_756_09, epsilon = 1e-13);
}

#[test]
fn laguerre_value() {
    assert_abs_diff_eq!(laguerre(7, 3, 2.5), -2.413_853_236_607_142_9, epsilon = 1e-12);
}

#[test]
fn g_entry() {
    let g = build_g(2, 0.6, 31, 31);
    assert_abs_diff_eq!(g[(3, 1)], 0.028_862_886_397_455_828, epsilon = 1e-14);
}

#[test]
fn binomial_loss_weight() {
    assert_abs_diff_eq!(binomial_weight(10, 4, 0.9), 1.377_81e-4, epsilon = 1e-15);
}

#[test]
fn wigner_values_off_origin() {
    let rho = build_hybrid_mixture(0.7, 40).unwrap();
    let g = C64::new(0.3, 0.2);
    let uu = wigner_point(&rho.block_uu, g);
    assert_abs_diff_eq!(uu.re, 0.083_167_265_609_465_117, epsilon = 1e-10);
    assert_abs_diff_eq!(uu.im, 0.0, epsilon = 1e-10);
    let ud = wigner_point(&rho.block_ud, g);
    assert_abs_diff_eq!(ud.re, -0.103_972_326_931_149_52, epsilon = 1e-10);
    assert_abs_diff_eq!(ud.im, -0.065_185_402_027_831_32, epsilon = 1e-10);
}

#[test]
fn wigner_at_origin_closed_forms() {
    let alpha = 0.7;
    let rho = build_hybrid_mixture(alpha, 40).unwrap();
    let zero = C64::new(0.0, 0.0);
    assert_abs_diff_eq!(wigner_point(&rho.block_uu, zero).re, kappa(alpha) / core::f64::consts::PI, epsilon = 1e-10);
    assert_abs_diff_eq!(
        wigner_point(&rho.block_ud, zero).re,
        -0.5 / core::f64::consts::PI,
        epsilon = 1e-10
    );
}

#[test]
fn metrics_table() {
    // (alpha, S, E, F trace norm, F column norm)
    let rows = [
        (0.0, 0.811_278_124_459_132_8, 0.0, 0.583_333_333_333_333_4, 0.583_333_333_333_333_4),
        (0.5, 1.335_284_544_636_410_3, 0.175_467_513_190_319_28, 0.715_843_349_603_441_6, 0.716_748_263_618_543_5),
        (1.0, 1.538_818_045_501_279_7, 0.246_553_942_395_347_64, 0.748_466_643_210_137_1, 0.748_466_770_622_766),
    ];
    for (alpha, s, e, ft, fc) in rows {
        let q = build_mapped_qubit(kappa(alpha)).unwrap();
        assert_abs_diff_eq!(von_neumann_entropy(&q).unwrap(), s, epsilon = 1e-10);
        assert_abs_diff_eq!(negativity(&q).unwrap(), e, epsilon = 1e-10);
        assert_abs_diff_eq!(teleportation_fidelity_with(&q, FidelityConvention::TraceNorm), ft, epsilon = 1e-10);
        assert_abs_diff_eq!(teleportation_fidelity_with(&q, FidelityConvention::ColumnNorm), fc, epsilon = 1e-10);
    }
}

#[test]
fn thresholds() {
    assert_abs_diff_eq!(fidelity_threshold(FidelityConvention::ColumnNorm).unwrap(), 0.247_633, epsilon = 1e-6);
    assert_abs_diff_eq!(fidelity_threshold(FidelityConvention::TraceNorm).unwrap(), 0.268_180, epsilon = 1e-6);
}
