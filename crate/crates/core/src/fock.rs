//! Truncated Fock-space primitives: coherent states and displacement matrix
//! elements.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::math::ln_factorial;
use crate::{Error, Result, C64};

/// Amplitudes `c_0 … c_{D-1}` of an oscillator state.
pub type FockVector = DVector<C64>;
/// `D × D` operator on the truncated oscillator space.
pub type OscillatorOperator = DMatrix<C64>;

/// Largest tolerated loss of norm when truncating a state to the cutoff.
pub const TRUNCATION_TOLERANCE: f64 = 1e-6;

/// Associated Laguerre polynomial `L_n^{(a)}(x)` by the three-term recurrence in `n`.
pub fn laguerre(n: usize, a: usize, x: f64) -> f64 {
    let a = a as f64;
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + a - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + a - x) * cur - (kf + a) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// `⟨m|D(x)|n⟩` for a real, non-negative displacement `x`.
///
/// This is the phase-free part of the displacement matrix element:
/// `⟨m|D(x e^{iφ})|n⟩ = f_{m,n}(x) e^{i(m-n)φ}`.
pub fn displacement_real(m: usize, n: usize, x: f64) -> f64 {
    if x == 0.0 {
        return if m == n { 1.0 } else { 0.0 };
    }
    let x2 = x * x;
    let (lo, hi) = if m >= n { (n, m) } else { (m, n) };
    let d = hi - lo;
    let ln_mag = 0.5 * (ln_factorial(lo) - ln_factorial(hi)) + d as f64 * libm::log(x) - 0.5 * x2;
    let value = libm::exp(ln_mag) * laguerre(lo, d, x2);
    // ⟨m|D(x)|n⟩ = (-1)^{n-m} ⟨n|D(x)|m⟩ for real x
    if m < n && d % 2 == 1 {
        -value
    } else {
        value
    }
}

/// `⟨m|D(β)|n⟩` from the closed Laguerre form.
pub fn displacement_element(m: usize, n: usize, beta: C64) -> C64 {
    let x = beta.norm();
    if x == 0.0 {
        return if m == n { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
    }
    let phase = (m as f64 - n as f64) * beta.arg();
    C64::from_polar(displacement_real(m, n, x), phase)
}

/// Rows `0..rows`, columns `0..cols` of `⟨k|D(x)|n⟩` at real `x ≥ 0`.
pub fn displacement_magnitudes(x: f64, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |k, n| displacement_real(k, n, x))
}

/// `D(β)` truncated to `cutoff × cutoff`. Unitary up to truncation.
pub fn displacement_operator(beta: C64, cutoff: usize) -> OscillatorOperator {
    let x = beta.norm();
    let phi = beta.arg();
    let mags = displacement_magnitudes(x, cutoff, cutoff);
    DMatrix::from_fn(cutoff, cutoff, |m, n| {
        let v = mags[(m, n)];
        if v == 0.0 {
            C64::new(0.0, 0.0)
        } else {
            C64::from_polar(v, (m as f64 - n as f64) * phi)
        }
    })
}

/// Coherent state `|α⟩` truncated at `cutoff`.
///
/// Fails when the truncated norm falls short of one by more than
/// [`TRUNCATION_TOLERANCE`].
pub fn coherent_state(alpha: C64, cutoff: usize) -> Result<FockVector> {
    if cutoff == 0 {
        return Err(Error::Truncation { cutoff, norm: 0.0 });
    }
    let x = alpha.norm();
    let phi = alpha.arg();
    let amps: Vec<C64> = (0..cutoff)
        .map(|n| {
            if x == 0.0 {
                return if n == 0 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            }
            let ln_mag = -0.5 * x * x + n as f64 * libm::log(x) - 0.5 * ln_factorial(n);
            C64::from_polar(libm::exp(ln_mag), n as f64 * phi)
        })
        .collect();
    let v = FockVector::from_vec(amps);
    let norm = v.norm_squared();
    if norm < 1.0 - TRUNCATION_TOLERANCE {
        return Err(Error::Truncation { cutoff, norm });
    }
    Ok(v)
}

/// Number state `|n⟩` in a space of dimension `cutoff`.
pub fn fock_state(n: usize, cutoff: usize) -> FockVector {
    let mut v = FockVector::zeros(cutoff);
    v[n] = C64::new(1.0, 0.0);
    v
}

/// `|ψ⟩⟨φ|`.
pub fn outer(psi: &FockVector, phi: &FockVector) -> OscillatorOperator {
    psi * phi.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn vacuum_coherent_state() {
        let v = coherent_state(c(0.0), 8).unwrap();
        assert_eq!(v[0], c(1.0));
        assert!(v.iter().skip(1).all(|a| a.norm() == 0.0));
    }

    #[test]
    fn coherent_overlap_matches_kappa() {
        let a = coherent_state(c(0.7), 32).unwrap();
        let b = coherent_state(c(-0.7), 32).unwrap();
        // direct amplitude summation vs exp(-2α²)
        let overlap = a.dotc(&b);
        assert_relative_eq!(overlap.re, libm::exp(-0.98), epsilon = 1e-12);
        assert_relative_eq!(overlap.re, 0.375311, epsilon = 1e-6);
        assert!(overlap.im.abs() < 1e-15);
    }

    #[test]
    fn coherent_norm() {
        let a = coherent_state(c(0.7), 32).unwrap();
        assert_relative_eq!(a.norm_squared(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn coherent_truncation_rejected() {
        let err = coherent_state(c(3.0), 4).unwrap_err();
        assert!(matches!(err, Error::Truncation { cutoff: 4, .. }));
    }

    #[test]
    fn closed_form_elements() {
        assert_relative_eq!(displacement_element(0, 0, c(0.6)).re, 0.835270, epsilon = 1e-6);
        assert_relative_eq!(displacement_element(0, 0, c(0.6)).re, libm::exp(-0.18), epsilon = 1e-15);
        assert_relative_eq!(displacement_element(1, 0, c(0.6)).re, 0.6 * libm::exp(-0.18), epsilon = 1e-15);
        assert_relative_eq!(displacement_element(1, 0, c(0.6)).re, 0.501162, epsilon = 1e-6);
        // ⟨0|D(β)|1⟩ = -β* e^{-|β|²/2}
        let b = C64::new(0.3, -0.4);
        let e = displacement_element(0, 1, b);
        let want = -b.conj() * libm::exp(-0.5 * b.norm_sqr());
        assert!((e - want).norm() < 1e-15);
        for m in 0..6 {
            for n in 0..6 {
                let e = displacement_element(m, n, c(0.0));
                assert_eq!(e, if m == n { c(1.0) } else { c(0.0) });
            }
        }
    }

    #[test]
    fn identity_at_zero() {
        let d = displacement_operator(c(0.0), 7);
        assert_eq!(d, DMatrix::identity(7, 7));
    }

    #[test]
    fn column_norms_are_unit() {
        let d = displacement_operator(c(0.6), 32);
        for n in 0..=8 {
            assert_relative_eq!(d.column(n).norm_squared(), 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn inverse_displacement() {
        let beta = C64::new(0.45, 0.2);
        let prod = displacement_operator(beta, 40) * displacement_operator(-beta, 40);
        for i in 0..10 {
            for j in 0..10 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((prod[(i, j)] - c(want)).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn coherent_state_is_displaced_vacuum() {
        let alpha = C64::new(-0.8, 0.35);
        let d = displacement_operator(alpha, 32);
        let a = coherent_state(alpha, 32).unwrap();
        let col = d.column(0);
        for n in 0..32 {
            assert!((a[n] - col[n]).norm() < 1e-10);
        }
    }

    proptest! {
        #[test]
        fn displaced_columns_complete(re in -1.4f64..1.4, im in -1.4f64..1.4, n in 0usize..=8) {
            let beta = C64::new(re, im);
            prop_assume!(beta.norm() <= 2.0);
            // the D = 32 tail reaches 6.5e-6 at |β| = 2, n = 8; D = 40 leaves 1.4e-11
            let total: f64 = (0..40).map(|m| displacement_element(m, n, beta).norm_sqr()).sum();
            prop_assert!((total - 1.0).abs() < 1e-8);
        }
    }
}
