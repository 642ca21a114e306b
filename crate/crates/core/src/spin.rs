//! Two-level spin operators in the `(↑, ↓)` ordering, `σ₃|↑⟩ = |↑⟩`.

use nalgebra::Matrix2;

use crate::C64;

pub type SpinOperator = Matrix2<C64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub const BOTH: [Spin; 2] = [Spin::Up, Spin::Down];

    /// Row index in `(↑, ↓)` ordering.
    pub fn index(self) -> usize {
        match self {
            Spin::Up => 0,
            Spin::Down => 1,
        }
    }

    pub fn from_index(i: usize) -> Spin {
        if i == 0 {
            Spin::Up
        } else {
            Spin::Down
        }
    }

    /// Eigenvalue of `σ₃`.
    pub fn sign(self) -> f64 {
        match self {
            Spin::Up => 1.0,
            Spin::Down => -1.0,
        }
    }
}

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

pub fn identity() -> SpinOperator {
    SpinOperator::identity()
}

/// Pauli matrix `σ_k`, `k ∈ {1, 2, 3}`.
pub fn pauli(k: usize) -> SpinOperator {
    match k {
        1 => SpinOperator::new(ZERO, ONE, ONE, ZERO),
        2 => SpinOperator::new(ZERO, -I, I, ZERO),
        3 => SpinOperator::new(ONE, ZERO, ZERO, -ONE),
        _ => panic!("Pauli index must be 1, 2 or 3, got {k}"),
    }
}

/// `U(θ, φ) = cos θ · I − i sin θ (σ₁ cos φ + σ₂ sin φ)`.
pub fn spin_rotation(theta: f64, phi: f64) -> SpinOperator {
    let (s, c) = (libm::sin(theta), libm::cos(theta));
    let axis = pauli(1) * C64::new(libm::cos(phi), 0.0) + pauli(2) * C64::new(libm::sin(phi), 0.0);
    identity() * C64::new(c, 0.0) - axis * C64::new(0.0, s)
}

/// `|s⟩⟨s|`.
pub fn projector(s: Spin) -> SpinOperator {
    let mut p = SpinOperator::zeros();
    p[(s.index(), s.index())] = ONE;
    p
}

/// `U(θ,φ) |s⟩⟨s| U†(θ,φ)`: the projector selected by outcome `s` after the rotation.
pub fn rotated_projector(s: Spin, theta: f64, phi: f64) -> SpinOperator {
    let u = spin_rotation(theta, phi);
    u * projector(s) * u.adjoint()
}
