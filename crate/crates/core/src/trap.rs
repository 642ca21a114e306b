//! Ideal-pulse model of the trap preparation and the joint `(σ₃, n)` readout.
//!
//! Pulses act instantaneously: `U(θ, φ)` on the spin, `D(β)` on the
//! cyclotron oscillator and the conditional displacement `D(α σ₁)`.
//! The readout is a projective measurement of spin and excitation number
//! followed by binomial detection losses.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore};
use rand_distr::{Binomial, Distribution};

use crate::fock::{displacement_operator, FockVector};
use crate::montecarlo::{cell_rng, MeasurementRecord};
use crate::spin::{spin_rotation, Spin};
use crate::tomography::{TomographySettings, SETTING_GROUPS, SMEAR_MARGIN};
use crate::werner::HybridDensityOperator;
use crate::{Error, Result, C64};

/// Norm loss tolerated after a pulse before truncation is reported.
pub const NORM_TOLERANCE: f64 = 1e-6;

/// Spin ⊗ oscillator pure state; row `0` is `↑`, row `1` is `↓`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPureState {
    pub amplitudes: DMatrix<C64>,
}

impl JointPureState {
    /// `|↑⟩|0⟩`.
    pub fn ground(cutoff: usize) -> Self {
        let mut amplitudes = DMatrix::zeros(2, cutoff);
        amplitudes[(0, 0)] = C64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn product(s: Spin, osc: &FockVector) -> Self {
        let mut amplitudes = DMatrix::zeros(2, osc.len());
        amplitudes.row_mut(s.index()).copy_from(&osc.transpose());
        Self { amplitudes }
    }

    pub fn cutoff(&self) -> usize {
        self.amplitudes.ncols()
    }

    pub fn component(&self, s: Spin) -> FockVector {
        self.amplitudes.row(s.index()).transpose()
    }

    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    /// Amplitudes indexed `spin * D + n`.
    pub fn to_vector(&self) -> DVector<C64> {
        let d = self.cutoff();
        DVector::from_fn(2 * d, |i, _| self.amplitudes[(i / d, i % d)])
    }

    pub fn density(&self) -> HybridDensityOperator {
        let v = self.to_vector();
        HybridDensityOperator::from_full(&(&v * v.adjoint())).expect("even dimension")
    }

    /// `|⟨other|self⟩|`.
    pub fn overlap(&self, other: &JointPureState) -> f64 {
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| b.conj() * a)
            .sum::<C64>()
            .norm()
    }

    /// Zero-padded copy in a larger oscillator space.
    pub fn embed(&self, cutoff: usize) -> Self {
        let mut amplitudes = DMatrix::zeros(2, cutoff);
        let d = self.cutoff().min(cutoff);
        amplitudes.view_mut((0, 0), (2, d)).copy_from(&self.amplitudes.view((0, 0), (2, d)));
        Self { amplitudes }
    }

    /// `Tr ρ_spin²`.
    pub fn spin_purity(&self) -> f64 {
        let a = &self.amplitudes;
        let rho = a * a.adjoint();
        (&rho * &rho).trace().re
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pulse {
    SpinRotation { theta: f64, phi: f64 },
    Displacement(C64),
    /// `D(α σ₁)`.
    ConditionalDisplacement(C64),
}

/// Applies `pulse`; fails when truncation loses more than [`NORM_TOLERANCE`] of the norm.
pub fn apply_pulse(state: &JointPureState, pulse: Pulse) -> Result<JointPureState> {
    let d = state.cutoff();
    let amplitudes = match pulse {
        Pulse::SpinRotation { theta, phi } => {
            let u = spin_rotation(theta, phi);
            DMatrix::from_fn(2, 2, |i, j| u[(i, j)]) * &state.amplitudes
        }
        Pulse::Displacement(beta) => &state.amplitudes * displacement_operator(beta, d).transpose(),
        Pulse::ConditionalDisplacement(alpha) => {
            let h = C64::new(FRAC_1_SQRT_2, 0.0);
            let (up, down) = (state.amplitudes.row(0), state.amplitudes.row(1));
            // σ₁ eigencomponents |±⟩ = (|↑⟩ ± |↓⟩)/√2
            let plus = (up + down) * h;
            let minus = (up - down) * h;
            let plus = plus * displacement_operator(alpha, d).transpose();
            let minus = minus * displacement_operator(-alpha, d).transpose();
            let mut out = DMatrix::zeros(2, d);
            out.row_mut(0).copy_from(&((&plus + &minus) * h));
            out.row_mut(1).copy_from(&((&plus - &minus) * h));
            out
        }
    };
    let before = state.norm_squared();
    let after = amplitudes.norm_squared();
    if after < before - NORM_TOLERANCE {
        return Err(Error::Truncation { cutoff: d, norm: after });
    }
    Ok(JointPureState { amplitudes })
}

pub fn apply_sequence(state: &JointPureState, pulses: &[Pulse]) -> Result<JointPureState> {
    pulses.iter().try_fold(state.clone(), |s, &p| apply_pulse(&s, p))
}

/// `D(−α σ₁)` followed by `U(3π/4, π/2)`, taking `|↑⟩|0⟩` to `(|↓⟩|α⟩ − |↑⟩|−α⟩)/√2`.
pub fn pseudo_singlet_pulses(alpha: f64) -> [Pulse; 2] {
    [
        Pulse::ConditionalDisplacement(C64::new(-alpha, 0.0)),
        Pulse::SpinRotation {
            theta: 3.0 * core::f64::consts::FRAC_PI_4,
            phi: FRAC_PI_2,
        },
    ]
}

pub fn generate_pseudo_singlet(alpha: f64, cutoff: usize) -> Result<JointPureState> {
    if alpha.is_nan() || alpha < 0.0 {
        return Err(Error::OutOfRange { what: "alpha", value: alpha });
    }
    apply_sequence(&JointPureState::ground(cutoff), &pseudo_singlet_pulses(alpha))
}

/// The five pure components of the mixture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MixtureComponent {
    DownMinus,
    UpMinus,
    DownPlus,
    UpPlus,
    PseudoSinglet,
}

impl MixtureComponent {
    pub const ALL: [MixtureComponent; 5] = [
        MixtureComponent::DownMinus,
        MixtureComponent::UpMinus,
        MixtureComponent::DownPlus,
        MixtureComponent::UpPlus,
        MixtureComponent::PseudoSinglet,
    ];

    pub fn weight(self) -> f64 {
        match self {
            MixtureComponent::PseudoSinglet => 0.5,
            _ => 0.125,
        }
    }

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&c| c == self).expect("listed")
    }

    pub fn label(self) -> &'static str {
        match self {
            MixtureComponent::DownMinus => "down,-alpha",
            MixtureComponent::UpMinus => "up,-alpha",
            MixtureComponent::DownPlus => "down,+alpha",
            MixtureComponent::UpPlus => "up,+alpha",
            MixtureComponent::PseudoSinglet => "pseudo-singlet",
        }
    }

    /// Pulses preparing the component from `|↑⟩|0⟩`.
    pub fn pulses(self, alpha: f64) -> Vec<Pulse> {
        let flip = Pulse::SpinRotation {
            theta: FRAC_PI_2,
            phi: FRAC_PI_2,
        };
        let shift = |a: f64| Pulse::Displacement(C64::new(a, 0.0));
        match self {
            MixtureComponent::DownMinus => alloc::vec![flip, shift(-alpha)],
            MixtureComponent::UpMinus => alloc::vec![shift(-alpha)],
            MixtureComponent::DownPlus => alloc::vec![flip, shift(alpha)],
            MixtureComponent::UpPlus => alloc::vec![shift(alpha)],
            MixtureComponent::PseudoSinglet => pseudo_singlet_pulses(alpha).to_vec(),
        }
    }

    pub fn prepare(self, alpha: f64, cutoff: usize) -> Result<JointPureState> {
        apply_sequence(&JointPureState::ground(cutoff), &self.pulses(alpha))
    }

    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let u: f64 = rng.random();
        let k = (u * 8.0) as usize;
        match k {
            0 => MixtureComponent::DownMinus,
            1 => MixtureComponent::UpMinus,
            2 => MixtureComponent::DownPlus,
            3 => MixtureComponent::UpPlus,
            _ => MixtureComponent::PseudoSinglet,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureRun {
    pub component: MixtureComponent,
    pub pulses: Vec<Pulse>,
    pub state: JointPureState,
}

/// One run of the preparation: draws a component with its mixture weight and prepares it.
pub fn synthesize_mixture_run<R: Rng + ?Sized>(alpha: f64, cutoff: usize, rng: &mut R) -> Result<MixtureRun> {
    let component = MixtureComponent::sample(rng);
    let pulses = component.pulses(alpha);
    let state = apply_sequence(&JointPureState::ground(cutoff), &pulses)?;
    Ok(MixtureRun {
        component,
        pulses,
        state,
    })
}

/// Cumulative outcome distribution of a pure state, entries `spin * D + n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutTable {
    cutoff: usize,
    cumulative: Vec<f64>,
}

impl ReadoutTable {
    pub fn from_state(state: &JointPureState) -> Self {
        let mut acc = 0.0;
        let cumulative = state
            .to_vector()
            .iter()
            .map(|a| {
                acc += a.norm_sqr();
                acc
            })
            .collect();
        Self {
            cutoff: state.cutoff(),
            cumulative,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (Spin, usize) {
        let total = *self.cumulative.last().unwrap_or(&1.0);
        let u = rng.random::<f64>() * total;
        let i = self.cumulative.partition_point(|&c| c <= u).min(self.cumulative.len() - 1);
        (Spin::from_index(i / self.cutoff), i % self.cutoff)
    }
}

/// Ideal projective `(s, n)` measurement.
pub fn bottle_readout<R: Rng + ?Sized>(state: &JointPureState, rng: &mut R) -> (Spin, usize) {
    ReadoutTable::from_state(state).sample(rng)
}

/// Keeps each of `n` excitations with probability `eta`.
pub fn detect<R: RngCore + ?Sized>(n: usize, eta: f64, rng: &mut R) -> usize {
    if eta >= 1.0 || n == 0 {
        return n;
    }
    Binomial::new(n as u64, eta).expect("eta in (0, 1)").sample(rng) as usize
}

/// Records produced run by run: prepare a component, apply `D†(β_j)` and `U†(θ, φ)`,
/// read out and lose excitations at efficiency `η`.
pub fn simulate_trap_acquisition(
    alpha: f64,
    cutoff: usize,
    settings: &TomographySettings,
    events: u64,
    seed: u64,
) -> Result<Vec<MeasurementRecord>> {
    settings.validate()?;
    let work = cutoff.max(settings.n_max + 1) + SMEAR_MARGIN;
    let prepared = MixtureComponent::ALL
        .iter()
        .map(|c| c.prepare(alpha, cutoff).map(|s| s.embed(work)))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(SETTING_GROUPS.len() * settings.n_phases);
    for (g, setting) in SETTING_GROUPS.iter().enumerate() {
        for j in 0..settings.n_phases {
            let pre = [
                Pulse::Displacement(-settings.beta(j)),
                Pulse::SpinRotation {
                    theta: -setting.theta,
                    phi: setting.phi,
                },
            ];
            let tables = prepared
                .iter()
                .map(|s| apply_sequence(s, &pre).map(|s| ReadoutTable::from_state(&s)))
                .collect::<Result<Vec<_>>>()?;
            let mut rng = cell_rng(seed, g, j);
            let mut rec = MeasurementRecord::new(*setting, settings.beta_abs, j, settings.n_phases, seed);
            for _ in 0..events {
                let c = MixtureComponent::sample(&mut rng);
                let (s, n) = tables[c.index()].sample(&mut rng);
                let n = detect(n, settings.eta, &mut rng);
                rec.record(s, n, settings.n_max);
            }
            if rec.counts_up.is_empty() {
                rec.counts_up = alloc::vec![0; settings.n_max + 1];
                rec.counts_down = alloc::vec![0; settings.n_max + 1];
            }
            out.push(rec);
        }
    }
    Ok(out)
}
