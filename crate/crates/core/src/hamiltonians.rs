//! Rotating-field Hamiltonians for a single spin and for a J-coupled spin
//! pair, plus the rotating-frame transformation.
//!
//! Units: hbar = 1, all frequencies angular. Single-qubit quantities are
//! usually expressed in units of the vertical field, two-qubit quantities in
//! units of the coupling J.

use std::f64::consts::TAU;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::pauli::{sigma_x_rotated, sigma_z, spectator_op, target_op};
use crate::linalg::{exp_unchecked, Dim, HermitianOperator, UnitaryMatrix};

/// Time-dependent Hamiltonian source for the propagators and the integrator.
pub trait Schedule: Send + Sync {
    fn dim(&self) -> Dim;
    fn hamiltonian(&self, t: f64) -> HermitianOperator;
}

impl Schedule for HermitianOperator {
    fn dim(&self) -> Dim {
        HermitianOperator::dim(self)
    }
    fn hamiltonian(&self, _t: f64) -> HermitianOperator {
        *self
    }
}

impl<S: Schedule + ?Sized> Schedule for Arc<S> {
    fn dim(&self) -> Dim {
        (**self).dim()
    }
    fn hamiltonian(&self, t: f64) -> HermitianOperator {
        (**self).hamiltonian(t)
    }
}

impl<S: Schedule + ?Sized> Schedule for Box<S> {
    fn dim(&self) -> Dim {
        (**self).dim()
    }
    fn hamiltonian(&self, t: f64) -> HermitianOperator {
        (**self).hamiltonian(t)
    }
}

/// Adapts a closure into a [`Schedule`].
pub struct FnSchedule<F> {
    dim: Dim,
    f: F,
}

impl<F> FnSchedule<F>
where
    F: Fn(f64) -> HermitianOperator + Send + Sync,
{
    pub fn new(dim: Dim, f: F) -> Self {
        FnSchedule { dim, f }
    }
}

impl<F> Schedule for FnSchedule<F>
where
    F: Fn(f64) -> HermitianOperator + Send + Sync,
{
    fn dim(&self) -> Dim {
        self.dim
    }
    fn hamiltonian(&self, t: f64) -> HermitianOperator {
        (self.f)(t)
    }
}

fn default_zero() -> f64 {
    0.0
}

/// One segment of a rotating transverse field.
///
/// `omega0` is the static vertical field, `omega1` the amplitude of the
/// horizontal field whose azimuth is `gamma * t + phase0`, and `omega_z` an
/// extra static vertical field (equal to `gamma` when compensating).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldParams {
    pub omega0: f64,
    pub omega1: f64,
    pub gamma: f64,
    #[serde(default = "default_zero")]
    pub omega_z: f64,
    #[serde(default = "default_zero")]
    pub phase0: f64,
}

impl FieldParams {
    pub fn new(omega0: f64, omega1: f64, gamma: f64) -> Result<Self> {
        let p = FieldParams {
            omega0,
            omega1,
            gamma,
            omega_z: 0.0,
            phase0: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("omega0", self.omega0),
            ("omega1", self.omega1),
            ("gamma", self.gamma),
            ("omega_z", self.omega_z),
            ("phase0", self.phase0),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        if self.omega1 < 0.0 {
            return Err(Error::invalid("omega1", "must be non-negative"));
        }
        Ok(())
    }

    /// Same field with the compensating vertical field `omega_z = gamma`.
    pub fn compensated(self) -> Self {
        FieldParams {
            omega_z: self.gamma,
            ..self
        }
    }

    pub fn uncompensated(self) -> Self {
        FieldParams {
            omega_z: 0.0,
            ..self
        }
    }

    pub fn with_phase0(self, phase0: f64) -> Self {
        FieldParams { phase0, ..self }
    }

    pub fn is_compensated(&self) -> bool {
        self.omega_z == self.gamma
    }

    /// Azimuth of the horizontal field at time `t`.
    #[inline]
    pub fn azimuth(&self, t: f64) -> f64 {
        self.gamma * t + self.phase0
    }

    /// Magnitude of the field at `t = 0` without the extra vertical field.
    pub fn magnitude(&self) -> f64 {
        self.omega0.hypot(self.omega1)
    }

    /// Duration of one full turn of the horizontal field.
    pub fn loop_duration(&self) -> Result<f64> {
        if self.gamma == 0.0 {
            return Err(Error::NoLoop);
        }
        Ok(TAU / self.gamma.abs())
    }
}

/// `[omega0 sz + omega1 sx(t)] / 2`; ignores `omega_z`.
pub fn h_rotating(p: &FieldParams, t: f64) -> HermitianOperator {
    let m = (sigma_z() * p.omega0 + sigma_x_rotated(p.azimuth(t)) * p.omega1) * 0.5;
    HermitianOperator::symmetrized(m)
}

/// `h_rotating + gamma sz / 2`. Requires the compensation field to be on.
pub fn h_compensated(p: &FieldParams, t: f64) -> Result<HermitianOperator> {
    if !p.is_compensated() {
        return Err(Error::Misconfigured(format!(
            "compensated Hamiltonian needs omega_z = gamma (omega_z = {}, gamma = {})",
            p.omega_z, p.gamma
        )));
    }
    Ok(field_hamiltonian(p, t))
}

/// General single-spin Hamiltonian
/// `[(omega0 + omega_z) sz + omega1 sx(t)] / 2`.
pub fn field_hamiltonian(p: &FieldParams, t: f64) -> HermitianOperator {
    let m = (sigma_z() * (p.omega0 + p.omega_z) + sigma_x_rotated(p.azimuth(t)) * p.omega1) * 0.5;
    HermitianOperator::symmetrized(m)
}

/// [`field_hamiltonian`] as a schedule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotatingField(pub FieldParams);

impl Schedule for RotatingField {
    fn dim(&self) -> Dim {
        Dim::Two
    }
    fn hamiltonian(&self, t: f64) -> HermitianOperator {
        field_hamiltonian(&self.0, t)
    }
}

/// Conjugates another schedule by a fixed unitary: `V H(t) V^dag`.
///
/// Used for loops about a tilted axis: the inner schedule is written in the
/// tilted frame and `V` maps it back to the laboratory axes.
pub struct Conjugated<S> {
    pub inner: S,
    pub frame: UnitaryMatrix,
}

impl<S: Schedule> Schedule for Conjugated<S> {
    fn dim(&self) -> Dim {
        self.inner.dim()
    }
    fn hamiltonian(&self, t: f64) -> HermitianOperator {
        let v = self.frame.matrix();
        HermitianOperator::symmetrized(*v * *self.inner.hamiltonian(t).matrix() * v.adjoint())
    }
}

/// A single-spin schedule acting on spin `a` of the pair: `I_b (x) h(t)`.
pub struct OnTarget<S>(pub S);

impl<S: Schedule> Schedule for OnTarget<S> {
    fn dim(&self) -> Dim {
        Dim::Four
    }
    fn hamiltonian(&self, t: f64) -> HermitianOperator {
        HermitianOperator::symmetrized(target_op(self.0.hamiltonian(t).matrix()))
    }
}

/// State of the spectator spin `b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpinState {
    Up,
    Down,
}

impl SpinState {
    pub const BOTH: [SpinState; 2] = [SpinState::Up, SpinState::Down];

    /// +1 for up, -1 for down.
    pub fn sign(self) -> f64 {
        match self {
            SpinState::Up => 1.0,
            SpinState::Down => -1.0,
        }
    }

    /// Index in the `|b a>` basis block (0 for up, 1 for down).
    pub fn index(self) -> usize {
        match self {
            SpinState::Up => 0,
            SpinState::Down => 1,
        }
    }
}

/// Parameters of a J-coupled spin pair driven near the resonance of spin `a`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoQubitParams {
    pub omega_a: f64,
    pub omega_b: f64,
    pub j: f64,
    pub omega_a_prime: f64,
    pub omega1: f64,
}

impl TwoQubitParams {
    pub fn new(omega_a: f64, omega_b: f64, j: f64, omega_a_prime: f64, omega1: f64) -> Result<Self> {
        let p = TwoQubitParams {
            omega_a,
            omega_b,
            j,
            omega_a_prime,
            omega1,
        };
        for (name, v) in [
            ("omega_a", omega_a),
            ("omega_b", omega_b),
            ("j", j),
            ("omega_a_prime", omega_a_prime),
            ("omega1", omega1),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        if omega1 < 0.0 {
            return Err(Error::invalid("omega1", "must be non-negative"));
        }
        if j < 0.0 {
            return Err(Error::invalid("j", "must be non-negative"));
        }
        Ok(p)
    }

    /// Frame-frame detuning from the bare resonance: `omega_a - omega_a'`.
    pub fn delta(&self) -> f64 {
        self.omega_a - self.omega_a_prime
    }

    /// Checks the `delta > J > 0` requirement of the conditional loop.
    pub fn require_conditional(&self) -> Result<()> {
        if self.j > 0.0 && self.delta() > self.j {
            Ok(())
        } else {
            Err(Error::ConditionViolated {
                delta: self.delta(),
                j: self.j,
            })
        }
    }
}

/// `(omega_a sz_a + omega_b sz_b + J sz_a sz_b) / 2` in `|b a>` ordering.
pub fn h_two_qubit_static(p: &TwoQubitParams) -> HermitianOperator {
    let sz = sigma_z();
    let zz = spectator_op(&sz) * target_op(&sz);
    let m = (target_op(&sz) * p.omega_a + spectator_op(&sz) * p.omega_b + zz * p.j) * 0.5;
    HermitianOperator::symmetrized(m)
}

/// Vertical field seen by spin `a` in the rotating frame: `delta +/- J`.
pub fn effective_offset(p: &TwoQubitParams, b: SpinState) -> f64 {
    p.delta() + b.sign() * p.j
}

/// Two-spin Hamiltonian in the frame co-rotating with spin `a` at the RF
/// carrier and with spin `b` at its own resonance:
/// `[(omega0 + omega_z) sz_a + J sz_b sz_a + omega1 sx_a(t)] / 2`, where
/// `field.omega0` plays the role of the offset `delta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoQubitFrameField {
    pub j: f64,
    pub field: FieldParams,
}

impl Schedule for TwoQubitFrameField {
    fn dim(&self) -> Dim {
        Dim::Four
    }
    fn hamiltonian(&self, t: f64) -> HermitianOperator {
        let sz = sigma_z();
        let local = field_hamiltonian(&self.field, t);
        let zz = spectator_op(&sz) * target_op(&sz);
        HermitianOperator::symmetrized(target_op(local.matrix()) + zz * (0.5 * self.j))
    }
}

/// Free-evolution Hamiltonian of the pair in the rotating frame:
/// `(delta sz_a + J sz_b sz_a) / 2`.
pub fn h_two_qubit_frame(delta: f64, j: f64) -> HermitianOperator {
    let sz = sigma_z();
    let zz = spectator_op(&sz) * target_op(&sz);
    HermitianOperator::symmetrized((target_op(&sz) * delta + zz * j) * 0.5)
}

/// Laboratory-frame Hamiltonian of spin `a` under a circularly polarized RF
/// field:
/// `offset sz/2 + carrier sz/2 + omega1 sx(carrier t + gamma t + phase0)/2`.
///
/// `gamma` is an additional slow rotation of the RF phase; with `gamma = 0`
/// this is the static-frame Hamiltonian whose rotating-frame image is the
/// time-independent `(offset sz + omega1 sx)/2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LabFrameRf {
    pub offset: f64,
    pub carrier: f64,
    pub omega1: f64,
    pub gamma: f64,
    pub phase0: f64,
}

impl Schedule for LabFrameRf {
    fn dim(&self) -> Dim {
        Dim::Two
    }
    fn hamiltonian(&self, t: f64) -> HermitianOperator {
        let angle = (self.carrier + self.gamma) * t + self.phase0;
        let m = (sigma_z() * (self.offset + self.carrier) + sigma_x_rotated(angle) * self.omega1) * 0.5;
        HermitianOperator::symmetrized(m)
    }
}

/// `R' H R'^-1 + i (dR'/dt) R'^-1` with `R' = exp(i w sz_a t / 2)` acting on
/// spin `a` (for dimension 4 the spectator is untouched).
pub fn to_rotating_frame(h_lab: &dyn Schedule, frame_speed: f64, t: f64) -> HermitianOperator {
    let dim = h_lab.dim();
    let sz_a = match dim {
        Dim::Two => sigma_z(),
        Dim::Four => target_op(&sigma_z()),
    };
    // R' = exp(-i H t) with H = -w sz_a / 2
    let gen = HermitianOperator::symmetrized(sz_a * (-0.5 * frame_speed));
    let r = *exp_unchecked(&gen, t).matrix();
    let conj = r * *h_lab.hamiltonian(t).matrix() * r.adjoint();
    HermitianOperator::symmetrized(conj - sz_a * (0.5 * frame_speed))
}

/// Time profile of the field's rotation speed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpeedProfile {
    Constant { gamma: f64, duration: f64 },
    /// Piecewise-linear rate through `(times[k], rates[k])`; `times` starts
    /// at 0 and is strictly increasing.
    Tabulated { times: Vec<f64>, rates: Vec<f64> },
}

impl SpeedProfile {
    /// Constant speed for exactly one turn.
    pub fn constant_loop(gamma: f64) -> Result<Self> {
        if gamma == 0.0 || !gamma.is_finite() {
            return Err(Error::NoLoop);
        }
        Ok(SpeedProfile::Constant {
            gamma,
            duration: TAU / gamma.abs(),
        })
    }

    /// Samples `rate(t)` on `samples` uniform intervals of `[0, duration]`.
    pub fn tabulate(duration: f64, samples: usize, rate: impl Fn(f64) -> f64) -> Result<Self> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::invalid("duration", "must be positive"));
        }
        if samples == 0 {
            return Err(Error::invalid("samples", "must be positive"));
        }
        let times: Vec<f64> = (0..=samples)
            .map(|k| duration * k as f64 / samples as f64)
            .collect();
        let rates = times.iter().map(|&t| rate(t)).collect();
        let p = SpeedProfile::Tabulated { times, rates };
        p.validate_shape()?;
        Ok(p)
    }

    fn validate_shape(&self) -> Result<()> {
        match self {
            SpeedProfile::Constant { gamma, duration } => {
                if !gamma.is_finite() || !(duration.is_finite() && *duration > 0.0) {
                    return Err(Error::invalid("profile", "needs finite rate and positive duration"));
                }
            }
            SpeedProfile::Tabulated { times, rates } => {
                if times.len() < 2 || times.len() != rates.len() {
                    return Err(Error::invalid("profile", "needs >= 2 samples with matching rates"));
                }
                if times[0] != 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::invalid("profile", "times must start at 0 and increase"));
                }
                if rates.iter().chain(times.iter()).any(|v| !v.is_finite()) {
                    return Err(Error::invalid("profile", "non-finite sample"));
                }
            }
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        match self {
            SpeedProfile::Constant { duration, .. } => *duration,
            SpeedProfile::Tabulated { times, .. } => *times.last().expect("validated"),
        }
    }

    /// Instantaneous rotation speed.
    pub fn rate(&self, t: f64) -> f64 {
        match self {
            SpeedProfile::Constant { gamma, .. } => *gamma,
            SpeedProfile::Tabulated { times, rates } => {
                let k = segment(times, t);
                let (t0, t1) = (times[k], times[k + 1]);
                let w = (t - t0) / (t1 - t0);
                rates[k] + w * (rates[k + 1] - rates[k])
            }
        }
    }

    /// Rotation angle accumulated over `[0, t]`; exact for the
    /// piecewise-linear table.
    pub fn angle(&self, t: f64) -> f64 {
        match self {
            SpeedProfile::Constant { gamma, .. } => gamma * t,
            SpeedProfile::Tabulated { times, rates } => {
                let k = segment(times, t);
                let mut acc = 0.0;
                for i in 0..k {
                    acc += 0.5 * (rates[i] + rates[i + 1]) * (times[i + 1] - times[i]);
                }
                let dt = t - times[k];
                let r = self.rate(t);
                acc + 0.5 * (rates[k] + r) * dt
            }
        }
    }

    pub fn total_angle(&self) -> f64 {
        self.angle(self.duration())
    }

    /// Rescales the rates so the profile makes exactly one turn.
    pub fn normalized(&self) -> Result<Self> {
        self.validate_shape()?;
        let total = self.total_angle();
        if total == 0.0 {
            return Err(Error::ProfileNotClosed { angle: total });
        }
        let s = TAU / total.abs();
        Ok(match self {
            SpeedProfile::Constant { gamma, duration } => SpeedProfile::Constant {
                gamma: gamma * s,
                duration: *duration,
            },
            SpeedProfile::Tabulated { times, rates } => SpeedProfile::Tabulated {
                times: times.clone(),
                rates: rates.iter().map(|r| r * s).collect(),
            },
        })
    }

    /// Checks that the profile describes one closed turn (|angle| = 2 pi
    /// within 1e-9).
    pub fn validate_loop(&self) -> Result<()> {
        self.validate_shape()?;
        let angle = self.total_angle();
        if (angle.abs() - TAU).abs() > 1e-9 {
            return Err(Error::ProfileNotClosed { angle });
        }
        Ok(())
    }
}

fn segment(times: &[f64], t: f64) -> usize {
    let n = times.len();
    match times.binary_search_by(|x| x.partial_cmp(&t).expect("finite times")) {
        Ok(i) => i.min(n - 2),
        Err(0) => 0,
        Err(i) => (i - 1).min(n - 2),
    }
}
