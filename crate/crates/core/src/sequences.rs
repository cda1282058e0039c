//! Pulse programs: ideal hard pulses, free precession and field loops, the
//! S operation that parks spin `a` on the conditional cone, and the
//! conditional loop `S -> C -> S^-1`.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonians::{
    h_rotating, h_two_qubit_frame, Conjugated, FieldParams, OnTarget, RotatingField, Schedule,
    SpinState, TwoQubitFrameField,
};
use crate::linalg::pauli::{on_target, rx, ry, rz};
use crate::linalg::{
    eigensystem_2x2, exp_unchecked, Dim, HermitianOperator, Matrix, StateVector, UnitaryMatrix,
    C64,
};
use crate::phases::{cumulative_simpson, two_qubit_loop_params, Branch};
use crate::propagation::{integrate_steps, propagate, propagator, steps_for, STEP_BUDGET};

fn default_true() -> bool {
    true
}

/// One turn (or several) of a rotating transverse field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopSpec {
    pub omega0: f64,
    pub omega1: f64,
    pub gamma: f64,
    #[serde(default)]
    pub phase0: f64,
    pub revolutions: f64,
    pub compensated: bool,
    /// The loop runs about `R_y(-axis_tilt) z` instead of `z`.
    #[serde(default)]
    pub axis_tilt: f64,
    /// In the two-qubit frame, whether the J coupling and the offset act
    /// during the loop. Local loops see only their own field.
    #[serde(default = "default_true")]
    pub coupled: bool,
}

impl LoopSpec {
    /// One compensated revolution about `z`.
    pub fn compensated(omega0: f64, omega1: f64, gamma: f64) -> Result<Self> {
        let s = LoopSpec {
            omega0,
            omega1,
            gamma,
            phase0: 0.0,
            revolutions: 1.0,
            compensated: true,
            axis_tilt: 0.0,
            coupled: true,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_revolutions(self, revolutions: f64) -> Self {
        LoopSpec { revolutions, ..self }
    }

    pub fn with_tilt(self, axis_tilt: f64) -> Self {
        LoopSpec { axis_tilt, ..self }
    }

    pub fn local(self) -> Self {
        LoopSpec {
            coupled: false,
            ..self
        }
    }

    pub fn uncompensated(self) -> Self {
        LoopSpec {
            compensated: false,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.field_params().validate()?;
        if self.gamma == 0.0 {
            return Err(Error::NoLoop);
        }
        if !(self.revolutions.is_finite() && self.revolutions > 0.0) {
            return Err(Error::invalid("revolutions", "must be positive"));
        }
        if !self.axis_tilt.is_finite() {
            return Err(Error::invalid("axis_tilt", "must be finite"));
        }
        Ok(())
    }

    pub fn field_params(&self) -> FieldParams {
        FieldParams {
            omega0: self.omega0,
            omega1: self.omega1,
            gamma: self.gamma,
            omega_z: if self.compensated { self.gamma } else { 0.0 },
            phase0: self.phase0,
        }
    }

    /// One revolution.
    pub fn period(&self) -> f64 {
        TAU / self.gamma.abs()
    }

    pub fn duration(&self) -> f64 {
        self.revolutions * self.period()
    }

    fn tilt_frame(&self) -> Option<UnitaryMatrix> {
        (self.axis_tilt != 0.0).then(|| ry(-self.axis_tilt))
    }
}

/// A step of a pulse program.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum PulsePrimitive {
    RotX {
        angle: f64,
    },
    RotY {
        angle: f64,
    },
    RotZ {
        angle: f64,
    },
    /// Precession under the frame Hamiltonian; `reversed` precesses under its
    /// negative.
    Free {
        duration: f64,
        #[serde(default)]
        reversed: bool,
    },
    /// A field loop; `reversed` applies the exact inverse evolution.
    Loop {
        #[serde(rename = "loop")]
        spec: LoopSpec,
        #[serde(default)]
        reversed: bool,
    },
}

impl PulsePrimitive {
    pub fn free(duration: f64) -> Self {
        PulsePrimitive::Free {
            duration,
            reversed: false,
        }
    }

    pub fn field_loop(spec: LoopSpec) -> Self {
        PulsePrimitive::Loop {
            spec,
            reversed: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PulsePrimitive::RotX { angle }
            | PulsePrimitive::RotY { angle }
            | PulsePrimitive::RotZ { angle } => {
                if !angle.is_finite() {
                    return Err(Error::invalid("angle", "must be finite"));
                }
            }
            PulsePrimitive::Free { duration, .. } => {
                if !(duration.is_finite() && *duration >= 0.0) {
                    return Err(Error::invalid("duration", "must be finite and non-negative"));
                }
            }
            PulsePrimitive::Loop { spec, .. } => spec.validate()?,
        }
        Ok(())
    }

    /// Wall-clock duration; hard pulses take none.
    pub fn duration(&self) -> f64 {
        match self {
            PulsePrimitive::Free { duration, .. } => *duration,
            PulsePrimitive::Loop { spec, .. } => spec.duration(),
            _ => 0.0,
        }
    }

    pub fn inverse(&self) -> Self {
        match *self {
            PulsePrimitive::RotX { angle } => PulsePrimitive::RotX { angle: -angle },
            PulsePrimitive::RotY { angle } => PulsePrimitive::RotY { angle: -angle },
            PulsePrimitive::RotZ { angle } => PulsePrimitive::RotZ { angle: -angle },
            PulsePrimitive::Free { duration, reversed } => PulsePrimitive::Free {
                duration,
                reversed: !reversed,
            },
            PulsePrimitive::Loop { spec, reversed } => PulsePrimitive::Loop {
                spec,
                reversed: !reversed,
            },
        }
    }
}

/// Frame in which free precession and loops are evaluated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Frame {
    /// One spin with static field `omega0 sz / 2`.
    SingleQubit { omega0: f64 },
    /// Spin `a` in its RF frame with offset `delta`, coupled to spin `b` by
    /// `J sz_b sz_a / 2`.
    TwoQubit { delta: f64, j: f64 },
}

impl Frame {
    pub fn dim(&self) -> Dim {
        match self {
            Frame::SingleQubit { .. } => Dim::Two,
            Frame::TwoQubit { .. } => Dim::Four,
        }
    }

    pub fn free_hamiltonian(&self) -> HermitianOperator {
        match *self {
            Frame::SingleQubit { omega0 } => {
                HermitianOperator::symmetrized(crate::linalg::pauli::sigma_z() * (0.5 * omega0))
            }
            Frame::TwoQubit { delta, j } => h_two_qubit_frame(delta, j),
        }
    }

    /// Largest angular frequency of free precession.
    fn free_bandwidth(&self) -> f64 {
        match *self {
            Frame::SingleQubit { omega0 } => omega0.abs(),
            Frame::TwoQubit { delta, j } => delta.abs() + j.abs(),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Frame::SingleQubit { omega0 } => omega0.is_finite(),
            Frame::TwoQubit { delta, j } => delta.is_finite() && j.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::NonFinite("frame parameters"))
        }
    }
}

/// Ordered pulse program in a given frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSequence", into = "RawSequence")]
pub struct PulseSequence {
    frame: Frame,
    steps: Vec<PulsePrimitive>,
}

#[derive(Clone, Serialize, Deserialize)]
struct RawSequence {
    frame: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    omega0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    j: Option<f64>,
    #[serde(default)]
    steps: Vec<PulsePrimitive>,
}

impl TryFrom<RawSequence> for PulseSequence {
    type Error = Error;

    fn try_from(raw: RawSequence) -> Result<Self> {
        let frame = match raw.frame.as_str() {
            "single" => Frame::SingleQubit {
                omega0: raw.omega0.unwrap_or(0.0),
            },
            "two_qubit" => Frame::TwoQubit {
                delta: raw
                    .delta
                    .ok_or_else(|| Error::Config("two_qubit frame needs `delta`".into()))?,
                j: raw
                    .j
                    .ok_or_else(|| Error::Config("two_qubit frame needs `j`".into()))?,
            },
            other => {
                return Err(Error::Config(format!(
                    "unknown frame `{other}` (expected `single` or `two_qubit`)"
                )))
            }
        };
        PulseSequence::new(frame, raw.steps)
    }
}

impl From<PulseSequence> for RawSequence {
    fn from(s: PulseSequence) -> Self {
        match s.frame {
            Frame::SingleQubit { omega0 } => RawSequence {
                frame: "single".into(),
                omega0: Some(omega0),
                delta: None,
                j: None,
                steps: s.steps,
            },
            Frame::TwoQubit { delta, j } => RawSequence {
                frame: "two_qubit".into(),
                omega0: None,
                delta: Some(delta),
                j: Some(j),
                steps: s.steps,
            },
        }
    }
}

impl PulseSequence {
    pub fn new(frame: Frame, steps: Vec<PulsePrimitive>) -> Result<Self> {
        frame.validate()?;
        let seq = PulseSequence { frame, steps };
        for s in &seq.steps {
            s.validate()?;
            if let (Frame::TwoQubit { .. }, PulsePrimitive::Loop { spec, .. }) = (&seq.frame, s) {
                if spec.coupled && spec.axis_tilt != 0.0 {
                    return Err(Error::Misconfigured(
                        "tilted loops must be local (coupled = false) in the two-qubit frame"
                            .into(),
                    ));
                }
            }
        }
        Ok(seq)
    }

    pub fn empty(frame: Frame) -> Self {
        PulseSequence {
            frame,
            steps: Vec::new(),
        }
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn dim(&self) -> Dim {
        self.frame.dim()
    }

    pub fn steps(&self) -> &[PulsePrimitive] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.steps.iter().map(PulsePrimitive::duration).sum()
    }

    pub fn has_loop(&self) -> bool {
        self.steps
            .iter()
            .any(|s| matches!(s, PulsePrimitive::Loop { .. }))
    }

    /// Appends steps of another program in the same frame.
    pub fn then(mut self, other: &PulseSequence) -> Result<Self> {
        if other.frame != self.frame {
            return Err(Error::FrameMismatch {
                dim: other.dim().size(),
            });
        }
        self.steps.extend_from_slice(&other.steps);
        Ok(self)
    }

    pub fn push(&mut self, step: PulsePrimitive) -> Result<()> {
        let mut steps = std::mem::take(&mut self.steps);
        steps.push(step);
        *self = PulseSequence::new(self.frame, steps)?;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sequences always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Reversed order, each step replaced by its inverse.
pub fn invert_sequence(seq: &PulseSequence) -> PulseSequence {
    PulseSequence {
        frame: seq.frame,
        steps: seq.steps.iter().rev().map(PulsePrimitive::inverse).collect(),
    }
}

fn rotation(dim: Dim, u: UnitaryMatrix) -> UnitaryMatrix {
    match dim {
        Dim::Two => u,
        Dim::Four => on_target(&u),
    }
}

fn block_diag(up: &UnitaryMatrix, down: &UnitaryMatrix) -> UnitaryMatrix {
    let (a, b) = (up.matrix(), down.matrix());
    let m = Matrix::from_fn(Dim::Four, |r, c| match (r < 2, c < 2) {
        (true, true) => a[(r, c)],
        (false, false) => b[(r - 2, c - 2)],
        _ => C64::new(0.0, 0.0),
    });
    UnitaryMatrix::new(m).expect("blocks are unitary")
}

fn conjugate(v: &UnitaryMatrix, u: &UnitaryMatrix) -> UnitaryMatrix {
    *v * *u * v.adjoint()
}

/// Closed-form unitary of a loop in a frame.
fn loop_unitary(frame: &Frame, spec: &LoopSpec) -> Result<UnitaryMatrix> {
    let t = spec.duration();
    let local = |p: &FieldParams| -> Result<UnitaryMatrix> {
        let u = propagator(p, t)?;
        Ok(match spec.tilt_frame() {
            Some(v) => conjugate(&v, &u),
            None => u,
        })
    };
    let fp = spec.field_params();
    match *frame {
        Frame::SingleQubit { .. } => local(&fp),
        Frame::TwoQubit { .. } if !spec.coupled => Ok(on_target(&local(&fp)?)),
        Frame::TwoQubit { j, .. } => {
            let shifted = |s: f64| FieldParams {
                omega0: fp.omega0 + s * j,
                ..fp
            };
            Ok(block_diag(&local(&shifted(1.0))?, &local(&shifted(-1.0))?))
        }
    }
}

/// `-H(T - t)`: runs a schedule backwards, giving the inverse propagator.
struct TimeReversed {
    inner: Box<dyn Schedule>,
    duration: f64,
}

impl Schedule for TimeReversed {
    fn dim(&self) -> Dim {
        self.inner.dim()
    }
    fn hamiltonian(&self, t: f64) -> HermitianOperator {
        self.inner.hamiltonian(self.duration - t).scale(-1.0)
    }
}

/// Time-dependent Hamiltonian of a loop in a frame, including reversal.
pub fn loop_schedule(frame: &Frame, spec: &LoopSpec, reversed: bool) -> Result<Box<dyn Schedule>> {
    spec.validate()?;
    let field = RotatingField(spec.field_params());
    let single: Box<dyn Schedule> = match spec.tilt_frame() {
        Some(v) => Box::new(Conjugated {
            inner: field,
            frame: v,
        }),
        None => Box::new(field),
    };
    let forward: Box<dyn Schedule> = match *frame {
        Frame::SingleQubit { .. } => single,
        Frame::TwoQubit { .. } if !spec.coupled => Box::new(OnTarget(single)),
        Frame::TwoQubit { j, .. } => Box::new(TwoQubitFrameField {
            j,
            field: spec.field_params(),
        }),
    };
    Ok(if reversed {
        Box::new(TimeReversed {
            inner: forward,
            duration: spec.duration(),
        })
    } else {
        forward
    })
}

fn check_frame(seq: &PulseSequence, dim: Dim) -> Result<()> {
    if seq.dim() != dim {
        return Err(Error::FrameMismatch { dim: dim.size() });
    }
    Ok(())
}

fn primitive_unitary(frame: &Frame, step: &PulsePrimitive) -> Result<UnitaryMatrix> {
    let dim = frame.dim();
    Ok(match *step {
        PulsePrimitive::RotX { angle } => rotation(dim, rx(angle)),
        PulsePrimitive::RotY { angle } => rotation(dim, ry(angle)),
        PulsePrimitive::RotZ { angle } => rotation(dim, rz(angle)),
        PulsePrimitive::Free { duration, reversed } => {
            let t = if reversed { -duration } else { duration };
            exp_unchecked(&frame.free_hamiltonian(), t)
        }
        PulsePrimitive::Loop { spec, reversed } => {
            let u = loop_unitary(frame, &spec)?;
            if reversed {
                u.adjoint()
            } else {
                u
            }
        }
    })
}

/// Time-ordered product `U_n ... U_1` of the closed-form step unitaries.
pub fn apply_sequence(seq: &PulseSequence, dim: Dim) -> Result<UnitaryMatrix> {
    check_frame(seq, dim)?;
    let mut u = UnitaryMatrix::identity(dim);
    for step in &seq.steps {
        u = primitive_unitary(&seq.frame, step)? * u;
    }
    Ok(u)
}

fn loop_steps(spec: &LoopSpec, steps_per_loop: usize) -> usize {
    steps_for(spec.duration(), spec.period(), steps_per_loop)
}

/// Same product with every loop integrated numerically at
/// `steps_per_loop` midpoint steps per revolution. Loops are integrated in
/// parallel.
pub fn simulate_sequence(seq: &PulseSequence, dim: Dim, steps_per_loop: usize) -> Result<UnitaryMatrix> {
    check_frame(seq, dim)?;
    if steps_per_loop == 0 {
        return Err(Error::invalid("steps_per_loop", "must be positive"));
    }
    let total: f64 = seq
        .steps
        .iter()
        .map(|s| match s {
            PulsePrimitive::Loop { spec, .. } => loop_steps(spec, steps_per_loop) as f64,
            _ => 0.0,
        })
        .sum();
    if total > STEP_BUDGET as f64 {
        return Err(Error::StepBudgetExceeded {
            requested: total as usize,
            budget: STEP_BUDGET,
        });
    }
    let frame = seq.frame;
    let parts: Vec<UnitaryMatrix> = seq
        .steps
        .par_iter()
        .map(|step| match *step {
            PulsePrimitive::Loop { spec, reversed } => {
                let h = loop_schedule(&frame, &spec, reversed)?;
                propagate(h.as_ref(), 0.0, spec.duration(), loop_steps(&spec, steps_per_loop))
            }
            _ => primitive_unitary(&frame, step),
        })
        .collect::<Result<_>>()?;
    Ok(parts
        .into_iter()
        .fold(UnitaryMatrix::identity(dim), |acc, u| u * acc))
}

/// Sampled state history of a program: hard pulses add a row at the same
/// time, free precession and loops add one row per integrator step.
#[derive(Clone, Debug)]
pub struct SequenceTrace {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    /// Running `-int <psi|H|psi> dt`.
    pub dynamical_phase: Vec<f64>,
}

impl SequenceTrace {
    pub fn final_state(&self) -> &StateVector {
        self.states.last().expect("trace starts with the initial state")
    }

    /// `1 - |<psi(0)|psi(T)>|`
    pub fn overlap_defect(&self) -> f64 {
        1.0 - self.states[0].inner(self.final_state()).norm()
    }
}

/// Steps through a program from `psi0`, integrating every timed segment.
/// Free precession uses the resolution that `steps_per_loop` gives to a
/// loop at the frame's precession frequency.
pub fn trace_sequence(
    seq: &PulseSequence,
    psi0: &StateVector,
    steps_per_loop: usize,
) -> Result<SequenceTrace> {
    if psi0.dim() != seq.dim() {
        return Err(Error::FrameMismatch {
            dim: psi0.size(),
        });
    }
    if steps_per_loop == 0 {
        return Err(Error::invalid("steps_per_loop", "must be positive"));
    }
    let mut times = vec![0.0];
    let mut states = vec![*psi0];
    let mut dyn_phase = vec![0.0];
    let mut budget = STEP_BUDGET;
    for step in &seq.steps {
        let (t0, psi, d0) = (*times.last().unwrap(), *states.last().unwrap(), *dyn_phase.last().unwrap());
        let (schedule, duration, n): (Arc<dyn Schedule>, f64, usize) = match *step {
            PulsePrimitive::Free { duration, reversed } => {
                let h = seq.frame.free_hamiltonian();
                let h = if reversed { h.scale(-1.0) } else { h };
                let bw = seq.frame.free_bandwidth();
                let n = if bw == 0.0 {
                    1
                } else {
                    steps_for(duration, TAU / bw, steps_per_loop)
                };
                (Arc::new(h), duration, n)
            }
            PulsePrimitive::Loop { spec, reversed } => (
                Arc::from(loop_schedule(&seq.frame, &spec, reversed)?),
                spec.duration(),
                loop_steps(&spec, steps_per_loop),
            ),
            _ => {
                let u = primitive_unitary(&seq.frame, step)?;
                times.push(t0);
                states.push(psi.apply(&u));
                dyn_phase.push(d0);
                continue;
            }
        };
        if duration == 0.0 {
            continue;
        }
        budget = budget.checked_sub(n).ok_or(Error::StepBudgetExceeded {
            requested: n,
            budget: STEP_BUDGET,
        })?;
        let traj = integrate_steps(schedule, &psi, duration, n)?;
        let running = cumulative_simpson(traj.times(), &traj.energies())?;
        for k in 1..traj.len() {
            times.push(t0 + traj.times()[k]);
            states.push(traj.states()[k]);
            dyn_phase.push(d0 - running[k]);
        }
    }
    Ok(SequenceTrace {
        times,
        states,
        dynamical_phase: dyn_phase,
    })
}

/// Starting state of a schedule file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialState {
    /// Computational basis state `|b a>` (index 0 is all up).
    Basis { index: usize },
    /// Amplitudes as `[re, im]` pairs; normalized on use.
    Amplitudes { values: Vec<[f64; 2]> },
    /// Eigenstate of the first loop's field at `t = 0`; in the two-qubit
    /// frame spin `b` is put in `spectator` (default up).
    LoopEigenstate {
        branch: Branch,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        spectator: Option<SpinState>,
    },
}

impl InitialState {
    pub fn resolve(&self, seq: &PulseSequence) -> Result<StateVector> {
        let dim = seq.dim();
        match self {
            InitialState::Basis { index } => {
                if *index >= dim.size() {
                    return Err(Error::invalid("initial.index", "outside the basis"));
                }
                Ok(StateVector::basis(dim, *index))
            }
            InitialState::Amplitudes { values } => {
                if values.len() != dim.size() {
                    return Err(Error::DimensionMismatch {
                        expected: dim.size(),
                        found: values.len(),
                    });
                }
                let amps: Vec<C64> = values.iter().map(|[re, im]| C64::new(*re, *im)).collect();
                StateVector::new(&amps)
            }
            InitialState::LoopEigenstate { branch, spectator } => {
                let spec = seq
                    .steps
                    .iter()
                    .find_map(|s| match s {
                        PulsePrimitive::Loop { spec, .. } => Some(*spec),
                        _ => None,
                    })
                    .ok_or_else(|| Error::Config("loop_eigenstate needs a loop step".into()))?;
                let b = spectator.unwrap_or(SpinState::Up);
                let mut p = spec.field_params();
                if let (Frame::TwoQubit { j, .. }, true) = (seq.frame, spec.coupled) {
                    p.omega0 += b.sign() * j;
                }
                let es = eigensystem_2x2(&h_rotating(&p, 0.0))?;
                let mut psi = es.vectors[match branch {
                    Branch::Upper => 0,
                    Branch::Lower => 1,
                }];
                if let Some(v) = spec.tilt_frame() {
                    psi = psi.apply(&v);
                }
                match dim {
                    Dim::Two => Ok(psi),
                    Dim::Four => StateVector::product(&StateVector::basis(Dim::Two, b.index()), &psi),
                }
            }
        }
    }
}

/// JSON schedule accepted by the `evolve` command: a pulse program plus an
/// optional initial state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleFile {
    #[serde(flatten)]
    pub sequence: PulseSequence,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialState>,
}

impl ScheduleFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedules always serialize")
    }

    pub fn initial_state(&self) -> Result<StateVector> {
        self.initial
            .clone()
            .unwrap_or(InitialState::Basis { index: 0 })
            .resolve(&self.sequence)
    }
}

/// Free-precession time and final tilt of the S operation, together with
/// the cone angles it reaches in each spin-b sector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SOpSolution {
    pub delta: f64,
    pub j: f64,
    pub omega1: f64,
    pub t_c: f64,
    pub phi_prime: f64,
    pub theta_plus: f64,
    pub theta_minus: f64,
}

impl SOpSolution {
    /// `J t_c`
    pub fn j_tc(&self) -> f64 {
        self.j * self.t_c
    }

    /// `tan(phi' +- J t_c) - (delta +- J)/omega1`, scaled by
    /// `1/(1 + ((delta +- J)/omega1)^2)` so each entry is an angle error.
    pub fn residuals(&self) -> [f64; 2] {
        let r = |s: f64| {
            let ratio = (self.delta + s * self.j) / self.omega1;
            ((self.phi_prime + s * self.j_tc()).tan() - ratio) / (1.0 + ratio * ratio)
        };
        [r(1.0), r(-1.0)]
    }
}

/// Solves `tan(phi' + J t_c) = (delta + J)/omega1`,
/// `tan(phi' - J t_c) = (delta - J)/omega1`.
pub fn s_operation_params(delta: f64, j: f64, omega1: f64) -> Result<SOpSolution> {
    if !(delta.is_finite() && j.is_finite() && omega1.is_finite()) {
        return Err(Error::NonFinite("S-operation parameters"));
    }
    if !(omega1 > 0.0) {
        return Err(Error::invalid("omega1", "must be positive"));
    }
    if j < 0.0 {
        return Err(Error::invalid("j", "must be non-negative"));
    }
    let up = ((delta + j) / omega1).atan();
    let down = ((delta - j) / omega1).atan();
    let j_tc = 0.5 * (up - down);
    Ok(SOpSolution {
        delta,
        j,
        omega1,
        t_c: if j == 0.0 { 0.0 } else { j_tc / j },
        phi_prime: 0.5 * (up + down),
        theta_plus: omega1.atan2(delta + j),
        theta_minus: omega1.atan2(delta - j),
    })
}

/// `[pi/2]_y, free(t_c), [-delta t_c]_z, [pi/2]_x, [-phi']_y` on spin `a`.
pub fn build_s_operation(sol: &SOpSolution, delta: f64, j: f64) -> Result<PulseSequence> {
    let worst = sol.residuals().iter().fold(0.0f64, |m, r| m.max(r.abs()));
    if sol.delta != delta || sol.j != j || !(worst < 1e-12) {
        let residual = if sol.delta != delta || sol.j != j {
            (sol.delta - delta).abs().max((sol.j - j).abs())
        } else {
            worst
        };
        return Err(Error::InconsistentSolution { residual });
    }
    PulseSequence::new(
        Frame::TwoQubit { delta, j },
        vec![
            PulsePrimitive::RotY { angle: FRAC_PI_2 },
            PulsePrimitive::free(sol.t_c),
            PulsePrimitive::RotZ {
                angle: -delta * sol.t_c,
            },
            PulsePrimitive::RotX { angle: FRAC_PI_2 },
            PulsePrimitive::RotY {
                angle: -sol.phi_prime,
            },
        ],
    )
}

/// `S`, one compensated coupled loop, `S^-1`. The loop field starts in the
/// xz-plane (`phase0 = 0`), where S leaves the state.
pub fn build_conditional_loop(delta: f64, j: f64) -> Result<PulseSequence> {
    let lp = two_qubit_loop_params(delta, j)?;
    let sol = s_operation_params(delta, j, lp.omega1)?;
    let s = build_s_operation(&sol, delta, j)?;
    let mut steps = s.steps.clone();
    steps.push(PulsePrimitive::field_loop(LoopSpec::compensated(
        delta, lp.omega1, lp.gamma,
    )?));
    steps.extend(invert_sequence(&s).steps);
    PulseSequence::new(Frame::TwoQubit { delta, j }, steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{fidelity, operator_distance};
    use crate::phases::{cone_eigenstate, geometric_phase_cone, phase_distance};
    use std::f64::consts::PI;

    fn frame2(delta: f64, j: f64) -> Frame {
        Frame::TwoQubit { delta, j }
    }

    #[test]
    fn rot_y_quarter_turn_points_along_x() {
        let seq = PulseSequence::new(
            Frame::SingleQubit { omega0: 0.0 },
            vec![PulsePrimitive::RotY { angle: FRAC_PI_2 }],
        )
        .unwrap();
        let u = apply_sequence(&seq, Dim::Two).unwrap();
        let b = StateVector::up().apply(&u).bloch();
        assert!((b[0] - 1.0).abs() < 1e-15 && b[1].abs() < 1e-15 && b[2].abs() < 1e-15);
    }

    #[test]
    fn rot_z_is_diagonal() {
        let a = 0.7;
        let seq = PulseSequence::new(
            Frame::SingleQubit { omega0: 0.0 },
            vec![PulsePrimitive::RotZ { angle: a }],
        )
        .unwrap();
        let u = apply_sequence(&seq, Dim::Two).unwrap();
        let want = UnitaryMatrix::diag_phases(&[-a / 2.0, a / 2.0]).unwrap();
        assert!(operator_distance(&u, &want).unwrap() < 1e-15);
        assert!(matches!(apply_sequence(&seq, Dim::Four), Err(Error::FrameMismatch { .. })));
    }

    #[test]
    fn free_precession_rotates_positively_about_z() {
        let seq = PulseSequence::new(
            Frame::SingleQubit { omega0: 2.0 },
            vec![PulsePrimitive::RotY { angle: FRAC_PI_2 }, PulsePrimitive::free(0.25)],
        )
        .unwrap();
        let b = StateVector::up().apply(&apply_sequence(&seq, Dim::Two).unwrap()).bloch();
        assert!((b[0] - 0.5f64.cos()).abs() < 1e-14 && (b[1] - 0.5f64.sin()).abs() < 1e-14);
    }

    #[test]
    fn inversion_examples() {
        let f = Frame::SingleQubit { omega0: 1.0 };
        let seq = PulseSequence::new(f, vec![PulsePrimitive::RotY { angle: FRAC_PI_2 }]).unwrap();
        assert_eq!(invert_sequence(&seq).steps(), &[PulsePrimitive::RotY { angle: -FRAC_PI_2 }]);
        let empty = PulseSequence::empty(f);
        assert!(invert_sequence(&empty).is_empty());

        let sol = s_operation_params(1.058, 1.0, 1.0).unwrap();
        let s = build_s_operation(&sol, 1.058, 1.0).unwrap();
        let u = apply_sequence(&s, Dim::Four).unwrap();
        let ui = apply_sequence(&invert_sequence(&s), Dim::Four).unwrap();
        let id = UnitaryMatrix::identity(Dim::Four);
        assert!(operator_distance(&(ui * u), &id).unwrap() < 1e-10);
        assert_eq!(invert_sequence(&invert_sequence(&s)), s);
    }

    #[test]
    fn reversed_loop_inverts_both_routes() {
        let spec = LoopSpec::compensated(0.6, 0.8, -5.0 / 3.0).unwrap().with_tilt(0.4);
        let f = Frame::SingleQubit { omega0: 0.0 };
        let seq = PulseSequence::new(f, vec![PulsePrimitive::field_loop(spec)]).unwrap();
        let both = seq.clone().then(&invert_sequence(&seq)).unwrap();
        let id = UnitaryMatrix::identity(Dim::Two);
        assert!(operator_distance(&apply_sequence(&both, Dim::Two).unwrap(), &id).unwrap() < 1e-12);
        assert!(operator_distance(&simulate_sequence(&both, Dim::Two, 2000).unwrap(), &id).unwrap() < 1e-12);
    }

    #[test]
    fn s_operation_reference_point() {
        let sol = s_operation_params(1.058, 1.0, 1.0).unwrap();
        assert!((sol.j_tc() - 0.5302750602609773).abs() < 1e-14);
        assert!((sol.phi_prime - 0.5882101538843943).abs() < 1e-14);
        for r in sol.residuals() {
            assert!(r.abs() < 1e-12);
        }
        assert!((sol.theta_plus - (1.0f64 / 2.058).atan()).abs() < 1e-15);
        assert!((sol.theta_plus - (FRAC_PI_2 - (sol.phi_prime + sol.j_tc()))).abs() < 1e-14);
        assert!((sol.theta_minus - (FRAC_PI_2 - (sol.phi_prime - sol.j_tc()))).abs() < 1e-14);
    }

    #[test]
    fn s_operation_symmetric_and_degenerate_cases() {
        let sol = s_operation_params(1.0, 1.0, 0.8).unwrap();
        assert!((sol.j_tc() - 0.5 * (2.0f64 / 0.8).atan()).abs() < 1e-15);
        assert!((sol.phi_prime - sol.j_tc()).abs() < 1e-15);
        assert!(s_operation_params(1.0, 1.0, 0.0).is_err());

        let sol = s_operation_params(0.9, 0.0, 1.3).unwrap();
        assert_eq!(sol.t_c, 0.0);
        assert!((sol.phi_prime - (0.9f64 / 1.3).atan()).abs() < 1e-15);
        let s = build_s_operation(&sol, 0.9, 0.0).unwrap();
        let u = apply_sequence(&s, Dim::Four).unwrap();
        let want = cone_eigenstate(0.9, 1.3, Branch::Upper).unwrap().psi0;
        for b in SpinState::BOTH {
            let spect = StateVector::basis(Dim::Two, b.index());
            let out = StateVector::product(&spect, &StateVector::up()).unwrap().apply(&u);
            let exp = StateVector::product(&spect, &want).unwrap();
            assert!((exp.inner(&out).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn s_operation_lands_on_conditional_eigenstates() {
        for &(delta, j, w1) in &[(1.058, 1.0, 1.0), (3.0, 0.7, 0.4), (0.5, 1.2, 2.5)] {
            let sol = s_operation_params(delta, j, w1).unwrap();
            let u = apply_sequence(&build_s_operation(&sol, delta, j).unwrap(), Dim::Four).unwrap();
            for b in SpinState::BOTH {
                let spect = StateVector::basis(Dim::Two, b.index());
                let out = StateVector::product(&spect, &StateVector::up()).unwrap().apply(&u);
                let eig = cone_eigenstate(delta + b.sign() * j, w1, Branch::Upper).unwrap().psi0;
                let exp = StateVector::product(&spect, &eig).unwrap();
                assert!((exp.inner(&out).norm() - 1.0).abs() < 1e-12, "{delta} {j} {w1} {b:?}");
            }
        }
    }

    #[test]
    fn inconsistent_solution_rejected() {
        let sol = s_operation_params(1.058, 1.0, 1.0).unwrap();
        assert!(matches!(
            build_s_operation(&sol, 1.2, 1.0),
            Err(Error::InconsistentSolution { .. })
        ));
        let bad = SOpSolution {
            t_c: sol.t_c + 1e-6,
            ..sol
        };
        assert!(matches!(
            build_s_operation(&bad, 1.058, 1.0),
            Err(Error::InconsistentSolution { .. })
        ));
    }

    fn conditional_reference(delta: f64, j: f64) -> (f64, f64) {
        let lp = two_qubit_loop_params(delta, j).unwrap();
        lp.geometric_phases()
    }

    #[test]
    fn conditional_loop_is_exactly_diagonal() {
        let delta = 4.0 * 7f64.sqrt() / 7.0;
        let seq = build_conditional_loop(delta, 1.0).unwrap();
        let u = apply_sequence(&seq, Dim::Four).unwrap();
        let (gp, gm) = conditional_reference(delta, 1.0);
        assert!((gp - (gm - PI / 2.0)).abs() < 1e-12);
        let want = UnitaryMatrix::diag_phases(&[gp, -gp, gm, -gm]).unwrap();
        assert!(operator_distance(&u, &want).unwrap() < 1e-12);
    }

    #[test]
    fn conditional_loop_simulated() {
        let delta = 4.0 * 7f64.sqrt() / 7.0;
        let seq = build_conditional_loop(delta, 1.0).unwrap();
        let u = simulate_sequence(&seq, Dim::Four, 100_000).unwrap();
        let (gp, gm) = conditional_reference(delta, 1.0);
        let want = UnitaryMatrix::diag_phases(&[gp, -gp, gm, -gm]).unwrap();
        assert!(fidelity(&u, &want).unwrap() >= 1.0 - 1e-6);
        assert!(u.matrix().off_diagonal_max() < 1e-7);
        let m = u.matrix();
        for (k, g) in [gp, -gp, gm, -gm].into_iter().enumerate() {
            assert!(phase_distance(m[(k, k)].arg(), g) < 1e-6);
        }
        assert!(build_conditional_loop(1.0, 1.0).is_err());
    }

    #[test]
    fn conditional_loop_other_parameters() {
        for &(delta, j) in &[(2.0, 1.0), (1.3, 0.4)] {
            let u = apply_sequence(&build_conditional_loop(delta, j).unwrap(), Dim::Four).unwrap();
            let (gp, gm) = conditional_reference(delta, j);
            let lp = two_qubit_loop_params(delta, j).unwrap();
            assert!((gp - geometric_phase_cone(lp.theta_plus)).abs() < 1e-15);
            assert!(u.matrix().off_diagonal_max() < 1e-12);
            let m = u.matrix();
            assert!(phase_distance(m[(0, 0)].arg(), -m[(1, 1)].arg()) < 1e-12);
            assert!(phase_distance(m[(2, 2)].arg(), -m[(3, 3)].arg()) < 1e-12);
            assert!(phase_distance(m[(0, 0)].arg(), gp) < 1e-12);
            assert!(phase_distance(m[(2, 2)].arg(), gm) < 1e-12);
        }
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let delta = 4.0 * 7f64.sqrt() / 7.0;
        let seq = build_conditional_loop(delta, 1.0).unwrap();
        let text = seq.to_json();
        let back = PulseSequence::from_json(&text).unwrap();
        assert_eq!(back, seq);
        assert_eq!(back.to_json(), text);
        assert!(text.contains("\"op\": \"rot_y\""));
        assert!(text.contains("\"frame\": \"two_qubit\""));
    }

    #[test]
    fn json_shape_and_errors() {
        let text = r#"{"frame": "single", "omega0": 1.0, "steps": [
            {"op": "rot_x", "angle": 0.5},
            {"op": "free", "duration": 2.0},
            {"op": "loop", "loop": {"omega0": 1.0, "omega1": 1.0, "gamma": -2.0, "revolutions": 1.0, "compensated": true}}
        ]}"#;
        let seq = PulseSequence::from_json(text).unwrap();
        assert_eq!(seq.len(), 3);
        assert!(matches!(seq.steps()[2], PulsePrimitive::Loop { spec, reversed: false } if spec.coupled && spec.phase0 == 0.0));

        let bad = "{\"frame\": \"single\",\n \"steps\": [{\"op\": \"spin\"}]}";
        match PulseSequence::from_json(bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(PulseSequence::from_json(r#"{"frame": "three", "steps": []}"#).is_err());
        assert!(PulseSequence::from_json(r#"{"frame": "single", "steps": [{"op": "free", "duration": -1.0}]}"#).is_err());
        assert!(PulseSequence::from_json(
            r#"{"frame": "single", "steps": [{"op": "loop", "loop": {"omega0": 1.0, "omega1": 1.0, "gamma": -2.0, "revolutions": 0.0, "compensated": true}}]}"#
        )
        .is_err());
        assert!(PulseSequence::new(
            frame2(2.0, 1.0),
            vec![PulsePrimitive::field_loop(LoopSpec::compensated(1.0, 1.0, -2.0).unwrap().with_tilt(0.3))]
        )
        .is_err());
    }

    #[test]
    fn schedule_file_with_initial_state() {
        let text = r#"{"frame": "single", "omega0": 0.0, "steps": [
            {"op": "loop", "loop": {"omega0": 1.0, "omega1": 1.0, "gamma": -2.0, "revolutions": 1.0, "compensated": true}}
        ], "initial": {"kind": "loop_eigenstate", "branch": "upper"}}"#;
        let f = ScheduleFile::from_json(text).unwrap();
        let psi = f.initial_state().unwrap();
        let want = cone_eigenstate(1.0, 1.0, Branch::Upper).unwrap().psi0;
        assert!((psi.inner(&want).norm() - 1.0).abs() < 1e-14);
        let again = ScheduleFile::from_json(&f.to_json()).unwrap();
        assert_eq!(again, f);
        assert_eq!(again.to_json(), f.to_json());

        let plain = ScheduleFile::from_json(r#"{"frame": "two_qubit", "delta": 2.0, "j": 1.0, "steps": []}"#).unwrap();
        assert_eq!(plain.initial_state().unwrap(), StateVector::basis(Dim::Four, 0));
    }

    #[test]
    fn trace_of_compensated_loop_is_cyclic() {
        let spec = LoopSpec::compensated(1.0, 1.0, -2.0).unwrap();
        let seq = PulseSequence::new(Frame::SingleQubit { omega0: 0.0 }, vec![PulsePrimitive::field_loop(spec)]).unwrap();
        let psi0 = cone_eigenstate(1.0, 1.0, Branch::Upper).unwrap().psi0;
        let tr = trace_sequence(&seq, &psi0, 10_000).unwrap();
        assert_eq!(tr.times.len(), 10_001);
        assert!(tr.overlap_defect() < 1e-10);
        let d = *tr.dynamical_phase.last().unwrap();
        assert!(d.abs() < 1e-7, "{d}");
        let (b0, b1) = (tr.states[0].bloch(), tr.final_state().bloch());
        for k in 0..3 {
            assert!((b0[k] - b1[k]).abs() < 1e-8);
        }
    }

    #[test]
    fn trace_matches_closed_form_for_mixed_program() {
        let sol = s_operation_params(1.058, 1.0, 1.0).unwrap();
        let s = build_s_operation(&sol, 1.058, 1.0).unwrap();
        let psi0 = StateVector::new(&[C64::new(0.6, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.8), C64::new(0.0, 0.0)]).unwrap();
        let tr = trace_sequence(&s, &psi0, 1000).unwrap();
        let want = psi0.apply(&apply_sequence(&s, Dim::Four).unwrap());
        assert!((want.inner(tr.final_state()).norm() - 1.0).abs() < 1e-10);
        assert!(tr.times.windows(2).all(|w| w[1] >= w[0]));
        assert!((tr.times.last().unwrap() - sol.t_c).abs() < 1e-12);
    }

    #[test]
    fn simulation_step_budget() {
        let spec = LoopSpec::compensated(1.0, 1.0, -2.0).unwrap().with_revolutions(1e6);
        let seq = PulseSequence::new(Frame::SingleQubit { omega0: 0.0 }, vec![PulsePrimitive::field_loop(spec)]).unwrap();
        assert!(matches!(
            simulate_sequence(&seq, Dim::Two, 10_000),
            Err(Error::StepBudgetExceeded { .. })
        ));
    }
}
