//! Closed-form propagators for the rotating-field problem and a stepped
//! exponential-midpoint integrator used as an independent oracle.
//!
//! For `H(t) = e^{-i phi(t) sz/2} H0 e^{i phi(t) sz/2} + omega_z sz/2` with
//! `phi(t) = gamma t` the propagator factorizes as
//!
//! ```text
//! U(t) = e^{-i gamma t sz/2} e^{-i (H0 + (omega_z - gamma) sz/2) t}
//! ```
//!
//! which reduces to `e^{-i gamma t sz/2} e^{-i H0 t}` when the compensating
//! field `omega_z = gamma` is on, and to `e^{-i gamma t sz/2} e^{-i H1 t}`
//! with `H1 = H0 - gamma sz/2` when it is off.

use std::f64::consts::TAU;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::hamiltonians::{field_hamiltonian, h_rotating, FieldParams, Schedule, SpeedProfile};
use crate::linalg::pauli::sigma_z;
use crate::linalg::{
    eigensystem_2x2, exp_unchecked, mat_exp_hermitian, Dim, HermitianOperator, StateVector,
    UnitaryMatrix,
};

/// Largest number of integrator steps a single call may take.
pub const STEP_BUDGET: usize = 50_000_000;

fn half_sz(scale: f64) -> HermitianOperator {
    HermitianOperator::symmetrized(sigma_z() * (0.5 * scale))
}

/// Closed-form propagator for any `omega_z`.
pub fn propagator(p: &FieldParams, t: f64) -> Result<UnitaryMatrix> {
    p.validate()?;
    let h0 = h_rotating(p, 0.0);
    let frame = mat_exp_hermitian(&half_sz(p.gamma), t)?;
    let body = mat_exp_hermitian(&(h0 + half_sz(p.omega_z - p.gamma)), t)?;
    Ok(frame * body)
}

/// Propagator without the compensating field (`omega_z` must be 0).
pub fn propagator_uncompensated(p: &FieldParams, t: f64) -> Result<UnitaryMatrix> {
    if p.omega_z != 0.0 {
        return Err(Error::Misconfigured(format!(
            "uncompensated propagator needs omega_z = 0, found {}",
            p.omega_z
        )));
    }
    propagator(p, t)
}

/// Propagator with the compensating field (`omega_z` must equal `gamma`).
pub fn propagator_compensated(p: &FieldParams, t: f64) -> Result<UnitaryMatrix> {
    if !p.is_compensated() {
        return Err(Error::Misconfigured(format!(
            "compensated propagator needs omega_z = gamma (omega_z = {}, gamma = {})",
            p.omega_z, p.gamma
        )));
    }
    propagator(p, t)
}

/// Sampled evolution of a pure state under a schedule.
#[derive(Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<StateVector>,
    propagators: Option<Vec<UnitaryMatrix>>,
    schedule: Arc<dyn Schedule>,
}

impl std::fmt::Debug for Trajectory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Trajectory")
            .field("samples", &self.times.len())
            .field("t_end", &self.times.last())
            .finish()
    }
}

impl Trajectory {
    /// Samples a known propagator `u(t)` at the given times.
    pub fn sample(
        schedule: Arc<dyn Schedule>,
        psi0: &StateVector,
        times: Vec<f64>,
        u: impl Fn(f64) -> Result<UnitaryMatrix>,
    ) -> Result<Self> {
        check_dims(schedule.as_ref(), psi0)?;
        if times.windows(2).any(|w| !(w[1] >= w[0])) {
            return Err(Error::invalid("times", "must be ascending"));
        }
        let mut states = Vec::with_capacity(times.len());
        let mut props = Vec::with_capacity(times.len());
        for &t in &times {
            let ut = u(t)?;
            states.push(psi0.apply(&ut));
            props.push(ut);
        }
        Ok(Trajectory {
            times,
            states,
            propagators: Some(props),
            schedule,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn propagators(&self) -> Option<&[UnitaryMatrix]> {
        self.propagators.as_deref()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn initial_state(&self) -> &StateVector {
        &self.states[0]
    }

    pub fn final_state(&self) -> &StateVector {
        self.states.last().expect("trajectories hold at least one sample")
    }

    pub fn duration(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0) - self.times.first().copied().unwrap_or(0.0)
    }

    /// Hamiltonian at sample `k`.
    pub fn hamiltonian_at(&self, k: usize) -> HermitianOperator {
        self.schedule.hamiltonian(self.times[k])
    }

    pub fn schedule(&self) -> &Arc<dyn Schedule> {
        &self.schedule
    }

    /// `<psi(t)|H(t)|psi(t)>` at every sample.
    pub fn energies(&self) -> Vec<f64> {
        (0..self.len())
            .map(|k| self.states[k].expectation(self.hamiltonian_at(k).matrix()))
            .collect()
    }

    /// `<psi(0)|psi(T)>`
    pub fn return_overlap(&self) -> num_complex::Complex64 {
        self.initial_state().inner(self.final_state())
    }

    /// `1 - |<psi(0)|psi(T)>|`
    pub fn overlap_defect(&self) -> f64 {
        1.0 - self.return_overlap().norm()
    }
}

fn check_dims(schedule: &dyn Schedule, psi0: &StateVector) -> Result<()> {
    if schedule.dim() != psi0.dim() {
        return Err(Error::DimensionMismatch {
            expected: schedule.dim().size(),
            found: psi0.size(),
        });
    }
    Ok(())
}

fn check_span(t_end: f64, steps: usize) -> Result<()> {
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(Error::invalid("t_end", "must be finite and non-negative"));
    }
    if steps == 0 {
        return Err(Error::invalid("steps", "must be positive"));
    }
    if steps > STEP_BUDGET {
        return Err(Error::StepBudgetExceeded {
            requested: steps,
            budget: STEP_BUDGET,
        });
    }
    Ok(())
}

/// One exponential-midpoint step `exp(-i H(t + dt/2) dt)`.
#[inline]
fn midpoint_step(schedule: &dyn Schedule, t: f64, dt: f64) -> Result<UnitaryMatrix> {
    let h = schedule.hamiltonian(t + 0.5 * dt);
    if !h.is_finite() {
        return Err(Error::NonFinite("Hamiltonian sample"));
    }
    Ok(exp_unchecked(&h, dt))
}

/// Integrates over `[0, t_end]` with `ceil(steps_per_unit * t_end)` steps
/// (at least one).
pub fn integrate(
    schedule: Arc<dyn Schedule>,
    psi0: &StateVector,
    t_end: f64,
    steps_per_unit: usize,
) -> Result<Trajectory> {
    check_span(t_end, steps_per_unit)?;
    let steps = ((steps_per_unit as f64) * t_end).ceil().max(1.0);
    if steps > STEP_BUDGET as f64 {
        return Err(Error::StepBudgetExceeded {
            requested: steps as usize,
            budget: STEP_BUDGET,
        });
    }
    integrate_steps(schedule, psi0, t_end, steps as usize)
}

/// Integrates over `[0, t_end]` with exactly `steps` uniform steps, recording
/// the state and the accumulated propagator after every step.
pub fn integrate_steps(
    schedule: Arc<dyn Schedule>,
    psi0: &StateVector,
    t_end: f64,
    steps: usize,
) -> Result<Trajectory> {
    check_dims(schedule.as_ref(), psi0)?;
    check_span(t_end, steps)?;
    let dt = t_end / steps as f64;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut props = Vec::with_capacity(steps + 1);
    let mut u = UnitaryMatrix::identity(schedule.dim());
    times.push(0.0);
    states.push(*psi0);
    props.push(u);
    for k in 0..steps {
        let t = k as f64 * dt;
        u = midpoint_step(schedule.as_ref(), t, dt)? * u;
        times.push((k + 1) as f64 * dt);
        states.push(psi0.apply(&u));
        props.push(u);
    }
    Ok(Trajectory {
        times,
        states,
        propagators: Some(props),
        schedule,
    })
}

/// Propagator over `[t0, t0 + duration]` with `steps` midpoint steps, without
/// recording intermediate samples.
pub fn propagate(
    schedule: &dyn Schedule,
    t0: f64,
    duration: f64,
    steps: usize,
) -> Result<UnitaryMatrix> {
    check_span(duration, steps)?;
    let dt = duration / steps as f64;
    let mut u = UnitaryMatrix::identity(schedule.dim());
    for k in 0..steps {
        u = midpoint_step(schedule, t0 + k as f64 * dt, dt)? * u;
    }
    Ok(u)
}

/// How the field amplitudes behave under a variable rotation speed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProfileMode {
    /// Amplitudes fixed; only the compensating field follows the speed.
    FixedField,
    /// Both amplitudes scale with `rate(t) / gamma_ref` so the field stays
    /// perpendicular to the state at every instant (fixed ratio
    /// `omega1 / omega0`); `gamma_ref` is `field.gamma`.
    DynamicalPhaseFree,
}

/// A compensated loop driven by a variable rotation speed.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfiledLoop {
    pub field: FieldParams,
    pub profile: SpeedProfile,
    pub mode: ProfileMode,
}

impl ProfiledLoop {
    pub fn new(field: FieldParams, profile: SpeedProfile, mode: ProfileMode) -> Result<Self> {
        field.validate()?;
        profile.validate_loop()?;
        if mode == ProfileMode::DynamicalPhaseFree && field.gamma == 0.0 {
            return Err(Error::NoLoop);
        }
        Ok(ProfiledLoop {
            field,
            profile,
            mode,
        })
    }

    fn scale(&self, t: f64) -> f64 {
        match self.mode {
            ProfileMode::FixedField => 1.0,
            ProfileMode::DynamicalPhaseFree => self.profile.rate(t) / self.field.gamma,
        }
    }

    /// `int_0^t scale(t') dt'`
    fn scale_integral(&self, t: f64) -> f64 {
        match self.mode {
            ProfileMode::FixedField => t,
            ProfileMode::DynamicalPhaseFree => self.profile.angle(t) / self.field.gamma,
        }
    }

    pub fn duration(&self) -> f64 {
        self.profile.duration()
    }

    /// Closed form `e^{-i phi(t) sz/2} e^{-i H0 S(t)}`, `S = int scale`.
    pub fn propagator(&self, t: f64) -> Result<UnitaryMatrix> {
        let h0 = h_rotating(&self.field, 0.0);
        let frame = mat_exp_hermitian(&half_sz(self.profile.angle(t)), 1.0)?;
        let body = mat_exp_hermitian(&h0, self.scale_integral(t))?;
        Ok(frame * body)
    }
}

impl Schedule for ProfiledLoop {
    fn dim(&self) -> Dim {
        Dim::Two
    }
    fn hamiltonian(&self, t: f64) -> HermitianOperator {
        let s = self.scale(t);
        let p = FieldParams {
            omega0: self.field.omega0 * s,
            omega1: self.field.omega1 * s,
            gamma: 0.0,
            omega_z: self.profile.rate(t),
            phase0: self.field.phase0 + self.profile.angle(t),
        };
        field_hamiltonian(&p, t)
    }
}

/// Full-turn propagator of a compensated loop with a time-dependent speed.
/// With [`ProfileMode::FixedField`] the field amplitudes are held at
/// `p.omega0`, `p.omega1`.
pub fn loop_with_profile(
    p: &FieldParams,
    profile: &SpeedProfile,
    mode: ProfileMode,
) -> Result<UnitaryMatrix> {
    let lp = ProfiledLoop::new(*p, profile.clone(), mode)?;
    lp.propagator(lp.duration())
}

/// Upper eigenstate of `H0 = h_rotating(p, 0)`.
fn initial_eigenstate(p: &FieldParams) -> Result<StateVector> {
    if p.omega0 == 0.0 && p.omega1 == 0.0 {
        return Err(Error::ZeroField);
    }
    Ok(eigensystem_2x2(&h_rotating(p, 0.0))?.vectors[0])
}

/// Return infidelity `1 - |<psi0|U(tau)|psi0>|^2` of the uncompensated loop
/// over one turn, `tau = 2 pi / |gamma|`, for the `H0` upper eigenstate.
pub fn adiabatic_error(p: &FieldParams) -> Result<f64> {
    if p.omega_z != 0.0 {
        return Err(Error::Misconfigured(
            "adiabatic error is defined for the uncompensated field (omega_z = 0)".into(),
        ));
    }
    return_infidelity(p)
}

/// Same quantity for the compensated loop; zero up to rounding.
pub fn compensated_error(p: &FieldParams) -> Result<f64> {
    return_infidelity(&p.compensated())
}

fn return_infidelity(p: &FieldParams) -> Result<f64> {
    let tau = p.loop_duration()?;
    let psi0 = initial_eigenstate(p)?;
    let u = propagator(p, tau)?;
    let ov = psi0.inner(&psi0.apply(&u)).norm_sqr();
    Ok((1.0 - ov).max(0.0))
}

/// Number of uniform steps for a span given a per-loop resolution and the
/// loop period; at least one.
pub fn steps_for(duration: f64, loop_period: f64, steps_per_loop: usize) -> usize {
    ((duration / loop_period) * steps_per_loop as f64).ceil().max(1.0) as usize
}

/// `2 pi / |gamma|`
pub fn loop_period(gamma: f64) -> Result<f64> {
    if gamma == 0.0 || !gamma.is_finite() {
        return Err(Error::NoLoop);
    }
    Ok(TAU / gamma.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::RotatingField;
    use crate::linalg::{fidelity, operator_distance, Matrix, C64};
    use std::f64::consts::PI;

    fn field(w0: f64, w1: f64, g: f64) -> FieldParams {
        FieldParams::new(w0, w1, g).unwrap()
    }

    #[test]
    fn propagators_at_zero_are_identity() {
        let id = UnitaryMatrix::identity(Dim::Two);
        let p = field(0.6, 1.3, -0.8);
        assert!(operator_distance(&propagator_uncompensated(&p, 0.0).unwrap(), &id).unwrap() < 1e-15);
        assert!(operator_distance(&propagator_compensated(&p.compensated(), 0.0).unwrap(), &id).unwrap() < 1e-15);
    }

    #[test]
    fn static_field_reduces_to_plain_exponential() {
        let p = field(0.6, 1.3, 0.0);
        let want = mat_exp_hermitian(&h_rotating(&p, 0.0), 2.7).unwrap();
        for u in [
            propagator_uncompensated(&p, 2.7).unwrap(),
            propagator_compensated(&p.compensated(), 2.7).unwrap(),
        ] {
            assert!(operator_distance(&u, &want).unwrap() < 1e-14);
        }
    }

    #[test]
    fn wrong_compensation_state_rejected() {
        let p = field(1.0, 1.0, -2.0);
        assert!(propagator_compensated(&p, 1.0).is_err());
        assert!(propagator_uncompensated(&p.compensated(), 1.0).is_err());
        assert!(adiabatic_error(&p.compensated()).is_err());
        assert_eq!(adiabatic_error(&field(1.0, 1.0, 0.0)), Err(Error::NoLoop));
    }

    #[test]
    fn uncompensated_matches_integrator() {
        let p = field(1.0, 1.0, 0.3);
        let tau = 2.0 * PI / 0.3;
        let closed = propagator_uncompensated(&p, tau).unwrap();
        let num = propagate(&RotatingField(p), 0.0, tau, 200_000).unwrap();
        assert!(operator_distance(&closed, &num).unwrap() < 1e-9);
    }

    #[test]
    fn compensated_matches_integrator_on_first_half_turn() {
        let p = field(1.0, 1.0, -2.0).compensated();
        for t in [0.0, 0.5, 1.9, PI] {
            let closed = propagator_compensated(&p, t).unwrap();
            let steps = ((t / PI) * 100_000.0).ceil().max(1.0) as usize;
            let num = propagate(&RotatingField(p), 0.0, t, steps).unwrap();
            assert!(operator_distance(&closed, &num).unwrap() < 1e-9, "t = {t}");
        }
    }

    #[test]
    fn constant_schedule_is_exact() {
        let h = HermitianOperator::new(
            Matrix::from_rows(&[[crate::linalg::C64::new(0.2, 0.0), crate::linalg::C64::new(0.5, 0.1)], [crate::linalg::C64::new(0.5, -0.1), crate::linalg::C64::new(-0.7, 0.0)]]).unwrap(),
        )
        .unwrap();
        let u = propagate(&h, 0.0, 3.3, 17).unwrap();
        let want = mat_exp_hermitian(&h, 3.3).unwrap();
        assert!(operator_distance(&u, &want).unwrap() < 1e-10);
    }

    #[test]
    fn cyclic_return_of_compensated_loop() {
        let p = field(1.0, 1.0, -2.0).compensated();
        let tau = p.loop_duration().unwrap();
        let psi0 = initial_eigenstate(&p).unwrap();
        let out = psi0.apply(&propagator_compensated(&p, tau).unwrap());
        assert!((psi0.inner(&out).norm() - 1.0).abs() < 1e-14);
        // phase is e^{-i pi - i lambda tau}, lambda = +|omega|/2
        let lambda = 0.5 * p.magnitude();
        let want = crate::linalg::cis(-PI - lambda * tau);
        assert!((psi0.inner(&out) - want).norm() < 1e-13);
    }

    #[test]
    fn trajectory_records_consistent_states() {
        let p = field(0.8, 0.5, -1.1).compensated();
        let psi0 = StateVector::up();
        let traj = integrate_steps(Arc::new(RotatingField(p)), &psi0, 2.0, 64).unwrap();
        assert_eq!(traj.len(), 65);
        let props = traj.propagators().unwrap();
        for (k, s) in traj.states().iter().enumerate() {
            assert!((s.norm() - 1.0).abs() < 1e-10);
            let via = psi0.apply(&props[k]);
            assert!((s.inner(&via).norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn integrator_rejects_bad_input() {
        let bad = RotatingField(FieldParams {
            omega1: f64::NAN,
            ..field(1.0, 1.0, 1.0)
        });
        assert_eq!(
            propagate(&bad, 0.0, 1.0, 4),
            Err(Error::NonFinite("Hamiltonian sample"))
        );
        let ok = RotatingField(field(1.0, 1.0, 1.0));
        assert!(propagate(&ok, 0.0, 1.0, 0).is_err());
        assert!(matches!(
            propagate(&ok, 0.0, 1.0, STEP_BUDGET + 1),
            Err(Error::StepBudgetExceeded { .. })
        ));
        assert!(integrate(Arc::new(ok), &StateVector::basis(Dim::Four, 0), 1.0, 10).is_err());
    }

    #[test]
    fn constant_profile_reduces_to_constant_loop() {
        let p = field(1.0, 1.0, -2.0);
        let prof = SpeedProfile::constant_loop(-2.0).unwrap();
        let u = loop_with_profile(&p, &prof, ProfileMode::FixedField).unwrap();
        let want = propagator_compensated(&p.compensated(), PI).unwrap();
        assert!(operator_distance(&u, &want).unwrap() < 1e-14);
        let u2 = loop_with_profile(&p, &prof, ProfileMode::DynamicalPhaseFree).unwrap();
        assert!(operator_distance(&u2, &want).unwrap() < 1e-14);
    }

    #[test]
    fn open_profile_rejected() {
        let p = field(1.0, 1.0, -2.0);
        let prof = SpeedProfile::Constant {
            gamma: -2.0,
            duration: 1.0,
        };
        assert!(matches!(
            loop_with_profile(&p, &prof, ProfileMode::FixedField),
            Err(Error::ProfileNotClosed { .. })
        ));
    }

    #[test]
    fn adiabatic_limit_and_compensation() {
        let small = adiabatic_error(&field(1.0, 1.0, 1e-3)).unwrap();
        assert!(small < 1e-5, "{small}");
        let p = field(1.0, 1.0, 0.5);
        let e = adiabatic_error(&p).unwrap();
        // integrator evaluation of the same quantity
        let tau = p.loop_duration().unwrap();
        let psi0 = initial_eigenstate(&p).unwrap();
        let u = propagate(&RotatingField(p), 0.0, tau, 400_000).unwrap();
        let num = 1.0 - psi0.inner(&psi0.apply(&u)).norm_sqr();
        assert!((e - num).abs() < 1e-9, "{e} vs {num}");
        assert!(compensated_error(&p).unwrap() < 1e-10);
    }

    #[test]
    fn fidelity_of_loop_against_itself() {
        let p = field(0.3, 0.9, 1.7).compensated();
        let u = propagator(&p, 1.0).unwrap();
        assert!((fidelity(&u, &u).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn midpoint_rule_is_second_order() {
        let p = field(1.0, 0.5, 0.3);
        let s = RotatingField(p);
        let t = 2.0 * PI / 0.3;
        let exact = propagator(&p, t).unwrap();
        let e: Vec<f64> = [500, 1000, 2000]
            .iter()
            .map(|&n| operator_distance(&propagate(&s, 0.0, t, n).unwrap(), &exact).unwrap())
            .collect();
        for w in e.windows(2) {
            assert!(((w[0] / w[1]).log2() - 2.0).abs() < 0.05, "{e:?}");
        }
        // Richardson: (4 U_2n - U_n)/3 is closer to the exact answer
        let (un, u2n) = (propagate(&s, 0.0, t, 1000).unwrap(), propagate(&s, 0.0, t, 2000).unwrap());
        let extrap = (u2n.matrix().scale(C64::new(4.0, 0.0)) - *un.matrix()).scale(C64::new(1.0 / 3.0, 0.0));
        assert!(extrap.max_abs_diff(exact.matrix()) < 0.1 * e[2]);
    }

    #[test]
    fn profiled_loop_closed_form_matches_integrator() {
        let gamma = -(1.0 + 0.36);
        let p = field(1.0, 0.6, gamma).compensated();
        let tau = 2.0 * PI / gamma.abs();
        let wobble = SpeedProfile::tabulate(tau, 2000, |t| gamma * (1.0 + 0.4 * (2.0 * PI * t / tau).sin())).unwrap();
        for mode in [ProfileMode::FixedField, ProfileMode::DynamicalPhaseFree] {
            let lp = ProfiledLoop::new(p, wobble.clone(), mode).unwrap();
            let exact = lp.propagator(lp.duration()).unwrap();
            let num = propagate(&lp, 0.0, lp.duration(), 100_000).unwrap();
            assert!(operator_distance(&num, &exact).unwrap() < 1e-8, "{mode:?}");
        }
    }

    #[test]
    fn profiled_loops_share_the_geometric_phase() {
        let gamma = -(1.0 + 0.36);
        let p = field(1.0, 0.6, gamma).compensated();
        let tau = 2.0 * PI / gamma.abs();
        let psi0 = initial_eigenstate(&p).unwrap();
        let constant = SpeedProfile::constant_loop(gamma).unwrap();
        let wobble = SpeedProfile::tabulate(tau, 2000, |t| gamma * (1.0 - 0.5 * (2.0 * PI * t / tau).cos())).unwrap();
        let mut phases = Vec::new();
        for profile in [constant, wobble] {
            let u = loop_with_profile(&p, &profile, ProfileMode::DynamicalPhaseFree).unwrap();
            let overlap = psi0.inner(&psi0.apply(&u));
            assert!((overlap.norm() - 1.0).abs() < 1e-12);
            phases.push(overlap.arg());
        }
        assert!((phases[0] - phases[1]).abs() < 1e-10, "{phases:?}");
        let cone = -PI * (1.0 + (1.0f64 / 1.36f64.sqrt()));
        assert!(crate::phases::phase_distance(phases[0], cone) < 1e-12);
    }
}
