//! Gates built from cyclic loops: diagonal phase gates, loop gates about a
//! tilted axis, and recipes for Hadamard, NOT, conditional phase and CNOT.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};
use std::fmt;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::linalg::pauli::{on_target, sigma_x};
use crate::linalg::{cis, fidelity, Matrix, UnitaryMatrix, C64, I, ONE, ZERO};
use crate::phases::{geometric_phase_cone, two_qubit_loop_params};
use crate::roots::{bisect, golden_max};
use crate::sequences::{
    apply_sequence, build_conditional_loop, simulate_sequence, Frame, LoopSpec, PulsePrimitive,
    PulseSequence,
};

/// Smallest fidelity at which a recipe is accepted.
pub const ACCEPT_FIDELITY: f64 = 1.0 - 1e-6;

/// How loop count maps to the phase of a diagonal gate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseConvention {
    /// Relative phase `-4 pi cos(theta0)` per loop; realized with two
    /// revolutions per loop.
    Reference,
    /// Relative phase `-2 pi |cos(theta0)|` per revolution, the value a
    /// single compensated loop actually produces.
    Simulated,
}

/// Diagonal phase gate about `z` built from `loops` loops at cone angle
/// `theta0`.
///
/// `Reference`: `diag(e^{-i n pi c}, e^{i n pi c})`, `n = 2 loops`, `c = cos theta0`.
/// `Simulated`: `diag(e^{i loops G}, e^{-i loops G})`, `G = -pi (1 + |c|)`.
pub fn phase_gate(theta0: f64, loops: u32, convention: PhaseConvention) -> Result<UnitaryMatrix> {
    check_theta0(theta0)?;
    if loops == 0 {
        return Err(Error::invalid("loops", "must be positive"));
    }
    let c = theta0.cos();
    let n = loops as f64;
    match convention {
        PhaseConvention::Reference => UnitaryMatrix::diag_phases(&[-2.0 * n * PI * c, 2.0 * n * PI * c]),
        PhaseConvention::Simulated => {
            let g = geometric_phase_cone(c.abs().acos());
            UnitaryMatrix::diag_phases(&[n * g, -n * g])
        }
    }
}

fn check_theta0(theta0: f64) -> Result<()> {
    if !(theta0 > 0.0 && theta0 < PI) {
        return Err(Error::invalid("theta0", "must lie strictly between 0 and pi"));
    }
    Ok(())
}

/// Compensated loop whose cone passes through `z` and `-z`, so both basis
/// states are cyclic: the field sits at polar angle `acos(c)`, `c` in
/// `(0, 1]`, and the rotation axis is tilted back by the same angle.
/// Returns `None` for `c` within `1e-12` of zero, where no finite
/// compensation exists and the gate is the identity to that accuracy.
fn z_phase_loop(c: f64, revolutions: f64, reversed: bool) -> Result<Option<PulsePrimitive>> {
    if c.abs() < 1e-12 {
        return Ok(None);
    }
    let s = (1.0 - c * c).max(0.0).sqrt();
    let spec = LoopSpec::compensated(c, s, -1.0 / c)?
        .with_revolutions(revolutions)
        .with_tilt(s.atan2(c))
        .local();
    Ok(Some(PulsePrimitive::Loop { spec, reversed }))
}

/// Loop steps realizing [`phase_gate`] up to a global phase.
pub fn phase_gate_steps(theta0: f64, loops: u32, convention: PhaseConvention) -> Result<Vec<PulsePrimitive>> {
    check_theta0(theta0)?;
    let c = theta0.cos();
    let step = match convention {
        PhaseConvention::Reference => z_phase_loop(c.abs(), 2.0 * loops as f64, c < 0.0)?,
        PhaseConvention::Simulated => z_phase_loop(c.abs(), loops as f64, false)?,
    };
    Ok(step.into_iter().collect())
}

/// `diag(e^{i alpha}, 1)` as a loop (up to global phase): one revolution at
/// `c = frac(-alpha / 2 pi)`.
pub fn phase_shift_steps(alpha: f64) -> Result<Vec<PulsePrimitive>> {
    if !alpha.is_finite() {
        return Err(Error::NonFinite("phase shift"));
    }
    let c = (-alpha / TAU).rem_euclid(1.0);
    // rem_euclid can round up to exactly 1.0 for tiny negative inputs
    let c = if c >= 1.0 { 0.0 } else { c };
    Ok(z_phase_loop(c, 1.0, false)?.into_iter().collect())
}

/// `R_y(theta0) diag(e^{i G}, e^{-i G}) R_y(-theta0)` in closed form.
pub fn conjugated_loop_gate(theta0: f64, gamma: f64) -> UnitaryMatrix {
    let (sg, cg) = gamma.sin_cos();
    let (st, ct) = theta0.sin_cos();
    let m = Matrix::from_rows(&[
        [C64::new(cg, sg * ct), C64::new(0.0, sg * st)],
        [C64::new(0.0, sg * st), C64::new(cg, -sg * ct)],
    ])
    .expect("finite entries");
    UnitaryMatrix::new(m).expect("unitary by construction")
}

/// One compensated loop with the field at polar angle `theta0`
/// (`0 < theta0 < pi/2`); closed form is
/// `conjugated_loop_gate(theta0, -pi (1 + cos theta0))`.
pub fn conjugated_loop_step(theta0: f64) -> Result<PulsePrimitive> {
    if !(theta0 > 0.0 && theta0 < PI / 2.0) {
        return Err(Error::invalid("theta0", "must lie in (0, pi/2)"));
    }
    let (s, c) = theta0.sin_cos();
    Ok(PulsePrimitive::field_loop(LoopSpec::compensated(c, s, -1.0 / c)?.local()))
}

/// A gate target, the pulse program realizing it and the verification
/// result.
#[derive(Clone, Debug)]
pub struct GateRecipe {
    pub name: String,
    pub target: UnitaryMatrix,
    pub sequence: PulseSequence,
    pub parameters: Vec<(String, f64)>,
    pub fidelity: Option<f64>,
}

impl GateRecipe {
    pub fn parameter(&self, name: &str) -> Option<f64> {
        self.parameters.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }

    /// Closed-form unitary of the program.
    pub fn realized(&self) -> Result<UnitaryMatrix> {
        apply_sequence(&self.sequence, self.target.dim())
    }

    /// Closed-form fidelity against the target.
    pub fn analytic_fidelity(&self) -> Result<f64> {
        fidelity(&self.realized()?, &self.target)
    }

    /// Errors unless a verified fidelity is at least [`ACCEPT_FIDELITY`].
    pub fn accept(&self) -> Result<()> {
        let f = self.fidelity.unwrap_or(f64::NAN);
        if f >= ACCEPT_FIDELITY {
            Ok(())
        } else {
            Err(Error::RecipeRejected {
                name: self.name.clone(),
                fidelity: f,
                threshold: ACCEPT_FIDELITY,
            })
        }
    }

    pub fn to_json(&self) -> Value {
        let params: serde_json::Map<String, Value> = self
            .parameters
            .iter()
            .map(|(k, v)| (k.clone(), json!(v)))
            .collect();
        json!({
            "name": self.name,
            "target": matrix_json(&self.target),
            "parameters": params,
            "fidelity": self.fidelity,
            "sequence": self.sequence,
        })
    }
}

/// Runs the program with loops integrated numerically and stores the
/// phase-invariant fidelity against the target.
pub fn verify_gate(recipe: &mut GateRecipe, steps_per_loop: usize) -> Result<f64> {
    let u = simulate_sequence(&recipe.sequence, recipe.target.dim(), steps_per_loop)?;
    let f = fidelity(&u, &recipe.target)?;
    recipe.fidelity = Some(f);
    Ok(f)
}

fn single_frame() -> Frame {
    Frame::SingleQubit { omega0: 0.0 }
}

/// `(1/sqrt 2) [[1, 1], [1, -1]]`
pub fn hadamard_matrix() -> UnitaryMatrix {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    UnitaryMatrix::new(Matrix::from_rows(&[[h, h], [h, -h]]).expect("finite")).expect("unitary")
}

pub fn not_matrix() -> UnitaryMatrix {
    UnitaryMatrix::new(sigma_x()).expect("unitary")
}

/// `|sin G(theta) sin theta|` with the single-loop phase `G`.
fn hadamard_condition(theta: f64) -> f64 {
    (geometric_phase_cone(theta).sin() * theta.sin()).abs()
}

/// Hadamard from a loop gate at `theta0` sandwiched by diagonal phase
/// shifts; exact only when `|sin G sin theta0| = 1/sqrt 2`.
pub fn hadamard_recipe_at(theta0: f64) -> Result<GateRecipe> {
    let g = geometric_phase_cone(theta0);
    let w = conjugated_loop_gate(theta0, g);
    let m = w.matrix();
    // P(alpha) W P(beta), P(x) = diag(e^{ix}, 1): matching the (0,1), (1,0)
    // and (1,1) entries of the Hadamard fixes both angles
    let alpha = (-m[(1, 1)] / m[(0, 1)]).arg();
    let beta = (-m[(1, 1)] / m[(1, 0)]).arg();
    let mut steps = phase_shift_steps(beta)?;
    steps.push(conjugated_loop_step(theta0)?);
    steps.extend(phase_shift_steps(alpha)?);
    Ok(GateRecipe {
        name: "hadamard".into(),
        target: hadamard_matrix(),
        sequence: PulseSequence::new(single_frame(), steps)?,
        parameters: vec![
            ("theta0".into(), theta0),
            ("cos_theta0".into(), theta0.cos()),
            ("loop_phase".into(), g),
            ("alpha".into(), alpha),
            ("beta".into(), beta),
        ],
        fidelity: None,
    })
}

/// Solves `|sin G(theta0) sin theta0| = 1/sqrt 2` on the branch between the
/// maximum of the left-hand side and `pi/2`, then builds the recipe.
pub fn solve_hadamard() -> Result<GateRecipe> {
    let peak = golden_max(hadamard_condition, 0.05, PI / 2.0, 1e-12);
    let theta0 = bisect(|t| hadamard_condition(t) - FRAC_1_SQRT_2, peak, PI / 2.0, 1e-15)?;
    let recipe = hadamard_recipe_at(theta0)?;
    debug_assert!(recipe.analytic_fidelity()? > 1.0 - 1e-12);
    Ok(recipe)
}

/// Relative phase `arg(D11) - arg(D00)` of the diagonal gate a loop count
/// produces at `theta0`.
fn relative_phase(theta0: f64, convention: PhaseConvention) -> f64 {
    let c = theta0.cos();
    match convention {
        PhaseConvention::Reference => 4.0 * PI * c,
        PhaseConvention::Simulated => TAU * c.abs(),
    }
}

/// Finds the smallest `cos theta0` whose phase gate is `sz` up to a global
/// phase and builds `W_H W_p W_H`.
pub fn solve_not(convention: PhaseConvention) -> Result<GateRecipe> {
    let h = solve_hadamard()?;
    // distance of the relative phase from pi, on the circle
    let f = |t: f64| crate::phases::wrap_phase(relative_phase(t, convention) - PI);
    let n = 2000;
    let grid: Vec<f64> = (0..=n).map(|k| PI / 2.0 - (PI / 2.0 - 1e-6) * k as f64 / n as f64).collect();
    let (lo, hi) = grid
        .windows(2)
        .map(|w| (w[0], w[1]))
        .find(|&(a, b)| {
            let (fa, fb) = (f(a), f(b));
            fa.signum() != fb.signum() && fa.abs() < 1.0 && fb.abs() < 1.0
        })
        .ok_or(Error::NotBracketed { lo: 1e-6, hi: PI / 2.0 })?;
    let theta0 = bisect(f, lo, hi, 1e-15)?;
    let mut steps = h.sequence.steps().to_vec();
    steps.extend(phase_gate_steps(theta0, 1, convention)?);
    steps.extend_from_slice(h.sequence.steps());
    Ok(GateRecipe {
        name: "not".into(),
        target: not_matrix(),
        sequence: PulseSequence::new(single_frame(), steps)?,
        parameters: vec![
            ("theta0".into(), theta0),
            ("cos_theta0".into(), theta0.cos()),
            ("hadamard_theta0".into(), h.parameter("theta0").unwrap_or(f64::NAN)),
        ],
        fidelity: None,
    })
}

/// Phase gate recipe (single qubit, target from [`phase_gate`]).
pub fn phase_recipe(theta0: f64, loops: u32, convention: PhaseConvention) -> Result<GateRecipe> {
    Ok(GateRecipe {
        name: "phase".into(),
        target: phase_gate(theta0, loops, convention)?,
        sequence: PulseSequence::new(single_frame(), phase_gate_steps(theta0, loops, convention)?)?,
        parameters: vec![
            ("theta0".into(), theta0),
            ("cos_theta0".into(), theta0.cos()),
            ("loops".into(), loops as f64),
        ],
        fidelity: None,
    })
}

/// `I_b (x) diag(e^{-i G-}, e^{i G-})`, which turns the conditional loop
/// into `diag(-i, i, 1, 1)` when `G+ = G- - pi/2`.
pub fn conditional_phase_correction(gamma_minus: f64) -> UnitaryMatrix {
    on_target(&UnitaryMatrix::diag_phases(&[-gamma_minus, gamma_minus]).expect("finite phase"))
}

/// `diag(-i, i, 1, 1)` in `|b a>` order.
pub fn cphase_matrix() -> UnitaryMatrix {
    UnitaryMatrix::new(Matrix::diag(&[-I, I, ONE, ONE]).expect("finite")).expect("unitary")
}

/// `[[0, -i], [-i, 0]]` on spin `a` when `b` is up, identity when `b` is down.
pub fn cnot_matrix() -> UnitaryMatrix {
    let m = Matrix::from_rows(&[
        [ZERO, -I, ZERO, ZERO],
        [-I, ZERO, ZERO, ZERO],
        [ZERO, ZERO, ONE, ZERO],
        [ZERO, ZERO, ZERO, ONE],
    ])
    .expect("finite");
    UnitaryMatrix::new(m).expect("unitary")
}

/// `delta / J` at which the two sector phases differ by exactly `pi/2`.
pub fn cnot_delta_over_j() -> f64 {
    4.0 * 7f64.sqrt() / 7.0
}

/// Conditional loop followed by the local correction loop, `J = 1`.
pub fn cphase_recipe() -> Result<GateRecipe> {
    let (delta, j) = (cnot_delta_over_j(), 1.0);
    let lp = two_qubit_loop_params(delta, j)?;
    let (gp, gm) = lp.geometric_phases();
    let mut seq = build_conditional_loop(delta, j)?;
    // I (x) diag(e^{-i G-}, e^{i G-}) ~ I (x) diag(e^{-2i G-}, 1)
    for s in phase_shift_steps(-2.0 * gm)? {
        seq.push(s)?;
    }
    Ok(GateRecipe {
        name: "cphase".into(),
        target: cphase_matrix(),
        sequence: seq,
        parameters: vec![
            ("delta_over_j".into(), delta),
            ("omega1_over_j".into(), lp.omega1),
            ("gamma_over_j".into(), lp.gamma),
            ("gamma_plus".into(), gp),
            ("gamma_minus".into(), gm),
        ],
        fidelity: None,
    })
}

/// Hadamard on `a`, conditional phase, Hadamard on `a`.
pub fn cnot_recipe() -> Result<GateRecipe> {
    let h = solve_hadamard()?;
    let cp = cphase_recipe()?;
    let local: Vec<PulsePrimitive> = h
        .sequence
        .steps()
        .iter()
        .map(|s| match *s {
            PulsePrimitive::Loop { spec, reversed } => PulsePrimitive::Loop {
                spec: spec.local(),
                reversed,
            },
            other => other,
        })
        .collect();
    let mut steps = local.clone();
    steps.extend_from_slice(cp.sequence.steps());
    steps.extend(local);
    let mut parameters = cp.parameters.clone();
    parameters.push(("hadamard_theta0".into(), h.parameter("theta0").unwrap_or(f64::NAN)));
    Ok(GateRecipe {
        name: "cnot".into(),
        target: cnot_matrix(),
        sequence: PulseSequence::new(cp.sequence.frame(), steps)?,
        parameters,
        fidelity: None,
    })
}

/// Gates the CLI knows by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GateName {
    Phase,
    Hadamard,
    Not,
    Cphase,
    Cnot,
}

impl std::str::FromStr for GateName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "phase" => GateName::Phase,
            "hadamard" => GateName::Hadamard,
            "not" => GateName::Not,
            "cphase" => GateName::Cphase,
            "cnot" => GateName::Cnot,
            other => {
                return Err(Error::Config(format!(
                    "unknown gate `{other}` (expected phase, hadamard, not, cphase or cnot)"
                )))
            }
        })
    }
}

/// Row-major `[[re, im], ...]` rows.
pub fn matrix_json(u: &UnitaryMatrix) -> Value {
    let m = u.matrix();
    let n = m.size();
    Value::Array(
        (0..n)
            .map(|r| Value::Array((0..n).map(|c| json!([m[(r, c)].re, m[(r, c)].im])).collect()))
            .collect(),
    )
}

/// Fixed-width text rendering with entries rounded to `digits` decimals.
pub struct Pretty<'a>(pub &'a UnitaryMatrix, pub usize);

impl fmt::Display for Pretty<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = self.0.matrix();
        let d = self.1;
        let clean = |x: f64| if x.abs() < 0.5 * 10f64.powi(-(d as i32)) { 0.0 } else { x };
        for r in 0..m.size() {
            let row: Vec<String> = (0..m.size())
                .map(|c| {
                    let z = m[(r, c)];
                    let (re, im) = (clean(z.re), clean(z.im));
                    let sign = if im < 0.0 { '-' } else { '+' };
                    format!("{re:>w$.d$} {sign} {:.d$}i", im.abs(), w = d + 3, d = d)
                })
                .collect();
            writeln!(f, "[ {} ]", row.join("   "))?;
        }
        Ok(())
    }
}

/// Global phase that best aligns `u` with `target`: `arg Tr(target^dag u)`.
pub fn relative_global_phase(u: &UnitaryMatrix, target: &UnitaryMatrix) -> f64 {
    (target.matrix().adjoint() * *u.matrix()).trace().arg()
}

/// `u` with the global phase that best matches `target` removed.
pub fn align_global_phase(u: &UnitaryMatrix, target: &UnitaryMatrix) -> UnitaryMatrix {
    let phi = relative_global_phase(u, target);
    UnitaryMatrix::new(u.matrix().scale(cis(-phi))).expect("phase keeps unitarity")
}
