//! Cone geometry of the field eigenstates, compensating rotation speeds and
//! the dynamical/geometric split of a cyclic phase.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{StateVector, C64};
use crate::propagation::Trajectory;

/// Which eigenstate of `H0` a loop transports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Upper,
    Lower,
}

impl Branch {
    pub const BOTH: [Branch; 2] = [Branch::Upper, Branch::Lower];
}

/// Eigenstate of `H0 = (omega0 sz + omega1 sx)/2` on the cone swept by the
/// rotating field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConeGeometry {
    pub omega0: f64,
    pub omega1: f64,
    /// Polar angle of the field, `cos theta = omega0 / |omega|`.
    pub theta: f64,
    pub lambda: f64,
    pub psi0: StateVector,
    pub branch: Branch,
}

impl ConeGeometry {
    /// Polar angle of the transported state: `theta` for the upper branch,
    /// `pi - theta` for the lower one.
    pub fn cone_angle(&self) -> f64 {
        match self.branch {
            Branch::Upper => self.theta,
            Branch::Lower => PI - self.theta,
        }
    }

    /// Geometric phase picked up by this eigenstate over one compensated
    /// turn. The turn runs opposite to the field's precession sense when
    /// `omega0 < 0`, which reverses the loop orientation.
    pub fn loop_geometric_phase(&self) -> f64 {
        let g = geometric_phase_cone(self.cone_angle());
        if self.omega0 >= 0.0 {
            g
        } else {
            -TAU - g
        }
    }
}

/// Eigenstate data for one branch of `H0`.
pub fn cone_eigenstate(omega0: f64, omega1: f64, branch: Branch) -> Result<ConeGeometry> {
    if !(omega0.is_finite() && omega1.is_finite()) {
        return Err(Error::NonFinite("field amplitudes"));
    }
    let mag = omega0.hypot(omega1);
    if mag == 0.0 {
        return Err(Error::ZeroField);
    }
    let theta = omega1.atan2(omega0);
    let (c, s) = ((0.5 * theta).cos(), (0.5 * theta).sin());
    let (psi0, lambda) = match branch {
        Branch::Upper => (StateVector::new(&[C64::new(c, 0.0), C64::new(s, 0.0)])?, 0.5 * mag),
        Branch::Lower => (StateVector::new(&[C64::new(s, 0.0), C64::new(-c, 0.0)])?, -0.5 * mag),
    };
    Ok(ConeGeometry {
        omega0,
        omega1,
        theta,
        lambda,
        psi0: psi0.canonical_phase(),
        branch,
    })
}

/// Rotation speed that makes the instantaneous dynamical phase vanish:
/// `gamma cos(theta) = -|omega|`, i.e. `gamma = -(omega0^2 + omega1^2) / omega0`.
pub fn compensation_gamma(omega0: f64, omega1: f64) -> Result<f64> {
    if !(omega0.is_finite() && omega1.is_finite()) {
        return Err(Error::NonFinite("field amplitudes"));
    }
    if omega0 == 0.0 {
        return Err(Error::NoCompensation);
    }
    Ok(-(omega0 * omega0 + omega1 * omega1) / omega0)
}

/// Shared loop parameters for the two spin-b sectors of the coupled frame,
/// where spin a sees the offsets `delta + J` (b up) and `delta - J` (b down).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoQubitLoop {
    pub delta: f64,
    pub j: f64,
    pub omega1: f64,
    pub gamma: f64,
    pub theta_plus: f64,
    pub theta_minus: f64,
}

impl TwoQubitLoop {
    /// `pi / delta`
    pub fn duration(&self) -> f64 {
        TAU / self.gamma.abs()
    }

    /// `(Gamma_plus, Gamma_minus)`
    pub fn geometric_phases(&self) -> (f64, f64) {
        (
            geometric_phase_cone(self.theta_plus),
            geometric_phase_cone(self.theta_minus),
        )
    }

    /// `gamma cos(theta_pm) + sqrt((delta pm J)^2 + omega1^2)` for both sectors.
    pub fn residuals(&self) -> [f64; 2] {
        let r = |off: f64, th: f64| self.gamma * th.cos() + off.hypot(self.omega1);
        [
            r(self.delta + self.j, self.theta_plus),
            r(self.delta - self.j, self.theta_minus),
        ]
    }
}

/// Solves both compensation conditions with one `(omega1, gamma)` pair.
pub fn two_qubit_loop_params(delta: f64, j: f64) -> Result<TwoQubitLoop> {
    if !(delta.is_finite() && j.is_finite()) {
        return Err(Error::NonFinite("delta or J"));
    }
    if !(delta > j && j > 0.0) {
        return Err(Error::ConditionViolated { delta, j });
    }
    let omega1 = ((delta - j) * (delta + j)).sqrt();
    Ok(TwoQubitLoop {
        delta,
        j,
        omega1,
        gamma: -2.0 * delta,
        theta_plus: omega1.atan2(delta + j),
        theta_minus: omega1.atan2(delta - j),
    })
}

/// Phase picked up on a cone of half-angle `theta`: `-pi (1 + cos theta)`,
/// returned unreduced.
pub fn geometric_phase_cone(theta: f64) -> f64 {
    -PI * (1.0 + theta.cos())
}

/// Reduces an angle to `(-pi, pi]`.
pub fn wrap_phase(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// `|x - y|` measured on the circle.
pub fn phase_distance(x: f64, y: f64) -> f64 {
    wrap_phase(x - y).abs()
}

/// `int f dt` over ascending, possibly non-uniform abscissae: composite
/// Simpson over interval pairs, with an odd final interval taken from the
/// quadratic through the last three samples.
pub fn simpson(t: &[f64], f: &[f64]) -> Result<f64> {
    if t.len() != f.len() {
        return Err(Error::DimensionMismatch {
            expected: t.len(),
            found: f.len(),
        });
    }
    let n = t.len();
    if n < 3 {
        return Err(Error::TooFewSamples { needed: 3, found: n });
    }
    if t.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("times", "must be strictly ascending"));
    }
    let intervals = n - 1;
    let mut acc = 0.0;
    let mut k = 0;
    while k + 2 <= intervals {
        let (h0, h1) = (t[k + 1] - t[k], t[k + 2] - t[k + 1]);
        let s = h0 + h1;
        acc += s / 6.0
            * ((2.0 - h1 / h0) * f[k] + s * s / (h0 * h1) * f[k + 1] + (2.0 - h0 / h1) * f[k + 2]);
        k += 2;
    }
    if intervals % 2 == 1 {
        let i = n - 3;
        let (h0, h1) = (t[i + 1] - t[i], t[i + 2] - t[i + 1]);
        let s = h0 + h1;
        acc += f[i + 2] * (2.0 * h1 * h1 + 3.0 * h0 * h1) / (6.0 * s)
            + f[i + 1] * (h1 * h1 + 3.0 * h0 * h1) / (6.0 * h0)
            - f[i] * h1 * h1 * h1 / (6.0 * h0 * s);
    }
    Ok(acc)
}

/// Running version of [`simpson`]: element `k` integrates over
/// `[t[0], t[k]]` and the last element equals `simpson(t, f)`. Two samples
/// fall back to the trapezoid rule.
pub fn cumulative_simpson(t: &[f64], f: &[f64]) -> Result<Vec<f64>> {
    if t.len() != f.len() {
        return Err(Error::DimensionMismatch {
            expected: t.len(),
            found: f.len(),
        });
    }
    let n = t.len();
    let mut out = vec![0.0; n];
    if n == 2 {
        out[1] = 0.5 * (t[1] - t[0]) * (f[0] + f[1]);
    }
    if n < 3 {
        return Ok(out);
    }
    if t.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("times", "must be strictly ascending"));
    }
    // integral over the second interval of the quadratic through i, i+1, i+2
    let tail = |i: usize| {
        let (h0, h1) = (t[i + 1] - t[i], t[i + 2] - t[i + 1]);
        let s = h0 + h1;
        f[i + 2] * (2.0 * h1 * h1 + 3.0 * h0 * h1) / (6.0 * s)
            + f[i + 1] * (h1 * h1 + 3.0 * h0 * h1) / (6.0 * h0)
            - f[i] * h1 * h1 * h1 / (6.0 * h0 * s)
    };
    for k in 1..n {
        out[k] = if k % 2 == 0 {
            let (h0, h1) = (t[k - 1] - t[k - 2], t[k] - t[k - 1]);
            let s = h0 + h1;
            out[k - 2]
                + s / 6.0
                    * ((2.0 - h1 / h0) * f[k - 2]
                        + s * s / (h0 * h1) * f[k - 1]
                        + (2.0 - h0 / h1) * f[k])
        } else if k == 1 {
            // first interval: quadratic through 0, 1, 2
            let (h0, h1) = (t[1] - t[0], t[2] - t[1]);
            let s = h0 + h1;
            f[0] * (2.0 * h0 * h0 + 3.0 * h0 * h1) / (6.0 * s)
                + f[1] * (h0 * h0 + 3.0 * h0 * h1) / (6.0 * h1)
                - f[2] * h0 * h0 * h0 / (6.0 * h1 * s)
        } else {
            out[k - 1] + tail(k - 2)
        };
    }
    Ok(out)
}

/// `-int_0^T <psi(t)|H(t)|psi(t)> dt` over the stored samples.
pub fn dynamical_phase(traj: &Trajectory) -> Result<f64> {
    if traj.len() < 3 {
        return Err(Error::TooFewSamples {
            needed: 3,
            found: traj.len(),
        });
    }
    Ok(-simpson(traj.times(), &traj.energies())?)
}

/// Split of the phase of a cyclic evolution. `total` and `geometric` lie in
/// `(-pi, pi]`, `dynamical` in `(-2 pi, 2 pi)`; `dynamical_raw` keeps the
/// unreduced integral.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhaseDecomposition {
    pub total: f64,
    pub dynamical: f64,
    pub geometric: f64,
    pub dynamical_raw: f64,
    pub overlap_defect: f64,
}

impl PhaseDecomposition {
    /// `total - dynamical - geometric` on the circle.
    pub fn closure_defect(&self) -> f64 {
        phase_distance(self.total, self.dynamical + self.geometric)
    }
}

/// Largest `1 - |<psi(0)|psi(T)>|` accepted as cyclic.
pub const CYCLIC_TOLERANCE: f64 = 1e-6;

/// Aharonov-Anandan split of a cyclic trajectory.
pub fn phase_decomposition(traj: &Trajectory) -> Result<PhaseDecomposition> {
    let defect = traj.overlap_defect();
    if !(defect <= CYCLIC_TOLERANCE) {
        return Err(Error::NonCyclic { defect });
    }
    let total = traj.return_overlap().arg();
    let dynamical_raw = dynamical_phase(traj)?;
    Ok(PhaseDecomposition {
        total,
        dynamical: dynamical_raw % TAU,
        geometric: wrap_phase(total - dynamical_raw),
        dynamical_raw,
        overlap_defect: defect,
    })
}
