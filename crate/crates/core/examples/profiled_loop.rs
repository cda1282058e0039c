// Loops need not run at constant speed. Scaling the field with the speed
// keeps the evolution free of dynamical phase, so two different speed
// profiles give the same geometric phase.

use std::f64::consts::TAU;
use std::sync::Arc;

use conegate::hamiltonians::{FieldParams, SpeedProfile};
use conegate::phases::{compensation_gamma, cone_eigenstate, phase_decomposition, Branch};
use conegate::propagation::{integrate_steps, ProfileMode, ProfiledLoop};

pub fn run_example() -> conegate::Result<()> {
    let (omega0, omega1) = (1.0, 0.6);
    let gamma = compensation_gamma(omega0, omega1)?;
    let field = FieldParams::new(omega0, omega1, gamma)?.compensated();
    let cone = cone_eigenstate(omega0, omega1, Branch::Upper)?;
    let tau = TAU / gamma.abs();

    let constant = SpeedProfile::constant_loop(gamma)?;
    let wobble = SpeedProfile::tabulate(tau, 4000, |t| gamma * (1.0 - 0.5 * (TAU * t / tau).cos()))?;
    for (name, profile) in [("constant", constant), ("sinusoidal", wobble)] {
        let lp = ProfiledLoop::new(field, profile, ProfileMode::DynamicalPhaseFree)?;
        let traj = integrate_steps(Arc::new(lp.clone()), &cone.psi0, lp.duration(), 100_000)?;
        let pd = phase_decomposition(&traj)?;
        println!(
            "{name:>10}: return defect {:.2e}, dynamical {:.2e}, geometric {:.9}",
            traj.overlap_defect(),
            pd.dynamical,
            pd.geometric
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> conegate::Result<()> {
    run_example()
}
