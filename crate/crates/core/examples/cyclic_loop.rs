// One turn of a compensated cone loop: closed form against the integrator,
// and the split of the return phase into dynamical and geometric parts.

use std::sync::Arc;

use conegate::hamiltonians::{FieldParams, RotatingField};
use conegate::linalg::operator_distance;
use conegate::phases::{compensation_gamma, cone_eigenstate, phase_decomposition, wrap_phase, Branch};
use conegate::propagation::{integrate_steps, propagator_compensated};

pub fn run_example() -> conegate::Result<()> {
    let (omega0, omega1) = (1.0, 0.8);
    let gamma = compensation_gamma(omega0, omega1)?;
    let p = FieldParams::new(omega0, omega1, gamma)?.compensated();
    let tau = p.loop_duration()?;
    println!("omega0 = {omega0}, omega1 = {omega1}, gamma = {gamma:.9}, tau = {tau:.9}");

    for branch in Branch::BOTH {
        let cone = cone_eigenstate(omega0, omega1, branch)?;
        let traj = integrate_steps(Arc::new(RotatingField(p)), &cone.psi0, tau, 100_000)?;
        let exact = propagator_compensated(&p, tau)?;
        let numeric = traj.propagators().expect("integrator records propagators").last().unwrap();
        let pd = phase_decomposition(&traj)?;
        println!(
            "{branch:?}: |U_int - U_exact| = {:.2e}, return defect = {:.2e}",
            operator_distance(numeric, &exact)?,
            traj.overlap_defect()
        );
        println!(
            "  dynamical = {:.2e}, geometric = {:.9}, cone formula = {:.9}",
            pd.dynamical,
            pd.geometric,
            wrap_phase(cone.loop_geometric_phase())
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> conegate::Result<()> {
    run_example()
}
