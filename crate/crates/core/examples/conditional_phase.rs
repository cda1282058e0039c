// A single loop whose geometric phase depends on the state of the coupled
// spin: `S`, loop, `S^-1` is diagonal with conditional phases.

use conegate::linalg::{fidelity, Dim, UnitaryMatrix};
use conegate::phases::two_qubit_loop_params;
use conegate::sequences::{apply_sequence, build_conditional_loop, simulate_sequence};

pub fn run_example() -> conegate::Result<()> {
    let (delta, j) = (4.0 * 7f64.sqrt() / 7.0, 1.0);
    let lp = two_qubit_loop_params(delta, j)?;
    let (gp, gm) = lp.geometric_phases();
    println!(
        "delta/J = {delta:.9}, omega1 = {:.9}, gamma = {:.9}, tau = {:.9}",
        lp.omega1,
        lp.gamma,
        lp.duration()
    );
    println!("Gamma+ = {gp:.12}, Gamma- = {gm:.12}, difference = {:.12}", gp - gm);

    let seq = build_conditional_loop(delta, j)?;
    let want = UnitaryMatrix::diag_phases(&[gp, -gp, gm, -gm])?;
    let exact = apply_sequence(&seq, Dim::Four)?;
    let simulated = simulate_sequence(&seq, Dim::Four, 20_000)?;
    println!("closed form fidelity = {:.15}", fidelity(&exact, &want)?);
    println!("simulated fidelity   = {:.15}", fidelity(&simulated, &want)?);
    let m = simulated.matrix();
    for k in 0..4 {
        println!("  arg U[{k}{k}] = {:+.9}", m[(k, k)].arg());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> conegate::Result<()> {
    run_example()
}
