// The S operation puts spin `a` on the cone eigenstate matching the state
// of spin `b`. Prints the solved timing and checks where each sector lands.

use conegate::hamiltonians::SpinState;
use conegate::linalg::{Dim, StateVector};
use conegate::phases::{cone_eigenstate, Branch};
use conegate::sequences::{apply_sequence, build_s_operation, s_operation_params};

pub fn run_example() -> conegate::Result<()> {
    let (delta, j) = (1.058, 1.0);
    println!("{:>8} {:>14} {:>14}", "w1/J", "J t_c", "phi' (rad)");
    for w1 in [0.5, 1.0, 2.0, 5.0, 10.0] {
        let s = s_operation_params(delta, j, w1)?;
        println!("{w1:>8} {:>14.10} {:>14.10}", s.j_tc(), s.phi_prime);
    }

    let sol = s_operation_params(delta, j, 1.0)?;
    let seq = build_s_operation(&sol, delta, j)?;
    let u = apply_sequence(&seq, Dim::Four)?;
    for b in SpinState::BOTH {
        let spectator = StateVector::basis(Dim::Two, b.index());
        let out = StateVector::product(&spectator, &StateVector::up())?.apply(&u);
        let target = cone_eigenstate(delta + b.sign() * j, sol.omega1, Branch::Upper)?;
        let want = StateVector::product(&spectator, &target.psi0)?;
        println!(
            "b = {b:?}: overlap with cone eigenstate = {:.15}, cone angle = {:.9}",
            want.inner(&out).norm(),
            target.theta
        );
    }
    println!("{}", seq.to_json());
    Ok(())
}

#[allow(dead_code)]
fn main() -> conegate::Result<()> {
    run_example()
}
