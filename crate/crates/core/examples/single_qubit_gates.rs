// Phase, Hadamard and NOT gates built from geometric loops.

use std::f64::consts::FRAC_PI_3;

use conegate::gates::{phase_recipe, solve_hadamard, solve_not, verify_gate, PhaseConvention, Pretty};

pub fn run_example() -> conegate::Result<()> {
    let recipes = [
        phase_recipe(FRAC_PI_3, 1, PhaseConvention::Simulated)?,
        solve_hadamard()?,
        solve_not(PhaseConvention::Simulated)?,
        solve_not(PhaseConvention::Reference)?,
    ];
    for mut recipe in recipes {
        println!("== {}", recipe.name);
        for (k, v) in &recipe.parameters {
            println!("  {k} = {v:.12}");
        }
        print!("{}", Pretty(&recipe.realized()?, 6));
        let closed = recipe.analytic_fidelity()?;
        let simulated = verify_gate(&mut recipe, 20_000)?;
        println!("  fidelity: closed form {closed:.15}, simulated {simulated:.12}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> conegate::Result<()> {
    run_example()
}
