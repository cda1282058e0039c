// Controlled-NOT from a conditional loop sandwiched between local
// Hadamard loops.

use conegate::gates::{align_global_phase, cnot_recipe, verify_gate, Pretty};

pub fn run_example() -> conegate::Result<()> {
    let mut recipe = cnot_recipe()?;
    println!("target:");
    print!("{}", Pretty(&recipe.target, 4));
    for (k, v) in &recipe.parameters {
        println!("{k} = {v:.12}");
    }
    println!("{} program steps, total time {:.6}", recipe.sequence.len(), recipe.sequence.duration());
    let realized = align_global_phase(&recipe.realized()?, &recipe.target);
    println!("realized (global phase aligned):");
    print!("{}", Pretty(&realized, 4));
    let f = verify_gate(&mut recipe, 20_000)?;
    println!("simulated fidelity = {f:.12}");
    recipe.accept()?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> conegate::Result<()> {
    run_example()
}
