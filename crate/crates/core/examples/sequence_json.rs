// Pulse programs serialize to JSON and back without loss, and can be run
// from a schedule file with an initial state, as the `evolve` command does.

use conegate::linalg::{operator_distance, Dim};
use conegate::sequences::{
    apply_sequence, build_conditional_loop, invert_sequence, trace_sequence, PulseSequence,
    ScheduleFile,
};

const SCHEDULE: &str = r#"{
  "frame": "single",
  "omega0": 1.0,
  "initial": { "kind": "loop_eigenstate", "branch": "upper" },
  "steps": [
    { "op": "loop", "loop": { "omega0": 1.0, "omega1": 0.5, "gamma": -1.25, "revolutions": 1.0, "compensated": true } }
  ]
}"#;

pub fn run_example() -> conegate::Result<()> {
    let seq = build_conditional_loop(1.5, 1.0)?;
    let text = seq.to_json();
    let back = PulseSequence::from_json(&text)?;
    println!("round trip identical: {}", back == seq);

    let inverse = invert_sequence(&seq);
    let u = apply_sequence(&seq.clone().then(&inverse)?, Dim::Four)?;
    println!(
        "|S S^-1 - 1| = {:.2e}",
        operator_distance(&u, &conegate::UnitaryMatrix::identity(Dim::Four))?
    );

    let file = ScheduleFile::from_json(SCHEDULE)?;
    let psi0 = file.initial_state()?;
    let trace = trace_sequence(&file.sequence, &psi0, 10_000)?;
    println!(
        "{} samples, return defect {:.2e}, final dynamical phase {:.2e}",
        trace.times.len(),
        trace.overlap_defect(),
        trace.dynamical_phase.last().unwrap()
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> conegate::Result<()> {
    run_example()
}
