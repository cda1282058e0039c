// Driving a loop fast without the compensating field leaves the state off
// its cone; with it, the eigenstate returns exactly at any speed.

use std::f64::consts::FRAC_PI_4;

use conegate::hamiltonians::FieldParams;
use conegate::propagation::{adiabatic_error, compensated_error};

pub fn run_example() -> conegate::Result<()> {
    let (omega1, omega0) = FRAC_PI_4.sin_cos();
    println!("{:>8} {:>14} {:>14}", "gamma/w0", "uncompensated", "compensated");
    for r in [0.01, 0.05, 0.1, 0.2, 0.5, 1.0] {
        let p = FieldParams::new(omega0, omega1, r * omega0)?;
        println!(
            "{r:>8} {:>14.6e} {:>14.6e}",
            adiabatic_error(&p)?,
            compensated_error(&p)?
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> conegate::Result<()> {
    run_example()
}
