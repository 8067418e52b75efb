//! Compares the lognormal timing of a plan with two baseline time
//! parameterizations of the same path.

use sigmadraw::cli::comparison;
use sigmadraw::reparam::Limits;
use sigmadraw::slm::{sample_trajectory, MotorPlan};

fn main() -> sigmadraw::Result<()> {
    let mut plan = MotorPlan::through(&[
        [0.0, 0.0, 0.0],
        [60.0, 10.0, 0.0],
        [70.0, 70.0, 0.0],
        [10.0, 60.0, 0.0],
        [40.0, 30.0, 0.0],
    ])?;
    for s in &mut plan.strokes {
        s.delta = 0.9;
    }
    let traj = sample_trajectory(&plan, 2000)?;
    let report = comparison(&traj, &Limits::new(1e4, 100.0)?, 1000)?;
    print!("{}", report.to_text());
    println!();
    print!("{}", report.to_csv());
    Ok(())
}
