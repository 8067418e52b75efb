//! Renders a known plan, initializes from a DCE simplification of its dense
//! trace and recovers the virtual targets by gradient descent.

use sigmadraw::init::{dce_simplify, plan_from_polyline, Polyline};
use sigmadraw::optimize::{optimize, LossConfig};
use sigmadraw::render::{multiscale_mse, render_plan};
use sigmadraw::slm::{sample_trajectory, MotorPlan};

fn main() -> sigmadraw::Result<()> {
    let mut known = MotorPlan::through(&[
        [30.0, 64.0, 0.0],
        [60.0, 30.0, 0.0],
        [95.0, 50.0, 0.0],
        [80.0, 90.0, 0.0],
        [40.0, 100.0, 0.0],
    ])?;
    for (i, s) in known.strokes.iter_mut().enumerate() {
        s.delta = if i % 2 == 0 { 0.4 } else { -0.3 };
        s.dt = 0.8 + 0.05 * i as f64;
    }

    let cfg = LossConfig {
        lambda: 1e-4,
        ..LossConfig::default()
    };
    let rc = cfg.render_config(128, 128);
    let target = render_plan(&known, &rc)?;

    let dense = sample_trajectory(&known, 400)?;
    let line = Polyline::new(dense.x.iter().map(|x| [x[0], x[1]]).collect(), None)?;
    let init = plan_from_polyline(&dce_simplify(&line, known.m())?)?;

    let (fit, trace) = optimize(&init, &target, &cfg)?;
    let before = multiscale_mse(&render_plan(&init, &rc)?, &target, &cfg.scales)?;
    let after = multiscale_mse(&render_plan(&fit, &rc)?, &target, &cfg.scales)?;
    println!("{} steps, image loss {before:.3e} -> {after:.3e}", trace.len());
    for (a, b) in known.positions().iter().zip(fit.positions()) {
        println!(
            "  target ({:6.2}, {:6.2})  fit ({:6.2}, {:6.2})",
            a[0], a[1], b[0], b[1]
        );
    }
    Ok(())
}
