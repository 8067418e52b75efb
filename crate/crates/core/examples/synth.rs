//! Samples a three-stroke plan and writes the trajectory, SVG and a PGM
//! render to a temporary directory.

use sigmadraw::io;
use sigmadraw::render::{hermite_to_bezier, rasterize, RadiusMap};
use sigmadraw::slm::{sample_trajectory, MotorPlan};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut plan = MotorPlan::through(&[
        [40.0, 200.0, 0.0],
        [110.0, 60.0, 0.0],
        [170.0, 190.0, 0.0],
        [220.0, 80.0, 0.0],
    ])?;
    plan.strokes[1].delta = 1.2;
    plan.strokes[2].delta = -0.8;
    plan.strokes[2].dt = 0.6;

    let traj = sample_trajectory(&plan, 400)?;
    let peak = traj.speeds().into_iter().fold(0.0, f64::max);
    println!(
        "{} samples over {:.3} s, peak speed {:.1} px/s",
        traj.len(),
        traj.duration(),
        peak
    );

    let path = hermite_to_bezier(&traj, &RadiusMap::fixed(2.5));
    let img = rasterize(&path, 256, 256, 2.5)?;

    let dir = std::env::temp_dir().join("sigmadraw-synth");
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("trajectory.json"), io::serialize_trajectory(&traj)?)?;
    std::fs::write(dir.join("path.svg"), io::export_svg(&path, 256, 256))?;
    io::write_image(&img.inverted(), dir.join("render.pgm"))?;
    println!("wrote {}", dir.display());
    Ok(())
}
