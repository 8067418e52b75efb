//! Fits a plan to a GML tag. Pass a path to a `.gml` file, or run without
//! arguments to use the bundled test fixture.

use std::path::PathBuf;

use sigmadraw::init::{dce_simplify, plan_from_polyline, Polyline};
use sigmadraw::io;
use sigmadraw::optimize::{optimize, LossConfig};
use sigmadraw::render::{hermite_to_bezier, rasterize, RadiusMap, RasterImage};
use sigmadraw::slm::{sample_trajectory, MotorPlan};

const SIZE: usize = 128;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/tag_loops.gml"));
    let text = std::fs::read_to_string(&path)?;
    let doc = io::parse_gml(&text)?;
    let trace = io::concatenate(&doc)?;
    let scale = |p: &[f64; 2]| [p[0] * SIZE as f64, p[1] * SIZE as f64];
    println!("{} strokes, {} points", doc.strokes.len(), trace.line.len());

    // target: every stroke drawn as the raw polyline
    let cfg = LossConfig::default();
    let mut target = RasterImage::zeros(SIZE, SIZE);
    for stroke in &doc.strokes {
        let pts: Vec<[f64; 3]> = stroke
            .points
            .iter()
            .map(|p| {
                let q = scale(p);
                [q[0], q[1], 0.0]
            })
            .collect();
        let traj = sample_trajectory(&MotorPlan::through(&pts)?, 8 * pts.len())?;
        let img = rasterize(&hermite_to_bezier(&traj, &RadiusMap::fixed(2.0)), SIZE, SIZE, 2.0)?;
        for (a, b) in target.data.iter_mut().zip(&img.data) {
            *a = a.max(*b);
        }
    }

    let line = Polyline::new(trace.line.points.iter().map(scale).collect(), None)?;
    let m = 16.min(line.len() - 1);
    let init = plan_from_polyline(&dce_simplify(&line, m)?)?;
    let (plan, trace) = optimize(&init, &target, &cfg)?;
    let (first, last) = (trace.records[0], trace.records[trace.len() - 1]);
    println!("m = {m}: loss {:.4e} -> {:.4e}", first.total, last.total);
    print!("{}", io::serialize_plan(&plan)?);
    Ok(())
}
