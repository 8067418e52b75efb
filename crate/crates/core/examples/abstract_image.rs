//! Abstracts a synthetic image into one continuous stroke: importance map,
//! stippling, an open tour through the stipples, then optimization.

use sigmadraw::cli::tour_plan;
use sigmadraw::init::importance_map;
use sigmadraw::optimize::{optimize, LossConfig};
use sigmadraw::render::RasterImage;

fn main() -> sigmadraw::Result<()> {
    // luminance image: white paper, a dark disc and a grey bar
    let mut img = RasterImage::filled(96, 96, 1.0);
    for y in 0..96 {
        for x in 0..96 {
            let r = ((x as f64 - 35.0).powi(2) + (y as f64 - 40.0).powi(2)).sqrt();
            if r < 18.0 {
                img.set(x, y, 0.1);
            } else if (60..85).contains(&x) && (20..80).contains(&y) {
                img.set(x, y, 0.5);
            }
        }
    }
    let map = importance_map(&img);
    let k = 40;
    let init = tour_plan(&map, k + 1, 7)?;
    let cfg = LossConfig {
        lambda: 0.1,
        steps: 150,
        ..LossConfig::default()
    };
    let (plan, trace) = optimize(&init, &map, &cfg)?;
    println!(
        "m = {}, loss {:.4e} -> {:.4e}",
        plan.m(),
        trace.records[0].total,
        trace.records[trace.len() - 1].total
    );
    Ok(())
}
