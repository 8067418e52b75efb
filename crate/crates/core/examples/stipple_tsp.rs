//! Weighted Voronoi stippling of a radial density and an open tour through
//! the stipples, compared with the nearest-neighbour tour.

use sigmadraw::init::{nearest_neighbour_length, stipple, tour_length, tsp_order, StippleOptions};
use sigmadraw::render::RasterImage;

fn main() -> sigmadraw::Result<()> {
    let mut map = RasterImage::zeros(128, 128);
    for y in 0..128 {
        for x in 0..128 {
            let r = ((x as f64 - 64.0).powi(2) + (y as f64 - 64.0).powi(2)).sqrt();
            map.set(x, y, (-r * r / 1200.0).exp());
        }
    }
    let st = stipple(&map, 200, 3, &StippleOptions::default())?;
    println!(
        "{} Lloyd iterations, last move {:.3} px",
        st.residuals.len(),
        st.residuals.last().unwrap()
    );
    let order = tsp_order(&st.points, 3)?;
    println!(
        "tour {:.1} px, nearest neighbour {:.1} px",
        tour_length(&st.points, &order),
        nearest_neighbour_length(&st.points, 3)
    );
    Ok(())
}
