//! Soft rasterization of sampled trajectories and the multi-scale image loss.
//!
//! A trajectory becomes one cubic Bézier per sample interval (Hermite form),
//! each cubic is flattened into line pieces, and every piece contributes a
//! smoothstep-edged capsule of ink. Pixels keep the maximum coverage over
//! all pieces, so the image stays in `[0, 1]` and the winning piece of each
//! pixel is all the backward pass needs.

use serde::{Deserialize, Serialize};

use crate::dual::{Dual, Real};
use crate::error::{Error, Result};
use crate::slm::{sample_trajectory, MotorPlan, Trajectory};

/// Width of the antialiasing band, in pixels.
pub const AA: f64 = 1.0;
/// Line pieces per cubic segment.
pub const FLATTEN: usize = 8;
/// Smallest radius produced by [`radius_map`].
pub const MIN_RADIUS: f64 = 0.1;
/// Default scales of the multi-scale loss.
pub const DEFAULT_SCALES: [usize; 4] = [1, 2, 4, 8];

pub type Point2 = [f64; 2];
pub type Cubic = [Point2; 4];

/// Single-channel image, row-major, y pointing down, values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl RasterImage {
    pub fn zeros(width: usize, height: usize) -> Self {
        RasterImage {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        RasterImage {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_data(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimension("image has a zero dimension".into()));
        }
        if data.len() != width * height {
            return Err(Error::Dimension(format!(
                "{} values for a {width}x{height} image",
                data.len()
            )));
        }
        if data.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::domain("image values must lie in [0, 1]"));
        }
        Ok(RasterImage { width, height, data })
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    pub fn same_size(&self, other: &RasterImage) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// `1 - value` per pixel; turns ink coverage into dark-on-white.
    pub fn inverted(&self) -> RasterImage {
        RasterImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| 1.0 - v).collect(),
        }
    }
}

/// Cubic segments plus per-sample stroke radii.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BezierPath {
    pub segments: Vec<Cubic>,
    /// One radius per segment endpoint (`segments.len() + 1`), or empty for
    /// a uniform radius chosen at rasterization time.
    pub radii: Vec<f64>,
}

impl BezierPath {
    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    fn radius(&self, seg: usize, end: usize, base: f64) -> f64 {
        if self.radii.is_empty() {
            base
        } else {
            self.radii[seg + end]
        }
    }
}

/// Linear height-to-radius mapping, `radius = base + gain * z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusMap {
    /// Pixels per height unit.
    pub gain: f64,
    /// Radius at zero height, pixels.
    pub base: f64,
}

impl RadiusMap {
    /// Uniform width, independent of height.
    pub fn fixed(radius: f64) -> Self {
        RadiusMap {
            gain: 0.0,
            base: radius,
        }
    }

    pub fn radius(&self, z: f64) -> f64 {
        radius_map(z, self.gain, self.base)
    }

    /// Derivative of the radius with respect to `z` (zero on the clamp).
    pub fn slope(&self, z: f64) -> f64 {
        if self.base + self.gain * z > MIN_RADIUS {
            self.gain
        } else {
            0.0
        }
    }
}

/// Stroke radius for height `z`, floored at [`MIN_RADIUS`].
pub fn radius_map(z: f64, k: f64, w0: f64) -> f64 {
    (w0 + k * z).max(MIN_RADIUS)
}

/// One cubic per sample interval with tangents `dt/3 * velocity`.
pub fn hermite_to_bezier(traj: &Trajectory, radius: &RadiusMap) -> BezierPath {
    let n = traj.len();
    let third = traj.step() / 3.0;
    let segments = (0..n.saturating_sub(1))
        .map(|k| {
            let (x0, x1) = (traj.x[k], traj.x[k + 1]);
            let (v0, v1) = (traj.v[k], traj.v[k + 1]);
            [
                [x0[0], x0[1]],
                [x0[0] + third * v0[0], x0[1] + third * v0[1]],
                [x1[0] - third * v1[0], x1[1] - third * v1[1]],
                [x1[0], x1[1]],
            ]
        })
        .collect();
    let radii = traj.x.iter().map(|x| radius.radius(x[2])).collect();
    BezierPath { segments, radii }
}

#[inline]
pub fn bernstein(u: f64) -> [f64; 4] {
    let v = 1.0 - u;
    [v * v * v, 3.0 * v * v * u, 3.0 * v * u * u, u * u * u]
}

pub fn eval_cubic(c: &Cubic, u: f64) -> Point2 {
    let b = bernstein(u);
    [
        b[0] * c[0][0] + b[1] * c[1][0] + b[2] * c[2][0] + b[3] * c[3][0],
        b[0] * c[0][1] + b[1] * c[1][1] + b[2] * c[2][1] + b[3] * c[3][1],
    ]
}

/// A flattened line piece of a cubic.
#[derive(Debug, Clone, Copy)]
struct Piece {
    a: Point2,
    b: Point2,
    ra: f64,
    rb: f64,
}

fn flatten(path: &BezierPath, base_radius: f64) -> Result<Vec<Piece>> {
    if !path.radii.is_empty() && path.radii.len() != path.segments.len() + 1 {
        return Err(Error::Dimension(format!(
            "{} radii for {} segments",
            path.radii.len(),
            path.segments.len()
        )));
    }
    if path.radii.is_empty() && !(base_radius > 0.0) {
        return Err(Error::domain(format!("radius {base_radius} must be positive")));
    }
    if let Some(r) = path.radii.iter().find(|r| !(**r > 0.0)) {
        return Err(Error::domain(format!("radius {r} must be positive")));
    }
    let mut pieces = Vec::with_capacity(path.segments.len() * FLATTEN);
    for (s, cubic) in path.segments.iter().enumerate() {
        let (r0, r1) = (path.radius(s, 0, base_radius), path.radius(s, 1, base_radius));
        let mut prev = cubic[0];
        for j in 0..FLATTEN {
            let (u0, u1) = (j as f64 / FLATTEN as f64, (j + 1) as f64 / FLATTEN as f64);
            let next = if j + 1 == FLATTEN {
                cubic[3]
            } else {
                eval_cubic(cubic, u1)
            };
            pieces.push(Piece {
                a: prev,
                b: next,
                ra: r0 + u0 * (r1 - r0),
                rb: r0 + u1 * (r1 - r0),
            });
            prev = next;
        }
    }
    Ok(pieces)
}

#[inline]
fn smoothstep<T: Real>(x: T) -> T {
    if x.val() <= 0.0 {
        T::cst(0.0)
    } else if x.val() >= 1.0 {
        T::cst(1.0)
    } else {
        x * x * (x * -2.0 + 3.0)
    }
}

/// Coverage of pixel center `p` by a capsule from `a` to `b` whose radius
/// varies linearly along its length.
#[inline]
fn coverage<T: Real>(p: Point2, a: [T; 2], b: [T; 2], ra: T, rb: T) -> T {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [T::cst(p[0]) - a[0], T::cst(p[1]) - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let tau = if len2.val() < 1e-18 {
        T::cst(0.0)
    } else {
        let raw = (ap[0] * ab[0] + ap[1] * ab[1]) / len2;
        if raw.val() <= 0.0 {
            T::cst(0.0)
        } else if raw.val() >= 1.0 {
            T::cst(1.0)
        } else {
            raw
        }
    };
    let off = [ap[0] - tau * ab[0], ap[1] - tau * ab[1]];
    let d2 = off[0] * off[0] + off[1] * off[1];
    let dist = if d2.val() < 1e-24 { T::cst(0.0) } else { d2.sqrt() };
    let r = ra + tau * (rb - ra);
    smoothstep((r + AA - dist) / (2.0 * AA))
}

/// Rasterized image plus, per pixel, the index of the winning piece.
struct Raster {
    image: RasterImage,
    winners: Vec<u32>,
}

const NO_WINNER: u32 = u32::MAX;

fn raster_pieces(pieces: &[Piece], width: usize, height: usize) -> Raster {
    let mut image = RasterImage::zeros(width, height);
    let mut winners = vec![NO_WINNER; width * height];
    for (idx, pc) in pieces.iter().enumerate() {
        let reach = pc.ra.max(pc.rb) + AA;
        let x_lo = (pc.a[0].min(pc.b[0]) - reach - 0.5).ceil().max(0.0);
        let x_hi = (pc.a[0].max(pc.b[0]) + reach - 0.5).floor();
        let y_lo = (pc.a[1].min(pc.b[1]) - reach - 0.5).ceil().max(0.0);
        let y_hi = (pc.a[1].max(pc.b[1]) + reach - 0.5).floor();
        if x_hi < 0.0 || y_hi < 0.0 || !(x_lo.is_finite() && y_lo.is_finite()) {
            continue;
        }
        let (x_lo, y_lo) = (x_lo as usize, y_lo as usize);
        let x_hi = (x_hi as usize).min(width - 1);
        let y_hi = (y_hi as usize).min(height - 1);
        for y in y_lo..=y_hi {
            for x in x_lo..=x_hi {
                let c = coverage([x as f64 + 0.5, y as f64 + 0.5], pc.a, pc.b, pc.ra, pc.rb);
                let i = y * width + x;
                if c > image.data[i] {
                    image.data[i] = c;
                    winners[i] = idx as u32;
                }
            }
        }
    }
    Raster { image, winners }
}

fn check_canvas(width: usize, height: usize) -> Result<()> {
    if width < 8 || height < 8 {
        return Err(Error::Dimension(format!("canvas {width}x{height} is smaller than 8x8")));
    }
    Ok(())
}

/// Ink coverage of `path` on a `width` x `height` canvas. `base_radius` is
/// used when the path carries no radii.
pub fn rasterize(path: &BezierPath, width: usize, height: usize, base_radius: f64) -> Result<RasterImage> {
    check_canvas(width, height)?;
    let pieces = flatten(path, base_radius)?;
    Ok(raster_pieces(&pieces, width, height).image)
}

/// Gradient of a scalar with respect to a path's control points and radii.
#[derive(Debug, Clone, PartialEq)]
pub struct PathGradient {
    pub segments: Vec<Cubic>,
    pub radii: Vec<f64>,
}

/// A rasterization plus what its backward pass needs: given `dL/dimage`,
/// [`RasterTape::backward`] yields `dL/dpath`.
pub struct RasterTape {
    pieces: Vec<Piece>,
    raster: Raster,
    n_segments: usize,
    uniform: bool,
}

impl RasterTape {
    pub fn record(path: &BezierPath, width: usize, height: usize, base_radius: f64) -> Result<Self> {
        check_canvas(width, height)?;
        let pieces = flatten(path, base_radius)?;
        let raster = raster_pieces(&pieces, width, height);
        Ok(RasterTape {
            pieces,
            raster,
            n_segments: path.segments.len(),
            uniform: path.radii.is_empty(),
        })
    }

    pub fn image(&self) -> &RasterImage {
        &self.raster.image
    }

    pub fn backward(&self, grad_image: &[f64]) -> PathGradient {
        let width = self.raster.image.width;
        let mut piece_grad = vec![[0.0f64; 6]; self.pieces.len()];
        for (i, (&g, &w)) in grad_image.iter().zip(&self.raster.winners).enumerate() {
            if g == 0.0 || w == NO_WINNER {
                continue;
            }
            let pc = &self.pieces[w as usize];
            let p = [(i % width) as f64 + 0.5, (i / width) as f64 + 0.5];
            let c = coverage::<Dual<6>>(
                p,
                [Dual::var(pc.a[0], 0), Dual::var(pc.a[1], 1)],
                [Dual::var(pc.b[0], 2), Dual::var(pc.b[1], 3)],
                Dual::var(pc.ra, 4),
                Dual::var(pc.rb, 5),
            );
            for (acc, d) in piece_grad[w as usize].iter_mut().zip(c.g) {
                *acc += g * d;
            }
        }

        let mut segments = vec![[[0.0; 2]; 4]; self.n_segments];
        let mut radii = if self.uniform {
            Vec::new()
        } else {
            vec![0.0; self.n_segments + 1]
        };
        for (idx, g) in piece_grad.iter().enumerate() {
            let (s, j) = (idx / FLATTEN, idx % FLATTEN);
            let u0 = j as f64 / FLATTEN as f64;
            let u1 = (j + 1) as f64 / FLATTEN as f64;
            let (b0, b1) = (bernstein(u0), bernstein(u1));
            for c in 0..4 {
                segments[s][c][0] += b0[c] * g[0] + b1[c] * g[2];
                segments[s][c][1] += b0[c] * g[1] + b1[c] * g[3];
            }
            if !self.uniform {
                radii[s] += (1.0 - u0) * g[4] + (1.0 - u1) * g[5];
                radii[s + 1] += u0 * g[4] + u1 * g[5];
            }
        }
        PathGradient { segments, radii }
    }
}

// ---------------------------------------------------------------------------
// multi-scale loss

fn gauss_kernel() -> [f64; 3] {
    let e = (-0.5f64).exp();
    let s = 1.0 + 2.0 * e;
    [e / s, 1.0 / s, e / s]
}

/// 3x3 Gaussian blur (sigma = 1) with replicated borders.
pub fn blur(data: &[f64], width: usize, height: usize) -> Vec<f64> {
    let k = gauss_kernel();
    let mut tmp = vec![0.0; data.len()];
    for y in 0..height {
        for x in 0..width {
            let xm = x.saturating_sub(1);
            let xp = (x + 1).min(width - 1);
            let row = y * width;
            tmp[row + x] = k[0] * data[row + xm] + k[1] * data[row + x] + k[2] * data[row + xp];
        }
    }
    let mut out = vec![0.0; data.len()];
    for y in 0..height {
        let ym = y.saturating_sub(1);
        let yp = (y + 1).min(height - 1);
        for x in 0..width {
            out[y * width + x] = k[0] * tmp[ym * width + x] + k[1] * tmp[y * width + x] + k[2] * tmp[yp * width + x];
        }
    }
    out
}

/// Transpose of [`blur`].
fn blur_adjoint(grad: &[f64], width: usize, height: usize) -> Vec<f64> {
    let k = gauss_kernel();
    let mut tmp = vec![0.0; grad.len()];
    for y in 0..height {
        let ym = y.saturating_sub(1);
        let yp = (y + 1).min(height - 1);
        for x in 0..width {
            let g = grad[y * width + x];
            tmp[ym * width + x] += k[0] * g;
            tmp[y * width + x] += k[1] * g;
            tmp[yp * width + x] += k[2] * g;
        }
    }
    let mut out = vec![0.0; grad.len()];
    for y in 0..height {
        let row = y * width;
        for x in 0..width {
            let g = tmp[row + x];
            out[row + x.saturating_sub(1)] += k[0] * g;
            out[row + x] += k[1] * g;
            out[row + (x + 1).min(width - 1)] += k[2] * g;
        }
    }
    out
}

fn pool(data: &[f64], width: usize, height: usize, s: usize) -> Vec<f64> {
    let (w, h) = (width / s, height / s);
    let norm = 1.0 / (s * s) as f64;
    let mut out = vec![0.0; w * h];
    for y in 0..height {
        for x in 0..width {
            out[(y / s) * w + x / s] += data[y * width + x] * norm;
        }
    }
    out
}

fn check_scales(img: &RasterImage, target: &RasterImage, scales: &[usize]) -> Result<()> {
    if !img.same_size(target) {
        return Err(Error::Dimension(format!(
            "image is {}x{} but target is {}x{}",
            img.width, img.height, target.width, target.height
        )));
    }
    for &s in scales {
        if s == 0 || img.width % s != 0 || img.height % s != 0 {
            return Err(Error::Dimension(format!(
                "scale {s} does not divide {}x{}",
                img.width, img.height
            )));
        }
    }
    Ok(())
}

/// Sum over scales of the MSE between blurred, average-pooled images.
pub fn multiscale_mse(img: &RasterImage, target: &RasterImage, scales: &[usize]) -> Result<f64> {
    Ok(multiscale_mse_grad(img, target, scales)?.0)
}

/// [`multiscale_mse`] and its gradient with respect to `img`.
pub fn multiscale_mse_grad(img: &RasterImage, target: &RasterImage, scales: &[usize]) -> Result<(f64, Vec<f64>)> {
    check_scales(img, target, scales)?;
    let (w, h) = (img.width, img.height);
    let a = blur(&img.data, w, h);
    let b = blur(&target.data, w, h);
    let mut loss = 0.0;
    let mut grad_blurred = vec![0.0; a.len()];
    for &s in scales {
        let pa = pool(&a, w, h, s);
        let pb = pool(&b, w, h, s);
        let count = pa.len() as f64;
        let mut sum = 0.0;
        let pw = w / s;
        let norm = 1.0 / (s * s) as f64;
        let diffs: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| x - y).collect();
        for d in &diffs {
            sum += d * d;
        }
        loss += sum / count;
        for y in 0..h {
            for x in 0..w {
                grad_blurred[y * w + x] += 2.0 * diffs[(y / s) * pw + x / s] / count * norm;
            }
        }
    }
    Ok((loss, blur_adjoint(&grad_blurred, w, h)))
}

/// How a plan is turned into pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderConfig {
    pub width: usize,
    pub height: usize,
    /// Trajectory samples per stroke (`n = samples_per_stroke * m`).
    pub samples_per_stroke: usize,
    pub radius: RadiusMap,
}

impl RenderConfig {
    pub fn new(width: usize, height: usize, radius: f64) -> Self {
        RenderConfig {
            width,
            height,
            samples_per_stroke: 5,
            radius: RadiusMap::fixed(radius),
        }
    }

    pub fn samples(&self, m: usize) -> usize {
        (self.samples_per_stroke * m).max(2)
    }
}

/// Samples, converts and rasterizes a plan.
pub fn render_plan(plan: &MotorPlan, cfg: &RenderConfig) -> Result<RasterImage> {
    let traj = sample_trajectory(plan, cfg.samples(plan.m()))?;
    let path = hermite_to_bezier(&traj, &cfg.radius);
    rasterize(&path, cfg.width, cfg.height, cfg.radius.base)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::slm::{sample_trajectory, MotorPlan};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line(a: Point2, b: Point2) -> Cubic {
        let p1 = [a[0] + (b[0] - a[0]) / 3.0, a[1] + (b[1] - a[1]) / 3.0];
        let p2 = [a[0] + 2.0 * (b[0] - a[0]) / 3.0, a[1] + 2.0 * (b[1] - a[1]) / 3.0];
        [a, p1, p2, b]
    }

    fn random_path(rng: &mut ChaCha8Rng, n: usize, size: f64) -> BezierPath {
        let mut segments = Vec::new();
        let mut prev = [rng.gen_range(8.0..size - 8.0), rng.gen_range(8.0..size - 8.0)];
        for _ in 0..n {
            let mut c = [prev; 4];
            for p in c.iter_mut().skip(1) {
                *p = [rng.gen_range(8.0..size - 8.0), rng.gen_range(8.0..size - 8.0)];
            }
            prev = c[3];
            segments.push(c);
        }
        let radii = (0..=n).map(|_| rng.gen_range(1.0..3.0)).collect();
        BezierPath { segments, radii }
    }

    #[test]
    fn radius_map_cases() {
        assert_eq!(radius_map(0.0, 2.0, 1.5), 1.5);
        assert_eq!(radius_map(-1.5 / 2.0, 2.0, 1.5), MIN_RADIUS);
        assert_eq!(radius_map(3.0, 2.0, 1.0), 7.0);
    }

    #[test]
    fn hermite_of_constant_velocity_is_evenly_spaced() {
        let traj = Trajectory::new(
            vec![0.0, 1.0, 2.0],
            vec![[0.0, 0.0, 0.0], [3.0, 6.0, 0.0], [6.0, 12.0, 0.0]],
            vec![[3.0, 6.0, 0.0]; 3],
            vec![[0.0; 3]; 3],
        )
        .unwrap();
        let path = hermite_to_bezier(&traj, &RadiusMap::fixed(2.0));
        assert_eq!(path.segments.len(), 2);
        let c = path.segments[0];
        assert_eq!(c, [[0.0, 0.0], [1.0, 2.0], [2.0, 4.0], [3.0, 6.0]]);
        assert_eq!(path.segments[1][0], c[3]);
        assert_eq!(path.radii, vec![2.0; 3]);

        let still = Trajectory::new(
            vec![0.0, 0.5],
            vec![[1.0, 2.0, 0.0], [4.0, 6.0, 0.0]],
            vec![[0.0; 3]; 2],
            vec![[0.0; 3]; 2],
        )
        .unwrap();
        let c = hermite_to_bezier(&still, &RadiusMap::fixed(1.0)).segments[0];
        assert_eq!(c[1], c[0]);
        assert_eq!(c[2], c[3]);
    }

    fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
        let ab = [b[0] - a[0], b[1] - a[1]];
        let len2 = ab[0] * ab[0] + ab[1] * ab[1];
        let t = if len2 == 0.0 {
            0.0
        } else {
            (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0)
        };
        let q = [a[0] + t * ab[0] - p[0], a[1] + t * ab[1] - p[1]];
        (q[0] * q[0] + q[1] * q[1]).sqrt()
    }

    #[test]
    fn hermite_cubics_follow_dense_trajectory() {
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            // random walk with 15..35 px steps, the stroke scale of an m=8 fit on 128 px
            let mut pts = vec![[64.0, 64.0, 0.0]];
            for _ in 0..8 {
                let last = pts[pts.len() - 1];
                let ang: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let len = rng.gen_range(15.0..35.0);
                pts.push([last[0] + len * ang.cos(), last[1] + len * ang.sin(), 0.0]);
            }
            let mut plan = MotorPlan::through(&pts).unwrap();
            for s in &mut plan.strokes {
                s.delta = rng.gen_range(-1.0..1.0);
                s.dt = rng.gen_range(0.5..1.2);
            }
            let coarse = sample_trajectory(&plan, 5 * 8).unwrap();
            let dense = sample_trajectory(&plan, 100 * 8).unwrap();
            let path = hermite_to_bezier(&coarse, &RadiusMap::fixed(1.0));
            let poly: Vec<Point2> = dense.x.iter().map(|x| [x[0], x[1]]).collect();
            let mut worst: f64 = 0.0;
            for c in &path.segments {
                for j in 0..16 {
                    let p = eval_cubic(c, j as f64 / 15.0);
                    let d = poly
                        .windows(2)
                        .map(|w| point_segment_distance(p, w[0], w[1]))
                        .fold(f64::INFINITY, f64::min);
                    worst = worst.max(d);
                }
            }
            assert!(worst < 0.5, "seed {seed}: max deviation {worst}");
        }
    }

    #[test]
    fn empty_path_renders_blank() {
        let img = rasterize(&BezierPath::default(), 16, 16, 1.0).unwrap();
        assert!(img.data.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn horizontal_segment_distance_field() {
        let path = BezierPath {
            segments: vec![line([2.5, 8.5], [13.5, 8.5])],
            radii: vec![],
        };
        let img = rasterize(&path, 16, 16, 2.0).unwrap();
        for x in 2..14 {
            assert_eq!(img.get(x, 8), 1.0);
        }
        for y in 0..16 {
            for x in 0..16 {
                let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
                let d = point_segment_distance([px, py], [2.5, 8.5], [13.5, 8.5]);
                if d >= 3.5 {
                    assert_eq!(img.get(x, y), 0.0);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_radii_and_tiny_canvas() {
        let path = BezierPath {
            segments: vec![line([2.0, 2.0], [6.0, 6.0])],
            radii: vec![1.0, 0.0],
        };
        assert!(matches!(rasterize(&path, 16, 16, 1.0), Err(Error::Domain(_))));
        let path = BezierPath {
            segments: path.segments,
            radii: vec![],
        };
        assert!(matches!(rasterize(&path, 16, 16, -1.0), Err(Error::Domain(_))));
        assert!(rasterize(&path, 4, 16, 1.0).is_err());
    }

    #[test]
    fn coverage_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let path = random_path(&mut rng, 3, 48.0);
        let tape = RasterTape::record(&path, 48, 48, 1.0).unwrap();
        let ones = vec![1.0; 48 * 48];
        let grad = tape.backward(&ones);
        let total = |p: &BezierPath| -> f64 { rasterize(p, 48, 48, 1.0).unwrap().data.iter().sum() };
        let h = 1e-3;
        for s in 0..3 {
            for c in 0..4 {
                for k in 0..2 {
                    let mut plus = path.clone();
                    let mut minus = path.clone();
                    // keep shared endpoints shared
                    let bump = |p: &mut BezierPath, by: f64| {
                        p.segments[s][c][k] += by;
                        if c == 3 && s + 1 < 3 {
                            p.segments[s + 1][0][k] += by;
                        }
                        if c == 0 && s > 0 {
                            p.segments[s - 1][3][k] += by;
                        }
                    };
                    bump(&mut plus, h);
                    bump(&mut minus, -h);
                    let fd = (total(&plus) - total(&minus)) / (2.0 * h);
                    let mut an = grad.segments[s][c][k];
                    if c == 3 && s + 1 < 3 {
                        an += grad.segments[s + 1][0][k];
                    }
                    if c == 0 && s > 0 {
                        an += grad.segments[s - 1][3][k];
                    }
                    assert!(
                        (an - fd).abs() <= 1e-3 * fd.abs().max(an.abs()) + 1e-6,
                        "segment {s} point {c} axis {k}: {an} vs {fd}"
                    );
                }
            }
        }
        for r in 0..4 {
            let mut plus = path.clone();
            let mut minus = path.clone();
            plus.radii[r] += h;
            minus.radii[r] -= h;
            let fd = (total(&plus) - total(&minus)) / (2.0 * h);
            assert!((grad.radii[r] - fd).abs() <= 1e-3 * fd.abs() + 1e-6, "radius {r}");
        }
    }

    #[test]
    fn raster_is_bounded_order_free_and_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let path = random_path(&mut rng, 6, 64.0);
        let img = rasterize(&path, 64, 64, 1.0).unwrap();
        assert!(img.data.iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(img.data.iter().any(|v| *v > 0.0));
        assert_eq!(img, rasterize(&path, 64, 64, 1.0).unwrap());

        let mut reversed = path.clone();
        reversed.segments.reverse();
        reversed.radii.reverse();
        for c in &mut reversed.segments {
            c.reverse();
        }
        let rev = rasterize(&reversed, 64, 64, 1.0).unwrap();
        for (a, b) in img.data.iter().zip(&rev.data) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn integer_shift_shifts_the_image() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut path = random_path(&mut rng, 4, 40.0);
        let img = rasterize(&path, 64, 64, 1.0).unwrap();
        for c in &mut path.segments {
            for p in c.iter_mut() {
                p[0] += 7.0;
                p[1] += 3.0;
            }
        }
        let moved = rasterize(&path, 64, 64, 1.0).unwrap();
        for y in 0..50 {
            for x in 0..50 {
                assert!((img.get(x, y) - moved.get(x + 7, y + 3)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mse_basic_cases() {
        let zeros = RasterImage::zeros(16, 16);
        let ones = RasterImage::filled(16, 16, 1.0);
        assert_eq!(multiscale_mse(&ones, &ones, &[1, 2, 4]).unwrap(), 0.0);
        assert!((multiscale_mse(&zeros, &ones, &[1]).unwrap() - 1.0).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let a = RasterImage::from_data(16, 16, (0..256).map(|_| rng.gen()).collect()).unwrap();
        let b = RasterImage::from_data(16, 16, (0..256).map(|_| rng.gen()).collect()).unwrap();
        let mut prev = 0.0;
        for k in 1..=4 {
            let scales: Vec<usize> = [1, 2, 4, 8][..k].to_vec();
            let l = multiscale_mse(&a, &b, &scales).unwrap();
            assert!(l >= prev);
            assert_eq!(l, multiscale_mse(&b, &a, &scales).unwrap());
            prev = l;
        }
        assert!(matches!(
            multiscale_mse(&a, &RasterImage::zeros(8, 8), &[1]),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(multiscale_mse(&a, &b, &[3]), Err(Error::Dimension(_))));
    }

    #[test]
    fn blur_adjoint_is_the_transpose() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let (w, h) = (7, 5);
        let x: Vec<f64> = (0..w * h).map(|_| rng.gen()).collect();
        let y: Vec<f64> = (0..w * h).map(|_| rng.gen()).collect();
        let lhs: f64 = blur(&x, w, h).iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.iter().zip(blur_adjoint(&y, w, h)).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn mse_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let a = RasterImage::from_data(16, 16, (0..256).map(|_| rng.gen()).collect()).unwrap();
        let b = RasterImage::from_data(16, 16, (0..256).map(|_| rng.gen()).collect()).unwrap();
        let scales = [1, 2, 4];
        let (_, g) = multiscale_mse_grad(&a, &b, &scales).unwrap();
        for i in [0, 17, 100, 255] {
            let mut p = a.clone();
            let mut m = a.clone();
            p.data[i] += 1e-6;
            m.data[i] -= 1e-6;
            let fd = (multiscale_mse(&p, &b, &scales).unwrap() - multiscale_mse(&m, &b, &scales).unwrap()) / 2e-6;
            assert!((fd - g[i]).abs() < 1e-8);
        }
    }
}
