//! Initial motor plans: from traces via discrete curve evolution, or from
//! images via weighted Voronoi stippling joined by an open TSP tour.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::render::{Point2, RasterImage};
use crate::slm::{MotorPlan, VirtualTarget};

/// Ordered 2D points with optional time stamps.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub points: Vec<Point2>,
    pub times: Option<Vec<f64>>,
}

impl Polyline {
    pub fn new(points: Vec<Point2>, times: Option<Vec<f64>>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::domain(format!(
                "polyline needs at least 2 points, got {}",
                points.len()
            )));
        }
        if points.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::domain("polyline has non-finite coordinates"));
        }
        if let Some(t) = &times {
            if t.len() != points.len() {
                return Err(Error::Dimension(format!(
                    "{} time stamps for {} points",
                    t.len(),
                    points.len()
                )));
            }
        }
        Ok(Polyline { points, times })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| dist2(w[0], w[1])).sum()
    }

    fn select(&self, keep: &[usize]) -> Polyline {
        Polyline {
            points: keep.iter().map(|&i| self.points[i]).collect(),
            times: self.times.as_ref().map(|t| keep.iter().map(|&i| t[i]).collect()),
        }
    }
}

fn dist2(a: Point2, b: Point2) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Latecki-Lakämper relevance of vertex `v` between `a` and `b`.
pub fn dce_relevance(a: Point2, v: Point2, b: Point2) -> f64 {
    let l1 = dist2(a, v);
    let l2 = dist2(v, b);
    if l1 == 0.0 || l2 == 0.0 {
        return 0.0;
    }
    let h1 = (v[1] - a[1]).atan2(v[0] - a[0]);
    let h2 = (b[1] - v[1]).atan2(b[0] - v[0]);
    let mut turn = (h2 - h1).abs();
    if turn > std::f64::consts::PI {
        turn = std::f64::consts::TAU - turn;
    }
    turn * l1 * l2 / (l1 + l2)
}

/// Indices kept by discrete curve evolution down to `m_target + 1` vertices.
pub fn dce_indices(line: &Polyline, m_target: usize) -> Result<Vec<usize>> {
    let n = line.len();
    if m_target < 2 || m_target + 1 > n {
        return Err(Error::domain(format!(
            "cannot simplify {n} points to {} vertices",
            m_target + 1
        )));
    }
    let pts = &line.points;
    let mut prev: Vec<usize> = (0..n).map(|i| i.saturating_sub(1)).collect();
    let mut next: Vec<usize> = (0..n).map(|i| (i + 1).min(n - 1)).collect();
    let mut relevance: Vec<f64> = (0..n)
        .map(|i| {
            if i == 0 || i == n - 1 {
                f64::INFINITY
            } else {
                dce_relevance(pts[i - 1], pts[i], pts[i + 1])
            }
        })
        .collect();
    let mut alive = n;
    while alive > m_target + 1 {
        let (victim, _) = relevance.iter().enumerate().filter(|(_, r)| r.is_finite()).fold(
            (usize::MAX, f64::INFINITY),
            |best, (i, &r)| {
                if r < best.1 {
                    (i, r)
                } else {
                    best
                }
            },
        );
        let (a, b) = (prev[victim], next[victim]);
        next[a] = b;
        prev[b] = a;
        relevance[victim] = f64::NAN;
        for v in [a, b] {
            if v != 0 && v != n - 1 {
                relevance[v] = dce_relevance(pts[prev[v]], pts[v], pts[next[v]]);
            }
        }
        alive -= 1;
    }
    let mut keep = Vec::with_capacity(alive);
    let mut i = 0;
    loop {
        keep.push(i);
        if i == n - 1 {
            break;
        }
        i = next[i];
    }
    Ok(keep)
}

/// Discrete curve evolution: removes least-relevant interior vertices until
/// `m_target + 1` remain.
pub fn dce_simplify(line: &Polyline, m_target: usize) -> Result<Polyline> {
    Ok(line.select(&dce_indices(line, m_target)?))
}

/// Plan through the polyline's points with `dt = 1`, `delta = 0`, `T = 1`,
/// `Ac = 0.1` and zero heights.
pub fn plan_from_polyline(line: &Polyline) -> Result<MotorPlan> {
    let pts: Vec<[f64; 3]> = line.points.iter().map(|p| [p[0], p[1], 0.0]).collect();
    MotorPlan::new(pts[0], pts[1..].iter().copied().map(VirtualTarget::at).collect())
}

/// Saliency stand-in: `0.5 (1 - luminance) + 0.5 |Sobel|`, rescaled to `[0, 1]`.
pub fn importance_map(img: &RasterImage) -> RasterImage {
    let (w, h) = (img.width, img.height);
    let at = |x: isize, y: isize| -> f64 {
        let xc = x.clamp(0, w as isize - 1) as usize;
        let yc = y.clamp(0, h as isize - 1) as usize;
        img.get(xc, yc)
    };
    let mut raw = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let gx = at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1)
                - at(x - 1, y - 1)
                - 2.0 * at(x - 1, y)
                - at(x - 1, y + 1);
            let gy = at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1)
                - at(x - 1, y - 1)
                - 2.0 * at(x, y - 1)
                - at(x + 1, y - 1);
            let darkness = 1.0 - at(x, y);
            raw[y as usize * w + x as usize] = 0.5 * darkness + 0.5 * (gx * gx + gy * gy).sqrt();
        }
    }
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let data = if hi - lo > 1e-12 {
        raw.iter().map(|v| (v - lo) / (hi - lo)).collect()
    } else {
        vec![0.0; w * h]
    };
    RasterImage {
        width: w,
        height: h,
        data,
    }
}

/// Stopping rule of the Lloyd iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StippleOptions {
    pub max_iterations: usize,
    /// Stop once no point moves farther than this, pixels.
    pub tolerance: f64,
}

impl Default for StippleOptions {
    fn default() -> Self {
        StippleOptions {
            max_iterations: 50,
            tolerance: 0.1,
        }
    }
}

/// Stipple points and the largest point movement of every Lloyd iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct Stippling {
    pub points: Vec<Point2>,
    pub residuals: Vec<f64>,
}

/// Weighted Voronoi stippling of a density map.
pub fn voronoi_stipple(map: &RasterImage, k: usize, seed: u64) -> Result<Vec<Point2>> {
    Ok(stipple(map, k, seed, &StippleOptions::default())?.points)
}

pub fn stipple(map: &RasterImage, k: usize, seed: u64, opts: &StippleOptions) -> Result<Stippling> {
    if k == 0 {
        return Err(Error::domain("need at least one stipple point"));
    }
    let mass: f64 = map.data.iter().sum();
    if !(mass > 0.0) {
        return Err(Error::Degenerate("importance map has zero total mass".into()));
    }
    let w = map.width;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pick = WeightedIndex::new(&map.data).map_err(|e| Error::Degenerate(format!("importance map: {e}")))?;
    let mut points: Vec<Point2> = (0..k)
        .map(|_| {
            let i = pick.sample(&mut rng);
            [(i % w) as f64 + rng.gen::<f64>(), (i / w) as f64 + rng.gen::<f64>()]
        })
        .collect();

    let mut residuals = Vec::new();
    for _ in 0..opts.max_iterations {
        let owner = nearest_owner(map, &points);
        let mut acc = vec![[0.0f64; 3]; k];
        for (i, &o) in owner.iter().enumerate() {
            let d = map.data[i];
            if d > 0.0 {
                let a = &mut acc[o as usize];
                a[0] += d * ((i % w) as f64 + 0.5);
                a[1] += d * ((i / w) as f64 + 0.5);
                a[2] += d;
            }
        }
        let mut moved: f64 = 0.0;
        for (p, a) in points.iter_mut().zip(&acc) {
            if a[2] > 0.0 {
                let c = [a[0] / a[2], a[1] / a[2]];
                moved = moved.max(dist2(*p, c));
                *p = c;
            }
        }
        residuals.push(moved);
        if moved < opts.tolerance {
            break;
        }
    }
    Ok(Stippling { points, residuals })
}

/// Index of the nearest point for every pixel center (ties go to the lower index).
fn nearest_owner(map: &RasterImage, points: &[Point2]) -> Vec<u32> {
    let w = map.width;
    (0..map.data.len())
        .into_par_iter()
        .map(|i| {
            if map.data[i] <= 0.0 {
                return 0;
            }
            let p = [(i % w) as f64 + 0.5, (i / w) as f64 + 0.5];
            let mut best = (0u32, f64::INFINITY);
            for (j, q) in points.iter().enumerate() {
                let d = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
                if d < best.1 {
                    best = (j as u32, d);
                }
            }
            best.0
        })
        .collect()
}

/// Length of the open tour visiting `points` in `order`.
pub fn tour_length(points: &[Point2], order: &[usize]) -> f64 {
    order.windows(2).map(|w| dist2(points[w[0]], points[w[1]])).sum()
}

const MAX_TSP_MOVES: usize = 10_000;

/// Point sets up to this size are searched from every start city.
const MULTI_START_LIMIT: usize = 16;

/// Nearest-neighbour tour from a seeded start, improved by open-path 2-opt
/// and or-opt moves until none improves or the move budget is spent. Small
/// sets additionally try every other start and keep the shortest tour.
pub fn tsp_order(points: &[Point2], seed: u64) -> Result<Vec<usize>> {
    let n = points.len();
    if n < 2 {
        return Err(Error::domain("tsp_order needs at least 2 points"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = rng.gen_range(0..n);
    let mut best = improve_tour(points, nearest_neighbour_tour(points, start));
    if n <= MULTI_START_LIMIT {
        let mut best_len = tour_length(points, &best);
        for other in (0..n).filter(|&s| s != start) {
            let tour = improve_tour(points, nearest_neighbour_tour(points, other));
            let len = tour_length(points, &tour);
            if len < best_len - 1e-12 {
                best = tour;
                best_len = len;
            }
        }
    }
    Ok(best)
}

fn improve_tour(points: &[Point2], mut tour: Vec<usize>) -> Vec<usize> {
    let n = tour.len();
    let d = |i: usize, j: usize| dist2(points[i], points[j]);
    let mut moves = 0;
    let mut improved = true;
    while improved && moves < MAX_TSP_MOVES {
        improved = false;
        // 2-opt: reverse tour[i..=j]; edges at the open ends may be absent.
        'outer: for i in 0..n - 1 {
            for j in i + 1..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let before = if i > 0 { d(tour[i - 1], tour[i]) } else { 0.0 }
                    + if j + 1 < n { d(tour[j], tour[j + 1]) } else { 0.0 };
                let after = if i > 0 { d(tour[i - 1], tour[j]) } else { 0.0 }
                    + if j + 1 < n { d(tour[i], tour[j + 1]) } else { 0.0 };
                if after < before - 1e-12 {
                    tour[i..=j].reverse();
                    moves += 1;
                    improved = true;
                    if moves >= MAX_TSP_MOVES {
                        break 'outer;
                    }
                }
            }
        }
        if moves >= MAX_TSP_MOVES {
            break;
        }
        if or_opt_pass(points, &mut tour) {
            moves += 1;
            improved = true;
        }
    }
    tour
}

/// Or-opt: moves a run of up to three points, in either orientation, to its
/// best position elsewhere in the tour. Applies the first improving move.
fn or_opt_pass(points: &[Point2], tour: &mut Vec<usize>) -> bool {
    let n = tour.len();
    if n < 3 {
        return false;
    }
    let d = |i: usize, j: usize| dist2(points[i], points[j]);
    let gap = |a: Option<usize>, b: Option<usize>, first: usize, last: usize| -> f64 {
        match (a, b) {
            (Some(a), Some(b)) => d(a, first) + d(last, b) - d(a, b),
            (Some(a), None) => d(a, first),
            (None, Some(b)) => d(last, b),
            (None, None) => 0.0,
        }
    };
    for len in 1..=3.min(n - 1) {
        for i in 0..=n - len {
            let run: Vec<usize> = tour[i..i + len].to_vec();
            let prev = (i > 0).then(|| tour[i - 1]);
            let next = (i + len < n).then(|| tour[i + len]);
            let removal = -gap(prev, next, run[0], run[len - 1]);
            let mut rest = tour.clone();
            rest.drain(i..i + len);
            let mut best: Option<(usize, bool, f64)> = None;
            for pos in 0..=rest.len() {
                let left = (pos > 0).then(|| rest[pos - 1]);
                let right = (pos < rest.len()).then(|| rest[pos]);
                for reversed in [false, true] {
                    if pos == i && !reversed {
                        continue;
                    }
                    let (first, last) = if reversed {
                        (run[len - 1], run[0])
                    } else {
                        (run[0], run[len - 1])
                    };
                    let delta = removal + gap(left, right, first, last);
                    if delta < -1e-12 && best.map_or(true, |(_, _, b)| delta < b) {
                        best = Some((pos, reversed, delta));
                    }
                }
            }
            if let Some((pos, reversed, _)) = best {
                let mut run = run;
                if reversed {
                    run.reverse();
                }
                rest.splice(pos..pos, run);
                *tour = rest;
                return true;
            }
        }
    }
    false
}

fn nearest_neighbour_tour(points: &[Point2], start: usize) -> Vec<usize> {
    let n = points.len();
    let mut visited = vec![false; n];
    let mut tour = Vec::with_capacity(n);
    let mut cur = start;
    visited[cur] = true;
    tour.push(cur);
    for _ in 1..n {
        let mut best = (usize::MAX, f64::INFINITY);
        for (j, v) in visited.iter().enumerate() {
            if !v {
                let d = dist2(points[cur], points[j]);
                if d < best.1 {
                    best = (j, d);
                }
            }
        }
        cur = best.0;
        visited[cur] = true;
        tour.push(cur);
    }
    tour
}

/// Nearest-neighbour tour length from the same seeded start as [`tsp_order`].
pub fn nearest_neighbour_length(points: &[Point2], seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = rng.gen_range(0..points.len());
    tour_length(points, &nearest_neighbour_tour(points, start))
}
