//! Closed-form sigma-lognormal kinematics.
//!
//! A [`MotorPlan`] is an initial point followed by virtual targets. Each
//! consecutive pair defines a stroke whose speed follows a lognormal and
//! whose planar component sweeps a circular arc of turning angle `delta`.
//! Position, velocity and acceleration of every stroke have closed forms,
//! so trajectories are sampled without numerical integration.

use std::f64::consts::{PI, SQRT_2};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dual::Real;
use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

/// Softening of the lognormal time argument, in seconds.
pub const PHI_EPS: f64 = 1e-6;
/// Below this turning angle (radians) the arc formula is replaced by its series.
pub const ARC_EPS: f64 = 1e-4;
/// Turning angles are clamped to `±DELTA_LIMIT` before use.
pub const DELTA_LIMIT: f64 = 0.99 * PI;
/// Default stroke duration `T` in seconds.
pub const DEFAULT_DURATION: f64 = 1.0;
/// Default lognormal shape parameter.
pub const DEFAULT_AC: f64 = 0.1;

/// One via-point of a motor plan with the timing and shape of the stroke
/// that reaches it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VirtualTarget {
    pub p: Vec3,
    /// Turning angle of the arc, radians.
    pub delta: f64,
    /// Relative activation offset with respect to the previous stroke.
    pub dt: f64,
    /// Stroke duration `T`, seconds.
    #[serde(rename = "T")]
    pub duration: f64,
    /// Shape parameter in (0, 1).
    #[serde(rename = "Ac")]
    pub ac: f64,
}

impl VirtualTarget {
    /// Target at `p` with the default timing (`dt = 1`, `delta = 0`, `T = 1`, `Ac = 0.1`).
    pub fn at(p: Vec3) -> Self {
        VirtualTarget {
            p,
            delta: 0.0,
            dt: 1.0,
            duration: DEFAULT_DURATION,
            ac: DEFAULT_AC,
        }
    }
}

/// Initial position plus an ordered, nonempty list of virtual targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotorPlan {
    pub p0: Vec3,
    pub strokes: Vec<VirtualTarget>,
}

impl MotorPlan {
    pub fn new(p0: Vec3, strokes: Vec<VirtualTarget>) -> Result<Self> {
        let plan = MotorPlan { p0, strokes };
        plan.validate()?;
        Ok(plan)
    }

    /// Plan through `points` with default stroke parameters.
    pub fn through(points: &[Vec3]) -> Result<Self> {
        let (first, rest) = points
            .split_first()
            .ok_or_else(|| Error::domain("a plan needs at least two points"))?;
        MotorPlan::new(*first, rest.iter().copied().map(VirtualTarget::at).collect())
    }

    pub fn m(&self) -> usize {
        self.strokes.len()
    }

    /// `p0, p1, .., pm`.
    pub fn positions(&self) -> Vec<Vec3> {
        std::iter::once(self.p0)
            .chain(self.strokes.iter().map(|s| s.p))
            .collect()
    }

    /// Displacement `p_i - p_{i-1}` of stroke `i` (zero-based).
    pub fn displacement(&self, i: usize) -> Vec3 {
        let prev = if i == 0 { self.p0 } else { self.strokes[i - 1].p };
        sub3(self.strokes[i].p, prev)
    }

    pub fn validate(&self) -> Result<()> {
        if self.strokes.is_empty() {
            return Err(Error::domain("motor plan has no strokes"));
        }
        let finite3 = |p: &Vec3| p.iter().all(|c| c.is_finite());
        if !finite3(&self.p0) {
            return Err(Error::domain("p0 is not finite"));
        }
        for (i, s) in self.strokes.iter().enumerate() {
            if !finite3(&s.p) {
                return Err(Error::domain(format!("strokes[{i}].p is not finite")));
            }
            if !(s.dt > 0.0 && s.dt.is_finite()) {
                return Err(Error::domain(format!("strokes[{i}].dt = {} must be > 0", s.dt)));
            }
            if !(s.duration > 0.0 && s.duration.is_finite()) {
                return Err(Error::domain(format!("strokes[{i}].T = {} must be > 0", s.duration)));
            }
            if !(s.ac > 0.0 && s.ac < 1.0) {
                return Err(Error::domain(format!("strokes[{i}].Ac = {} must lie in (0, 1)", s.ac)));
            }
            if !(s.delta.abs() < PI) {
                return Err(Error::domain(format!(
                    "strokes[{i}].delta = {} must lie in (-pi, pi)",
                    s.delta
                )));
            }
        }
        Ok(())
    }
}

/// Lognormal timing of one stroke plus its displacement and turning angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrokeParams<T = f64> {
    pub t0: T,
    pub mu: T,
    pub sigma: T,
    pub d: [T; 3],
    pub delta: T,
}

/// Time-stamped position, velocity and acceleration samples on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub x: Vec<Vec3>,
    pub v: Vec<Vec3>,
    pub a: Vec<Vec3>,
}

impl Trajectory {
    pub fn new(t: Vec<f64>, x: Vec<Vec3>, v: Vec<Vec3>, a: Vec<Vec3>) -> Result<Self> {
        let traj = Trajectory { t, x, v, a };
        traj.validate()?;
        Ok(traj)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.t.len();
        if self.x.len() != n || self.v.len() != n || self.a.len() != n {
            return Err(Error::Dimension(format!(
                "trajectory arrays differ in length: t={}, x={}, v={}, a={}",
                n,
                self.x.len(),
                self.v.len(),
                self.a.len()
            )));
        }
        if n < 2 {
            return Err(Error::TooFewSamples { needed: 2, got: n });
        }
        let finite = self.t.iter().all(|v| v.is_finite())
            && [&self.x, &self.v, &self.a]
                .iter()
                .all(|arr| arr.iter().flatten().all(|c| c.is_finite()));
        if !finite {
            return Err(Error::domain("trajectory contains non-finite entries"));
        }
        if self.t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("trajectory time stamps must be strictly increasing"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.t[self.t.len() - 1] - self.t[0]
    }

    /// Sample step, assuming a uniform grid.
    pub fn step(&self) -> f64 {
        self.duration() / (self.t.len() - 1) as f64
    }

    pub fn speeds(&self) -> Vec<f64> {
        self.v.iter().map(norm3).collect()
    }
}

// ---------------------------------------------------------------------------
// lognormal primitives

#[inline]
fn phi<T: Real>(t: T, t0: T) -> T {
    let u = t - t0;
    if u.val() > PHI_EPS {
        u
    } else {
        T::cst(PHI_EPS)
    }
}

/// Lognormal speed profile with a softened time argument.
pub fn lognormal_profile<T: Real>(t: T, s: &StrokeParams<T>) -> T {
    let p = phi(t, s.t0);
    let z = p.ln() - s.mu;
    let two_var = s.sigma * s.sigma * 2.0;
    (-(z * z) / two_var).exp() / (s.sigma * p * (2.0 * PI).sqrt())
}

/// Time derivative of [`lognormal_profile`]; zero on the clamped plateau.
pub fn lognormal_rate<T: Real>(t: T, s: &StrokeParams<T>) -> T {
    let u = t - s.t0;
    if u.val() <= PHI_EPS {
        return T::cst(0.0);
    }
    let var = s.sigma * s.sigma;
    lognormal_profile(t, s) * (s.mu - var - u.ln()) / (var * u)
}

/// Integral of the lognormal profile, in `[0, 1]`.
pub fn lognormal_cdf<T: Real>(t: T, s: &StrokeParams<T>) -> T {
    let p = phi(t, s.t0);
    ((p.ln() - s.mu) / (s.sigma * SQRT_2)).erf() * 0.5 + 0.5
}

/// `(delta/2) / sin(delta/2)`, the arc-length correction of a turning stroke.
pub fn arc_gain<T: Real>(delta: T) -> T {
    if delta.val().abs() < ARC_EPS {
        let d2 = delta * delta;
        d2 * (d2 * (7.0 / 5760.0) + 1.0 / 24.0) + 1.0
    } else {
        let half = delta * 0.5;
        half / half.sin()
    }
}

#[inline]
fn rotate<T: Real>(theta: T, d: &[T; 3]) -> [T; 3] {
    let (c, s) = (theta.cos(), theta.sin());
    [c * d[0] - s * d[1], s * d[0] + c * d[1], d[2]]
}

#[inline]
fn rotate_rate<T: Real>(theta: T, d: &[T; 3]) -> [T; 3] {
    let (c, s) = (theta.cos(), theta.sin());
    [-(s * d[0]) - c * d[1], c * d[0] - s * d[1], T::cst(0.0)]
}

fn clamp_delta<T: Real>(delta: T) -> T {
    if delta.val() > DELTA_LIMIT {
        T::cst(DELTA_LIMIT)
    } else if delta.val() < -DELTA_LIMIT {
        T::cst(-DELTA_LIMIT)
    } else {
        delta
    }
}

/// Velocity of one stroke.
pub fn stroke_velocity<T: Real>(t: T, s: &StrokeParams<T>) -> [T; 3] {
    let w = lognormal_cdf(t, s);
    stroke_velocity_with(t, s, w)
}

fn stroke_velocity_with<T: Real>(t: T, s: &StrokeParams<T>, w: T) -> [T; 3] {
    let delta = clamp_delta(s.delta);
    let lambda = lognormal_profile(t, s);
    let h = arc_gain(delta);
    let r = rotate(delta * w - delta * 0.5, &s.d);
    [lambda * h * r[0], lambda * h * r[1], lambda * r[2]]
}

/// Displacement of one stroke relative to its start, as a function of the
/// lognormal progress `w` in `[0, 1]`.
pub fn arc_displacement<T: Real>(w: T, d: &[T; 3], delta: T) -> [T; 3] {
    let delta = clamp_delta(delta);
    // Planar part: A d + B J d, where J is the quarter-turn. This is the
    // expansion of  Z d + R[delta (w - 1)] (d/2 - M d) + M d.
    let (a, b) = if delta.val().abs() > ARC_EPS {
        let c = T::cst(0.5) / (delta * 0.5).tan();
        let phi = delta * (w - 1.0);
        let (cp, sp) = (phi.cos(), phi.sin());
        ((cp + 1.0) * 0.5 + c * sp, c * (-cp + 1.0) + sp * 0.5)
    } else {
        // Series in delta; error O(delta^4).
        let u = -w + 1.0;
        let d2 = delta * delta;
        let a = w + d2 * u * w * (w * 2.0 - 1.0) / 12.0;
        let b = -(delta * u * w) * 0.5 - d2 * delta * u * u * w * w / 24.0;
        (a, b)
    };
    [a * d[0] - b * d[1], a * d[1] + b * d[0], w * d[2]]
}

/// Position of one stroke relative to the plan's start.
pub fn stroke_position<T: Real>(t: T, s: &StrokeParams<T>) -> [T; 3] {
    arc_displacement(lognormal_cdf(t, s), &s.d, s.delta)
}

/// Acceleration of one stroke, the time derivative of [`stroke_velocity`].
pub fn stroke_acceleration<T: Real>(t: T, s: &StrokeParams<T>) -> [T; 3] {
    let delta = clamp_delta(s.delta);
    let w = lognormal_cdf(t, s);
    let lambda = lognormal_profile(t, s);
    let rate = lognormal_rate(t, s);
    let h = arc_gain(delta);
    let theta = delta * w - delta * 0.5;
    let r = rotate(theta, &s.d);
    let dr = rotate_rate(theta, &s.d);
    let turn = delta * lambda * lambda * h;
    [
        rate * h * r[0] + turn * dr[0],
        rate * h * r[1] + turn * dr[1],
        rate * r[2],
    ]
}

/// Position and velocity of one stroke, sharing the profile evaluations.
pub fn stroke_state<T: Real>(t: T, s: &StrokeParams<T>) -> ([T; 3], [T; 3]) {
    let w = lognormal_cdf(t, s);
    (arc_displacement(w, &s.d, s.delta), stroke_velocity_with(t, s, w))
}

// ---------------------------------------------------------------------------
// time parametrization

/// `sigma = sqrt(-ln(1 - Ac))`.
pub fn sigma_from_ac(ac: f64) -> f64 {
    (-(1.0 - ac).ln()).sqrt()
}

/// `mu = 3 sigma - ln((e^{6 sigma} - 1) / T)`.
pub fn mu_from(sigma: f64, duration: f64) -> f64 {
    3.0 * sigma - ((6.0 * sigma).exp_m1() / duration).ln()
}

/// Converts a motor plan into per-stroke lognormal parameters.
pub fn plan_to_params(plan: &MotorPlan) -> Result<Vec<StrokeParams>> {
    plan.validate()?;
    let mut t0 = 0.0;
    Ok(plan
        .strokes
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let sigma = sigma_from_ac(s.ac);
            t0 += s.dt * (3.0 * sigma).sinh();
            StrokeParams {
                t0,
                mu: mu_from(sigma, s.duration),
                sigma,
                d: plan.displacement(i),
                delta: s.delta.clamp(-DELTA_LIMIT, DELTA_LIMIT),
            }
        })
        .collect())
}

/// Time at which the last stroke has covered its 3-sigma extent.
pub fn end_time(params: &[StrokeParams]) -> f64 {
    let last = params.last().expect("end_time needs at least one stroke");
    last.t0 + (last.mu + 3.0 * last.sigma).exp()
}

/// Superposed position, velocity and acceleration at time `t`.
pub fn evaluate(p0: &Vec3, params: &[StrokeParams], t: f64) -> (Vec3, Vec3, Vec3) {
    let mut x = *p0;
    let mut v = [0.0; 3];
    let mut a = [0.0; 3];
    for s in params {
        let (xi, vi) = stroke_state(t, s);
        let ai = stroke_acceleration(t, s);
        for k in 0..3 {
            x[k] += xi[k];
            v[k] += vi[k];
            a[k] += ai[k];
        }
    }
    (x, v, a)
}

/// Samples the plan on `n + 1` uniform time stamps spanning `[0, T_end]`.
pub fn sample_trajectory(plan: &MotorPlan, n: usize) -> Result<Trajectory> {
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let params = plan_to_params(plan)?;
    let t_end = end_time(&params);
    let samples: Vec<(f64, (Vec3, Vec3, Vec3))> = (0..=n)
        .into_par_iter()
        .map(|k| {
            let t = k as f64 * t_end / n as f64;
            (t, evaluate(&plan.p0, &params, t))
        })
        .collect();
    let mut traj = Trajectory {
        t: Vec::with_capacity(n + 1),
        x: Vec::with_capacity(n + 1),
        v: Vec::with_capacity(n + 1),
        a: Vec::with_capacity(n + 1),
    };
    for (t, (x, v, a)) in samples {
        traj.t.push(t);
        traj.x.push(x);
        traj.v.push(v);
        traj.a.push(a);
    }
    traj.validate()?;
    Ok(traj)
}

// ---------------------------------------------------------------------------
// small vector helpers

pub(crate) fn sub3(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn norm3(a: &Vec3) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(t0: f64, mu: f64, sigma: f64, d: Vec3, delta: f64) -> StrokeParams {
        StrokeParams {
            t0,
            mu,
            sigma,
            d,
            delta,
        }
    }

    fn random_params(rng: &mut ChaCha8Rng) -> StrokeParams {
        params(
            rng.gen_range(0.0..2.0),
            rng.gen_range(-2.0..0.5),
            rng.gen_range(0.15..1.0),
            [
                rng.gen_range(-50.0..50.0),
                rng.gen_range(-50.0..50.0),
                rng.gen_range(-5.0..5.0),
            ],
            rng.gen_range(-2.8..2.8),
        )
    }

    /// A time well inside the lognormal support.
    fn random_time(rng: &mut ChaCha8Rng, s: &StrokeParams) -> f64 {
        s.t0 + (s.mu + s.sigma * rng.gen_range(-2.5..2.5)).exp()
    }

    fn dist(a: Vec3, b: Vec3) -> f64 {
        norm3(&sub3(a, b))
    }

    #[test]
    fn profile_reference_values() {
        let s = params(0.0, 0.0, 0.5, [1.0, 0.0, 0.0], 0.0);
        assert!((lognormal_profile(1.0, &s) - 0.797_884_560_802_865).abs() < 1e-12);

        let mode = (-0.25f64).exp();
        let peak = lognormal_profile(mode, &s);
        for k in 1..200 {
            let t = k as f64 * 0.02;
            assert!(lognormal_profile(t, &s) <= peak + 1e-15);
        }
        assert!((mode - 0.778_800_783_071_404_9).abs() < 1e-12);
    }

    #[test]
    fn profile_is_clamped_before_onset() {
        let s = params(5.0, 0.3, 0.7, [1.0, 0.0, 0.0], 0.0);
        let before = lognormal_profile(-10.0, &s);
        assert!(before.is_finite() && before >= 0.0);
        assert_eq!(before, lognormal_profile(5.0, &s));
        assert_eq!(lognormal_rate(-10.0, &s), 0.0);
    }

    #[test]
    fn cdf_reference_values() {
        let s = params(0.0, 0.0, 1.0, [1.0, 0.0, 0.0], 0.0);
        assert!((lognormal_cdf(std::f64::consts::E, &s) - 0.841_344_746_068_543).abs() < 1e-12);
        let s = params(0.7, -0.4, 0.6, [1.0, 0.0, 0.0], 0.0);
        assert!((lognormal_cdf(0.7 + (-0.4f64).exp(), &s) - 0.5).abs() < 1e-12);
        assert!((lognormal_cdf(0.7 + (-0.4f64 + 8.0 * 0.6).exp(), &s) - 1.0).abs() < 1e-12);
        let mut prev = 0.0;
        for k in 0..400 {
            let w = lognormal_cdf(k as f64 * 0.01, &s);
            assert!((0.0..=1.0).contains(&w) && w >= prev);
            prev = w;
        }
    }

    #[test]
    fn velocity_straight_and_vertical() {
        let s = params(0.1, -0.5, 0.4, [1.0, 0.0, 0.0], 0.0);
        for k in 1..50 {
            let t = 0.1 + k as f64 * 0.03;
            let v = stroke_velocity(t, &s);
            assert_eq!(v[1], 0.0);
            assert!((v[0] - lognormal_profile(t, &s)).abs() < 1e-15);
        }
        let s = params(0.1, -0.5, 0.4, [0.0, 0.0, 1.0], 1.3);
        let t = 0.8;
        let v = stroke_velocity(t, &s);
        assert!(v[0].abs() < 1e-15 && v[1].abs() < 1e-15);
        assert!((v[2] - lognormal_profile(t, &s)).abs() < 1e-15);
    }

    #[test]
    fn velocity_at_half_progress_points_along_displacement() {
        let s = params(0.0, 0.0, 0.5, [3.0, 4.0, 0.0], std::f64::consts::FRAC_PI_2);
        // w = 0.5 at t = t0 + e^mu
        let v = stroke_velocity(1.0, &s);
        let lambda = lognormal_profile(1.0, &s);
        let speed = norm3(&v);
        assert!((speed / (lambda * 5.0) - 1.110_720_734_539_591_6).abs() < 1e-12);
        assert!((v[0] / speed - 0.6).abs() < 1e-12 && (v[1] / speed - 0.8).abs() < 1e-12);
    }

    #[test]
    fn position_reaches_displacement_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let s = random_params(&mut rng);
            let end = arc_displacement(1.0, &s.d, s.delta);
            assert!(dist(end, s.d) < 1e-9 * norm3(&s.d));
            let start = arc_displacement(0.0, &s.d, s.delta);
            assert!(norm3(&start) < 1e-9 * norm3(&s.d));
        }
    }

    #[test]
    fn straight_branch_and_continuity() {
        let s = params(0.0, 0.0, 0.5, [2.0, 0.0, 0.0], 0.0);
        let x = stroke_position(1.0, &s);
        assert!(dist(x, [1.0, 0.0, 0.0]) < 1e-12);

        let d = [3.0, -7.0, 1.5];
        for w in [0.1, 0.37, 0.5, 0.8] {
            let a = arc_displacement(w, &d, 1e-6);
            let b = arc_displacement(w, &d, 0.0);
            assert!(dist(a, b) < 1e-6 * norm3(&d));
            for sign in [1.0, -1.0] {
                let above = arc_displacement(w, &d, sign * ARC_EPS * (1.0 + 1e-9));
                let below = arc_displacement(w, &d, sign * ARC_EPS * (1.0 - 1e-9));
                assert!(dist(above, below) < 1e-6 * norm3(&d));
            }
        }
    }

    #[test]
    fn z_is_linear_in_progress() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let s = random_params(&mut rng);
            let t = random_time(&mut rng, &s);
            let x = stroke_position(t, &s);
            assert!((x[2] - lognormal_cdf(t, &s) * s.d[2]).abs() < 1e-12);
        }
    }

    /// Closed-form position against Simpson integration of the velocity.
    #[test]
    fn position_matches_integrated_velocity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let s = random_params(&mut rng);
            let t_end = random_time(&mut rng, &s);
            let n = 20_000;
            let h = (t_end - s.t0) / n as f64;
            let mut acc = [0.0; 3];
            for k in 0..=n {
                let wgt = if k == 0 || k == n {
                    1.0
                } else if k % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                let v = stroke_velocity(s.t0 + k as f64 * h, &s);
                for c in 0..3 {
                    acc[c] += wgt * v[c] * h / 3.0;
                }
            }
            let x = stroke_position(t_end, &s);
            assert!(dist(x, acc) < 1e-6 * norm3(&s.d), "{x:?} vs {acc:?}");
        }
    }

    #[test]
    fn acceleration_matches_velocity_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = 1e-5;
        for _ in 0..100 {
            let s = random_params(&mut rng);
            let t = random_time(&mut rng, &s);
            let vp = stroke_velocity(t + h, &s);
            let vm = stroke_velocity(t - h, &s);
            let fd: Vec3 = std::array::from_fn(|c| (vp[c] - vm[c]) / (2.0 * h));
            let a = stroke_acceleration(t, &s);
            let scale = norm3(&a).max(1e-3 * norm3(&s.d));
            assert!(dist(a, fd) < 1e-5 * scale, "{a:?} vs {fd:?}");
        }
    }

    #[test]
    fn acceleration_of_straight_stroke() {
        let s = params(0.2, -0.3, 0.5, [1.0, 0.0, 0.0], 0.0);
        let t = 0.9;
        let a = stroke_acceleration(t, &s);
        assert_eq!(a[1], 0.0);
        assert!((a[0] - lognormal_rate(t, &s)).abs() < 1e-15);
        let mode = 0.2 + (-0.3f64 - 0.25).exp();
        assert!(stroke_acceleration(mode, &s)[0].abs() < 1e-12);
    }

    #[test]
    fn time_parametrization_reference_values() {
        let ac = 1.0 - (-1.0f64).exp();
        assert!((sigma_from_ac(ac) - 1.0).abs() < 1e-12);
        assert!((mu_from(1.0, 1.0) - (-2.997_518_170_631_040)).abs() < 1e-12);

        let mut target = VirtualTarget::at([1.0, 0.0, 0.0]);
        target.ac = ac;
        let plan = MotorPlan::new([0.0; 3], vec![target]).unwrap();
        let p = plan_to_params(&plan).unwrap();
        assert!((p[0].t0 - 10.017_874_927_409_902).abs() < 1e-9);

        let mut target = VirtualTarget::at([1.0, 0.0, 0.0]);
        target.ac = ac;
        target.dt = 1e-300;
        let plan = MotorPlan::new([0.0; 3], vec![target]).unwrap();
        let p = plan_to_params(&plan).unwrap();
        assert!((end_time(&p) - 1.002_484_911_656_844_6).abs() < 1e-12);
    }

    #[test]
    fn duration_identity_and_ordering() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let sigma = sigma_from_ac(rng.gen_range(0.01..0.99));
            let dur = rng.gen_range(0.1..5.0);
            let mu = mu_from(sigma, dur);
            let back = (mu + 3.0 * sigma).exp() * -(-6.0 * sigma).exp_m1();
            assert!((back / dur - 1.0).abs() < 1e-12);
        }
        let plan = MotorPlan::through(&[[0.0; 3], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
        let p = plan_to_params(&plan).unwrap();
        assert!(p.windows(2).all(|w| w[1].t0 > w[0].t0));
    }

    #[test]
    fn domain_errors() {
        let mut plan = MotorPlan::through(&[[0.0; 3], [1.0, 0.0, 0.0]]).unwrap();
        plan.strokes[0].ac = 1.0;
        assert!(matches!(plan_to_params(&plan), Err(Error::Domain(_))));
        plan.strokes[0].ac = 0.5;
        plan.strokes[0].duration = 0.0;
        assert!(matches!(plan_to_params(&plan), Err(Error::Domain(_))));
        plan.strokes.clear();
        assert!(plan.validate().is_err());
    }

    #[test]
    fn end_time_grows_with_strokes_and_offsets() {
        let pts = [[0.0; 3], [10.0, 0.0, 0.0], [10.0, 10.0, 0.0]];
        let mut plan = MotorPlan::through(&pts).unwrap();
        let base = end_time(&plan_to_params(&plan).unwrap());
        let mut longer = plan.clone();
        longer.strokes.push(VirtualTarget::at([0.0, 10.0, 0.0]));
        assert!(end_time(&plan_to_params(&longer).unwrap()) >= base);

        plan.strokes[1].dt *= 2.0;
        let sigma = sigma_from_ac(DEFAULT_AC);
        let grown = end_time(&plan_to_params(&plan).unwrap());
        assert!((grown - base - (3.0 * sigma).sinh()).abs() < 1e-12);
    }

    #[test]
    fn single_straight_stroke_is_monotone() {
        let plan = MotorPlan::through(&[[0.0; 3], [1.0, 0.0, 0.0]]).unwrap();
        let traj = sample_trajectory(&plan, 50).unwrap();
        assert_eq!(traj.len(), 51);
        assert!(traj.x.windows(2).all(|w| w[1][0] >= w[0][0]));
        assert!(traj.x.iter().all(|x| x[1] == 0.0));
        assert!((traj.x[50][0] - 1.0).abs() < 0.005);
    }

    #[test]
    fn sampled_velocity_matches_position_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut pts = vec![[64.0, 64.0, 0.0]];
        for _ in 0..6 {
            pts.push([
                rng.gen_range(10.0..120.0),
                rng.gen_range(10.0..120.0),
                rng.gen_range(-1.0..1.0),
            ]);
        }
        let mut plan = MotorPlan::through(&pts).unwrap();
        for s in &mut plan.strokes {
            s.delta = rng.gen_range(-1.5..1.5);
            s.dt = rng.gen_range(0.4..1.5);
        }
        let m = plan.m();
        let traj = sample_trajectory(&plan, 100 * m).unwrap();
        let h = traj.step();
        let vmax = traj.speeds().into_iter().fold(0.0, f64::max);
        // fourth-order central differences
        for k in 2..traj.len() - 2 {
            let fd: Vec3 = std::array::from_fn(|c| {
                (-traj.x[k + 2][c] + 8.0 * traj.x[k + 1][c] - 8.0 * traj.x[k - 1][c] + traj.x[k - 2][c]) / (12.0 * h)
            });
            assert!(
                dist(fd, traj.v[k]) < 1e-3 * vmax,
                "sample {k} {} {}",
                dist(fd, traj.v[k]),
                vmax
            );
        }

        let params = plan_to_params(&plan).unwrap();
        for (t, x) in traj.t.iter().zip(&traj.x) {
            let z: f64 = plan.p0[2] + params.iter().map(|s| lognormal_cdf(*t, s) * s.d[2]).sum::<f64>();
            assert!((x[2] - z).abs() < 1e-9);
        }
        let last = traj.x[traj.len() - 1];
        let target = plan.strokes[m - 1].p;
        let total: f64 = (0..m).map(|i| norm3(&plan.displacement(i))).sum();
        assert!(dist(last, target) < 0.005 * total);
    }
}
