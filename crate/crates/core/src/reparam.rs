//! Time scaling under speed and acceleration limits, plus the two baseline
//! parameterizations of a fixed geometric path.

use crate::error::{Error, Result};
use crate::slm::{norm3, sub3, Trajectory, Vec3};

/// Default number of arc-length steps and output samples.
pub const DEFAULT_RESOLUTION: usize = 1000;

/// Speed and acceleration bounds in path units per second (squared).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Limits {
    pub v_max: f64,
    pub a_max: f64,
}

impl Limits {
    pub fn new(v_max: f64, a_max: f64) -> Result<Self> {
        let lim = Limits { v_max, a_max };
        lim.validate()?;
        Ok(lim)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_max > 0.0 && self.v_max.is_finite()) {
            return Err(Error::domain(format!("v_max must be > 0, got {}", self.v_max)));
        }
        if !(self.a_max > 0.0 && self.a_max.is_finite()) {
            return Err(Error::domain(format!("a_max must be > 0, got {}", self.a_max)));
        }
        Ok(())
    }
}

fn peak(values: &[Vec3]) -> f64 {
    values.iter().map(norm3).fold(0.0, f64::max)
}

/// Dilation factor `limit_resample` would apply.
pub fn dilation_factor(traj: &Trajectory, lim: &Limits) -> f64 {
    let c_v = peak(&traj.v) / lim.v_max;
    let c_a = (peak(&traj.a) / lim.a_max).sqrt();
    1.0f64.max(c_v).max(c_a)
}

/// Uniformly slows `traj` down just enough to respect `lim`. Positions are
/// untouched.
pub fn limit_resample(traj: &Trajectory, lim: &Limits) -> Result<Trajectory> {
    traj.validate()?;
    lim.validate()?;
    let c = dilation_factor(traj, lim);
    if c == 1.0 {
        return Ok(traj.clone());
    }
    let t0 = traj.t[0];
    let scale = |v: &Vec3, f: f64| [v[0] * f, v[1] * f, v[2] * f];
    Ok(Trajectory {
        t: traj.t.iter().map(|t| t0 + (t - t0) * c).collect(),
        x: traj.x.clone(),
        v: traj.v.iter().map(|v| scale(v, 1.0 / c)).collect(),
        a: traj.a.iter().map(|a| scale(a, 1.0 / (c * c))).collect(),
    })
}

/// A polyline resampled at equal arc-length steps, with smooth first and
/// second derivatives interpolated between nodes.
#[derive(Debug, Clone)]
pub struct ArcPath {
    pub length: f64,
    pub ds: f64,
    pub nodes: Vec<Vec3>,
    pub tangent: Vec<Vec3>,
    pub second: Vec<Vec3>,
    pub curvature: Vec<f64>,
    source: Vec<Vec3>,
    cum: Vec<f64>,
}

impl ArcPath {
    pub fn new(path: &[Vec3], steps: usize) -> Result<Self> {
        if path.len() < 2 {
            return Err(Error::TooFewSamples {
                needed: 2,
                got: path.len(),
            });
        }
        if steps < 2 {
            return Err(Error::domain("arc-length resampling needs at least 2 steps"));
        }
        if path.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::domain("path has non-finite coordinates"));
        }
        let mut cum = vec![0.0];
        for w in path.windows(2) {
            cum.push(cum[cum.len() - 1] + norm3(&sub3(w[1], w[0])));
        }
        let length = cum[cum.len() - 1];
        if !(length > 0.0) {
            return Err(Error::Degenerate("path has zero arc length".into()));
        }
        let ds = length / steps as f64;
        let mut nodes: Vec<Vec3> = (0..=steps).map(|k| on_polyline(path, &cum, k as f64 * ds)).collect();
        nodes[steps] = path[path.len() - 1];

        let n = nodes.len();
        let h = stencil(steps);
        let mut tangent = vec![[0.0; 3]; n];
        let mut second = vec![[0.0; 3]; n];
        let mut curvature = vec![0.0; n];
        for k in 0..n {
            let (a, b) = (k.saturating_sub(h), (k + h).min(n - 1));
            let d = sub3(nodes[b], nodes[a]);
            let len = norm3(&d);
            tangent[k] = if len > 0.0 {
                [d[0] / len, d[1] / len, d[2] / len]
            } else if k > 0 {
                tangent[k - 1]
            } else {
                [0.0; 3]
            };
        }
        for k in h..n - h {
            let u = sub3(nodes[k], nodes[k - h]);
            let w = sub3(nodes[k + h], nodes[k]);
            let (lu, lw) = (norm3(&u), norm3(&w));
            if lu == 0.0 || lw == 0.0 {
                continue;
            }
            // circumcircle curvature written as 2 sin(turn/2) / chord; stays
            // finite on reversals where the cross-product form is 0/0
            let cos_turn = ((u[0] * w[0] + u[1] * w[1] + u[2] * w[2]) / (lu * lw)).clamp(-1.0, 1.0);
            let half = ((1.0 - cos_turn) / 2.0).sqrt();
            let chord = 0.5 * (lu + lw);
            curvature[k] = 2.0 * half / chord;
            let dd = sub3(w, u);
            second[k] = [
                dd[0] / (chord * chord),
                dd[1] / (chord * chord),
                dd[2] / (chord * chord),
            ];
        }
        for k in 0..h {
            curvature[k] = curvature[h];
            second[k] = second[h];
            curvature[n - 1 - k] = curvature[n - 1 - h];
            second[n - 1 - k] = second[n - 1 - h];
        }
        Ok(ArcPath {
            length,
            ds,
            nodes,
            tangent,
            second,
            curvature,
            source: path.to_vec(),
            cum,
        })
    }

    /// Position on the source polyline, unit tangent and second derivative
    /// with respect to arc length.
    pub fn eval(&self, s: f64) -> (Vec3, Vec3, Vec3) {
        let n = self.nodes.len();
        let u = (s / self.ds).clamp(0.0, (n - 1) as f64);
        let k = (u.floor() as usize).min(n - 2);
        let f = u - k as f64;
        (
            on_polyline(&self.source, &self.cum, s),
            lerp3(&self.tangent[k], &self.tangent[k + 1], f),
            lerp3(&self.second[k], &self.second[k + 1], f),
        )
    }

    /// Samples `s(t)` given as (t, s, s', s'') rows into a trajectory.
    fn trajectory(&self, rows: &[(f64, f64, f64, f64)]) -> Result<Trajectory> {
        let mut traj = Trajectory {
            t: Vec::with_capacity(rows.len()),
            x: Vec::with_capacity(rows.len()),
            v: Vec::with_capacity(rows.len()),
            a: Vec::with_capacity(rows.len()),
        };
        for &(t, s, sd, sdd) in rows {
            let (x, xp, xpp) = self.eval(s);
            traj.t.push(t);
            traj.x.push(x);
            traj.v.push([xp[0] * sd, xp[1] * sd, xp[2] * sd]);
            traj.a.push([
                xpp[0] * sd * sd + xp[0] * sdd,
                xpp[1] * sd * sd + xp[1] * sdd,
                xpp[2] * sd * sd + xp[2] * sdd,
            ]);
        }
        traj.validate()?;
        Ok(traj)
    }
}

/// Node offset of the difference stencils: nodes only sit on the input
/// chords, so immediate neighbours give jittery second differences.
fn stencil(steps: usize) -> usize {
    (steps / 200).max(1)
}

fn on_polyline(path: &[Vec3], cum: &[f64], s: f64) -> Vec3 {
    let s = s.clamp(0.0, cum[cum.len() - 1]);
    let seg = cum.partition_point(|&c| c < s).clamp(1, cum.len() - 1) - 1;
    let span = cum[seg + 1] - cum[seg];
    let f = if span > 0.0 {
        ((s - cum[seg]) / span).clamp(0.0, 1.0)
    } else {
        0.0
    };
    lerp3(&path[seg], &path[seg + 1], f)
}

fn lerp3(a: &Vec3, b: &Vec3, f: f64) -> Vec3 {
    [
        a[0] + (b[0] - a[0]) * f,
        a[1] + (b[1] - a[1]) * f,
        a[2] + (b[2] - a[2]) * f,
    ]
}

/// Curvature-capped trapezoidal time parameterization of `path`.
pub fn totg_lite(path: &[Vec3], lim: &Limits) -> Result<Trajectory> {
    totg_lite_with(path, lim, DEFAULT_RESOLUTION)
}

/// As [`totg_lite`] with `n` arc-length steps and `n + 1` output samples.
pub fn totg_lite_with(path: &[Vec3], lim: &Limits, n: usize) -> Result<Trajectory> {
    lim.validate()?;
    let arc = ArcPath::new(path, n)?;
    let nodes = arc.nodes.len();
    let cap: Vec<f64> = arc
        .curvature
        .iter()
        .map(|&k| {
            if k > 0.0 {
                lim.v_max.min((lim.a_max / k).sqrt())
            } else {
                lim.v_max
            }
        })
        .collect();
    // tangential budget left inside the friction circle
    let budget = |v: f64, k: f64| {
        let an = v * v * k;
        (lim.a_max * lim.a_max - an * an).max(0.0).sqrt()
    };
    let mut v = cap.clone();
    v[0] = 0.0;
    v[nodes - 1] = 0.0;
    for k in 0..nodes - 1 {
        let reach = (v[k] * v[k] + 2.0 * budget(v[k], arc.curvature[k]) * arc.ds).sqrt();
        v[k + 1] = v[k + 1].min(reach);
    }
    for k in (0..nodes - 1).rev() {
        let reach = (v[k + 1] * v[k + 1] + 2.0 * budget(v[k + 1], arc.curvature[k + 1]) * arc.ds).sqrt();
        v[k] = v[k].min(reach);
    }

    // exact uniform acceleration inside each step
    let mut t_node = vec![0.0; nodes];
    let mut acc = vec![0.0; nodes - 1];
    for k in 0..nodes - 1 {
        let vs = v[k] + v[k + 1];
        if vs <= 0.0 {
            return Err(Error::Degenerate(format!(
                "speed profile stalls between arc steps {k} and {}",
                k + 1
            )));
        }
        t_node[k + 1] = t_node[k] + 2.0 * arc.ds / vs;
        acc[k] = (v[k + 1] * v[k + 1] - v[k] * v[k]) / (2.0 * arc.ds);
    }
    let t_end = t_node[nodes - 1];
    let mut rows = Vec::with_capacity(n + 1);
    let mut k = 0;
    for j in 0..=n {
        let t = if j == n { t_end } else { t_end * j as f64 / n as f64 };
        while k + 2 < nodes && t_node[k + 1] <= t {
            k += 1;
        }
        let tau = (t - t_node[k]).clamp(0.0, t_node[k + 1] - t_node[k]);
        let s = k as f64 * arc.ds + v[k] * tau + 0.5 * acc[k] * tau * tau;
        let sd = (v[k] + acc[k] * tau).max(0.0);
        rows.push((t, s.min(arc.length), sd, acc[k]));
    }
    let traj = arc.trajectory(&rows)?;
    limit_resample(&traj, lim)
}

/// Duration of the global quintic in arc length that first touches `lim`.
pub fn minjerk_duration(length: f64, lim: &Limits) -> f64 {
    let by_speed = 15.0 / 8.0 * length / lim.v_max;
    let by_accel = (10.0 / 3f64.sqrt() * length / lim.a_max).sqrt();
    by_speed.max(by_accel)
}

/// Minimum-jerk quintic in arc length along `path`, then uniformly slowed to
/// respect the limits including the centripetal part.
pub fn minjerk_reparam(path: &[Vec3], lim: &Limits) -> Result<Trajectory> {
    minjerk_reparam_with(path, lim, DEFAULT_RESOLUTION)
}

pub fn minjerk_reparam_with(path: &[Vec3], lim: &Limits, n: usize) -> Result<Trajectory> {
    lim.validate()?;
    let arc = ArcPath::new(path, n)?;
    let l = arc.length;
    let t_total = minjerk_duration(l, lim);
    let rows: Vec<(f64, f64, f64, f64)> = (0..=n)
        .map(|j| {
            let tau = j as f64 / n as f64;
            let (t2, t3) = (tau * tau, tau * tau * tau);
            let s = l * (10.0 * t3 - 15.0 * t3 * tau + 6.0 * t3 * t2);
            let sd = l / t_total * (30.0 * t2 - 60.0 * t3 + 30.0 * t2 * t2);
            let sdd = l / (t_total * t_total) * (60.0 * tau - 180.0 * t2 + 120.0 * t3);
            (t_total * tau, s, sd, sdd)
        })
        .collect();
    let traj = arc.trajectory(&rows)?;
    limit_resample(&traj, lim)
}
