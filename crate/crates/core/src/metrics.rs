//! Smoothness metrics and method comparison tables.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::slm::{Trajectory, Vec3};

/// Relative spacing tolerance for the uniform-grid check.
const GRID_TOL: f64 = 1e-6;

/// Prominence of a kept speed extremum, as a fraction of peak speed.
pub const EXTREMUM_PROMINENCE: f64 = 0.01;

fn check_grid(traj: &Trajectory, needed: usize) -> Result<f64> {
    if traj.len() < needed {
        return Err(Error::TooFewSamples {
            needed,
            got: traj.len(),
        });
    }
    traj.validate()?;
    let h = traj.step();
    if traj.t.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > GRID_TOL * h) {
        return Err(Error::domain("trajectory is not sampled on a uniform time grid"));
    }
    Ok(h)
}

/// Jerk from differences of the acceleration samples: central inside,
/// one-sided at both ends.
pub fn jerk(traj: &Trajectory) -> Result<Vec<Vec3>> {
    let h = check_grid(traj, 4)?;
    let a = &traj.a;
    let n = a.len();
    let diff = |i: usize, j: usize, span: f64| {
        [
            (a[j][0] - a[i][0]) / span,
            (a[j][1] - a[i][1]) / span,
            (a[j][2] - a[i][2]) / span,
        ]
    };
    Ok((0..n)
        .map(|k| match k {
            0 => diff(0, 1, h),
            _ if k == n - 1 => diff(n - 2, n - 1, h),
            _ => diff(k - 1, k + 1, 2.0 * h),
        })
        .collect())
}

fn squared_jerk(traj: &Trajectory) -> Result<Vec<f64>> {
    Ok(jerk(traj)?
        .iter()
        .map(|j| j[0] * j[0] + j[1] * j[1] + j[2] * j[2])
        .collect())
}

fn trapezoid(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    h * (values.iter().sum::<f64>() - 0.5 * (values[0] + values[n - 1]))
}

/// Mean squared jerk over the samples.
pub fn msj(traj: &Trajectory) -> Result<f64> {
    let j2 = squared_jerk(traj)?;
    Ok(j2.iter().sum::<f64>() / j2.len() as f64)
}

/// Log dimensionless jerk, `-ln(T^3 / v_peak^2 * int |j|^2 dt)`. Larger is
/// smoother.
pub fn ldj(traj: &Trajectory) -> Result<f64> {
    let j2 = squared_jerk(traj)?;
    let v_peak = traj.speeds().into_iter().fold(0.0, f64::max);
    if !(v_peak > 0.0) {
        return Err(Error::ZeroMotion);
    }
    let t = traj.duration();
    let integral = trapezoid(&j2, traj.step());
    Ok(-(t.powi(3) / (v_peak * v_peak) * integral).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtremumKind {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedExtremum {
    pub t: f64,
    pub speed: f64,
    pub kind: ExtremumKind,
}

/// Interior local extrema of the speed with prominence of at least
/// [`EXTREMUM_PROMINENCE`] times the peak speed. Kinds alternate.
pub fn speed_extrema(traj: &Trajectory) -> Result<Vec<SpeedExtremum>> {
    if traj.len() < 3 {
        return Err(Error::TooFewSamples {
            needed: 3,
            got: traj.len(),
        });
    }
    let s = traj.speeds();
    let v_peak = s.iter().cloned().fold(0.0, f64::max);
    let thr = EXTREMUM_PROMINENCE * v_peak;
    let n = s.len();
    let mut out = Vec::new();
    if !(thr > 0.0) {
        return Ok(out);
    }
    let mut push = |i: usize, kind| {
        if i > 0 && i < n - 1 {
            out.push(SpeedExtremum {
                t: traj.t[i],
                speed: s[i],
                kind,
            });
        }
    };
    // zigzag with hysteresis `thr`
    let (mut lo, mut hi) = (0, 0);
    let mut trend = 0i8;
    let mut cand = 0;
    for i in 1..n {
        match trend {
            0 => {
                if s[i] < s[lo] {
                    lo = i;
                }
                if s[i] > s[hi] {
                    hi = i;
                }
                if s[hi] - s[i] >= thr {
                    push(hi, ExtremumKind::Max);
                    trend = -1;
                    cand = i;
                } else if s[i] - s[lo] >= thr {
                    push(lo, ExtremumKind::Min);
                    trend = 1;
                    cand = i;
                }
            }
            1 => {
                if s[i] > s[cand] {
                    cand = i;
                } else if s[cand] - s[i] >= thr {
                    push(cand, ExtremumKind::Max);
                    trend = -1;
                    cand = i;
                }
            }
            _ => {
                if s[i] < s[cand] {
                    cand = i;
                } else if s[i] - s[cand] >= thr {
                    push(cand, ExtremumKind::Min);
                    trend = 1;
                    cand = i;
                }
            }
        }
    }
    Ok(out)
}

/// Absolute metrics of one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodRow {
    pub name: String,
    pub duration: f64,
    pub msj: f64,
    pub ldj: f64,
}

/// Metrics of one method relative to the reference; values above 1 mean
/// the method does better.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioRow {
    pub name: String,
    pub dur_inv: f64,
    pub msj: f64,
    pub ldj: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub reference: String,
    pub rows: Vec<MethodRow>,
    pub ratios: Vec<RatioRow>,
}

pub const CSV_HEADER: &str = "name,duration_s,msj,ldj,dur_inv_ratio,msj_ratio,ldj_ratio";

fn ratio(num: f64, den: f64) -> f64 {
    if num == den {
        1.0
    } else {
        num / den
    }
}

/// Metrics for every named trajectory, with ratio rows against `reference`.
pub fn compare(trajs: &[(String, Trajectory)], reference: &str) -> Result<ComparisonReport> {
    let rows = trajs
        .iter()
        .map(|(name, t)| {
            Ok(MethodRow {
                name: name.clone(),
                duration: t.duration(),
                msj: msj(t)?,
                ldj: ldj(t)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let r = rows
        .iter()
        .find(|r| r.name == reference)
        .ok_or_else(|| Error::UnknownReference(reference.to_string()))?
        .clone();
    let ratios = rows
        .iter()
        .filter(|row| row.name != reference)
        .map(|row| RatioRow {
            name: format!("{}/{}", row.name, r.name),
            dur_inv: ratio(r.duration, row.duration),
            msj: ratio(r.msj, row.msj),
            ldj: ratio(r.ldj, row.ldj),
        })
        .collect();
    Ok(ComparisonReport {
        reference: reference.to_string(),
        rows,
        ratios,
    })
}

impl ComparisonReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(s, "{},{:e},{:e},{:e},,,", r.name, r.duration, r.msj, r.ldj);
        }
        for r in &self.ratios {
            let _ = writeln!(s, "{},,,,{:e},{:e},{:e}", r.name, r.dur_inv, r.msj, r.ldj);
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "LDJ = -ln(T^3 / v_peak^2 * integral |jerk|^2 dt), reference: {}",
            self.reference
        );
        let _ = writeln!(s, "{:<28} {:>12} {:>14} {:>10}", "method", "duration [s]", "MSJ", "LDJ");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<28} {:>12.4} {:>14.6e} {:>10.4}",
                r.name, r.duration, r.msj, r.ldj
            );
        }
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "{:<28} {:>12} {:>14} {:>10}",
            "ratio (>1 better)", "1/duration", "MSJ", "LDJ"
        );
        for r in &self.ratios {
            let _ = writeln!(s, "{:<28} {:>12.4} {:>14.4} {:>10.4}", r.name, r.dur_inv, r.msj, r.ldj);
        }
        s
    }
}
