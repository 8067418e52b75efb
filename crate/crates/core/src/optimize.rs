//! Compound loss and gradient-based fitting of motor plans.
//!
//! The loss is `lambda * (T_end + w_sigma * Var[dt]) + L_image`. Plans are
//! optimized through a latent vector in which every constraint holds by
//! construction: `dt = exp(u)`, `Ac = logistic(u)`, `delta = 0.99 pi tanh(u)`.
//!
//! Gradients are assembled in reverse: image loss -> pixels -> Bézier
//! control points and radii -> trajectory samples -> per-stroke lognormal
//! parameters (local Jacobians from dual numbers) -> motor plan -> latents.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dual::Dual;
use crate::error::{Error, Result};
use crate::render::{
    hermite_to_bezier, multiscale_mse_grad, render_plan, RadiusMap, RasterImage, RasterTape, RenderConfig,
    DEFAULT_SCALES,
};
use crate::slm::{
    end_time, plan_to_params, stroke_state, MotorPlan, StrokeParams, Trajectory, Vec3, VirtualTarget, DELTA_LIMIT,
};

/// An image-space objective with its gradient.
pub trait ImageLoss: Sync {
    /// Loss value and `dL/dpixel` for a rendered image.
    fn loss_and_grad(&self, img: &RasterImage) -> Result<(f64, Vec<f64>)>;

    fn loss(&self, img: &RasterImage) -> Result<f64> {
        Ok(self.loss_and_grad(img)?.0)
    }
}

/// Multi-scale MSE against a fixed target.
#[derive(Debug, Clone)]
pub struct MultiscaleMse {
    pub target: RasterImage,
    pub scales: Vec<usize>,
}

impl ImageLoss for MultiscaleMse {
    fn loss_and_grad(&self, img: &RasterImage) -> Result<(f64, Vec<f64>)> {
        multiscale_mse_grad(img, &self.target, &self.scales)
    }
}

/// Adam step sizes per parameter group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearningRates {
    /// Pixels (and height units for z).
    pub positions: f64,
    pub delta: f64,
    pub dt: f64,
    pub ac: f64,
}

impl Default for LearningRates {
    fn default() -> Self {
        LearningRates {
            positions: 0.5,
            delta: 0.02,
            dt: 0.01,
            ac: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub lambda: f64,
    pub w_sigma: f64,
    pub scales: Vec<usize>,
    pub steps: usize,
    pub lr: LearningRates,
    pub radius: RadiusMap,
    pub samples_per_stroke: usize,
    /// Also optimize the shape parameters `Ac`.
    pub optimize_shape: bool,
    /// Also optimize target heights (only meaningful with a non-zero radius gain).
    pub optimize_width: bool,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            lambda: 0.01,
            w_sigma: 50.0,
            scales: DEFAULT_SCALES.to_vec(),
            steps: 300,
            lr: LearningRates::default(),
            radius: RadiusMap::fixed(2.0),
            samples_per_stroke: 5,
            optimize_shape: false,
            optimize_width: false,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !(self.w_sigma >= 0.0) {
            return Err(Error::domain("lambda and w_sigma must be non-negative"));
        }
        if self.steps == 0 {
            return Err(Error::domain("steps must be at least 1"));
        }
        if self.samples_per_stroke == 0 {
            return Err(Error::domain("samples_per_stroke must be at least 1"));
        }
        Ok(())
    }

    pub fn render_config(&self, width: usize, height: usize) -> RenderConfig {
        RenderConfig {
            width,
            height,
            samples_per_stroke: self.samples_per_stroke,
            radius: self.radius,
        }
    }
}

/// One optimizer step: the loss terms of the plan before the update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    pub total: f64,
    pub smooth: f64,
    pub image: f64,
    pub t_end: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OptimizationTrace {
    pub records: Vec<TraceRecord>,
}

impl OptimizationTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,total,smooth,image,t_end\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{:.12e},{:.12e},{:.12e},{:.12e}\n",
                r.step, r.total, r.smooth, r.image, r.t_end
            ));
        }
        out
    }
}

/// `T_end + w_sigma * Var[dt]` (population variance).
pub fn smoothness_loss(plan: &MotorPlan, w_sigma: f64) -> Result<f64> {
    let params = plan_to_params(plan)?;
    Ok(end_time(&params) + w_sigma * variance(plan.strokes.iter().map(|s| s.dt)))
}

fn variance(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

/// `lambda * smoothness + L_image` with the default multi-scale MSE.
pub fn total_loss(plan: &MotorPlan, target: &RasterImage, cfg: &LossConfig) -> Result<f64> {
    let loss = MultiscaleMse {
        target: target.clone(),
        scales: cfg.scales.clone(),
    };
    total_loss_with(plan, &loss, target.width, target.height, cfg)
}

/// [`total_loss`] for any image loss.
pub fn total_loss_with(
    plan: &MotorPlan,
    loss: &dyn ImageLoss,
    width: usize,
    height: usize,
    cfg: &LossConfig,
) -> Result<f64> {
    let img = render_plan(plan, &cfg.render_config(width, height))?;
    Ok(cfg.lambda * smoothness_loss(plan, cfg.w_sigma)? + loss.loss(&img)?)
}

// ---------------------------------------------------------------------------
// latent parameterization

fn logistic(u: f64) -> f64 {
    1.0 / (1.0 + (-u).exp())
}

/// Unconstrained optimization variables of a plan.
///
/// Layout: `3 (m + 1)` position coordinates (`p0` first), then `m` turning
/// latents, `m` offset latents and `m` shape latents. Stroke durations are
/// carried along unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct Latent {
    pub values: Vec<f64>,
    durations: Vec<f64>,
}

/// Which block of the latent vector an index belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Group {
    Position { axis: usize },
    Delta,
    Dt,
    Ac,
}

impl Latent {
    pub fn from_plan(plan: &MotorPlan) -> Result<Self> {
        plan.validate()?;
        let m = plan.m();
        let mut values = Vec::with_capacity(3 * (m + 1) + 3 * m);
        for p in plan.positions() {
            values.extend_from_slice(&p);
        }
        let edge = DELTA_LIMIT * (1.0 - 1e-12);
        values.extend(
            plan.strokes
                .iter()
                .map(|s| (s.delta.clamp(-edge, edge) / DELTA_LIMIT).atanh()),
        );
        values.extend(plan.strokes.iter().map(|s| s.dt.ln()));
        values.extend(plan.strokes.iter().map(|s| (s.ac / (1.0 - s.ac)).ln()));
        Ok(Latent {
            values,
            durations: plan.strokes.iter().map(|s| s.duration).collect(),
        })
    }

    pub fn m(&self) -> usize {
        self.durations.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let m = self.m();
        let pos = 3 * (m + 1);
        (pos, pos + m, pos + 2 * m)
    }

    pub fn group(&self, index: usize) -> Group {
        let (d, t, a) = self.offsets();
        if index < d {
            Group::Position { axis: index % 3 }
        } else if index < t {
            Group::Delta
        } else if index < a {
            Group::Dt
        } else {
            Group::Ac
        }
    }

    pub fn to_plan(&self) -> MotorPlan {
        let m = self.m();
        let (d, t, a) = self.offsets();
        let v = &self.values;
        let point = |j: usize| -> Vec3 { [v[3 * j], v[3 * j + 1], v[3 * j + 2]] };
        MotorPlan {
            p0: point(0),
            strokes: (0..m)
                .map(|i| VirtualTarget {
                    p: point(i + 1),
                    delta: DELTA_LIMIT * v[d + i].tanh(),
                    dt: v[t + i].exp(),
                    duration: self.durations[i],
                    ac: logistic(v[a + i]),
                })
                .collect(),
        }
    }
}

/// Loss terms and the gradient with respect to every latent value.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub total: f64,
    pub smooth: f64,
    pub image: f64,
    pub t_end: f64,
    pub grad: Vec<f64>,
}

/// Forward and reverse pass of the compound loss at `latent`.
pub fn evaluate_latent(
    latent: &Latent,
    loss: &dyn ImageLoss,
    width: usize,
    height: usize,
    cfg: &LossConfig,
) -> Result<Evaluation> {
    let plan = latent.to_plan();
    let params = plan_to_params(&plan)?;
    let m = params.len();
    let n = cfg.samples_per_stroke * m;
    let n = n.max(2);
    let t_end = end_time(&params);

    // forward: samples of position and velocity
    let times: Vec<f64> = (0..=n).map(|k| k as f64 * t_end / n as f64).collect();
    let states: Vec<(Vec3, Vec3)> = times
        .par_iter()
        .map(|&t| {
            let mut x = plan.p0;
            let mut v = [0.0; 3];
            for s in &params {
                let (xi, vi) = stroke_state(t, s);
                for c in 0..3 {
                    x[c] += xi[c];
                    v[c] += vi[c];
                }
            }
            (x, v)
        })
        .collect();
    let traj = Trajectory {
        t: times.clone(),
        x: states.iter().map(|s| s.0).collect(),
        v: states.iter().map(|s| s.1).collect(),
        a: vec![[0.0; 3]; n + 1],
    };
    let path = hermite_to_bezier(&traj, &cfg.radius);
    let tape = RasterTape::record(&path, width, height, cfg.radius.base)?;
    let (image_loss, grad_img) = loss.loss_and_grad(tape.image())?;

    let dts: Vec<f64> = plan.strokes.iter().map(|s| s.dt).collect();
    let mean_dt = dts.iter().sum::<f64>() / m as f64;
    let var_dt = dts.iter().map(|d| (d - mean_dt).powi(2)).sum::<f64>() / m as f64;
    let smooth = t_end + cfg.w_sigma * var_dt;
    let total = cfg.lambda * smooth + image_loss;

    // reverse: pixels -> control points and radii
    let pg = tape.backward(&grad_img);
    let third = t_end / (3.0 * n as f64);
    let mut g_x = vec![[0.0f64; 3]; n + 1];
    let mut g_v = vec![[0.0f64; 3]; n + 1];
    let mut g_third = 0.0;
    for (k, g) in pg.segments.iter().enumerate() {
        let (v0, v1) = (traj.v[k], traj.v[k + 1]);
        for c in 0..2 {
            g_x[k][c] += g[0][c] + g[1][c];
            g_v[k][c] += third * g[1][c];
            g_x[k + 1][c] += g[2][c] + g[3][c];
            g_v[k + 1][c] -= third * g[2][c];
            g_third += g[1][c] * v0[c] - g[2][c] * v1[c];
        }
    }
    for (k, gr) in pg.radii.iter().enumerate() {
        g_x[k][2] += gr * cfg.radius.slope(traj.x[k][2]);
    }
    let mut g_t_end = g_third / (3.0 * n as f64) + cfg.lambda;

    // samples -> per-stroke (t0, mu, sigma, delta, d) and sample times
    let per_stroke: Vec<([f64; 7], Vec<f64>)> = params
        .par_iter()
        .map(|s| stroke_adjoint(s, &times, &g_x, &g_v))
        .collect();
    let mut g_times = vec![0.0; n + 1];
    for (_, gt) in &per_stroke {
        for (acc, g) in g_times.iter_mut().zip(gt) {
            *acc += g;
        }
    }
    for (k, g) in g_times.iter().enumerate() {
        g_t_end += g * k as f64 / n as f64;
    }

    let mut grad = vec![0.0; latent.len()];
    for g in &g_x {
        for c in 0..3 {
            grad[c] += g[c];
        }
    }
    let mut g_t0: Vec<f64> = per_stroke.iter().map(|(g, _)| g[0]).collect();
    let mut g_mu: Vec<f64> = per_stroke.iter().map(|(g, _)| g[1]).collect();
    let mut g_sigma: Vec<f64> = per_stroke.iter().map(|(g, _)| g[2]).collect();
    let g_delta: Vec<f64> = per_stroke.iter().map(|(g, _)| g[3]).collect();
    for (i, (g, _)) in per_stroke.iter().enumerate() {
        for c in 0..3 {
            grad[3 * (i + 1) + c] += g[4 + c];
            grad[3 * i + c] -= g[4 + c];
        }
    }

    // T_end = t0_m + exp(mu_m + 3 sigma_m)
    let last = &params[m - 1];
    let tail = (last.mu + 3.0 * last.sigma).exp();
    g_t0[m - 1] += g_t_end;
    g_mu[m - 1] += g_t_end * tail;
    g_sigma[m - 1] += g_t_end * 3.0 * tail;

    let mut g_dt: Vec<f64> = dts
        .iter()
        .map(|d| cfg.lambda * cfg.w_sigma * 2.0 * (d - mean_dt) / m as f64)
        .collect();

    // t0_i = t0_{i-1} + dt_i sinh(3 sigma_i)
    let mut carry = 0.0;
    for i in (0..m).rev() {
        carry += g_t0[i];
        let s3 = 3.0 * params[i].sigma;
        g_dt[i] += carry * s3.sinh();
        g_sigma[i] += carry * dts[i] * 3.0 * s3.cosh();
    }

    let (off_d, off_t, off_a) = latent.offsets();
    for i in 0..m {
        let sigma = params[i].sigma;
        let e6 = (6.0 * sigma).exp();
        let dmu_dsigma = 3.0 - 6.0 * e6 / (e6 - 1.0);
        let g_s = g_sigma[i] + g_mu[i] * dmu_dsigma;
        let ac = plan.strokes[i].ac;
        let g_ac = g_s / (2.0 * sigma * (1.0 - ac));

        let th = latent.values[off_d + i].tanh();
        grad[off_d + i] = g_delta[i] * DELTA_LIMIT * (1.0 - th * th);
        grad[off_t + i] = g_dt[i] * dts[i];
        grad[off_a + i] = g_ac * ac * (1.0 - ac);
    }

    Ok(Evaluation {
        total,
        smooth,
        image: image_loss,
        t_end,
        grad,
    })
}

/// Pulls sample adjoints back onto one stroke's parameters.
fn stroke_adjoint(s: &StrokeParams, times: &[f64], g_x: &[[f64; 3]], g_v: &[[f64; 3]]) -> ([f64; 7], Vec<f64>) {
    type D = Dual<8>;
    let sd = StrokeParams::<D> {
        t0: D::var(s.t0, 1),
        mu: D::var(s.mu, 2),
        sigma: D::var(s.sigma, 3),
        delta: D::var(s.delta, 4),
        d: [D::var(s.d[0], 5), D::var(s.d[1], 6), D::var(s.d[2], 7)],
    };
    let mut local = [0.0; 7];
    let mut g_t = vec![0.0; times.len()];
    for (k, &t) in times.iter().enumerate() {
        let (gx, gv) = (g_x[k], g_v[k]);
        if gx.iter().chain(&gv).all(|g| *g == 0.0) {
            continue;
        }
        let (x, v) = stroke_state(D::var(t, 0), &sd);
        let mut acc = [0.0; 8];
        for c in 0..3 {
            for (j, a) in acc.iter_mut().enumerate() {
                *a += gx[c] * x[c].g[j] + gv[c] * v[c].g[j];
            }
        }
        g_t[k] = acc[0];
        for j in 0..7 {
            local[j] += acc[j + 1];
        }
    }
    (local, g_t)
}

// ---------------------------------------------------------------------------
// Adam

#[derive(Debug, Clone)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(len: usize) -> Self {
        Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    /// In-place update with a per-parameter step size (zero freezes a value).
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lrs: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= lrs[i] * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

fn step_sizes(latent: &Latent, cfg: &LossConfig) -> Vec<f64> {
    (0..latent.len())
        .map(|i| match latent.group(i) {
            Group::Position { axis: 2 } if !cfg.optimize_width => 0.0,
            Group::Position { .. } => cfg.lr.positions,
            Group::Delta => cfg.lr.delta,
            Group::Dt => cfg.lr.dt,
            Group::Ac if cfg.optimize_shape => cfg.lr.ac,
            Group::Ac => 0.0,
        })
        .collect()
}

/// Fits `plan0` to `target` with the multi-scale MSE image loss.
pub fn optimize(plan0: &MotorPlan, target: &RasterImage, cfg: &LossConfig) -> Result<(MotorPlan, OptimizationTrace)> {
    let loss = MultiscaleMse {
        target: target.clone(),
        scales: cfg.scales.clone(),
    };
    optimize_with(plan0, &loss, target.width, target.height, cfg)
}

/// Runs `cfg.steps` Adam updates against an arbitrary image loss.
pub fn optimize_with(
    plan0: &MotorPlan,
    loss: &dyn ImageLoss,
    width: usize,
    height: usize,
    cfg: &LossConfig,
) -> Result<(MotorPlan, OptimizationTrace)> {
    cfg.validate()?;
    let mut latent = Latent::from_plan(plan0)?;
    let lrs = step_sizes(&latent, cfg);
    let mut adam = Adam::new(latent.len());
    let mut trace = OptimizationTrace::default();
    for step in 0..cfg.steps {
        let eval = evaluate_latent(&latent, loss, width, height, cfg)?;
        if !eval.total.is_finite() || eval.grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite {
                step,
                detail: format!(
                    "total={} smooth={} image={} t_end={}",
                    eval.total, eval.smooth, eval.image, eval.t_end
                ),
            });
        }
        trace.records.push(TraceRecord {
            step,
            total: eval.total,
            smooth: eval.smooth,
            image: eval.image,
            t_end: eval.t_end,
        });
        adam.step(&mut latent.values, &eval.grad, &lrs);
    }
    let plan = latent.to_plan();
    plan.validate()?;
    Ok((plan, trace))
}
