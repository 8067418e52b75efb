//! Compares the analytic gradient of the fitting loss with central finite
//! differences, one line per latent group.

use sigmadraw::optimize::{evaluate_latent, total_loss, Group, Latent, LossConfig, MultiscaleMse};
use sigmadraw::render::{render_plan, RadiusMap, RenderConfig};
use sigmadraw::slm::MotorPlan;

fn main() -> sigmadraw::Result<()> {
    let mut plan = MotorPlan::through(&[
        [12.0, 20.0, 0.1],
        [40.0, 14.0, -0.2],
        [50.0, 44.0, 0.3],
        [20.0, 50.0, 0.0],
    ])?;
    plan.strokes[0].delta = 0.7;
    plan.strokes[1].ac = 0.25;
    plan.strokes[2].dt = 0.6;
    let target = render_plan(
        &MotorPlan::through(&[[10.0, 30.0, 0.0], [50.0, 20.0, 0.0], [30.0, 55.0, 0.0]])?,
        &RenderConfig::new(64, 64, 2.5),
    )?;
    let cfg = LossConfig {
        lambda: 0.05,
        radius: RadiusMap { gain: 1.0, base: 2.0 },
        ..LossConfig::default()
    };
    let loss = MultiscaleMse {
        target: target.clone(),
        scales: cfg.scales.clone(),
    };

    let latent = Latent::from_plan(&plan)?;
    let eval = evaluate_latent(&latent, &loss, 64, 64, &cfg)?;
    let h = 1e-6;
    let mut worst: Vec<(Group, f64)> = Vec::new();
    for i in 0..latent.len() {
        let (mut p, mut q) = (latent.clone(), latent.clone());
        p.values[i] += h;
        q.values[i] -= h;
        let fd = (total_loss(&p.to_plan(), &target, &cfg)? - total_loss(&q.to_plan(), &target, &cfg)?) / (2.0 * h);
        let rel = (eval.grad[i] - fd).abs() / eval.grad[i].abs().max(fd.abs()).max(1e-12);
        let g = latent.group(i);
        match worst.iter_mut().find(|(k, _)| *k == g) {
            Some(w) => w.1 = w.1.max(rel),
            None => worst.push((g, rel)),
        }
    }
    println!("loss {:.6e}", eval.total);
    for (g, rel) in worst {
        println!("{g:?}: worst relative error {rel:.2e}");
    }
    Ok(())
}
