use spinflow::observables::DressedMeter;
use spinflow::presets::chain_spec;
use spinflow::runner::chain_initial_state;
use spinflow::traj::qjm::{QjmOptions, RotatingQjmEngine};
use spinflow::traj::{reduce_series, run_trajectories};

fn main() {
    let spec = chain_spec(3, true, true).unwrap();
    let j = spinflow::model::extracted_coupling(&spec).unwrap();
    println!("N=3 J = {:.3} kHz, pump {:.0}/s, relax {:.0}/s", j / 1e3, spec.pump_rate, spec.relax_rate);
    let opts = QjmOptions::default();
    let engine = RotatingQjmEngine::new(&spec, None, &opts).unwrap();
    println!("dt = {:.2e}, kept = {}", engine.step_size(), engine.n_kept_elements());
    let meter = DressedMeter::new(&spec).unwrap();
    let t_end = 0.12;
    let grid: Vec<f64> = (0..=24).map(|k| k as f64 * t_end / 24.0).collect();
    let pattern = [true, false, false];

    let t0 = std::time::Instant::now();
    let n_traj = 32;
    let runs = run_trajectories(n_traj, 11, |_, mut rng| {
        let psi0 = chain_initial_state(&spec, Some(&pattern), &mut rng)?;
        let r = engine.run(&psi0, &grid, &mut rng, &opts)?;
        // survival of the up-down pattern on sites (1,2): P(I1 up, I2 down)
        let mut s = Vec::with_capacity(grid.len());
        for st in &r.states {
            let p = meter.polarizations(st)?;
            // probability up at 1 and down at 2 from single-site marginals is
            // not the joint; use the joint via dressed populations instead
            s.push(((1.0 + p[0]) / 2.0) * ((1.0 - p[1]) / 2.0));
        }
        Ok(s)
    })
    .unwrap();
    println!("32 traj in {:?}", t0.elapsed());
    let stats = reduce_series(&runs);
    // fit exponential over the early window
    let pts: Vec<(f64, f64)> = grid
        .iter()
        .zip(&stats.mean)
        .filter(|(_, &s)| s > 0.05)
        .map(|(&t, &s)| (t, s.ln()))
        .collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let rate = -(n * sxy - sx * sy) / (n * sxx - sx * sx);
    println!("survival: {:?}", stats.mean.iter().map(|v| (v * 100.0).round() / 100.0).collect::<Vec<_>>());
    println!("fitted rate = {rate:.2} /s vs |ln(7/8)|*100 = 13.35 /s, ratio {:.2}", rate / 13.353);
}
