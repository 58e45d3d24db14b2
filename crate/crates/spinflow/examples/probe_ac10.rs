use spinflow::observables::DressedMeter;
use spinflow::presets::preset;
use spinflow::runner::chain_initial_state;
use spinflow::traj::qjm::{QjmOptions, RotatingQjmEngine};
use spinflow::traj::{reduce_series, run_trajectories};

fn main() {
    for name in ["fig8_static", "fig8_swept"] {
        let e = preset(name).unwrap();
        let chain = e.chain.clone().unwrap();
        let opts = QjmOptions::default();
        let engine = RotatingQjmEngine::new(&chain, e.protocol, &opts).unwrap();
        println!("{name}: dt = {:.2e}, kept = {}", engine.step_size(), engine.n_kept_elements());
        let meter = DressedMeter::new(&chain).unwrap();
        let grid: Vec<f64> = (0..=10).map(|k| k as f64 * e.t_max / 10.0).collect();
        let t0 = std::time::Instant::now();
        let n_traj = 6;
        let runs = run_trajectories(n_traj, 3, |_, mut rng| {
            let psi0 = chain_initial_state(&chain, None, &mut rng)?;
            let r = engine.run(&psi0, &grid, &mut rng, &opts)?;
            let mut per_site: Vec<Vec<f64>> = vec![Vec::new(); 3];
            for s in &r.states {
                let p = meter.polarizations(s)?;
                for j in 0..3 {
                    per_site[j].push(p[j]);
                }
            }
            Ok(per_site)
        })
        .unwrap();
        println!("  {} traj x {:.2} s in {:?}", n_traj, e.t_max, t0.elapsed());
        for j in 0..3 {
            let s = reduce_series(&runs.iter().map(|r| r[j].clone()).collect::<Vec<_>>());
            println!(
                "  P_{}: {:?}",
                j + 1,
                s.mean.iter().map(|v| (v * 100.0).round() / 100.0).collect::<Vec<_>>()
            );
        }
    }
}
