use rand_chacha::rand_core::SeedableRng;
use spinflow::model::chain::{constants, ChainSpec, Topology};
use spinflow::model::site::SiteSpec;
use spinflow::model::*;
use spinflow::observables::DressedMeter;
use spinflow::traj::qjm::*;
use spinflow::TAU;

fn fig4_chain(n: usize, d: f64, pump_kappa: f64, relax: f64) -> ChainSpec {
    let site = SiteSpec::new(13e6, 13e6, 4e6, 4e6).unwrap();
    let mut spec = ChainSpec::uniform(n, site, Topology::Open, 62e3, 0.05, 0.0, relax).unwrap();
    spec.d_zfs = d;
    let m = matching_field(&spec, Branch::Alpha).unwrap();
    spec.b_field = m.b_m;
    let j = effective_coupling_chain(&spec).unwrap().abs();
    spec.pump_rate = pump_kappa * TAU * j;
    spec
}

fn main() {
    let d_preset = 24.847030e9;
    // --- N = 2 chain: rotating vs eigen engine, with pump + relax
    let spec = fig4_chain(2, d_preset, 2.6, 100.0);
    let j = effective_coupling_chain(&spec).unwrap().abs();
    println!("N=2 chain J_eff = {:.4} kHz, pump = {:.1} /s", j / 1e3, spec.pump_rate);
    let h = build_chain_hamiltonian(&spec).unwrap();
    let jumps = chain_jump_set(&spec, false).unwrap();
    let eigen = EigenQjmEngine::new(&h, jumps).unwrap();
    let mut opts = QjmOptions::default();
    opts.max_jump_prob = 0.02;
    let rot = RotatingQjmEngine::new(&spec, None, &opts).unwrap();
    println!("rotating: dt = {:.3e}, kept elements = {}", rot.step_size(), rot.n_kept_elements());

    let psi0 = dressed_basis_state(&spec, &[(0, 1, 1), (1, 1, 0)]).unwrap();
    let t_end = 2.0 / (TAU * j);
    let grid: Vec<f64> = (0..=20).map(|k| k as f64 * t_end / 20.0).collect();
    let meter = DressedMeter::new(&spec).unwrap();

    // ensembles
    let n_traj = 200;
    let t0 = std::time::Instant::now();
    let eig_runs = spinflow::traj::run_trajectories(n_traj, 7, |_, mut rng| {
        let r = eigen.run(&psi0, &grid, &mut rng, &opts)?;
        let mut p = Vec::new();
        for s in &r.states { p.push(meter.polarizations(s).unwrap()[1]); }
        Ok(p)
    }).unwrap();
    println!("eigen engine: {:?} for {n_traj} traj", t0.elapsed());
    let t0 = std::time::Instant::now();
    let rot_runs = spinflow::traj::run_trajectories(n_traj, 7, |_, mut rng| {
        let r = rot.run(&psi0, &grid, &mut rng, &opts)?;
        let mut p = Vec::new();
        for s in &r.states { p.push(meter.polarizations(s).unwrap()[1]); }
        Ok(p)
    }).unwrap();
    println!("rotating engine: {:?} for {n_traj} traj", t0.elapsed());

    let se = spinflow::traj::reduce_series(&eig_runs);
    let sr = spinflow::traj::reduce_series(&rot_runs);
    let mut max_sigma: f64 = 0.0;
    for k in 0..grid.len() {
        let denom = (se.stderr[k].powi(2) + sr.stderr[k].powi(2)).sqrt().max(0.01);
        max_sigma = max_sigma.max((se.mean[k] - sr.mean[k]).abs() / denom);
    }
    println!("max |eigen - rotating| in combined sigma units: {:.2}", max_sigma);
    for k in (0..grid.len()).step_by(5) {
        println!("  t = {:9.3e}: eigen {:+.4} +- {:.4} | rot {:+.4} +- {:.4}",
            grid[k], se.mean[k], se.stderr[k], sr.mean[k], sr.stderr[k]);
    }

    // --- N = 3 timing probe
    let spec3 = fig4_chain(3, d_preset, 2.6, 100.0);
    let rot3 = RotatingQjmEngine::new(&spec3, None, &opts).unwrap();
    println!("N=3: dt = {:.3e}, kept = {}", rot3.step_size(), rot3.n_kept_elements());
    let mut levels = vec![(0usize, 1usize, 0usize); 3];
    levels[1].0 = 1; levels[2].0 = 1;
    let psi3 = dressed_basis_state(&spec3, &levels).unwrap();
    let grid3: Vec<f64> = (0..=10).map(|k| k as f64 * 0.01 / 10.0).collect();
    let t0 = std::time::Instant::now();
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(1);
    let _ = rot3.run(&psi3, &grid3, &mut rng, &opts).unwrap();
    println!("N=3 single traj 10 ms window: {:?}", t0.elapsed());

    // --- N = 4 timing probe
    let spec4 = fig4_chain(4, d_preset, 2.6, 100.0);
    let t0 = std::time::Instant::now();
    let rot4 = RotatingQjmEngine::new(&spec4, None, &opts).unwrap();
    println!("N=4 engine construction: {:?}; dt = {:.3e}, kept = {}", t0.elapsed(), rot4.step_size(), rot4.n_kept_elements());
    let mut levels4 = vec![(1usize, 1usize, 0usize); 4];
    levels4[0].0 = 0;
    let psi4 = dressed_basis_state(&spec4, &levels4).unwrap();
    let grid4: Vec<f64> = (0..=10).map(|k| k as f64 * 0.01 / 10.0).collect();
    let t0 = std::time::Instant::now();
    let _ = rot4.run(&psi4, &grid4, &mut rng, &opts).unwrap();
    println!("N=4 single traj 10 ms window: {:?}", t0.elapsed());
}
