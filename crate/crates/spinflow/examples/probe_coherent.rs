use rand_chacha::rand_core::SeedableRng;
use spinflow::model::chain::{ChainSpec, Topology};
use spinflow::model::site::SiteSpec;
use spinflow::model::*;
use spinflow::observables::DressedMeter;
use spinflow::traj::qjm::*;
use spinflow::TAU;

fn main() {
    let site = SiteSpec::new(13e6, 13e6, 4e6, 4e6).unwrap();
    let mut spec = ChainSpec::uniform(2, site, Topology::Open, 62e3, 0.05, 0.0, 0.0).unwrap();
    spec.d_zfs = 24.847030e9;
    let m = matching_field(&spec, Branch::Alpha).unwrap();
    spec.b_field = m.b_m;
    let j = effective_coupling_chain(&spec).unwrap().abs();
    println!("J = {:.4} kHz", j / 1e3);

    let h = build_chain_hamiltonian(&spec).unwrap();
    let eigen = EigenQjmEngine::new(&h, spinflow::lindblad::JumpSet::empty()).unwrap();
    let opts = QjmOptions::default();
    let rot = RotatingQjmEngine::new(&spec, None, &opts).unwrap();
    println!("dt = {:.3e}, kept = {}", rot.step_size(), rot.n_kept_elements());

    let psi0 = dressed_basis_state(&spec, &[(0, 1, 1), (1, 1, 0)]).unwrap();
    let t_end = 2.0 / (TAU * j);
    let grid: Vec<f64> = (0..=16).map(|k| k as f64 * t_end / 16.0).collect();
    let meter = DressedMeter::new(&spec).unwrap();
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(0);
    let re = eigen.run(&psi0, &grid, &mut rng, &opts).unwrap();
    let rr = rot.run(&psi0, &grid, &mut rng, &opts).unwrap();
    let mut max_dev: f64 = 0.0;
    for k in 0..grid.len() {
        let pe = meter.polarizations(&re.states[k]).unwrap();
        let pr = meter.polarizations(&rr.states[k]).unwrap();
        let dev = (pe[1] - pr[1]).abs().max((pe[0] - pr[0]).abs());
        max_dev = max_dev.max(dev);
        if k % 4 == 0 {
            println!("t = {:9.3e}: eigen P2 {:+.5} | rot P2 {:+.5}", grid[k], pe[1], pr[1]);
        }
    }
    println!("max deterministic deviation: {:.5}", max_dev);
}
