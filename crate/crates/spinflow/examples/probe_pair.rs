use num_complex::Complex64 as C64;
use spinflow::lindblad::{evolve_qme, optical_pumping_jumps, JumpSet, Liouvillian};
use spinflow::model::chain::{constants, pair_layout, ChainSpec, Topology};
use spinflow::model::site::SiteSpec;
use spinflow::model::*;
use spinflow::state::QuantumState;
use spinflow::TAU;

fn pair_with_d(d: f64) -> ChainSpec {
    let mut s = ChainSpec {
        sites: vec![
            SiteSpec::new(13e6, 13e6, 0.0, 0.0).unwrap(),
            SiteSpec::new(0.0, 0.0, 4e6, 4e6).unwrap(),
        ],
        topology: Topology::Open,
        j_d: 247e3,
        d_zfs: d,
        gamma_e: constants::GAMMA_E,
        gamma_n: constants::GAMMA_N,
        b_field: 0.05,
        pump_rate: 0.0,
        relax_rate: 0.0,
    };
    let m = matching_field(&s, Branch::Alpha).unwrap();
    s.b_field = refine_pair_matching(&s, m.b_m).unwrap();
    s
}

fn dressed_pol_ops(spec: &ChainSpec) -> Vec<spinflow::operator::SpinOperator> {
    let layout = pair_layout();
    let t_op = pair_dressed_transform(spec).unwrap();
    let half = spinflow::operator::spin_matrices(spinflow::operator::Spin::Half);
    ["I1", "I2"]
        .iter()
        .map(|l| {
            let e = spinflow::operator::embed(&half.z, l, &layout)
                .unwrap()
                .scale(C64::new(2.0, 0.0));
            t_op.matmul(&e).unwrap().matmul(&t_op.dagger()).unwrap()
        })
        .collect()
}

fn main() {
    let mut d_lo = 24.0e9;
    let mut d_hi = 26.0e9;
    for _ in 0..50 {
        let dm = 0.5 * (d_lo + d_hi);
        let j = pair_cross_element(&pair_with_d(dm)).unwrap().re.abs();
        if j > 17e3 { d_lo = dm; } else { d_hi = dm; }
    }
    let d_star = 0.5 * (d_lo + d_hi);
    let spec = pair_with_d(d_star);
    let j_eff = pair_cross_element(&spec).unwrap().re.abs();
    println!("D* = {:.6} GHz, B_m = {:.6} mT, J_extract = {:.4} kHz, |J_formula| = {:.4} kHz",
        d_star / 1e9, spec.b_field * 1e3, j_eff / 1e3,
        effective_coupling_pair(&spec, spec.omega_n()).unwrap().abs() / 1e3);

    let h = build_pair_hamiltonian(&spec).unwrap();
    let layout = pair_layout();
    let v1 = pair_dressed_basis_state(&spec, (0, 1, 0, 1)).unwrap();
    let psi0 = QuantumState::pure(layout.clone(), v1).unwrap().to_density();
    let pol_ops = dressed_pol_ops(&spec);

    // dark run
    let t_half = 1.0 / (4.0 * j_eff);
    let n_t = 60;
    let grid: Vec<f64> = (0..=n_t).map(|k| k as f64 * 2.0 * t_half / n_t as f64).collect();
    let liou = Liouvillian::new(Some(h.clone()), JumpSet::empty()).unwrap();
    let states = evolve_qme(&liou, &psi0, &grid).unwrap();
    let mut max_dev: f64 = 0.0;
    let mut p1_half = 0.0;
    for (k, st) in states.iter().enumerate() {
        let p1 = st.expectation(&pol_ops[0]).unwrap().re;
        let p2 = st.expectation(&pol_ops[1]).unwrap().re;
        let eff = (2.0 * TAU * j_eff * grid[k]).cos();
        max_dev = max_dev.max((p1 - eff).abs()).max((p2 + eff).abs());
        if k == n_t / 2 { p1_half = p1; }
    }
    println!("dark: max dev vs effective = {:.4}, P1(t_half) = {:.4}", max_dev, p1_half);

    // pumped scans
    for kappa in [0.25_f64, 0.5, 1.0, 2.0, 2.5, 4.0, 6.0, 10.0, 40.0] {
        let gamma_op = kappa * TAU * j_eff;
        let mut jumps = JumpSet::empty();
        for op in optical_pumping_jumps(&layout, "S", gamma_op).unwrap() {
            jumps.push(op, "p");
        }
        let liou = Liouvillian::new(Some(h.clone()), jumps).unwrap();
        let t_end = 8.0 / (TAU * j_eff);
        let grid: Vec<f64> = (0..=200).map(|k| k as f64 * t_end / 200.0).collect();
        let states = evolve_qme(&liou, &psi0, &grid).unwrap();
        let p2: Vec<f64> = states.iter().map(|s| s.expectation(&pol_ops[1]).unwrap().re).collect();
        let mut drawdown: f64 = 0.0;
        let mut running_max = f64::MIN;
        for &v in &p2 {
            running_max = running_max.max(v);
            drawdown = drawdown.max(running_max - v);
        }
        let t90 = grid.iter().zip(&p2).find(|(_, &p)| p > 0.9).map(|(t, _)| *t).unwrap_or(f64::NAN);
        println!(
            "kappa {kappa:6.2}: P2(end) = {:7.4}, drawdown = {:7.4}, t(P2>0.9) = {:9.3e}",
            p2.last().unwrap(), drawdown, t90
        );
    }
}
