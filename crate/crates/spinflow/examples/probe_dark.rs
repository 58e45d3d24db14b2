use num_complex::Complex64 as C64;
use ndarray_linalg::Eig;
use spinflow::lindblad::{evolve_qme, JumpSet, Liouvillian};
use spinflow::model::chain::{constants, pair_layout, ChainSpec, Topology};
use spinflow::model::site::SiteSpec;
use spinflow::model::*;
use spinflow::state::QuantumState;
use spinflow::TAU;

fn main() {
    let mut spec = ChainSpec {
        sites: vec![
            SiteSpec::new(13e6, 13e6, 0.0, 0.0).unwrap(),
            SiteSpec::new(0.0, 0.0, 4e6, 4e6).unwrap(),
        ],
        topology: Topology::Open,
        j_d: 247e3,
        d_zfs: 24.847021e9,
        gamma_e: constants::GAMMA_E,
        gamma_n: constants::GAMMA_N,
        b_field: 0.05,
        pump_rate: 0.0,
        relax_rate: 0.0,
    };
    let m = matching_field(&spec, Branch::Alpha).unwrap();
    spec.b_field = m.b_m;
    let j_eff = pair_cross_element(&spec).unwrap().re.abs();
    println!("J = {:.4} kHz", j_eff / 1e3);

    let h = build_pair_hamiltonian(&spec).unwrap();
    let v1 = pair_dressed_basis_state(&spec, (0, 1, 0, 1)).unwrap();
    let v2 = pair_dressed_basis_state(&spec, (1, 2, 1, 0)).unwrap();
    // exact diagonal energies
    let hv1 = h.apply(&v1);
    let e1: C64 = v1.iter().zip(hv1.iter()).map(|(a, b)| a.conj() * b).sum();
    let hv2 = h.apply(&v2);
    let e2: C64 = v2.iter().zip(hv2.iter()).map(|(a, b)| a.conj() * b).sum();
    println!("E1 = {:.3} Hz, E2 = {:.3} Hz, diff = {:.3} Hz", e1.re, e2.re, e1.re - e2.re);

    // full spectrum near E1: find the two eigenvectors with largest overlap on span{v1,v2}
    let (vals, vecs) = h.to_dense().eig().unwrap();
    let mut best: Vec<(f64, f64, f64)> = Vec::new(); // (overlap1, overlap2, eigval)
    for k in 0..24 {
        let col = vecs.column(k);
        let o1: C64 = v1.iter().zip(col.iter()).map(|(a, b)| a.conj() * b).sum();
        let o2: C64 = v2.iter().zip(col.iter()).map(|(a, b)| a.conj() * b).sum();
        if o1.norm_sqr() + o2.norm_sqr() > 0.2 {
            best.push((o1.norm_sqr(), o2.norm_sqr(), vals[k].re));
        }
    }
    for (o1, o2, e) in &best {
        println!("eig {e:+.3} Hz: |<v1|>|^2 = {o1:.4}, |<v2|>|^2 = {o2:.4}");
    }

    // time evolution diagnostics
    let layout = pair_layout();
    let psi0 = QuantumState::pure(layout.clone(), v1.clone()).unwrap().to_density();
    let liou = Liouvillian::new(Some(h), JumpSet::empty()).unwrap();
    let t_half = 1.0 / (4.0 * j_eff);
    let grid: Vec<f64> = (0..=8).map(|k| k as f64 * t_half / 4.0).collect();
    let states = evolve_qme(&liou, &psi0, &grid).unwrap();
    for (k, st) in states.iter().enumerate() {
        let rho = st.density_matrix();
        let p_v1 = {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..24 { for j in 0..24 { acc += v1[i].conj() * rho[[i, j]] * v1[j]; } }
            acc.re
        };
        let p_v2 = {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..24 { for j in 0..24 { acc += v2[i].conj() * rho[[i, j]] * v2[j]; } }
            acc.re
        };
        println!("t/t_half = {:.2}: pop(v1) = {:.4}, pop(v2) = {:.4}, leak = {:.4}",
            grid[k] / t_half, p_v1, p_v2, 1.0 - p_v1 - p_v2);
    }
}
