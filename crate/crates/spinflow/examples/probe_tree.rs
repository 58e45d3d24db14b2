use spinflow::effective::{effective_lindbladian, CoherentBond, DirectedBond, EffectiveModel, TopologyTag};
use spinflow::lindblad::evolve_qme;
use spinflow::observables::nuclear_polarizations;
use spinflow::state::QuantumState;

fn model(bonds: &[(usize, usize)], jb: f64) -> EffectiveModel {
    EffectiveModel {
        n_sites: 6,
        directed_bonds: vec![DirectedBond { from: 2, to: 3, rate: 13.0 }],
        coherent_bonds: bonds.iter().map(|&(a, b)| CoherentBond { a, b, j: jb }).collect(),
        topology_tag: TopologyTag::Tree,
    }
}

fn main() {
    let variants: Vec<(&str, Vec<(usize, usize)>)> = vec![
        ("path", vec![(0, 1), (1, 2), (3, 4), (4, 5)]),
    ];
    for (name, bonds) in variants {
        let m = model(&bonds, 547.0);
        let liou = effective_lindbladian(&m).unwrap();
        let mixed = QuantumState::maximally_mixed(m.layout());
        let grid = [0.0, 2.0, 4.0, 5.0];
        let t0 = std::time::Instant::now();
        let states = evolve_qme(&liou, &mixed, &grid).unwrap();
        let p_mid = nuclear_polarizations(&states[2]).unwrap();
        let p = nuclear_polarizations(&states[3]).unwrap();
        let drift: f64 = p.iter().zip(p_mid.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let spread = |v: &[f64]| v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min);
        println!(
            "{name:12} ({:?}): P(1.5s) = {:?} | root spread {:.4}, top spread {:.4}, drift {:.5}",
            t0.elapsed(),
            p.iter().map(|v| (v * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
            spread(&[p[0], p[1], p[2]]),
            spread(&[p[3], p[4], p[5]]),
            drift
        );
    }
}
