use spinflow::model::chain::{dressed_bond_hamiltonian, dressed_energies_at, ChainSpec, Topology};
use spinflow::model::site::SiteSpec;
use spinflow::model::*;
use spinflow::TAU;

fn main() {
    let site = SiteSpec::new(13e6, 13e6, 4e6, 4e6).unwrap();
    let mut spec = ChainSpec::uniform(2, site, Topology::Open, 62e3, 0.05, 0.0, 100.0).unwrap();
    spec.d_zfs = 24.847030e9;
    let m = matching_field(&spec, Branch::Alpha).unwrap();
    spec.b_field = m.b_m;
    let j = effective_coupling_chain(&spec).unwrap().abs();
    spec.pump_rate = 2.6 * TAU * j;
    let v = dressed_bond_hamiltonian(&spec).unwrap();
    let e = dressed_energies_at(&spec, spec.b_field).unwrap();
    let mut hist: Vec<(f64, f64)> = Vec::new();
    for (val, (r, c)) in v.matrix.iter() {
        if r == c || val.norm() < 1.0 {
            continue;
        }
        let det = (e[r] - e[c]).abs();
        let amp_window = (60.0 * val.norm()).max(2e3);
        if det <= 1.5e6_f64.min(amp_window) {
            hist.push((det, val.norm()));
        }
    }
    hist.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    println!("kept = {}", hist.len());
    for (d, a) in hist.iter().take(8) {
        println!("  detuning {:12.1} Hz  amplitude {:9.1} Hz", d, a);
    }
}
