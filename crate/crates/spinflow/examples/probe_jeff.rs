use spinflow::model::*;
use spinflow::model::chain::constants;
use spinflow::model::site::SiteSpec;
use spinflow::model::chain::{ChainSpec, Topology};

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
    s.b_field = m.b_m;
    s
}

fn chain_with_d(d: f64, j_d: f64) -> ChainSpec {
    let site = SiteSpec::new(13e6, 13e6, 4e6, 4e6).unwrap();
    let mut s = ChainSpec::uniform(2, site, Topology::Open, j_d, 0.05, 0.0, 0.0).unwrap();
    s.d_zfs = d;
    let m = matching_field(&s, Branch::Alpha).unwrap();
    s.b_field = m.b_m;
    s
}

fn main() {
    for d in [2.87e9_f64, 10e9, 20e9, 24.58e9, 30e9, 40e9] {
        let p = pair_with_d(d);
        let mp = matching_field(&p, Branch::Alpha).unwrap();
        let j_pair_formula = effective_coupling_pair(&p, p.omega_n()).unwrap();
        let j_pair_cross = cross_matrix_element(&p).unwrap();
        let c = chain_with_d(d, 62e3);
        let j_chain = effective_coupling_chain(&c).unwrap();
        println!(
            "D = {:6.2} GHz  B_m = {:8.4} mT  w_n = {:7.4} MHz  | pair: formula {:9.3} kHz cross {:9.3} kHz | chain(62k): {:9.4} kHz",
            d / 1e9, mp.b_m * 1e3, p.omega_n() / 1e6,
            j_pair_formula / 1e3, j_pair_cross.re / 1e3, j_chain / 1e3
        );
    }
    // scan for D that gives pair J_eff = 17 kHz
    let mut best = (0.0, 1e18);
    for k in 0..400 {
        let d = 5e9 + k as f64 * 0.1e9;
        let p = pair_with_d(d);
        let j = effective_coupling_pair(&p, p.omega_n()).unwrap().abs();
        if (j - 17e3).abs() < best.1 {
            best = (d, (j - 17e3).abs());
        }
    }
    println!("best D for 17 kHz pair: {:.3} GHz (dev {:.2} Hz)", best.0 / 1e9, best.1);
    let p = pair_with_d(best.0);
    let frames_l = spinflow::model::chain::site_frames(&p.sites[0], p.omega_n()).unwrap();
    let frames_r = spinflow::model::chain::site_frames(&p.sites[1], p.omega_n()).unwrap();
    println!("  theta(I2, 0,+1/2) = {:.2} deg, theta(I2, 0,-1/2) = {:.2} deg",
        frames_r[1][0].theta_principal().to_degrees(), frames_r[1][1].theta_principal().to_degrees());
    println!("  theta(I1, 0) = {:.2} deg, theta(I1, -1) = {:.2} deg",
        frames_l[1][1].theta_principal().to_degrees(), frames_l[2][1].theta_principal().to_degrees());
    let c = chain_with_d(best.0, 62e3);
    println!("  chain J_eff at that D: {:.4} kHz", effective_coupling_chain(&c).unwrap() / 1e3);
}
