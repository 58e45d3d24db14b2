//! Reduced nuclear-spin-only models: coherent exchange bonds plus directed
//! dissipative bonds, and the analytic open-chain limit state.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lindblad::{JumpSet, Liouvillian};
use crate::operator::{embed_product, spin_matrices, Spin};
use crate::space::SpaceLayout;
use crate::state::QuantumState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyTag {
    Open,
    Ring,
    Tree,
}

/// Directed bond: moves up-polarization from `from` to `to` at `rate` (1/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectedBond {
    pub from: usize,
    pub to: usize,
    pub rate: f64,
}

/// Coherent exchange bond J (I_a+ I_b- + h.c.), J in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherentBond {
    pub a: usize,
    pub b: usize,
    pub j: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveModel {
    pub n_sites: usize,
    pub directed_bonds: Vec<DirectedBond>,
    pub coherent_bonds: Vec<CoherentBond>,
    pub topology_tag: TopologyTag,
}

impl EffectiveModel {
    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 1 {
            return Err(Error::InvalidModel("effective model needs sites".into()));
        }
        for b in &self.directed_bonds {
            if b.from >= self.n_sites || b.to >= self.n_sites || b.from == b.to {
                return Err(Error::InvalidModel(format!(
                    "directed bond ({}, {}) dangling or self-bond",
                    b.from, b.to
                )));
            }
            if b.rate < 0.0 {
                return Err(Error::InvalidModel("negative bond rate".into()));
            }
        }
        for b in &self.coherent_bonds {
            if b.a >= self.n_sites || b.b >= self.n_sites || b.a == b.b {
                return Err(Error::InvalidModel(format!(
                    "coherent bond ({}, {}) dangling or self-bond",
                    b.a, b.b
                )));
            }
        }
        Ok(())
    }

    /// Open chain with uniform directed rate on every nearest-neighbor bond.
    pub fn open_chain(n: usize, rate: f64) -> Self {
        Self {
            n_sites: n,
            directed_bonds: (0..n.saturating_sub(1))
                .map(|j| DirectedBond { from: j, to: j + 1, rate })
                .collect(),
            coherent_bonds: Vec::new(),
            topology_tag: TopologyTag::Open,
        }
    }

    /// Ring with the wrap-around bond (n-1 -> 0) included.
    pub fn ring(n: usize, rate: f64) -> Self {
        Self {
            n_sites: n,
            directed_bonds: (0..n)
                .map(|j| DirectedBond { from: j, to: (j + 1) % n, rate })
                .collect(),
            coherent_bonds: Vec::new(),
            topology_tag: TopologyTag::Ring,
        }
    }

    pub fn layout(&self) -> SpaceLayout {
        SpaceLayout::nuclear_chain(self.n_sites)
    }

    pub fn is_purely_dissipative(&self) -> bool {
        self.coherent_bonds.is_empty()
    }

    /// Uniform rate of the directed bonds if they all agree.
    pub fn uniform_rate(&self) -> Option<f64> {
        let first = self.directed_bonds.first()?.rate;
        self.directed_bonds
            .iter()
            .all(|b| (b.rate - first).abs() < 1e-12 * first.abs().max(1.0))
            .then_some(first)
    }
}

/// Lindbladian over N nuclear spin-1/2 factors: per directed bond a collapse
/// operator sqrt(rate) I_from^- I_to^+, plus the coherent exchange part.
pub fn effective_lindbladian(model: &EffectiveModel) -> Result<Liouvillian> {
    model.validate()?;
    let layout = model.layout();
    let half = spin_matrices(Spin::Half);
    let mut jumps = JumpSet::empty();
    for bond in &model.directed_bonds {
        if bond.rate == 0.0 {
            continue;
        }
        let lf = format!("I{}", bond.from + 1);
        let lt = format!("I{}", bond.to + 1);
        let op = embed_product(
            &[(lf.as_str(), &half.minus), (lt.as_str(), &half.plus)],
            &layout,
        )?
        .scale(C64::new(bond.rate.sqrt(), 0.0));
        jumps.push(op, format!("hop_{}_{}", bond.from + 1, bond.to + 1));
    }
    let hamiltonian = if model.coherent_bonds.is_empty() {
        None
    } else {
        let mut h = crate::operator::SpinOperator::zero(layout.clone());
        for bond in &model.coherent_bonds {
            let la = format!("I{}", bond.a + 1);
            let lb = format!("I{}", bond.b + 1);
            let term = embed_product(
                &[(la.as_str(), &half.plus), (lb.as_str(), &half.minus)],
                &layout,
            )?
            .scale(C64::new(bond.j, 0.0));
            h = h.add(&term)?.add(&term.dagger())?;
        }
        Some(h.into_hermitian()?)
    };
    Liouvillian::new(hamiltonian, jumps)
}

/// The open-chain limit state: a binomial mixture over domain-wall
/// configurations (i down spins on the left, N-i up spins on the right).
#[derive(Debug, Clone)]
pub struct LimitState {
    pub n: usize,
    /// weights[i] for i = 0..=n down-spins on the left; sums to 1.
    pub weights: Vec<f64>,
}

/// Binomial limit mixture for an N-site open chain from the maximally mixed
/// initial state.
pub fn limit_state(n: usize) -> LimitState {
    assert!(n >= 1 && n <= 20, "limit state supports 1 <= N <= 20");
    let mut weights = Vec::with_capacity(n + 1);
    let mut c = 1.0_f64; // C(n, 0)
    let norm = 0.5_f64.powi(n as i32);
    for i in 0..=n {
        weights.push(c * norm);
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    LimitState { n, weights }
}

impl LimitState {
    /// Composite basis index of the domain-wall state with i down on the left.
    pub fn config_index(&self, i: usize) -> usize {
        // level 0 = up, level 1 = down; leftmost site is most significant
        let mut idx = 0usize;
        for site in 0..self.n {
            idx = idx * 2 + usize::from(site < i);
        }
        idx
    }

    /// Site polarization P_j (1-based site index).
    pub fn site_polarization(&self, j: usize) -> f64 {
        assert!(j >= 1 && j <= self.n);
        // site j is up iff i <= j-1
        let p_up: f64 = self.weights[..j].iter().sum();
        2.0 * p_up - 1.0
    }

    /// Dense diagonal density state (dimension 2^N; N <= 10).
    pub fn to_state(&self) -> Result<QuantumState> {
        if self.n > 10 {
            return Err(Error::DimensionCap { dim: 1 << self.n, cap: 1 << 10 });
        }
        let d = 1usize << self.n;
        let mut m = Array2::zeros((d, d));
        for (i, &w) in self.weights.iter().enumerate() {
            let idx = self.config_index(i);
            m[[idx, idx]] = C64::new(w, 0.0);
        }
        QuantumState::density(SpaceLayout::nuclear_chain(self.n), m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::{adjoint_generator, evolve_qme};
    use crate::operator::embed;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_bond_matches_eq8_form() {
        let model = EffectiveModel::open_chain(2, 9.0);
        let liou = effective_lindbladian(&model).unwrap();
        assert!(liou.hamiltonian.is_none());
        assert_eq!(liou.jumps.ops.len(), 1);
        let c = liou.jumps.ops[0].to_dense();
        // only nonzero element: |down up><up down| with amplitude 3
        // basis: |uu>=0, |ud>=1, |du>=2, |dd>=3
        assert_abs_diff_eq!(c[[2, 1]].re, 3.0, epsilon = 1e-14);
        let total: f64 = c.iter().map(|v| v.norm()).sum();
        assert_abs_diff_eq!(total, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn magnetization_conserved_by_generator() {
        let model = EffectiveModel::open_chain(3, 5.0);
        let liou = effective_lindbladian(&model).unwrap();
        let layout = model.layout();
        let half = spin_matrices(Spin::Half);
        let mut total_z = crate::operator::SpinOperator::zero(layout.clone());
        for j in 1..=3 {
            total_z = total_z.add(&embed(&half.z, &format!("I{j}"), &layout).unwrap()).unwrap();
        }
        let dz = adjoint_generator(&liou, &total_z).unwrap();
        assert!(dz.max_abs() < 1e-12);
    }

    #[test]
    fn all_down_is_stationary() {
        let model = EffectiveModel::open_chain(3, 5.0);
        let liou = effective_lindbladian(&model).unwrap();
        let down = QuantumState::basis_state(model.layout(), &[1, 1, 1]).unwrap().to_density();
        let states = evolve_qme(&liou, &down, &[0.0, 1.0]).unwrap();
        let dev = (&states[1].density_matrix() - &down.density_matrix())
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        assert!(dev < 1e-9);
    }

    #[test]
    fn limit_state_n1_is_maximally_mixed() {
        let ls = limit_state(1);
        assert_abs_diff_eq!(ls.weights[0], 0.5);
        assert_abs_diff_eq!(ls.weights[1], 0.5);
        assert_abs_diff_eq!(ls.site_polarization(1), 0.0);
    }

    #[test]
    fn limit_state_n4_binomial() {
        let ls = limit_state(4);
        let expect = [1.0, 4.0, 6.0, 4.0, 1.0];
        for (w, e) in ls.weights.iter().zip(expect.iter()) {
            assert_abs_diff_eq!(*w, e / 16.0, epsilon = 1e-15);
        }
        let p: Vec<f64> = (1..=4).map(|j| ls.site_polarization(j)).collect();
        let expect_p = [-0.875, -0.375, 0.375, 0.875];
        for (a, b) in p.iter().zip(expect_p.iter()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-12);
        }
        // net polarization zero by symmetry
        let net: f64 = p.iter().sum::<f64>() / 4.0;
        assert_abs_diff_eq!(net, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_dangling_bonds() {
        let model = EffectiveModel {
            n_sites: 2,
            directed_bonds: vec![DirectedBond { from: 0, to: 5, rate: 1.0 }],
            coherent_bonds: vec![],
            topology_tag: TopologyTag::Open,
        };
        assert!(effective_lindbladian(&model).is_err());
    }
}
