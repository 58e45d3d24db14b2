//! Site polarizations, spin currents, bond voltages, and domain-wall
//! statistics.
//!
//! Polarizations are normalized to [-1, 1] (P_j = 2 <I_j^z>). For full-model
//! chain states the nuclear polarization is measured along the local
//! hyperfine quantization axes (the dressed frames): that is the quantity
//! the effective nuclear model evolves, and the one that reaches +-1 under
//! complete transfer.

use ndarray::Array1;
use num_complex::Complex64 as C64;

use crate::effective::EffectiveModel;
use crate::error::{Error, Result};
use crate::model::chain::{chain_layout, dressed_transform, ChainSpec};
use crate::operator::{embed, spin_matrices, Spin, SpinOperator};
use crate::space::SpaceLayout;
use crate::state::QuantumState;
use crate::traj::kmc::SpinConfig;

/// 2 I_j^z on a nuclear-chain layout (1-based site index).
pub fn polarization_operator(layout: &SpaceLayout, j: usize) -> Result<SpinOperator> {
    let half = spin_matrices(Spin::Half);
    Ok(embed(&half.z, &format!("I{j}"), layout)?
        .scale(C64::new(2.0, 0.0))
        .into_hermitian()
        .expect("z is Hermitian"))
}

/// Site polarization of an effective-model (nuclear-only) state.
pub fn site_polarization(state: &QuantumState, j: usize) -> Result<f64> {
    let op = polarization_operator(&state.layout, j)?;
    state.expectation_real(&op)
}

/// All site polarizations of an effective-model state.
pub fn nuclear_polarizations(state: &QuantumState) -> Result<Vec<f64>> {
    (1..=state.layout.n_factors()).map(|j| site_polarization(state, j)).collect()
}

/// Mean site polarization.
pub fn net_polarization(state: &QuantumState) -> Result<f64> {
    let p = nuclear_polarizations(state)?;
    Ok(p.iter().sum::<f64>() / p.len() as f64)
}

/// Measures nuclear polarizations of full-model chain states along the
/// dressed axes. Holds the (sparse) dressing transform of the spec.
pub struct DressedMeter {
    layout: SpaceLayout,
    t_adj: SpinOperator,
    n: usize,
    /// factor index of each nucleus in the layout
    nuclear_factors: Vec<usize>,
}

impl DressedMeter {
    pub fn new(spec: &ChainSpec) -> Result<Self> {
        let n = spec.n_sites();
        Ok(Self {
            layout: chain_layout(n),
            t_adj: dressed_transform(spec)?.dagger(),
            n,
            nuclear_factors: (0..n).map(|j| 3 * j).collect(),
        })
    }

    /// Meter for the 4-spin pair layout |I1, S, S', I2>.
    pub fn new_pair(spec: &ChainSpec) -> Result<Self> {
        Ok(Self {
            layout: crate::model::chain::pair_layout(),
            t_adj: crate::model::chain::pair_dressed_transform(spec)?.dagger(),
            n: 2,
            nuclear_factors: vec![0, 3],
        })
    }

    /// Dressed-frame P_j for every site, for a pure computational-basis
    /// state of the full chain.
    pub fn polarizations(&self, psi: &Array1<C64>) -> Result<Vec<f64>> {
        if psi.len() != self.layout.total_dim() {
            return Err(Error::DimensionMismatch("state vs chain layout".into()));
        }
        let chi = self.t_adj.apply(psi);
        let norm: f64 = chi.iter().map(|v| v.norm_sqr()).sum();
        let mut pol = vec![0.0_f64; self.n];
        for (idx, a) in chi.iter().enumerate() {
            let w = a.norm_sqr();
            if w == 0.0 {
                continue;
            }
            let locals = self.layout.unravel(idx);
            for j in 0..self.n {
                let sign = if locals[self.nuclear_factors[j]] == 0 { 1.0 } else { -1.0 };
                pol[j] += sign * w;
            }
        }
        Ok(pol.iter().map(|p| p / norm).collect())
    }

    /// Dressed-frame P_j for a density state.
    pub fn polarizations_density(&self, state: &QuantumState) -> Result<Vec<f64>> {
        state.layout.same_as(&self.layout)?;
        let rho = state.density_matrix();
        // chi-basis populations: diag(T+ rho T) = sum over sparse rows
        let d = self.layout.total_dim();
        let mut pol = vec![0.0_f64; self.n];
        // w_a = <a_dressed| rho |a_dressed> with |a_dressed> = column a of T
        // = row a of T_adj conjugated; use T_adj rho T_adj^dagger diagonal
        let ta = &self.t_adj.matrix;
        for a in 0..d {
            // row a of t_adj
            let indptr = ta.indptr();
            let indptr = indptr.raw_storage();
            let indices = ta.indices();
            let data = ta.data();
            let mut w = C64::new(0.0, 0.0);
            for i in indptr[a]..indptr[a + 1] {
                for k in indptr[a]..indptr[a + 1] {
                    w += data[i] * rho[[indices[i], indices[k]]] * data[k].conj();
                }
            }
            let locals = self.layout.unravel(a);
            for j in 0..self.n {
                let sign = if locals[self.nuclear_factors[j]] == 0 { 1.0 } else { -1.0 };
                pol[j] += sign * w.re;
            }
        }
        Ok(pol)
    }

    /// Bare-axis P_j = 2<I_j^z> for comparison.
    pub fn bare_polarizations(&self, psi: &Array1<C64>) -> Result<Vec<f64>> {
        let half = spin_matrices(Spin::Half);
        let mut out = Vec::with_capacity(self.n);
        for j in 1..=self.n {
            let label = self.layout.factors()[self.nuclear_factors[j - 1]].0.clone();
            let op = embed(&half.z, &label, &self.layout)?;
            let opv = op.apply(psi);
            let e: C64 = psi.iter().zip(opv.iter()).map(|(a, b)| a.conj() * b).sum();
            out.push(2.0 * e.re);
        }
        Ok(out)
    }
}

/// Spin current on a directed bond: rate times the probability of
/// up_from/down_to (Hz). Nonnegative by construction.
pub fn spin_current(state: &QuantumState, bond_from: usize, model: &EffectiveModel) -> Result<f64> {
    let bond = model
        .directed_bonds
        .iter()
        .find(|b| b.from == bond_from)
        .ok_or_else(|| Error::InvalidModel(format!("no directed bond out of site {bond_from}")))?;
    let v = bond_voltage(state, bond.from + 1, bond.to + 1)?;
    Ok(bond.rate * v)
}

/// Every bond current of the model, in bond order (Hz).
pub fn bond_currents(state: &QuantumState, model: &EffectiveModel) -> Result<Vec<f64>> {
    model
        .directed_bonds
        .iter()
        .map(|b| Ok(b.rate * bond_voltage(state, b.from + 1, b.to + 1)?))
        .collect()
}

/// Bond voltage: probability of up_j down_k (1-based site indices).
pub fn bond_voltage(state: &QuantumState, j: usize, k: usize) -> Result<f64> {
    if j == k {
        return Err(Error::InvalidModel("voltage needs distinct sites".into()));
    }
    let layout = &state.layout;
    let up = crate::operator::projector(2, 0);
    let down = crate::operator::projector(2, 1);
    let lj = format!("I{j}");
    let lk = format!("I{k}");
    let op = crate::operator::embed_product(
        &[(lj.as_str(), &up), (lk.as_str(), &down)],
        layout,
    )?
    .into_hermitian()
    .expect("projector product");
    let v = state.expectation_real(&op)?;
    Ok(v.clamp(0.0, 1.0))
}

/// Domain-wall histogram of an ensemble of final configurations: weight per
/// wall index i (i down spins on the left), plus the mass on
/// non-domain-wall configurations.
pub struct DomainWallHistogram {
    pub weights: Vec<f64>,
    pub non_wall_mass: f64,
}

pub fn domain_wall_histogram(n: usize, configs: &[SpinConfig]) -> DomainWallHistogram {
    let mut weights = vec![0.0_f64; n + 1];
    let mut non_wall = 0usize;
    for c in configs {
        debug_assert_eq!(c.n, n);
        match wall_index(c) {
            Some(i) => weights[i] += 1.0,
            None => non_wall += 1,
        }
    }
    let total = configs.len() as f64;
    for w in weights.iter_mut() {
        *w /= total;
    }
    DomainWallHistogram { weights, non_wall_mass: non_wall as f64 / total }
}

/// Wall index when the configuration is down^i up^(n-i).
fn wall_index(c: &SpinConfig) -> Option<usize> {
    let mut i = 0;
    while i < c.n && !c.get(i) {
        i += 1;
    }
    if (i..c.n).all(|j| c.get(j)) {
        Some(i)
    } else {
        None
    }
}
