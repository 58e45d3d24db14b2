//! Chain specifications and full Hamiltonian construction.
//!
//! A dressed site is one nuclear spin-1/2 hyperfine-coupled to an optically
//! pumpable spin-1 (S) and a spin-1/2 (S'). Sites couple through a dipolar
//! exchange between S_j and S'_{j+1}. The exchange is the double-quantum
//! form (both electrons flip the same way); the crystal field D makes that
//! transition energy-conserving near the matching field.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::site::{HyperfineFrame, SiteSpec};
use crate::operator::{
    embed_product, projector, spin_matrices, unit_shift_matrices, Spin, SpinOperator,
};
use crate::space::SpaceLayout;

/// Default cap on full-model dimension: four dressed sites.
pub const DEFAULT_DIM_CAP: usize = 12 * 12 * 12 * 12;

pub mod constants {
    /// Electron gyromagnetic ratio magnitude (Hz/T).
    pub const GAMMA_E: f64 = 28.024e9;
    /// 13C nuclear gyromagnetic ratio (Hz/T).
    pub const GAMMA_N: f64 = 10.705e6;
    /// Default zero-field splitting of spin S (Hz).
    pub const D_ZFS: f64 = 2.87e9;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BondKind {
    Coherent,
    Directed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeEdge {
    pub a: usize,
    pub b: usize,
    pub kind: BondKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Open,
    Ring,
    Tree(Vec<TreeEdge>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub sites: Vec<SiteSpec>,
    pub topology: Topology,
    /// Inter-electronic dipolar coupling J_d (Hz).
    pub j_d: f64,
    /// Zero-field splitting of spin S (Hz).
    pub d_zfs: f64,
    /// Electron gyromagnetic ratio magnitude (Hz/T).
    pub gamma_e: f64,
    /// Nuclear gyromagnetic ratio (Hz/T).
    pub gamma_n: f64,
    /// Applied field (T).
    pub b_field: f64,
    /// Optical pumping rate of every spin S (1/s).
    pub pump_rate: f64,
    /// Electron spin-lattice relaxation rate (1/s).
    pub relax_rate: f64,
}

impl ChainSpec {
    pub fn validate(&self) -> Result<()> {
        if self.sites.is_empty() {
            return Err(Error::InvalidModel("chain needs at least one site".into()));
        }
        for s in &self.sites {
            s.validate()?;
        }
        if self.j_d < 0.0 || self.pump_rate < 0.0 || self.relax_rate < 0.0 {
            return Err(Error::InvalidModel("couplings and rates must be >= 0".into()));
        }
        if self.b_field < 0.0 {
            return Err(Error::InvalidModel("field must be >= 0".into()));
        }
        if matches!(self.topology, Topology::Ring) && self.sites.len() < 3 {
            return Err(Error::InvalidModel("ring topology requires >= 3 sites".into()));
        }
        if let Topology::Tree(edges) = &self.topology {
            let n = self.sites.len();
            for e in edges {
                if e.a >= n || e.b >= n || e.a == e.b {
                    return Err(Error::InvalidModel(format!(
                        "tree edge ({}, {}) out of range or self-bond",
                        e.a, e.b
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn omega_e(&self) -> f64 {
        self.gamma_e * self.b_field
    }

    pub fn omega_n(&self) -> f64 {
        self.gamma_n * self.b_field
    }

    pub fn omega_n_at(&self, b: f64) -> f64 {
        self.gamma_n * b
    }

    /// True when every site carries the same hyperfine tensors.
    pub fn is_uniform(&self) -> bool {
        self.sites.windows(2).all(|w| w[0] == w[1])
    }

    pub fn with_field(&self, b: f64) -> Self {
        let mut s = self.clone();
        s.b_field = b;
        s
    }

    /// Uniform chain constructor.
    pub fn uniform(
        n: usize,
        site: SiteSpec,
        topology: Topology,
        j_d: f64,
        b_field: f64,
        pump_rate: f64,
        relax_rate: f64,
    ) -> Result<Self> {
        let spec = Self {
            sites: vec![site; n],
            topology,
            j_d,
            d_zfs: constants::D_ZFS,
            gamma_e: constants::GAMMA_E,
            gamma_n: constants::GAMMA_N,
            b_field,
            pump_rate,
            relax_rate,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Layout of the 4-spin pair model: |m_I1, m_S, m_S', m_I2>.
pub fn pair_layout() -> SpaceLayout {
    SpaceLayout::from_pairs(&[("I1", 2), ("S", 3), ("Sp", 2), ("I2", 2)]).unwrap()
}

/// Layout of an N-site dressed chain: per site (I_j, S_j, Sp_j).
pub fn chain_layout(n: usize) -> SpaceLayout {
    let mut factors = Vec::with_capacity(3 * n);
    for j in 1..=n {
        factors.push((format!("I{j}"), 2));
        factors.push((format!("S{j}"), 3));
        factors.push((format!("Sp{j}"), 2));
    }
    SpaceLayout::new(factors).unwrap()
}

fn ix(m: &crate::operator::SpinMatrices) -> Array2<C64> {
    (&m.plus + &m.minus).mapv(|v| v * C64::new(0.5, 0.0))
}

/// Four-spin Hamiltonian of Section-II form: one nucleus coupled to S, the
/// other to S', electrons exchanging through the double-quantum bond.
///
/// Uses `sites[0]` for the I1-S hyperfine and `sites[1]` for the I2-S'
/// hyperfine.
pub fn build_pair_hamiltonian(spec: &ChainSpec) -> Result<SpinOperator> {
    spec.validate()?;
    if spec.sites.len() != 2 {
        return Err(Error::InvalidModel(format!(
            "pair model needs exactly 2 sites, got {}",
            spec.sites.len()
        )));
    }
    let layout = pair_layout();
    let half = spin_matrices(Spin::Half);
    let one = spin_matrices(Spin::One);
    let ix_half = ix(&half);
    let (t_up, t_dn) = unit_shift_matrices();
    let omega_n = spec.omega_n();
    let omega_e = spec.omega_e();
    let s1 = &spec.sites[0];
    let s2 = &spec.sites[1];

    let mut terms: Vec<(f64, Vec<(&str, Array2<C64>)>)> = vec![
        (-omega_n, vec![("I1", half.z.clone())]),
        (-omega_n, vec![("I2", half.z.clone())]),
        (omega_e, vec![("S", one.z.clone())]),
        (omega_e, vec![("Sp", half.z.clone())]),
        (spec.d_zfs, vec![("S", one.z.dot(&one.z))]),
        (s1.a_zz, vec![("S", one.z.clone()), ("I1", half.z.clone())]),
        (s1.a_zx, vec![("S", one.z.clone()), ("I1", ix_half.clone())]),
        (s2.ap_zz, vec![("Sp", half.z.clone()), ("I2", half.z.clone())]),
        (s2.ap_zx, vec![("Sp", half.z.clone()), ("I2", ix_half.clone())]),
    ];
    terms.push((spec.j_d / 2.0, vec![("S", t_up.clone()), ("Sp", half.plus.clone())]));
    terms.push((spec.j_d / 2.0, vec![("S", t_dn.clone()), ("Sp", half.minus.clone())]));

    crate::operator::embed_sum(&terms, &layout)?.into_hermitian()
}

/// Unit-cell Hamiltonian terms for site j added into `terms`.
fn unit_cell_terms<'a>(
    terms: &mut Vec<(f64, Vec<(&'a str, Array2<C64>)>)>,
    labels: &'a (String, String, String),
    site: &SiteSpec,
    omega_n: f64,
    omega_e: f64,
    d_zfs: f64,
) {
    let half = spin_matrices(Spin::Half);
    let one = spin_matrices(Spin::One);
    let ix_half = ix(&half);
    let (i_l, s_l, sp_l) = (&labels.0, &labels.1, &labels.2);
    terms.push((-omega_n, vec![(i_l.as_str(), half.z.clone())]));
    terms.push((omega_e, vec![(s_l.as_str(), one.z.clone())]));
    terms.push((omega_e, vec![(sp_l.as_str(), half.z.clone())]));
    terms.push((d_zfs, vec![(s_l.as_str(), one.z.dot(&one.z))]));
    terms.push((site.a_zz, vec![(s_l.as_str(), one.z.clone()), (i_l.as_str(), half.z.clone())]));
    terms.push((site.a_zx, vec![(s_l.as_str(), one.z.clone()), (i_l.as_str(), ix_half.clone())]));
    terms.push((site.ap_zz, vec![(sp_l.as_str(), half.z.clone()), (i_l.as_str(), half.z.clone())]));
    terms.push((site.ap_zx, vec![(sp_l.as_str(), half.z.clone()), (i_l.as_str(), ix_half)]));
}

/// Full chain Hamiltonian (unit cells plus S_j - S'_{j+1} exchange bonds).
pub fn build_chain_hamiltonian(spec: &ChainSpec) -> Result<SpinOperator> {
    build_chain_hamiltonian_with_cap(spec, DEFAULT_DIM_CAP)
}

pub fn build_chain_hamiltonian_with_cap(spec: &ChainSpec, cap: usize) -> Result<SpinOperator> {
    spec.validate()?;
    let n = spec.n_sites();
    if matches!(spec.topology, Topology::Tree(_)) {
        return Err(Error::InvalidModel(
            "full-model Hamiltonians support open and ring topologies; use the effective model for trees"
                .into(),
        ));
    }
    let dim = 12usize
        .checked_pow(n as u32)
        .ok_or_else(|| Error::DimensionCap { dim: usize::MAX, cap })?;
    if dim > cap {
        return Err(Error::DimensionCap { dim, cap });
    }
    let layout = chain_layout(n);
    let labels: Vec<(String, String, String)> =
        (1..=n).map(|j| (format!("I{j}"), format!("S{j}"), format!("Sp{j}"))).collect();
    let omega_n = spec.omega_n();
    let omega_e = spec.omega_e();

    let mut terms: Vec<(f64, Vec<(&str, Array2<C64>)>)> = Vec::new();
    for j in 0..n {
        unit_cell_terms(&mut terms, &labels[j], &spec.sites[j], omega_n, omega_e, spec.d_zfs);
    }
    let half = spin_matrices(Spin::Half);
    let (t_up, t_dn) = unit_shift_matrices();
    let mut bonds: Vec<(usize, usize)> = (0..n - 1).map(|j| (j, j + 1)).collect();
    if matches!(spec.topology, Topology::Ring) {
        bonds.push((n - 1, 0));
    }
    for (j, k) in bonds {
        terms.push((
            spec.j_d / 2.0,
            vec![(labels[j].1.as_str(), t_up.clone()), (labels[k].2.as_str(), half.plus.clone())],
        ));
        terms.push((
            spec.j_d / 2.0,
            vec![(labels[j].1.as_str(), t_dn.clone()), (labels[k].2.as_str(), half.minus.clone())],
        ));
    }
    crate::operator::embed_sum(&terms, &layout)?.into_hermitian()
}

/// Electron-level energy of one site (Hz): Zeeman plus crystal field.
pub fn electron_energy(m_s: i8, m_sp2: i8, omega_e: f64, d_zfs: f64) -> f64 {
    omega_e * (m_s as f64 + m_sp2 as f64 / 2.0) + d_zfs * (m_s as f64).powi(2)
}

/// Spin-S level index (descending m) to projection.
pub fn m_s_of_level(level: usize) -> i8 {
    1 - level as i8
}

/// Spin-S' level index to twice the projection.
pub fn m_sp2_of_level(level: usize) -> i8 {
    if level == 0 {
        1
    } else {
        -1
    }
}

/// Local dressing rotation R_y(theta): maps bare states to dressed ones.
pub fn dressing_rotation(theta: f64) -> Array2<C64> {
    let (s, c) = (theta / 2.0).sin_cos();
    let mut r = Array2::zeros((2, 2));
    r[[0, 0]] = C64::new(c, 0.0);
    r[[0, 1]] = C64::new(-s, 0.0);
    r[[1, 0]] = C64::new(s, 0.0);
    r[[1, 1]] = C64::new(c, 0.0);
    r
}

/// All 6 frames of one site, indexed by (S level, S' level).
pub fn site_frames(site: &SiteSpec, omega_n: f64) -> Result<[[HyperfineFrame; 2]; 3]> {
    let mk = |ls: usize, lsp: usize| {
        HyperfineFrame::new(site, m_s_of_level(ls), m_sp2_of_level(lsp), omega_n)
    };
    Ok([
        [mk(0, 0)?, mk(0, 1)?],
        [mk(1, 0)?, mk(1, 1)?],
        [mk(2, 0)?, mk(2, 1)?],
    ])
}

/// Global dressing unitary T for the chain: per site, conditional on the
/// electron manifold, rotate the nucleus into its hyperfine eigenframe.
/// Columns of T are the dressed basis states.
pub fn dressed_transform(spec: &ChainSpec) -> Result<SpinOperator> {
    let n = spec.n_sites();
    let layout = chain_layout(n);
    let omega_n = spec.omega_n();
    let mut acc: Option<SpinOperator> = None;
    for j in 0..n {
        let frames = site_frames(&spec.sites[j], omega_n)?;
        let i_label = format!("I{j_1}", j_1 = j + 1);
        let s_label = format!("S{j_1}", j_1 = j + 1);
        let sp_label = format!("Sp{j_1}", j_1 = j + 1);
        let mut t_site = SpinOperator::zero(layout.clone());
        for ls in 0..3 {
            for lsp in 0..2 {
                let r = dressing_rotation(frames[ls][lsp].theta_principal());
                let term = embed_product(
                    &[
                        (i_label.as_str(), &r),
                        (s_label.as_str(), &projector(3, ls)),
                        (sp_label.as_str(), &projector(2, lsp)),
                    ],
                    &layout,
                )?;
                t_site = t_site.add(&term)?;
            }
        }
        acc = Some(match acc {
            None => t_site,
            Some(a) => a.matmul(&t_site)?,
        });
    }
    Ok(acc.expect("n >= 1"))
}

/// Diagonal of the chain Hamiltonian in the dressed basis (Hz), computed
/// analytically from the frames.
pub fn dressed_energies(spec: &ChainSpec) -> Result<Array1<f64>> {
    dressed_energies_at(spec, spec.b_field)
}

pub fn dressed_energies_at(spec: &ChainSpec, b: f64) -> Result<Array1<f64>> {
    let n = spec.n_sites();
    let layout = chain_layout(n);
    let omega_n = spec.gamma_n * b;
    let omega_e = spec.gamma_e * b;
    let mut per_site_frames = Vec::with_capacity(n);
    for j in 0..n {
        per_site_frames.push(site_frames(&spec.sites[j], omega_n)?);
    }
    let d = layout.total_dim();
    let mut e = Array1::zeros(d);
    for idx in 0..d {
        let locals = layout.unravel(idx);
        let mut acc = 0.0;
        for j in 0..n {
            let (li, ls, lsp) = (locals[3 * j], locals[3 * j + 1], locals[3 * j + 2]);
            let frame = &per_site_frames[j][ls][lsp];
            let nuc_sign = if li == 0 { 0.5 } else { -0.5 };
            acc += electron_energy(m_s_of_level(ls), m_sp2_of_level(lsp), omega_e, spec.d_zfs)
                + nuc_sign * frame.signed_delta();
        }
        e[idx] = acc;
    }
    Ok(e)
}

/// The exchange-bond part of the chain Hamiltonian written directly in the
/// dressed basis: per bond, the electron transition operators dressed by
/// the nuclear frame-change rotations of the two affected nuclei, summed
/// over spectator electron manifolds. Exact, and free of the fill-in a
/// numerical T†HT product would produce.
pub fn dressed_bond_hamiltonian(spec: &ChainSpec) -> Result<SpinOperator> {
    let n = spec.n_sites();
    let layout = chain_layout(n);
    let omega_n = spec.omega_n();
    let mut frames = Vec::with_capacity(n);
    for j in 0..n {
        frames.push(site_frames(&spec.sites[j], omega_n)?);
    }
    let mut bonds: Vec<(usize, usize)> = (0..n.saturating_sub(1)).map(|j| (j, j + 1)).collect();
    if matches!(spec.topology, Topology::Ring) {
        bonds.push((n - 1, 0));
    }
    let mut acc = SpinOperator::zero(layout.clone());
    let half_jd = spec.j_d / 2.0;
    for (j, k) in bonds {
        let i_j = format!("I{}", j + 1);
        let s_j = format!("S{}", j + 1);
        let sp_j = format!("Sp{}", j + 1);
        let i_k = format!("I{}", k + 1);
        let s_k = format!("S{}", k + 1);
        let sp_k = format!("Sp{}", k + 1);
        // lowering part: S_j m: source -> source-1 together with S'_k +1/2 -> -1/2
        for (src_s, tgt_s) in [(0usize, 1usize), (1, 2)] {
            for lsp_j in 0..2 {
                // frame change of nucleus j: (m_S src, s') -> (m_S tgt, s')
                let r_j = frame_change(
                    frames[j][tgt_s][lsp_j].theta_principal(),
                    frames[j][src_s][lsp_j].theta_principal(),
                );
                let mut s_trans: Array2<C64> = Array2::zeros((3, 3));
                s_trans[[tgt_s, src_s]] = C64::new(1.0, 0.0);
                for ls_k in 0..3 {
                    // frame change of nucleus k: (m_S, +1/2) -> (m_S, -1/2)
                    let r_k = frame_change(
                        frames[k][ls_k][1].theta_principal(),
                        frames[k][ls_k][0].theta_principal(),
                    );
                    let mut sp_trans: Array2<C64> = Array2::zeros((2, 2));
                    sp_trans[[1, 0]] = C64::new(1.0, 0.0);
                    let term = embed_product(
                        &[
                            (i_j.as_str(), &r_j),
                            (s_j.as_str(), &s_trans),
                            (sp_j.as_str(), &projector(2, lsp_j)),
                            (i_k.as_str(), &r_k),
                            (s_k.as_str(), &projector(3, ls_k)),
                            (sp_k.as_str(), &sp_trans),
                        ],
                        &layout,
                    )?
                    .scale(C64::new(half_jd, 0.0));
                    acc = acc.add(&term)?.add(&term.dagger())?;
                }
            }
        }
    }
    Ok(acc)
}

/// <dressed(theta_to)| bare-rotation |dressed(theta_from)> as a 2x2 block:
/// R(theta_to)+ R(theta_from) = R_y(theta_from - theta_to).
fn frame_change(theta_to: f64, theta_from: f64) -> Array2<C64> {
    dressing_rotation(theta_from - theta_to)
}

/// A collapse operator acting on electron levels of one site, written in
/// the dressed basis: the local electron matrix dressed by the nuclear
/// frame change it causes.
pub fn dressed_site_jump(
    spec: &ChainSpec,
    site: usize,
    electron: ElectronSpecies,
    local: &Array2<C64>,
) -> Result<SpinOperator> {
    let n = spec.n_sites();
    let layout = chain_layout(n);
    let frames = site_frames(&spec.sites[site], spec.omega_n())?;
    let i_l = format!("I{}", site + 1);
    let s_l = format!("S{}", site + 1);
    let sp_l = format!("Sp{}", site + 1);
    let mut acc = SpinOperator::zero(layout.clone());
    match electron {
        ElectronSpecies::S => {
            for src in 0..3 {
                for tgt in 0..3 {
                    if local[[tgt, src]].norm_sqr() == 0.0 {
                        continue;
                    }
                    let mut trans: Array2<C64> = Array2::zeros((3, 3));
                    trans[[tgt, src]] = local[[tgt, src]];
                    for lsp in 0..2 {
                        let r = frame_change(
                            frames[tgt][lsp].theta_principal(),
                            frames[src][lsp].theta_principal(),
                        );
                        acc = acc.add(&embed_product(
                            &[
                                (i_l.as_str(), &r),
                                (s_l.as_str(), &trans),
                                (sp_l.as_str(), &projector(2, lsp)),
                            ],
                            &layout,
                        )?)?;
                    }
                }
            }
        }
        ElectronSpecies::Sp => {
            for src in 0..2 {
                for tgt in 0..2 {
                    if local[[tgt, src]].norm_sqr() == 0.0 {
                        continue;
                    }
                    let mut trans: Array2<C64> = Array2::zeros((2, 2));
                    trans[[tgt, src]] = local[[tgt, src]];
                    for ls in 0..3 {
                        let r = frame_change(
                            frames[ls][tgt].theta_principal(),
                            frames[ls][src].theta_principal(),
                        );
                        acc = acc.add(&embed_product(
                            &[
                                (i_l.as_str(), &r),
                                (s_l.as_str(), &projector(3, ls)),
                                (sp_l.as_str(), &trans),
                            ],
                            &layout,
                        )?)?;
                    }
                }
            }
        }
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElectronSpecies {
    S,
    Sp,
}

/// Frames of the 4-spin pair: I1 conditioned on the S manifold (index by S
/// level), I2 on the S' manifold (index by S' level).
pub fn pair_frames(
    spec: &ChainSpec,
) -> Result<([HyperfineFrame; 3], [HyperfineFrame; 2])> {
    let omega_n = spec.omega_n();
    let s1 = SiteSpec::new(spec.sites[0].a_zz, spec.sites[0].a_zx, 0.0, 0.0)?;
    let s2 = SiteSpec::new(0.0, 0.0, spec.sites[1].ap_zz, spec.sites[1].ap_zx)?;
    let f1 = [
        HyperfineFrame::new(&s1, 1, -1, omega_n)?,
        HyperfineFrame::new(&s1, 0, -1, omega_n)?,
        HyperfineFrame::new(&s1, -1, -1, omega_n)?,
    ];
    let f2 = [
        HyperfineFrame::new(&s2, 0, 1, omega_n)?,
        HyperfineFrame::new(&s2, 0, -1, omega_n)?,
    ];
    Ok((f1, f2))
}

/// Dressing unitary of the 4-spin pair on `pair_layout()`.
pub fn pair_dressed_transform(spec: &ChainSpec) -> Result<SpinOperator> {
    let layout = pair_layout();
    let (f1, f2) = pair_frames(spec)?;
    let mut t1 = SpinOperator::zero(layout.clone());
    for ls in 0..3 {
        let r = dressing_rotation(f1[ls].theta_principal());
        t1 = t1.add(&embed_product(
            &[("I1", &r), ("S", &projector(3, ls))],
            &layout,
        )?)?;
    }
    let mut t2 = SpinOperator::zero(layout.clone());
    for lsp in 0..2 {
        let r = dressing_rotation(f2[lsp].theta_principal());
        t2 = t2.add(&embed_product(
            &[("I2", &r), ("Sp", &projector(2, lsp))],
            &layout,
        )?)?;
    }
    t1.matmul(&t2)
}

/// Dressed product state of the pair: levels (I1, S, S', I2) with each
/// nucleus rotated into its conditional frame.
pub fn pair_dressed_basis_state(
    spec: &ChainSpec,
    levels: (usize, usize, usize, usize),
) -> Result<Array1<C64>> {
    let layout = pair_layout();
    let (f1, f2) = pair_frames(spec)?;
    let (li1, ls, lsp, li2) = levels;
    let r1 = dressing_rotation(f1[ls].theta_principal());
    let r2 = dressing_rotation(f2[lsp].theta_principal());
    let mut v: Array1<C64> = Array1::zeros(layout.total_dim());
    for b1 in 0..2 {
        for b2 in 0..2 {
            let amp = r1[[b1, li1]] * r2[[b2, li2]];
            if amp.norm_sqr() > 0.0 {
                v[layout.ravel(&[b1, ls, lsp, b2])] += amp;
            }
        }
    }
    Ok(v)
}

/// A dressed product state of the chain: per site (nuclear level, S level,
/// S' level), with the nucleus rotated into its conditional frame.
pub fn dressed_basis_state(
    spec: &ChainSpec,
    levels: &[(usize, usize, usize)],
) -> Result<Array1<C64>> {
    let n = spec.n_sites();
    if levels.len() != n {
        return Err(Error::DimensionMismatch("one level triple per site".into()));
    }
    let layout = chain_layout(n);
    let omega_n = spec.omega_n();
    let mut v: Array1<C64> = Array1::zeros(layout.total_dim());
    // iterate over all bare nuclear combinations, amplitudes from rotations
    let combos = 1usize << n;
    for combo in 0..combos {
        let mut amp = C64::new(1.0, 0.0);
        let mut locals = Vec::with_capacity(3 * n);
        for j in 0..n {
            let (li, ls, lsp) = levels[j];
            let frames = site_frames(&spec.sites[j], omega_n)?;
            let r = dressing_rotation(frames[ls][lsp].theta_principal());
            let bare = (combo >> j) & 1;
            amp *= r[[bare, li]];
            locals.push(bare);
            locals.push(ls);
            locals.push(lsp);
        }
        if amp.norm_sqr() > 0.0 {
            v[layout.ravel(&locals)] += amp;
        }
    }
    Ok(v)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    pub fn nv_like_pair() -> ChainSpec {
        ChainSpec {
            sites: vec![
                SiteSpec::new(13e6, 13e6, 0.0, 0.0).unwrap(),
                SiteSpec::new(0.0, 0.0, 4e6, 4e6).unwrap(),
            ],
            topology: Topology::Open,
            j_d: 247e3,
            d_zfs: constants::D_ZFS,
            gamma_e: constants::GAMMA_E,
            gamma_n: constants::GAMMA_N,
            b_field: 0.05,
            pump_rate: 0.0,
            relax_rate: 0.0,
        }
    }

    #[test]
    fn pair_hamiltonian_zero_couplings_is_crystal_field_only() {
        let mut spec = nv_like_pair();
        spec.sites = vec![
            SiteSpec::new(0.0, 0.0, 0.0, 0.0).unwrap(),
            SiteSpec::new(0.0, 0.0, 0.0, 0.0).unwrap(),
        ];
        spec.j_d = 0.0;
        spec.b_field = 0.0;
        let h = build_pair_hamiltonian(&spec).unwrap();
        let d = h.to_dense();
        let layout = pair_layout();
        for i in 0..24 {
            for j in 0..24 {
                if i == j {
                    let ls = layout.unravel(i)[1];
                    let expect = spec.d_zfs * (m_s_of_level(ls) as f64).powi(2);
                    assert_abs_diff_eq!(d[[i, j]].re, expect, epsilon = 1e-6);
                } else {
                    assert_abs_diff_eq!(d[[i, j]].norm(), 0.0, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn pair_hamiltonian_decoupled_electrons_commute_with_projections() {
        let mut spec = nv_like_pair();
        spec.j_d = 0.0;
        let h = build_pair_hamiltonian(&spec).unwrap();
        let layout = pair_layout();
        let one = spin_matrices(Spin::One);
        let half = spin_matrices(Spin::Half);
        let sz = crate::operator::embed(&one.z, "S", &layout).unwrap();
        let spz = crate::operator::embed(&half.z, "Sp", &layout).unwrap();
        let scale = h.max_abs();
        assert!(h.commutator(&sz).unwrap().max_abs() < 1e-12 * scale);
        assert!(h.commutator(&spz).unwrap().max_abs() < 1e-12 * scale);
    }

    #[test]
    fn chain_n1_is_unit_cell() {
        let site = SiteSpec::new(13e6, 13e6, 4e6, 4e6).unwrap();
        let spec = ChainSpec::uniform(1, site, Topology::Open, 62e3, 0.05, 0.0, 0.0).unwrap();
        let h = build_chain_hamiltonian(&spec).unwrap();
        assert_eq!(h.dim(), 12);
        // check one diagonal element by hand: bare |I up, S=+1, Sp=+1/2>
        let d = h.to_dense();
        let w_n = spec.omega_n();
        let w_e = spec.omega_e();
        let expect = -w_n * 0.5
            + w_e * 1.0
            + w_e * 0.5
            + spec.d_zfs
            + 13e6 * 1.0 * 0.5
            + 4e6 * 0.5 * 0.5;
        assert_abs_diff_eq!(d[[0, 0]].re, expect, epsilon = 1.0);
    }

    #[test]
    fn ring_translation_symmetry() {
        let site = SiteSpec::new(13e6, 13e6, 4e6, 4e6).unwrap();
        let spec = ChainSpec::uniform(3, site, Topology::Ring, 62e3, 0.05, 0.0, 0.0).unwrap();
        let h = build_chain_hamiltonian(&spec).unwrap();
        let layout = chain_layout(3);
        let d = layout.total_dim();
        // permutation: site j -> j+1 (cyclic)
        let mut perm = vec![0usize; d];
        for idx in 0..d {
            let l = layout.unravel(idx);
            let mut shifted = vec![0usize; 9];
            for j in 0..3 {
                let jn = (j + 1) % 3;
                shifted[3 * jn] = l[3 * j];
                shifted[3 * jn + 1] = l[3 * j + 1];
                shifted[3 * jn + 2] = l[3 * j + 2];
            }
            perm[idx] = layout.ravel(&shifted);
        }
        // check H[perm(i), perm(j)] == H[i, j] elementwise on the sparse pattern
        let dense = h.to_dense();
        let scale = h.max_abs();
        let mut max_dev = 0.0_f64;
        for (v, (r, c)) in h.matrix.iter() {
            let dev = (dense[[perm[r], perm[c]]] - *v).norm();
            max_dev = max_dev.max(dev);
        }
        assert!(max_dev < 1e-9 * scale, "translation symmetry violated: {max_dev:.3e}");
    }

    #[test]
    fn chain_restricted_to_pair_subspace_matches_pair_model() {
        // chain with A'_1 = 0 and A_2 = 0 equals the 4-spin model on the
        // subspace where the dummy spins are fixed, up to the constant
        // -omega_e/2 from the frozen S'_1.
        let mut spec = nv_like_pair();
        spec.j_d = 100e3;
        let h_pair = build_pair_hamiltonian(&spec).unwrap().to_dense();
        let h_chain = build_chain_hamiltonian(&spec).unwrap();
        let chain_l = chain_layout(2);
        let pair_l = pair_layout();
        let dense_chain = h_chain.to_dense();
        let offset = -spec.omega_e() / 2.0;
        let mut max_dev = 0.0_f64;
        for i_pair in 0..24 {
            let lp = pair_l.unravel(i_pair); // [I1, S, Sp, I2]
            // chain locals: I1, S1, Sp1=down(1), I2, S2=0-level(1), Sp2
            let li = chain_l.ravel(&[lp[0], lp[1], 1, lp[3], 1, lp[2]]);
            for j_pair in 0..24 {
                let lq = pair_l.unravel(j_pair);
                let lj = chain_l.ravel(&[lq[0], lq[1], 1, lq[3], 1, lq[2]]);
                let want = h_pair[[i_pair, j_pair]]
                    + if i_pair == j_pair { C64::new(offset, 0.0) } else { C64::new(0.0, 0.0) };
                max_dev = max_dev.max((dense_chain[[li, lj]] - want).norm());
            }
        }
        assert!(max_dev < 1e-6, "pair/chain mismatch {max_dev:.3e}");
    }

    #[test]
    fn dressed_transform_is_unitary_and_diagonalizes_cells() {
        let site = SiteSpec::new(13e6, 13e6, 4e6, 4e6).unwrap();
        let spec = ChainSpec::uniform(2, site, Topology::Open, 0.0, 0.05, 0.0, 0.0).unwrap();
        let t = dressed_transform(&spec).unwrap();
        let tt = t.dagger().matmul(&t).unwrap();
        let eye = SpinOperator::identity(chain_layout(2));
        let dev = (&tt.matrix - &eye.matrix).iter().map(|(v, _)| v.norm()).fold(0.0, f64::max);
        assert!(dev < 1e-12);

        // with J_d = 0 the dressed Hamiltonian is diagonal with the analytic energies
        let h = build_chain_hamiltonian(&spec).unwrap();
        let ht = t.dagger().matmul(&h).unwrap().matmul(&t).unwrap();
        let energies = dressed_energies(&spec).unwrap();
        let dense = ht.to_dense();
        let mut max_offdiag = 0.0_f64;
        let mut max_diag_dev = 0.0_f64;
        for i in 0..dense.nrows() {
            for j in 0..dense.ncols() {
                if i == j {
                    max_diag_dev = max_diag_dev.max((dense[[i, i]].re - energies[i]).abs());
                } else {
                    max_offdiag = max_offdiag.max(dense[[i, j]].norm());
                }
            }
        }
        assert!(max_offdiag < 1e-3, "off-diagonal {max_offdiag:.3e}");
        assert!(max_diag_dev < 1e-3, "diag deviation {max_diag_dev:.3e}");
    }

    #[test]
    fn dressed_bond_hamiltonian_matches_transformed_product() {
        let site = SiteSpec::new(13e6, 13e6, 4e6, 4e6).unwrap();
        let spec = ChainSpec::uniform(2, site, Topology::Open, 62e3, 0.05, 0.0, 0.0).unwrap();
        let t = dressed_transform(&spec).unwrap();
        let h = build_chain_hamiltonian(&spec).unwrap();
        let ht = t.dagger().matmul(&h).unwrap().matmul(&t).unwrap();
        let direct = dressed_bond_hamiltonian(&spec).unwrap();
        let energies = dressed_energies(&spec).unwrap();
        let dense = ht.to_dense();
        let dd = direct.to_dense();
        let scale = h.max_abs();
        let mut max_dev = 0.0_f64;
        for i in 0..144 {
            for j in 0..144 {
                let want = if i == j {
                    C64::new(energies[i], 0.0) + dd[[i, j]]
                } else {
                    dd[[i, j]]
                };
                max_dev = max_dev.max((dense[[i, j]] - want).norm());
            }
        }
        assert!(max_dev < 1e-9 * scale, "deviation {max_dev:.3e} (scale {scale:.3e})");
    }

    #[test]
    fn dressed_site_jump_matches_transform() {
        let site = SiteSpec::new(13e6, 13e6, 4e6, 4e6).unwrap();
        let spec = ChainSpec::uniform(2, site, Topology::Open, 62e3, 0.05, 0.0, 0.0).unwrap();
        let layout = chain_layout(2);
        let t = dressed_transform(&spec).unwrap();
        // pump-like local op on S2
        let mut local: Array2<C64> = Array2::zeros((3, 3));
        local[[1, 2]] = C64::new(2.0, 0.0);
        let bare = crate::operator::embed(&local, "S2", &layout).unwrap();
        let via_product = t.dagger().matmul(&bare).unwrap().matmul(&t).unwrap();
        let direct = dressed_site_jump(&spec, 1, ElectronSpecies::S, &local).unwrap();
        let dev = (&via_product.matrix - &direct.matrix)
            .iter()
            .map(|(v, _)| v.norm())
            .fold(0.0, f64::max);
        assert!(dev < 1e-12, "deviation {dev:.3e}");
        // relaxation-like op on Sp1
        let halfm = spin_matrices(Spin::Half);
        let bare2 = crate::operator::embed(&halfm.plus, "Sp1", &layout).unwrap();
        let via2 = t.dagger().matmul(&bare2).unwrap().matmul(&t).unwrap();
        let direct2 = dressed_site_jump(&spec, 0, ElectronSpecies::Sp, &halfm.plus).unwrap();
        let dev2 = (&via2.matrix - &direct2.matrix)
            .iter()
            .map(|(v, _)| v.norm())
            .fold(0.0, f64::max);
        assert!(dev2 < 1e-12, "deviation {dev2:.3e}");
    }

    #[test]
    fn dressed_basis_state_is_energy_eigenstate_without_bonds() {
        let site = SiteSpec::new(13e6, 13e6, 4e6, 4e6).unwrap();
        let spec = ChainSpec::uniform(2, site, Topology::Open, 0.0, 0.05, 0.0, 0.0).unwrap();
        let h = build_chain_hamiltonian(&spec).unwrap();
        let v = dressed_basis_state(&spec, &[(0, 1, 0), (1, 1, 1)]).unwrap();
        let hv = h.apply(&v);
        let e = v.iter().zip(hv.iter()).map(|(a, b)| a.conj() * b).sum::<C64>();
        // residual |Hv - E v| should vanish
        let mut res = 0.0_f64;
        for (a, b) in hv.iter().zip(v.iter()) {
            res = res.max((a - e * b).norm());
        }
        assert!(res < 1e-3, "residual {res:.3e}");
    }
}
