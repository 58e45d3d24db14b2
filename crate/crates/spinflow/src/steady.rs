//! Steady states of Lindblad generators.
//!
//! Three routes, picked automatically:
//! - purely dissipative generators whose collapse operators map basis states
//!   to basis states, with a diagonal initial state: exact classical
//!   absorbing-chain analysis (SCC condensation + linear solves);
//! - small generators: dense vectorized kernel (eigendecomposition or
//!   shift-invert subspace iteration up to dimension 64);
//! - degenerate kernels with an initial state: long-time propagation until
//!   the residual ||d rho/dt|| drops below tolerance.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::error::{Error, Result};
use crate::integrate::{integrate_grid, AdaptiveOptions};
use crate::lindblad::{lindblad_rhs, liouvillian_matrix, EigenPropagator, Liouvillian};
use crate::state::QuantumState;

/// Residual tolerance ||d rho/dt||_F for accepted steady states (1/s).
pub const RESIDUAL_TOL: f64 = 1e-9;
/// Kernel route: full eigendecomposition up to this vectorized dimension.
const EIG_KERNEL_CAP: usize = 600;
/// Kernel route: shift-invert subspace iteration up to this density dim.
const SHIFT_INVERT_DIM_CAP: usize = 64;
/// Off-diagonal magnitude below which a state counts as diagonal.
const DIAG_TOL: f64 = 1e-12;

/// Compute the steady state. `initial` is required when the kernel is
/// degenerate (conserved quantities select the asymptotic state).
pub fn steady_state(liou: &Liouvillian, initial: Option<&QuantumState>) -> Result<QuantumState> {
    if let Some(rho0) = initial {
        rho0.layout.same_as(liou.layout())?;
        if let Some(populations) = classical_populations(liou, rho0) {
            return classical_steady(liou, &populations?);
        }
    }
    let d = liou.dim();
    if d * d <= EIG_KERNEL_CAP {
        match kernel_steady_eig(liou)? {
            KernelOutcome::Unique(state) => return Ok(state),
            KernelOutcome::Degenerate(kernel_dim) => {
                let rho0 = initial.ok_or(Error::MultipleSteadyStates { kernel_dim })?;
                return long_time_steady(liou, rho0);
            }
        }
    }
    if initial.is_none() {
        if d <= SHIFT_INVERT_DIM_CAP {
            return match kernel_steady_shift_invert(liou)? {
                KernelOutcome::Unique(state) => Ok(state),
                KernelOutcome::Degenerate(kernel_dim) => {
                    Err(Error::MultipleSteadyStates { kernel_dim })
                }
            };
        }
        return Err(Error::DimensionCap { dim: d, cap: SHIFT_INVERT_DIM_CAP });
    }
    long_time_steady(liou, initial.unwrap())
}

/// Frobenius norm of the generator applied to a state (1/s).
pub fn residual_norm(liou: &Liouvillian, state: &QuantumState) -> f64 {
    let rhs = lindblad_rhs(liou, &state.density_matrix());
    rhs.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

// ---------------------------------------------------------------------------
// classical route
// ---------------------------------------------------------------------------

/// If the generator is classical (no or diagonal Hamiltonian; every collapse
/// operator maps basis states to basis states) and the initial state is
/// diagonal, return the initial populations.
fn classical_populations(
    liou: &Liouvillian,
    rho0: &QuantumState,
) -> Option<Result<Array1<f64>>> {
    if let Some(h) = &liou.hamiltonian {
        let off_diag = h.matrix.iter().any(|(v, (r, c))| r != c && v.norm() > 0.0);
        if off_diag {
            return None;
        }
    }
    for c in &liou.jumps.ops {
        // basis-to-basis: at most one entry per column
        let mut col_seen = vec![false; c.dim()];
        for (_, (_, col)) in c.matrix.iter() {
            if col_seen[col] {
                return None;
            }
            col_seen[col] = true;
        }
    }
    let m = rho0.density_matrix();
    let d = m.nrows();
    for i in 0..d {
        for j in 0..d {
            if i != j && m[[i, j]].norm() > DIAG_TOL {
                return None;
            }
        }
    }
    Some(Ok(Array1::from_iter((0..d).map(|i| m[[i, i]].re))))
}

/// Exact asymptotics of the classical hop process.
fn classical_steady(liou: &Liouvillian, p0: &Array1<f64>) -> Result<QuantumState> {
    crate::blas_guard::ensure_single_thread_blas();
    let d = liou.dim();
    // transition rates c -> r
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    for c_op in &liou.jumps.ops {
        for (v, (r, c)) in c_op.matrix.iter() {
            if r != c {
                edges.push((c, r, v.norm_sqr()));
            }
        }
    }
    let mut graph: DiGraph<(), ()> = DiGraph::new();
    for _ in 0..d {
        graph.add_node(());
    }
    for &(c, r, _) in &edges {
        graph.add_edge((c as u32).into(), (r as u32).into(), ());
    }
    let sccs = tarjan_scc(&graph);
    let mut comp_of = vec![usize::MAX; d];
    for (k, comp) in sccs.iter().enumerate() {
        for node in comp {
            comp_of[node.index()] = k;
        }
    }
    // terminal components have no outgoing edge to another component
    let mut terminal = vec![true; sccs.len()];
    for &(c, r, _) in &edges {
        if comp_of[c] != comp_of[r] {
            terminal[comp_of[c]] = false;
        }
    }
    let recurrent_classes: Vec<&Vec<petgraph::graph::NodeIndex>> = sccs
        .iter()
        .enumerate()
        .filter(|(k, _)| terminal[*k])
        .map(|(_, c)| c)
        .collect();
    let transient: Vec<usize> = (0..d).filter(|&i| !terminal[comp_of[i]]).collect();
    let t_index: std::collections::HashMap<usize, usize> =
        transient.iter().enumerate().map(|(k, &i)| (i, k)).collect();

    // absorbed mass per recurrent class
    let n_t = transient.len();
    let mut class_mass = vec![0.0_f64; recurrent_classes.len()];
    let class_of_comp: std::collections::HashMap<usize, usize> = recurrent_classes
        .iter()
        .enumerate()
        .map(|(ci, comp)| (comp_of[comp[0].index()], ci))
        .collect();
    for (ci, comp) in recurrent_classes.iter().enumerate() {
        for node in comp.iter() {
            class_mass[ci] += p0[node.index()];
        }
    }
    if n_t > 0 {
        // M h = b with M = diag(out) - A on the transient block
        let mut m = Array2::<f64>::zeros((n_t, n_t));
        let mut b = Array2::<f64>::zeros((n_t, recurrent_classes.len()));
        for &(c, r, rate) in &edges {
            if let Some(&ic) = t_index.get(&c) {
                m[[ic, ic]] += rate;
                if let Some(&ir) = t_index.get(&r) {
                    m[[ic, ir]] -= rate;
                } else if let Some(&cls) = class_of_comp.get(&comp_of[r]) {
                    b[[ic, cls]] += rate;
                }
            }
        }
        use ndarray_linalg::Solve;
        for cls in 0..recurrent_classes.len() {
            let rhs = b.column(cls).to_owned();
            let h = m.solve(&rhs).map_err(|e| Error::Linalg(e.to_string()))?;
            for (k, &i) in transient.iter().enumerate() {
                class_mass[cls] += p0[i] * h[k];
            }
        }
    }

    // stationary distribution within each terminal class
    let mut p_inf = Array1::<f64>::zeros(d);
    for (ci, comp) in recurrent_classes.iter().enumerate() {
        if class_mass[ci] <= 0.0 {
            continue;
        }
        if comp.len() == 1 {
            p_inf[comp[0].index()] += class_mass[ci];
            continue;
        }
        let k = comp.len();
        let local: std::collections::HashMap<usize, usize> =
            comp.iter().enumerate().map(|(a, n)| (n.index(), a)).collect();
        let mut q = Array2::<f64>::zeros((k, k));
        for &(c, r, rate) in &edges {
            if let (Some(&lc), Some(&lr)) = (local.get(&c), local.get(&r)) {
                q[[lr, lc]] += rate;
                q[[lc, lc]] -= rate;
            }
        }
        // replace last row by normalization
        for j in 0..k {
            q[[k - 1, j]] = 1.0;
        }
        let mut rhs = Array1::<f64>::zeros(k);
        rhs[k - 1] = 1.0;
        use ndarray_linalg::Solve;
        let pi = q.solve(&rhs).map_err(|e| Error::Linalg(e.to_string()))?;
        for (a, node) in comp.iter().enumerate() {
            p_inf[node.index()] += class_mass[ci] * pi[a];
        }
    }

    let total: f64 = p_inf.sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::SteadyStateNotConverged { residual: (total - 1.0).abs(), t: 0.0 });
    }
    let p_norm: Vec<f64> = p_inf.iter().map(|&w| (w / total).max(0.0)).collect();
    let state = QuantumState::from_populations(liou.layout().clone(), &p_norm)?;
    let res = residual_norm(liou, &state);
    let scale = rate_scale(liou).max(1.0);
    if res > RESIDUAL_TOL * scale {
        return Err(Error::SteadyStateNotConverged { residual: res, t: 0.0 });
    }
    Ok(state)
}

// ---------------------------------------------------------------------------
// kernel routes
// ---------------------------------------------------------------------------

enum KernelOutcome {
    Unique(QuantumState),
    Degenerate(usize),
}

fn vector_to_state(liou: &Liouvillian, v: &Array1<C64>) -> Result<QuantumState> {
    let d = liou.dim();
    let mut m = Array2::zeros((d, d));
    for i in 0..d {
        for j in 0..d {
            m[[i, j]] = v[i * d + j];
        }
    }
    let trace: C64 = (0..d).map(|i| m[[i, i]]).sum();
    if trace.norm() < 1e-12 {
        return Err(Error::Linalg("kernel vector is traceless".into()));
    }
    let m = m.mapv(|x| x / trace);
    let m_dag = m.t().mapv(|x: C64| x.conj());
    let m = (&m + &m_dag).mapv(|x| x * C64::new(0.5, 0.0));
    QuantumState::density(liou.layout().clone(), m)
}

fn rate_scale(liou: &Liouvillian) -> f64 {
    let mut s = 0.0_f64;
    if let Some(h) = &liou.hamiltonian {
        s += crate::TAU * h.max_abs();
    }
    for c in &liou.jumps.ops {
        let m = c.max_abs();
        s += m * m;
    }
    s
}

fn kernel_steady_eig(liou: &Liouvillian) -> Result<KernelOutcome> {
    use ndarray_linalg::Eig;
    crate::blas_guard::ensure_single_thread_blas();
    let l = liouvillian_matrix(liou).to_dense();
    let (vals, vecs) = l.eig()?;
    let scale = rate_scale(liou).max(vals.iter().map(|v| v.norm()).fold(0.0, f64::max));
    let tol = 1e-10 * scale.max(1e-300);
    let kernel: Vec<usize> =
        (0..vals.len()).filter(|&k| vals[k].norm() < tol).collect();
    match kernel.len() {
        0 => Err(Error::Linalg("no kernel eigenvalue found".into())),
        1 => {
            let v = vecs.column(kernel[0]).to_owned();
            Ok(KernelOutcome::Unique(vector_to_state(liou, &v)?))
        }
        n => Ok(KernelOutcome::Degenerate(n)),
    }
}

/// Shift-invert subspace iteration for the kernel of larger generators.
fn kernel_steady_shift_invert(liou: &Liouvillian) -> Result<KernelOutcome> {
    use ndarray_linalg::{Eig, Factorize, Solve};
    crate::blas_guard::ensure_single_thread_blas();
    let l = liouvillian_matrix(liou).to_dense();
    let dl = l.nrows();
    let scale = rate_scale(liou).max(1.0);
    let sigma = C64::new(scale * 1e-7, scale * 1e-7);
    let mut shifted = l.clone();
    for i in 0..dl {
        shifted[[i, i]] -= sigma;
    }
    let lu = shifted.factorize().map_err(|e| Error::Linalg(e.to_string()))?;

    let k = 12.min(dl);
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(0x5eed);
    let mut basis: Vec<Array1<C64>> = (0..k)
        .map(|_| {
            Array1::from_iter(
                (0..dl).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))),
            )
        })
        .collect();
    for _ in 0..40 {
        for v in basis.iter_mut() {
            *v = lu.solve(v).map_err(|e| Error::Linalg(e.to_string()))?;
        }
        orthonormalize(&mut basis);
    }
    // Rayleigh-Ritz on the subspace
    let mut lx: Vec<Array1<C64>> = basis.iter().map(|v| l.dot(v)).collect();
    let mut m: Array2<C64> = Array2::zeros((k, k));
    for i in 0..k {
        for j in 0..k {
            m[[i, j]] = basis[i].iter().zip(lx[j].iter()).map(|(a, b)| a.conj() * b).sum();
        }
    }
    let (vals, vecs): (Array1<C64>, Array2<C64>) = m.eig()?;
    let tol = 1e-9 * scale;
    let near_zero: Vec<usize> = (0..k).filter(|&i| vals[i].norm() < tol).collect();
    match near_zero.len() {
        0 => Err(Error::Linalg("no kernel detected by subspace iteration".into())),
        1 => {
            let idx = near_zero[0];
            let mut v: Array1<C64> = Array1::zeros(dl);
            for (j, b) in basis.iter().enumerate() {
                let w = vecs[[j, idx]];
                v.scaled_add(w, b);
            }
            // one refinement of the residual
            lx.clear();
            Ok(KernelOutcome::Unique(vector_to_state(liou, &v)?))
        }
        n => Ok(KernelOutcome::Degenerate(n)),
    }
}

fn orthonormalize(basis: &mut [Array1<C64>]) {
    for i in 0..basis.len() {
        for j in 0..i {
            let proj: C64 =
                basis[j].iter().zip(basis[i].iter()).map(|(a, b)| a.conj() * b).sum();
            let prev = basis[j].clone();
            basis[i].scaled_add(-proj, &prev);
        }
        let n = basis[i].iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-300 {
            basis[i].mapv_inplace(|v| v / n);
        }
    }
}

// ---------------------------------------------------------------------------
// long-time route
// ---------------------------------------------------------------------------

fn long_time_steady(liou: &Liouvillian, rho0: &QuantumState) -> Result<QuantumState> {
    let d = liou.dim();
    let scale = rate_scale(liou).max(1e-300);
    let tol = RESIDUAL_TOL * scale.max(1.0);

    if d * d <= EIG_KERNEL_CAP {
        // exact propagation to exponentially growing horizons
        let l = liouvillian_matrix(liou).to_dense();
        let prop = EigenPropagator::new(&l)?;
        let v0 = Array1::from_iter(rho0.density_matrix().iter().cloned());
        let mut t = 1.0 / scale;
        for _ in 0..120 {
            let v = prop.apply(&v0, t);
            let state = vector_to_state(liou, &v)?;
            let res = residual_norm(liou, &state);
            if res < tol {
                return Ok(state);
            }
            t *= 2.0;
        }
        return Err(Error::SteadyStateNotConverged { residual: f64::NAN, t });
    }

    // step integration with doubling (capped) horizons
    let mut state = rho0.to_density();
    let mut t = 0.0_f64;
    let mut h = 10.0 / scale;
    let h_cap = 2e4 / scale;
    for _ in 0..60 {
        let h_eff = h.min(h_cap);
        let m0 = state.density_matrix();
        let v0 = Array1::from_iter(m0.iter().cloned());
        let grid = [t, t + h_eff];
        let out = integrate_grid(
            |_t, v| {
                let rho = Array2::from_shape_vec((d, d), v.to_vec()).unwrap();
                let drho = lindblad_rhs(liou, &rho);
                Array1::from_iter(drho.iter().cloned())
            },
            &v0,
            &grid,
            &AdaptiveOptions::default(),
        )?;
        let v1 = out.into_iter().nth(1).unwrap();
        state = vector_to_state(liou, &v1)?;
        t += h_eff;
        h *= 2.0;
        let res = residual_norm(liou, &state);
        if res < tol {
            return Ok(state);
        }
    }
    Err(Error::SteadyStateNotConverged { residual: residual_norm(liou, &state), t })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effective::{effective_lindbladian, limit_state, EffectiveModel};
    use crate::lindblad::single_spin_one_pump;
    use crate::space::SpaceLayout;
    use approx::assert_abs_diff_eq;

    #[test]
    fn unique_kernel_single_spin_pump() {
        let liou = single_spin_one_pump(2.0);
        let s = steady_state(&liou, None).unwrap();
        let m = s.density_matrix();
        assert_abs_diff_eq!(m[[1, 1]].re, 1.0, epsilon = 1e-9);
        assert!(residual_norm(&liou, &s) < 1e-9 * 2.0);
    }

    #[test]
    fn single_directed_bond_absorbs() {
        let model = EffectiveModel::open_chain(2, 7.0);
        let liou = effective_lindbladian(&model).unwrap();
        let up_down =
            QuantumState::basis_state(model.layout(), &[0, 1]).unwrap().to_density();
        let s = steady_state(&liou, Some(&up_down)).unwrap();
        let m = s.density_matrix();
        // |down up> has index 2
        assert_abs_diff_eq!(m[[2, 2]].re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_kernel_without_initial_errors() {
        let model = EffectiveModel::open_chain(2, 7.0);
        let liou = effective_lindbladian(&model).unwrap();
        match steady_state(&liou, None) {
            Err(Error::MultipleSteadyStates { kernel_dim }) => assert!(kernel_dim >= 3),
            other => panic!("expected degenerate kernel, got {other:?}"),
        }
    }

    #[test]
    fn open_chain_limit_state_matches_steady() {
        for n in 2..=6 {
            let model = EffectiveModel::open_chain(n, 13.0);
            let liou = effective_lindbladian(&model).unwrap();
            let mixed = QuantumState::maximally_mixed(model.layout());
            let s = steady_state(&liou, Some(&mixed)).unwrap();
            let expect = limit_state(n);
            let m = s.density_matrix();
            // all mass on domain-wall states with binomial weights
            for i in 0..=n {
                let idx = expect.config_index(i);
                assert_abs_diff_eq!(m[[idx, idx]].re, expect.weights[i], epsilon = 1e-8);
            }
            let total_dw: f64 = (0..=n).map(|i| m[[expect.config_index(i), expect.config_index(i)]].re).sum();
            assert_abs_diff_eq!(total_dw, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn ring_uniform_polarization() {
        use crate::operator::{embed, spin_matrices, Spin};
        let n = 4;
        let model = EffectiveModel::ring(n, 5.0);
        let liou = effective_lindbladian(&model).unwrap();
        let layout = model.layout();
        // single excitation |up down down down>
        let psi = QuantumState::basis_state(layout.clone(), &[0, 1, 1, 1]).unwrap().to_density();
        let s = steady_state(&liou, Some(&psi)).unwrap();
        let half = spin_matrices(Spin::Half);
        let mut pols = Vec::new();
        for j in 1..=n {
            let z = embed(&half.z, &format!("I{j}"), &layout).unwrap();
            pols.push(2.0 * s.expectation(&z).unwrap().re);
        }
        for p in &pols {
            assert_abs_diff_eq!(*p, pols[0], epsilon = 1e-8);
        }
        // net polarization preserved: one up among four
        assert_abs_diff_eq!(pols[0], 2.0 * (1.0 / 4.0) - 1.0, epsilon = 1e-8);
    }

    #[test]
    fn quantum_route_matches_classical_for_diagonal_model() {
        // same model solved with a tiny coherent bond of zero amplitude goes
        // through the quantum path and must agree with the classical result
        let n = 3;
        let mut model = EffectiveModel::open_chain(n, 3.0);
        model.coherent_bonds.push(crate::effective::CoherentBond { a: 0, b: 1, j: 0.0 });
        let liou_q = effective_lindbladian(&model).unwrap();
        let model_c = EffectiveModel::open_chain(n, 3.0);
        let liou_c = effective_lindbladian(&model_c).unwrap();
        let mixed = QuantumState::maximally_mixed(model.layout());
        let sq = steady_state(&liou_q, Some(&mixed)).unwrap();
        let sc = steady_state(&liou_c, Some(&mixed)).unwrap();
        let dev = (&sq.density_matrix() - &sc.density_matrix())
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        assert!(dev < 1e-7, "deviation {dev:.3e}");
    }

    #[test]
    fn shift_invert_finds_unique_kernel() {
        // 5-spin product of independent pumped spin-1/2: relaxation to a
        // unique product steady state; dim 32 > eig cap
        use crate::lindblad::{JumpSet, Liouvillian};
        use crate::operator::{embed, spin_matrices, Spin};
        let layout = SpaceLayout::nuclear_chain(5);
        let half = spin_matrices(Spin::Half);
        let mut jumps = JumpSet::empty();
        for j in 1..=5 {
            let c = embed(&half.minus, &format!("I{j}"), &layout)
                .unwrap()
                .scale(C64::new(1.0, 0.0));
            jumps.push(c, format!("decay{j}"));
        }
        let liou = Liouvillian::new(None, jumps).unwrap();
        let s = steady_state(&liou, None).unwrap();
        let m = s.density_matrix();
        let dim = 32;
        assert_abs_diff_eq!(m[[dim - 1, dim - 1]].re, 1.0, epsilon = 1e-6);
    }
}
