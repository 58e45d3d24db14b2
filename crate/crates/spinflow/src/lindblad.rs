//! Lindblad dynamics: dissipators, master-equation integration, steady-state
//! support machinery and the Heisenberg adjoint generator.
//!
//! Hamiltonian entries are ordinary frequencies (Hz); the coherent part of
//! every generator carries the angular factor 2*pi. Collapse operators are
//! stored already scaled by sqrt(rate) with rates in 1/s.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use sprs::CsMat;

use crate::error::{Error, Result};
use crate::integrate::{integrate_grid, AdaptiveOptions};
use crate::operator::{embed, projector, spin_matrices, Spin, SpinOperator};
use crate::space::SpaceLayout;
use crate::state::{QuantumState, StateData};
use crate::TAU;

/// Density-matrix dimension cap for evolve_qme.
pub const QME_DIM_CAP: usize = 4096;
/// Vectorized dimension up to which the propagator is built by exact
/// eigendecomposition instead of step integration.
const EIGEN_PROP_CAP: usize = 700;
/// Allowed trace drift over a full integration.
pub const TRACE_DRIFT_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Default)]
pub struct JumpSet {
    pub ops: Vec<SpinOperator>,
    pub labels: Vec<String>,
}

impl JumpSet {
    pub fn new(ops: Vec<SpinOperator>, labels: Vec<String>) -> Result<Self> {
        assert_eq!(ops.len(), labels.len());
        if let Some(first) = ops.first() {
            for op in &ops[1..] {
                first.layout.same_as(&op.layout)?;
            }
        }
        Ok(Self { ops, labels })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn push(&mut self, op: SpinOperator, label: impl Into<String>) {
        self.ops.push(op);
        self.labels.push(label.into());
    }

    pub fn extend(&mut self, other: JumpSet) {
        self.ops.extend(other.ops);
        self.labels.extend(other.labels);
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct Liouvillian {
    /// Coherent part in Hz; `None` for purely dissipative generators.
    pub hamiltonian: Option<SpinOperator>,
    pub jumps: JumpSet,
}

impl Liouvillian {
    pub fn new(hamiltonian: Option<SpinOperator>, jumps: JumpSet) -> Result<Self> {
        if let (Some(h), Some(c)) = (&hamiltonian, jumps.ops.first()) {
            h.layout.same_as(&c.layout)?;
        }
        Ok(Self { hamiltonian, jumps })
    }

    pub fn layout(&self) -> &SpaceLayout {
        self.hamiltonian
            .as_ref()
            .map(|h| &h.layout)
            .or_else(|| self.jumps.ops.first().map(|c| &c.layout))
            .expect("liouvillian must have a Hamiltonian or at least one jump")
    }

    pub fn dim(&self) -> usize {
        self.layout().total_dim()
    }
}

/// Optical pumping of a spin-1 factor into m_S = 0: two collapse operators
/// sqrt(rate) |0><-1| and sqrt(rate) |0><+1|.
pub fn optical_pumping_jumps(
    layout: &SpaceLayout,
    site_s_label: &str,
    pump_rate: f64,
) -> Result<Vec<SpinOperator>> {
    if layout.dim_of(site_s_label)? != 3 {
        return Err(Error::DimensionMismatch(format!(
            "`{site_s_label}` is not a spin-1 factor"
        )));
    }
    if pump_rate == 0.0 {
        return Ok(Vec::new());
    }
    let amp = C64::new(pump_rate.sqrt(), 0.0);
    let mut from_minus: Array2<C64> = Array2::zeros((3, 3));
    from_minus[[1, 2]] = amp; // |0><-1|
    let mut from_plus: Array2<C64> = Array2::zeros((3, 3));
    from_plus[[1, 0]] = amp; // |0><+1|
    Ok(vec![
        embed(&from_minus, site_s_label, layout)?,
        embed(&from_plus, site_s_label, layout)?,
    ])
}

/// Infinite-temperature longitudinal relaxation of a spin-1/2 factor:
/// sqrt(rate/2) sigma+ and sqrt(rate/2) sigma-. The local steady state is
/// maximally mixed and <sigma_z> decays at `rate`.
pub fn relaxation_jumps(
    layout: &SpaceLayout,
    site_sp_label: &str,
    relax_rate: f64,
) -> Result<Vec<SpinOperator>> {
    if layout.dim_of(site_sp_label)? != 2 {
        return Err(Error::DimensionMismatch(format!(
            "`{site_sp_label}` is not a spin-1/2 factor"
        )));
    }
    if relax_rate == 0.0 {
        return Ok(Vec::new());
    }
    let amp = C64::new((relax_rate / 2.0).sqrt(), 0.0);
    let half = spin_matrices(Spin::Half);
    let up = half.plus.mapv(|v| v * amp);
    let dn = half.minus.mapv(|v| v * amp);
    Ok(vec![embed(&up, site_sp_label, layout)?, embed(&dn, site_sp_label, layout)?])
}

pub fn sp_mul_dense(sp: &CsMat<C64>, d: &Array2<C64>) -> Array2<C64> {
    let (rows, inner) = (sp.rows(), sp.cols());
    debug_assert_eq!(inner, d.nrows());
    let cols = d.ncols();
    let mut out = Array2::zeros((rows, cols));
    let indptr = sp.indptr();
    let indptr = indptr.raw_storage();
    let indices = sp.indices();
    let data = sp.data();
    for r in 0..rows {
        for k in indptr[r]..indptr[r + 1] {
            let c = indices[k];
            let v = data[k];
            for j in 0..cols {
                out[[r, j]] += v * d[[c, j]];
            }
        }
    }
    out
}

pub fn dense_mul_sp(d: &Array2<C64>, sp: &CsMat<C64>) -> Array2<C64> {
    let (rows, inner) = (d.nrows(), d.ncols());
    debug_assert_eq!(inner, sp.rows());
    let cols = sp.cols();
    let mut out = Array2::zeros((rows, cols));
    let indptr = sp.indptr();
    let indptr = indptr.raw_storage();
    let indices = sp.indices();
    let data = sp.data();
    for i in 0..inner {
        for k in indptr[i]..indptr[i + 1] {
            let c = indices[k];
            let v = data[k];
            for r in 0..rows {
                out[[r, c]] += d[[r, i]] * v;
            }
        }
    }
    out
}

/// drho/dt = -i 2pi [H, rho] + sum_k (C rho C+ - 1/2 {C+C, rho}).
pub fn lindblad_rhs(liou: &Liouvillian, rho: &Array2<C64>) -> Array2<C64> {
    let d = rho.nrows();
    let mut out: Array2<C64> = Array2::zeros((d, d));
    if let Some(h) = &liou.hamiltonian {
        let h_rho = sp_mul_dense(&h.matrix, rho);
        let rho_h = dense_mul_sp(rho, &h.matrix);
        let mi_tau = C64::new(0.0, -TAU);
        out = (&h_rho - &rho_h).mapv(|v| v * mi_tau);
    }
    let half = C64::new(0.5, 0.0);
    for c_op in &liou.jumps.ops {
        let c_rho = sp_mul_dense(&c_op.matrix, rho);
        let c_rho_cd = dense_mul_sp(&c_rho, &c_op.dagger().matrix);
        let cdc = c_op.dagger().matmul(c_op).expect("same layout");
        let cdc_rho = sp_mul_dense(&cdc.matrix, rho);
        let rho_cdc = dense_mul_sp(rho, &cdc.matrix);
        out = out + &c_rho_cd - (&cdc_rho + &rho_cdc).mapv(|v| v * half);
    }
    out
}

/// Vectorized superoperator matrix (row-major vec(rho) convention):
/// vec(A rho B) = (A kron B^T) vec(rho).
pub fn liouvillian_matrix(liou: &Liouvillian) -> CsMat<C64> {
    let d = liou.dim();
    let eye: CsMat<C64> = CsMat::eye(d);
    let mut acc: CsMat<C64> = CsMat::zero((d * d, d * d));
    if let Some(h) = &liou.hamiltonian {
        let ht = h.matrix.transpose_view().to_csr();
        let left = sprs::kronecker_product(h.matrix.view(), eye.view());
        let right = sprs::kronecker_product(eye.view(), ht.view());
        let comm = &left - &right;
        acc = &acc + &comm.map(|v| v * C64::new(0.0, -TAU));
    }
    for c_op in &liou.jumps.ops {
        let c = &c_op.matrix;
        let c_conj = c.map(|v| v.conj());
        let cdc = c_op.dagger().matmul(c_op).expect("same layout").matrix;
        let cdc_t = cdc.transpose_view().to_csr();
        let gain = sprs::kronecker_product(c.view(), c_conj.view());
        let loss_l = sprs::kronecker_product(cdc.view(), eye.view());
        let loss_r = sprs::kronecker_product(eye.view(), cdc_t.view());
        let half = C64::new(0.5, 0.0);
        let loss = (&loss_l + &loss_r).map(|v| v * half);
        acc = &(&acc + &gain) - &loss;
    }
    acc
}

/// Heisenberg-picture generator applied to an observable:
/// dO/dt = i 2pi [H, O] + sum_k (C+ O C - 1/2 {C+C, O}).
pub fn adjoint_generator(liou: &Liouvillian, observable: &SpinOperator) -> Result<SpinOperator> {
    observable.layout.same_as(liou.layout())?;
    let mut acc = SpinOperator::zero(observable.layout.clone());
    if let Some(h) = &liou.hamiltonian {
        let comm = h.commutator(observable)?;
        acc = acc.add(&comm.scale(C64::new(0.0, TAU)))?;
    }
    for c_op in &liou.jumps.ops {
        let cd = c_op.dagger();
        let cdoc = cd.matmul(observable)?.matmul(c_op)?;
        let cdc = cd.matmul(c_op)?;
        let anti = cdc.matmul(observable)?.add(&observable.matmul(&cdc)?)?;
        acc = acc.add(&cdoc)?.add(&anti.scale(C64::new(-0.5, 0.0)))?;
    }
    Ok(acc)
}

/// Exact propagator from an eigendecomposition of a (generally non-normal)
/// generator matrix: exp(M t) v = R exp(diag(lambda) t) R^{-1} v.
pub struct EigenPropagator {
    lambda: Array1<C64>,
    r: Array2<C64>,
    r_inv: Array2<C64>,
}

impl EigenPropagator {
    pub fn new(m: &Array2<C64>) -> Result<Self> {
        use ndarray_linalg::{Eig, Inverse};
        crate::blas_guard::ensure_single_thread_blas();
        let (lambda, r) = m.eig()?;
        let r_inv = r.inv().map_err(|e| {
            Error::Linalg(format!("eigenvector matrix not invertible (defective?): {e}"))
        })?;
        Ok(Self { lambda, r, r_inv })
    }

    pub fn eigenvalues(&self) -> &Array1<C64> {
        &self.lambda
    }

    pub fn apply(&self, v: &Array1<C64>, t: f64) -> Array1<C64> {
        let mut w = self.r_inv.dot(v);
        for (wi, li) in w.iter_mut().zip(self.lambda.iter()) {
            *wi *= (li * t).exp();
        }
        self.r.dot(&w)
    }
}

fn flatten(m: &Array2<C64>) -> Array1<C64> {
    Array1::from_iter(m.iter().cloned())
}

fn unflatten(v: &Array1<C64>, d: usize) -> Array2<C64> {
    Array2::from_shape_vec((d, d), v.to_vec()).expect("square shape")
}

/// Integrate the master equation, returning states at every grid time.
///
/// Small problems use the exact vectorized eigenpropagator; larger ones an
/// adaptive RK45 on the Lindblad right-hand side. Output states are
/// re-Hermitized and trace-normalized; the raw trace drift must stay below
/// `TRACE_DRIFT_TOL`.
pub fn evolve_qme(
    liou: &Liouvillian,
    rho0: &QuantumState,
    t_grid: &[f64],
) -> Result<Vec<QuantumState>> {
    rho0.layout.same_as(liou.layout())?;
    let d = liou.dim();
    if d > QME_DIM_CAP {
        return Err(Error::DimensionCap { dim: d, cap: QME_DIM_CAP });
    }
    let rho_mat = rho0.density_matrix();
    let v0 = flatten(&rho_mat);

    let raw: Vec<Array1<C64>> = if d * d <= EIGEN_PROP_CAP {
        let l_mat = liouvillian_matrix(liou).to_dense();
        let prop = EigenPropagator::new(&l_mat)?;
        let t0 = t_grid[0];
        t_grid.iter().map(|&t| prop.apply(&v0, t - t0)).collect()
    } else {
        integrate_grid(
            |_t, v| {
                let rho = unflatten(v, d);
                flatten(&lindblad_rhs(liou, &rho))
            },
            &v0,
            t_grid,
            &AdaptiveOptions::default(),
        )?
    };

    let mut out = Vec::with_capacity(raw.len());
    for (k, v) in raw.iter().enumerate() {
        let mut m = unflatten(v, d);
        let trace: C64 = (0..d).map(|i| m[[i, i]]).sum();
        if (trace.re - 1.0).abs() > TRACE_DRIFT_TOL || trace.im.abs() > TRACE_DRIFT_TOL {
            return Err(Error::IntegrationFailure(format!(
                "trace drifted to {trace} at output {k}"
            )));
        }
        // re-Hermitize and normalize before state validation
        let m_dag = m.t().mapv(|v: C64| v.conj());
        m = (&m + &m_dag).mapv(|v| v / C64::new(2.0 * trace.re, 0.0));
        out.push(QuantumState {
            layout: rho0.layout.clone(),
            data: StateData::Density(m),
        });
    }
    Ok(out)
}

/// Convenience: single-site spin-1 layout pumping Liouvillian used in tests.
pub fn single_spin_one_pump(pump_rate: f64) -> Liouvillian {
    let layout = SpaceLayout::from_pairs(&[("S", 3)]).unwrap();
    let ops = optical_pumping_jumps(&layout, "S", pump_rate).unwrap();
    let labels = (0..ops.len()).map(|k| format!("pump{k}")).collect();
    Liouvillian::new(None, JumpSet::new(ops, labels).unwrap()).unwrap()
}

#[allow(dead_code)]
fn unused_projector_guard() {
    // keep projector import alive for downstream modules compiled together
    let _ = projector(2, 0);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::embed_product;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn spin_one_layout() -> SpaceLayout {
        SpaceLayout::from_pairs(&[("S", 3)]).unwrap()
    }

    fn half_layout() -> SpaceLayout {
        SpaceLayout::from_pairs(&[("Sp", 2)]).unwrap()
    }

    #[test]
    fn pump_jump_shapes_and_cdc() {
        let l = spin_one_layout();
        let ops = optical_pumping_jumps(&l, "S", 4.0).unwrap();
        assert_eq!(ops.len(), 2);
        // sum of C+C = rate * (P(-1) + P(+1)), diagonal
        let mut cdc = SpinOperator::zero(l.clone());
        for c in &ops {
            cdc = cdc.add(&c.dagger().matmul(c).unwrap()).unwrap();
        }
        let dense = cdc.to_dense();
        assert_abs_diff_eq!(dense[[0, 0]].re, 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(dense[[1, 1]].re, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(dense[[2, 2]].re, 4.0, epsilon = 1e-14);
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert_abs_diff_eq!(dense[[i, j]].norm(), 0.0, epsilon = 1e-14);
                }
            }
        }
        assert!(optical_pumping_jumps(&l, "S", 0.0).unwrap().is_empty());
        assert!(optical_pumping_jumps(&half_layout(), "Sp", 1.0).is_err());
    }

    #[test]
    fn pump_steady_state_is_zero_level() {
        let liou = single_spin_one_pump(3.0);
        let l = spin_one_layout();
        let rho0 = QuantumState::maximally_mixed(l.clone());
        let grid: Vec<f64> = (0..=10).map(|k| k as f64 * 0.5).collect();
        let states = evolve_qme(&liou, &rho0, &grid).unwrap();
        let last = states.last().unwrap().density_matrix();
        assert_abs_diff_eq!(last[[1, 1]].re, 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(last[[0, 0]].re, 0.0, epsilon = 1e-6);
    }

    #[test]
    fn relaxation_decay_rate() {
        let l = half_layout();
        let ops = relaxation_jumps(&l, "Sp", 2.0).unwrap();
        assert_eq!(ops.len(), 2);
        let liou = Liouvillian::new(
            None,
            JumpSet::new(ops, vec!["up".into(), "dn".into()]).unwrap(),
        )
        .unwrap();
        let rho0 = QuantumState::basis_state(l.clone(), &[0]).unwrap().to_density();
        let sz = embed(&spin_matrices(Spin::Half).z, "Sp", &l)
            .unwrap()
            .scale(C64::new(2.0, 0.0));
        let grid = [0.0, 0.25, 0.5, 1.0];
        let states = evolve_qme(&liou, &rho0, &grid).unwrap();
        for (k, t) in grid.iter().enumerate() {
            let p = states[k].expectation(&sz).unwrap().re;
            assert_abs_diff_eq!(p, (-2.0 * t).exp(), epsilon = 1e-7);
        }
        assert!(relaxation_jumps(&l, "Sp", 0.0).unwrap().is_empty());
    }

    #[test]
    fn rhs_zero_for_diagonal_h_and_rho() {
        let l = half_layout();
        let h = embed(&spin_matrices(Spin::Half).z, "Sp", &l).unwrap();
        let liou = Liouvillian::new(Some(h), JumpSet::empty()).unwrap();
        let rho = QuantumState::maximally_mixed(l).density_matrix();
        let out = lindblad_rhs(&liou, &rho);
        assert!(out.iter().all(|v| v.norm() < 1e-15));
    }

    #[test]
    fn rhs_traceless_random() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(3);
        let l = SpaceLayout::from_pairs(&[("a", 2), ("b", 2)]).unwrap();
        let half = spin_matrices(Spin::Half);
        for _ in 0..20 {
            let h = embed_product(&[("a", &half.plus), ("b", &half.minus)], &l)
                .unwrap()
                .scale(C64::new(rng.gen_range(0.1..2.0), 0.0));
            let h = h.add(&h.dagger()).unwrap();
            let c = embed(&half.minus, "a", &l)
                .unwrap()
                .scale(C64::new(rng.gen_range(0.1..1.0), 0.0));
            let liou = Liouvillian::new(
                Some(h),
                JumpSet::new(vec![c], vec!["c".into()]).unwrap(),
            )
            .unwrap();
            // random density
            let mut m: Array2<C64> = Array2::zeros((4, 4));
            for i in 0..4 {
                for j in 0..4 {
                    m[[i, j]] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                }
            }
            let md = m.t().mapv(|v: C64| v.conj());
            let mut rho = m.dot(&md);
            let tr: C64 = (0..4).map(|i| rho[[i, i]]).sum();
            rho = rho.mapv(|v| v / tr);
            let out = lindblad_rhs(&liou, &rho);
            let tr_out: C64 = (0..4).map(|i| out[[i, i]]).sum();
            assert!(tr_out.norm() < 1e-12);
            // Hermiticity of the generator output
            for i in 0..4 {
                for j in 0..4 {
                    assert!((out[[i, j]] - out[[j, i]].conj()).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn qme_matches_matrix_exponential_for_pure_hamiltonian() {
        use ndarray_linalg::Eigh;
        let l = SpaceLayout::from_pairs(&[("a", 2), ("b", 2)]).unwrap();
        let half = spin_matrices(Spin::Half);
        let flip = embed_product(&[("a", &half.plus), ("b", &half.minus)], &l).unwrap();
        let h = flip.add(&flip.dagger()).unwrap().scale(C64::new(1.5, 0.0));
        let liou = Liouvillian::new(Some(h.clone()), JumpSet::empty()).unwrap();
        let rho0 = QuantumState::basis_state(l.clone(), &[0, 1]).unwrap().to_density();
        let grid = [0.0, 0.07, 0.21];
        let states = evolve_qme(&liou, &rho0, &grid).unwrap();

        // exact: rho(t) = U rho U+ with U = exp(-i 2pi H t) via eigh
        let hd = h.to_dense();
        let (vals, vecs) = hd.eigh(ndarray_linalg::UPLO::Lower).unwrap();
        for (k, &t) in grid.iter().enumerate() {
            let phases = Array2::from_diag(&Array1::from_iter(
                vals.iter().map(|&e| (C64::new(0.0, -TAU * e * t)).exp()),
            ));
            let u = vecs.dot(&phases).dot(&vecs.t().mapv(|v: C64| v.conj()));
            let exact = u.dot(&rho0.density_matrix()).dot(&u.t().mapv(|v: C64| v.conj()));
            let got = states[k].density_matrix();
            let dev = (&got - &exact).iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!(dev < 1e-7, "t = {t}: deviation {dev:.3e}");
        }
    }

    #[test]
    fn zero_liouvillian_keeps_state() {
        let l = half_layout();
        let h = SpinOperator::zero(l.clone());
        let liou = Liouvillian::new(Some(h), JumpSet::empty()).unwrap();
        let rho0 = QuantumState::from_populations(l, &[0.3, 0.7]).unwrap();
        let states = evolve_qme(&liou, &rho0, &[0.0, 1.0, 5.0]).unwrap();
        let diff = (&states[2].density_matrix() - &rho0.density_matrix())
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-10);
    }

    #[test]
    fn adjoint_duality_random_pairs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(11);
        let l = SpaceLayout::from_pairs(&[("a", 2), ("b", 2)]).unwrap();
        let half = spin_matrices(Spin::Half);
        for _ in 0..50 {
            let hop = embed_product(&[("a", &half.plus), ("b", &half.minus)], &l)
                .unwrap()
                .scale(C64::new(rng.gen_range(0.1..3.0), 0.0));
            let h = hop.add(&hop.dagger()).unwrap();
            let c1 = embed(&half.minus, "a", &l)
                .unwrap()
                .scale(C64::new(rng.gen_range(0.1..1.5_f64).sqrt(), 0.0));
            let c2 = embed(&half.plus, "b", &l)
                .unwrap()
                .scale(C64::new(rng.gen_range(0.1..1.5_f64).sqrt(), 0.0));
            let liou = Liouvillian::new(
                Some(h),
                JumpSet::new(vec![c1, c2], vec!["a".into(), "b".into()]).unwrap(),
            )
            .unwrap();
            // random Hermitian observable
            let mut o: Array2<C64> = Array2::zeros((4, 4));
            for i in 0..4 {
                for j in 0..4 {
                    o[[i, j]] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                }
            }
            let o = (&o + &o.t().mapv(|v: C64| v.conj())).mapv(|v| v * C64::new(0.5, 0.0));
            let o_op = {
                let mut t = sprs::TriMat::new((4, 4));
                for ((i, j), v) in o.indexed_iter() {
                    t.add_triplet(i, j, *v);
                }
                SpinOperator::from_csr(l.clone(), t.to_csr()).unwrap()
            };
            // random density
            let mut m: Array2<C64> = Array2::zeros((4, 4));
            for i in 0..4 {
                for j in 0..4 {
                    m[[i, j]] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                }
            }
            let md = m.t().mapv(|v: C64| v.conj());
            let mut rho = m.dot(&md);
            let tr: C64 = (0..4).map(|i| rho[[i, i]]).sum();
            rho = rho.mapv(|v| v / tr);

            let lrho = lindblad_rhs(&liou, &rho);
            let adj = adjoint_generator(&liou, &o_op).unwrap().to_dense();
            let lhs: C64 = (0..4)
                .flat_map(|i| (0..4).map(move |j| (i, j)))
                .map(|(i, j)| o[[i, j]] * lrho[[j, i]])
                .sum();
            let rhs: C64 = (0..4)
                .flat_map(|i| (0..4).map(move |j| (i, j)))
                .map(|(i, j)| adj[[i, j]] * rho[[j, i]])
                .sum();
            assert!((lhs - rhs).norm() < 1e-10 * lhs.norm().max(1.0));
        }
    }

    #[test]
    fn adjoint_of_identity_vanishes() {
        let liou = single_spin_one_pump(2.0);
        let id = SpinOperator::identity(spin_one_layout());
        let out = adjoint_generator(&liou, &id).unwrap();
        assert!(out.max_abs() < 1e-12);
    }

    #[test]
    fn liouvillian_matrix_consistent_with_rhs() {
        let l = half_layout();
        let h = embed(&spin_matrices(Spin::Half).z, "Sp", &l)
            .unwrap()
            .scale(C64::new(0.7, 0.0));
        let c = embed(&spin_matrices(Spin::Half).minus, "Sp", &l)
            .unwrap()
            .scale(C64::new(0.5, 0.0));
        let liou =
            Liouvillian::new(Some(h), JumpSet::new(vec![c], vec!["c".into()]).unwrap()).unwrap();
        let rho = array![
            [C64::new(0.6, 0.0), C64::new(0.1, 0.2)],
            [C64::new(0.1, -0.2), C64::new(0.4, 0.0)]
        ];
        let direct = lindblad_rhs(&liou, &rho);
        let lm = liouvillian_matrix(&liou).to_dense();
        let v = flatten(&rho);
        let via_matrix = unflatten(&lm.dot(&v), 2);
        let dev = (&direct - &via_matrix).iter().map(|x| x.norm()).fold(0.0, f64::max);
        assert!(dev < 1e-12);
    }
}
