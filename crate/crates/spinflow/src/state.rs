//! Pure and density states over labeled tensor-product spaces.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::operator::SpinOperator;
use crate::space::SpaceLayout;

pub const NORM_TOL: f64 = 1e-10;
pub const STATE_HERM_TOL: f64 = 1e-12;
pub const POSITIVITY_TOL: f64 = 1e-8;

/// Dimension up to which the positivity (smallest eigenvalue) check runs at
/// construction; larger density matrices are checked in tests only.
const EIG_CHECK_DIM: usize = 64;

#[derive(Debug, Clone)]
pub enum StateData {
    Pure(Array1<C64>),
    Density(Array2<C64>),
}

#[derive(Debug, Clone)]
pub struct QuantumState {
    pub layout: SpaceLayout,
    pub data: StateData,
}

impl QuantumState {
    pub fn pure(layout: SpaceLayout, vector: Array1<C64>) -> Result<Self> {
        if vector.len() != layout.total_dim() {
            return Err(Error::DimensionMismatch(format!(
                "vector length {} vs layout dimension {}",
                vector.len(),
                layout.total_dim()
            )));
        }
        let norm = vector.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!(
                "pure state norm {norm} deviates from 1 beyond {NORM_TOL}"
            )));
        }
        Ok(Self { layout, data: StateData::Pure(vector) })
    }

    /// Basis product state from per-factor level indices (descending-m order,
    /// so level 0 is the highest projection).
    pub fn basis_state(layout: SpaceLayout, levels: &[usize]) -> Result<Self> {
        if levels.len() != layout.n_factors() {
            return Err(Error::DimensionMismatch(format!(
                "{} levels for {} factors",
                levels.len(),
                layout.n_factors()
            )));
        }
        for (k, &lv) in levels.iter().enumerate() {
            if lv >= layout.factors()[k].1 {
                return Err(Error::DimensionMismatch(format!(
                    "level {lv} out of range for factor {k}"
                )));
            }
        }
        let mut v = Array1::zeros(layout.total_dim());
        v[layout.ravel(levels)] = C64::new(1.0, 0.0);
        Self::pure(layout, v)
    }

    pub fn density(layout: SpaceLayout, matrix: Array2<C64>) -> Result<Self> {
        let d = layout.total_dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "density is {}x{}, layout dimension {d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let trace: C64 = (0..d).map(|i| matrix[[i, i]]).sum();
        if (trace.re - 1.0).abs() > NORM_TOL || trace.im.abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("density trace {trace} deviates from 1")));
        }
        let mut herm_dev = 0.0_f64;
        let mut scale = 1.0_f64;
        for i in 0..d {
            for j in i..d {
                let dev = (matrix[[i, j]] - matrix[[j, i]].conj()).norm();
                herm_dev = herm_dev.max(dev);
                scale = scale.max(matrix[[i, j]].norm());
            }
        }
        if herm_dev > STATE_HERM_TOL * scale.max(1.0) {
            return Err(Error::InvalidState(format!(
                "density Hermiticity violated by {herm_dev:.3e}"
            )));
        }
        if d <= EIG_CHECK_DIM {
            let min = min_eigenvalue(&matrix)?;
            if min < -POSITIVITY_TOL {
                return Err(Error::InvalidState(format!(
                    "density has negative eigenvalue {min:.3e}"
                )));
            }
        }
        Ok(Self { layout, data: StateData::Density(matrix) })
    }

    /// Maximally mixed state I/d.
    pub fn maximally_mixed(layout: SpaceLayout) -> Self {
        let d = layout.total_dim();
        let m = Array2::eye(d).mapv(|v: C64| v / d as f64);
        Self { layout, data: StateData::Density(m) }
    }

    /// Diagonal density matrix from a classical probability vector.
    pub fn from_populations(layout: SpaceLayout, p: &[f64]) -> Result<Self> {
        let d = layout.total_dim();
        if p.len() != d {
            return Err(Error::DimensionMismatch("population vector length".into()));
        }
        let mut m = Array2::zeros((d, d));
        for (i, &w) in p.iter().enumerate() {
            m[[i, i]] = C64::new(w, 0.0);
        }
        Self::density(layout, m)
    }

    pub fn is_density(&self) -> bool {
        matches!(self.data, StateData::Density(_))
    }

    pub fn dim(&self) -> usize {
        self.layout.total_dim()
    }

    /// Density-matrix form (outer product for pure states).
    pub fn to_density(&self) -> Self {
        match &self.data {
            StateData::Density(_) => self.clone(),
            StateData::Pure(v) => {
                let d = v.len();
                let mut m = Array2::zeros((d, d));
                for i in 0..d {
                    for j in 0..d {
                        m[[i, j]] = v[i] * v[j].conj();
                    }
                }
                Self { layout: self.layout.clone(), data: StateData::Density(m) }
            }
        }
    }

    pub fn density_matrix(&self) -> Array2<C64> {
        match self.to_density().data {
            StateData::Density(m) => m,
            StateData::Pure(_) => unreachable!(),
        }
    }

    pub fn populations(&self) -> Array1<f64> {
        match &self.data {
            StateData::Pure(v) => v.mapv(|a| a.norm_sqr()),
            StateData::Density(m) => {
                Array1::from_iter((0..m.nrows()).map(|i| m[[i, i]].re))
            }
        }
    }

    pub fn expectation(&self, op: &SpinOperator) -> Result<C64> {
        self.layout.same_as(&op.layout)?;
        match &self.data {
            StateData::Pure(v) => {
                let mv = op.apply(v);
                Ok(v.iter().zip(mv.iter()).map(|(a, b)| a.conj() * b).sum())
            }
            StateData::Density(rho) => {
                // Tr(rho M) = sum over sparse entries M[r,c] * rho[c,r]
                let mut acc = C64::new(0.0, 0.0);
                for (v, (r, c)) in op.matrix.iter() {
                    acc += *v * rho[[c, r]];
                }
                Ok(acc)
            }
        }
    }

    /// Real part of a Hermitian expectation, checking the imaginary residue.
    pub fn expectation_real(&self, op: &SpinOperator) -> Result<f64> {
        let e = self.expectation(op)?;
        if op.is_hermitian_flagged() && e.im.abs() > 1e-9 * e.re.abs().max(1.0) {
            return Err(Error::InvalidState(format!(
                "Hermitian expectation has imaginary part {:.3e}",
                e.im
            )));
        }
        Ok(e.re)
    }

    /// Reduced density matrix over the kept factors (in layout order).
    pub fn partial_trace(&self, keep_labels: &[&str]) -> Result<QuantumState> {
        let rho = match &self.data {
            StateData::Density(m) => m,
            StateData::Pure(_) => {
                return Err(Error::InvalidState(
                    "partial_trace needs a density state; call to_density() first".into(),
                ))
            }
        };
        let mut keep_idx: Vec<usize> = Vec::with_capacity(keep_labels.len());
        for l in keep_labels {
            keep_idx.push(self.layout.index_of(l)?);
        }
        let mut keep_sorted = keep_idx.clone();
        keep_sorted.sort_unstable();
        keep_sorted.dedup();
        if keep_sorted.len() != keep_idx.len() {
            return Err(Error::InvalidModel("duplicate labels in partial_trace".into()));
        }

        let kept_factors: Vec<(String, usize)> = keep_sorted
            .iter()
            .map(|&k| self.layout.factors()[k].clone())
            .collect();
        let out_layout = SpaceLayout::new(kept_factors)?;
        let d_out = out_layout.total_dim();
        let traced: Vec<usize> = (0..self.layout.n_factors())
            .filter(|k| !keep_sorted.contains(k))
            .collect();
        let d_tr: usize = traced.iter().map(|&k| self.layout.factors()[k].1).product();

        let mut out = Array2::zeros((d_out, d_out));
        let n = self.layout.n_factors();
        let mut locals_i = vec![0usize; n];
        let mut locals_j = vec![0usize; n];
        for a in 0..d_out {
            let la = out_layout.unravel(a);
            for b in 0..d_out {
                let lb = out_layout.unravel(b);
                let mut acc = C64::new(0.0, 0.0);
                for t in 0..d_tr {
                    // distribute traced multi-index
                    let mut rem = t;
                    for &k in traced.iter().rev() {
                        let dk = self.layout.factors()[k].1;
                        locals_i[k] = rem % dk;
                        locals_j[k] = rem % dk;
                        rem /= dk;
                    }
                    for (pos, &k) in keep_sorted.iter().enumerate() {
                        locals_i[k] = la[pos];
                        locals_j[k] = lb[pos];
                    }
                    acc += rho[[self.layout.ravel(&locals_i), self.layout.ravel(&locals_j)]];
                }
                out[[a, b]] = acc;
            }
        }
        QuantumState::density(out_layout, out)
    }
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &Array2<C64>) -> Result<f64> {
    use ndarray_linalg::{Eigh, UPLO};
    crate::blas_guard::ensure_single_thread_blas();
    let (vals, _) = m
        .eigh(UPLO::Lower)
        .map_err(|e| Error::Linalg(e.to_string()))?;
    Ok(vals.iter().cloned().fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{embed, spin_matrices, Spin, SpinOperator};
    use approx::assert_abs_diff_eq;

    fn two_spin_layout() -> SpaceLayout {
        SpaceLayout::from_pairs(&[("a", 2), ("b", 2)]).unwrap()
    }

    #[test]
    fn expectation_identity_is_one() {
        let l = two_spin_layout();
        let psi = QuantumState::basis_state(l.clone(), &[0, 1]).unwrap();
        let id = SpinOperator::identity(l);
        let e = psi.expectation(&id).unwrap();
        assert_abs_diff_eq!(e.re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.im, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn expectation_two_iz_on_up() {
        let l = SpaceLayout::from_pairs(&[("a", 2)]).unwrap();
        let up = QuantumState::basis_state(l.clone(), &[0]).unwrap();
        let z2 = embed(&spin_matrices(Spin::Half).z, "a", &l)
            .unwrap()
            .scale(C64::new(2.0, 0.0));
        assert_abs_diff_eq!(up.expectation(&z2).unwrap().re, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn maximally_mixed_traceless_op() {
        let l = two_spin_layout();
        let mixed = QuantumState::maximally_mixed(l.clone());
        let z = embed(&spin_matrices(Spin::Half).z, "a", &l).unwrap();
        assert_abs_diff_eq!(mixed.expectation(&z).unwrap().norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn partial_trace_product_state() {
        let l = two_spin_layout();
        let psi = QuantumState::basis_state(l, &[0, 1]).unwrap().to_density();
        let red = psi.partial_trace(&["a"]).unwrap();
        let m = red.density_matrix();
        assert_abs_diff_eq!(m[[0, 0]].re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m[[1, 1]].re, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn partial_trace_bell_state() {
        let l = two_spin_layout();
        let mut v = Array1::zeros(4);
        let r = 1.0 / 2.0_f64.sqrt();
        v[0] = C64::new(r, 0.0); // |up, up>
        v[3] = C64::new(r, 0.0); // |down, down>
        let psi = QuantumState::pure(l, v).unwrap().to_density();
        let red = psi.partial_trace(&["b"]).unwrap();
        let m = red.density_matrix();
        assert_abs_diff_eq!(m[[0, 0]].re, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(m[[1, 1]].re, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(m[[0, 1]].norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn partial_trace_keeps_everything() {
        let l = two_spin_layout();
        let rho = QuantumState::maximally_mixed(l);
        let red = rho.partial_trace(&["a", "b"]).unwrap();
        let diff = &red.density_matrix() - &rho.density_matrix();
        assert!(diff.iter().all(|v| v.norm() < 1e-14));
    }

    #[test]
    fn partial_trace_rejects_pure() {
        let l = two_spin_layout();
        let psi = QuantumState::basis_state(l, &[0, 0]).unwrap();
        assert!(psi.partial_trace(&["a"]).is_err());
    }

    #[test]
    fn invalid_states_rejected() {
        let l = two_spin_layout();
        let v = Array1::from_elem(4, C64::new(0.5, 0.0)) * 1.1;
        assert!(QuantumState::pure(l.clone(), v).is_err());
        let m = Array2::eye(4).mapv(|v: C64| v * 0.3);
        assert!(QuantumState::density(l, m).is_err());
    }
}
