//! Spin operators on labeled tensor-product spaces.
//!
//! Operators are stored sparse (CSR) regardless of size; composite operators
//! on unit-cell chains reach dimension 12^N where dense storage is not an
//! option. Elementary spin matrices are dense and tiny.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use sprs::{CsMat, TriMat};

use crate::error::{Error, Result};
use crate::space::SpaceLayout;

pub const HERMITICITY_TOL: f64 = 1e-12;

pub type C64 = Complex64;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Supported spin quantum numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spin {
    Half,
    One,
}

impl Spin {
    pub fn from_f64(s: f64) -> Result<Self> {
        if (s - 0.5).abs() < 1e-12 {
            Ok(Spin::Half)
        } else if (s - 1.0).abs() < 1e-12 {
            Ok(Spin::One)
        } else {
            Err(Error::UnsupportedSpin(s))
        }
    }

    pub fn dim(self) -> usize {
        match self {
            Spin::Half => 2,
            Spin::One => 3,
        }
    }
}

/// Elementary z / raising / lowering matrices in the descending-m basis.
pub struct SpinMatrices {
    pub z: Array2<C64>,
    pub plus: Array2<C64>,
    pub minus: Array2<C64>,
}

/// Standard angular-momentum matrices for spin 1/2 or 1.
///
/// Basis ordered by descending m, so `z` is `diag(s, s-1, ..., -s)` and the
/// raising operator has entries sqrt(s(s+1) - m(m+1)) on the superdiagonal.
pub fn spin_matrices(spin: Spin) -> SpinMatrices {
    let s = match spin {
        Spin::Half => 0.5,
        Spin::One => 1.0,
    };
    let dim = spin.dim();
    let mut z = Array2::zeros((dim, dim));
    let mut plus = Array2::zeros((dim, dim));
    for row in 0..dim {
        let m = s - row as f64;
        z[[row, row]] = c(m);
        if row > 0 {
            // raises m of the state in column `row` to m+1
            plus[[row - 1, row]] = c((s * (s + 1.0) - m * (m + 1.0)).sqrt());
        }
    }
    let minus = dagger_dense(&plus);
    SpinMatrices { z, plus, minus }
}

/// Spin-1 shift operators with unit matrix elements: `up = |+1><0| + |0><-1|`.
///
/// These carry the inter-electron exchange bond; the energy-matched
/// cross-relaxation element then equals J_d/2 times pure frame-overlap
/// factors, with no ladder normalization mixed in.
pub fn unit_shift_matrices() -> (Array2<C64>, Array2<C64>) {
    let mut up: Array2<C64> = Array2::zeros((3, 3));
    up[[0, 1]] = c(1.0);
    up[[1, 2]] = c(1.0);
    let down = dagger_dense(&up);
    (up, down)
}

/// Projector |m><m| for a factor of the given dimension, descending-m basis.
pub fn projector(dim: usize, level: usize) -> Array2<C64> {
    let mut p: Array2<C64> = Array2::zeros((dim, dim));
    p[[level, level]] = c(1.0);
    p
}

pub fn identity_dense(dim: usize) -> Array2<C64> {
    Array2::eye(dim)
}

pub fn dagger_dense(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|v| v.conj())
}

fn dense_to_csr(m: &Array2<C64>) -> CsMat<C64> {
    let (rows, cols) = m.dim();
    let mut t = TriMat::new((rows, cols));
    for ((i, j), v) in m.indexed_iter() {
        if v.norm_sqr() > 0.0 {
            t.add_triplet(i, j, *v);
        }
    }
    t.to_csr()
}

/// An operator over a labeled tensor-product space.
#[derive(Debug, Clone)]
pub struct SpinOperator {
    pub layout: SpaceLayout,
    pub matrix: CsMat<C64>,
    hermitian: bool,
}

impl SpinOperator {
    pub fn from_csr(layout: SpaceLayout, matrix: CsMat<C64>) -> Result<Self> {
        if matrix.rows() != layout.total_dim() || matrix.cols() != layout.total_dim() {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, layout dimension is {}",
                matrix.rows(),
                matrix.cols(),
                layout.total_dim()
            )));
        }
        Ok(Self { layout, matrix, hermitian: false })
    }

    pub fn zero(layout: SpaceLayout) -> Self {
        let d = layout.total_dim();
        Self { layout, matrix: CsMat::zero((d, d)), hermitian: true }
    }

    pub fn identity(layout: SpaceLayout) -> Self {
        let d = layout.total_dim();
        let m = CsMat::eye(d);
        Self { layout, matrix: m, hermitian: true }
    }

    pub fn dim(&self) -> usize {
        self.layout.total_dim()
    }

    pub fn is_hermitian_flagged(&self) -> bool {
        self.hermitian
    }

    /// Flag the operator Hermitian, verifying M = M† elementwise.
    ///
    /// The tolerance is absolute on matrix entries scaled by the largest
    /// entry magnitude, so GHz-scale Hamiltonians are not rejected for
    /// double-precision rounding.
    pub fn into_hermitian(mut self) -> Result<Self> {
        let dag = self.dagger();
        let diff = &self.matrix - &dag.matrix;
        let max_abs = diff
            .iter()
            .map(|(v, _)| v.norm())
            .fold(0.0_f64, f64::max);
        let scale = self
            .matrix
            .iter()
            .map(|(v, _)| v.norm())
            .fold(1.0_f64, f64::max);
        if max_abs > HERMITICITY_TOL * scale {
            return Err(Error::NotHermitian(max_abs));
        }
        self.hermitian = true;
        Ok(self)
    }

    pub fn dagger(&self) -> Self {
        let t = self.matrix.transpose_view().to_csr();
        let m = t.map(|v| v.conj());
        Self { layout: self.layout.clone(), matrix: m, hermitian: self.hermitian }
    }

    pub fn scale(&self, factor: C64) -> Self {
        let m = self.matrix.map(|v| v * factor);
        let hermitian = self.hermitian && factor.im == 0.0;
        Self { layout: self.layout.clone(), matrix: m, hermitian }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.layout.same_as(&other.layout)?;
        let m = &self.matrix + &other.matrix;
        Ok(Self {
            layout: self.layout.clone(),
            matrix: m,
            hermitian: self.hermitian && other.hermitian,
        })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.layout.same_as(&other.layout)?;
        let m = &self.matrix * &other.matrix;
        Ok(Self { layout: self.layout.clone(), matrix: m, hermitian: false })
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        let ab = self.matmul(other)?;
        let ba = other.matmul(self)?;
        Ok(Self {
            layout: self.layout.clone(),
            matrix: &ab.matrix - &ba.matrix,
            hermitian: false,
        })
    }

    pub fn apply(&self, v: &Array1<C64>) -> Array1<C64> {
        debug_assert_eq!(v.len(), self.dim());
        let mut out = Array1::zeros(v.len());
        sparse_matvec(&self.matrix, v.as_slice().unwrap(), out.as_slice_mut().unwrap());
        out
    }

    pub fn trace(&self) -> C64 {
        let mut tr = C64::new(0.0, 0.0);
        for (v, (r, c)) in self.matrix.iter() {
            if r == c {
                tr += *v;
            }
        }
        tr
    }

    pub fn diagonal(&self) -> Array1<C64> {
        let mut d = Array1::zeros(self.dim());
        for (v, (r, c)) in self.matrix.iter() {
            if r == c {
                d[r] += *v;
            }
        }
        d
    }

    pub fn to_dense(&self) -> Array2<C64> {
        self.matrix.to_dense()
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().map(|(v, _)| v.norm()).fold(0.0, f64::max)
    }

    /// Drop entries with |v| below `tol` (cleans up exact cancellations).
    pub fn pruned(&self, tol: f64) -> Self {
        let d = self.dim();
        let mut t = TriMat::new((d, d));
        for (v, (r, c)) in self.matrix.iter() {
            if v.norm() > tol {
                t.add_triplet(r, c, *v);
            }
        }
        Self { layout: self.layout.clone(), matrix: t.to_csr(), hermitian: self.hermitian }
    }
}

pub fn sparse_matvec(m: &CsMat<C64>, x: &[C64], y: &mut [C64]) {
    y.fill(C64::new(0.0, 0.0));
    let indptr = m.indptr();
    let indptr = indptr.raw_storage();
    let indices = m.indices();
    let data = m.data();
    for row in 0..m.rows() {
        let mut acc = C64::new(0.0, 0.0);
        for k in indptr[row]..indptr[row + 1] {
            acc += data[k] * x[indices[k]];
        }
        y[row] = acc;
    }
}

/// Embed a local operator at the labeled factor, identity elsewhere.
pub fn embed(local_op: &Array2<C64>, site_label: &str, layout: &SpaceLayout) -> Result<SpinOperator> {
    embed_product(&[(site_label, local_op)], layout)
}

/// Embed a product of local operators acting on distinct labeled factors.
///
/// Builds the full Kronecker product in one pass, which keeps two-site bond
/// terms exact and sparse.
pub fn embed_product(
    ops: &[(&str, &Array2<C64>)],
    layout: &SpaceLayout,
) -> Result<SpinOperator> {
    let mut by_index: Vec<Option<&Array2<C64>>> = vec![None; layout.n_factors()];
    for (label, op) in ops {
        let k = layout.index_of(label)?;
        let dim = layout.factors()[k].1;
        if op.nrows() != dim || op.ncols() != dim {
            return Err(Error::DimensionMismatch(format!(
                "operator for `{label}` is {}x{}, factor dimension is {dim}",
                op.nrows(),
                op.ncols()
            )));
        }
        if by_index[k].replace(op).is_some() {
            return Err(Error::InvalidModel(format!("factor `{label}` used twice in product")));
        }
    }
    let mut acc: Option<CsMat<C64>> = None;
    for (k, slot) in by_index.iter().enumerate() {
        let local: CsMat<C64> = match slot {
            Some(op) => dense_to_csr(op),
            None => CsMat::eye(layout.factors()[k].1),
        };
        acc = Some(match acc {
            None => local,
            Some(a) => sprs::kronecker_product(a.view(), local.view()),
        });
    }
    let matrix = acc.expect("layout has at least one factor");
    SpinOperator::from_csr(layout.clone(), matrix)
}

/// Sum of scaled embedded products; the common pattern for Hamiltonians.
pub fn embed_sum(
    terms: &[(f64, Vec<(&str, Array2<C64>)>)],
    layout: &SpaceLayout,
) -> Result<SpinOperator> {
    let mut acc = SpinOperator::zero(layout.clone());
    for (coeff, factors) in terms {
        if *coeff == 0.0 {
            continue;
        }
        let refs: Vec<(&str, &Array2<C64>)> =
            factors.iter().map(|(l, m)| (*l, m)).collect();
        let term = embed_product(&refs, layout)?.scale(c(*coeff));
        acc = acc.add(&term)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn half_z() -> Array2<C64> {
        spin_matrices(Spin::Half).z
    }

    #[test]
    fn spin_half_matrices() {
        let m = spin_matrices(Spin::Half);
        assert_abs_diff_eq!(m.z[[0, 0]].re, 0.5);
        assert_abs_diff_eq!(m.z[[1, 1]].re, -0.5);
        // [z, S+] = +S+ and S+ S- - S- S+ = 2 z
        let comm = m.plus.dot(&m.minus) - m.minus.dot(&m.plus);
        let two_z = m.z.mapv(|v| v * c(2.0));
        for ((i, j), v) in comm.indexed_iter() {
            assert_abs_diff_eq!(v.re, two_z[[i, j]].re, epsilon = 1e-14);
            assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn spin_one_matrices() {
        let m = spin_matrices(Spin::One);
        assert_abs_diff_eq!(m.z[[0, 0]].re, 1.0);
        assert_abs_diff_eq!(m.z[[1, 1]].re, 0.0);
        assert_abs_diff_eq!(m.z[[2, 2]].re, -1.0);
        let s2 = 2.0_f64.sqrt();
        assert_abs_diff_eq!(m.plus[[0, 1]].re, s2, epsilon = 1e-15);
        assert_abs_diff_eq!(m.plus[[1, 2]].re, s2, epsilon = 1e-15);
        // commutator [z, plus] = plus
        let comm = m.z.dot(&m.plus) - m.plus.dot(&m.z);
        for ((i, j), v) in comm.indexed_iter() {
            assert_abs_diff_eq!((v - m.plus[[i, j]]).norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn rejects_unsupported_spin() {
        assert!(Spin::from_f64(1.5).is_err());
        assert!(Spin::from_f64(0.5).is_ok());
    }

    #[test]
    fn embed_identity_is_global_identity() {
        let layout = SpaceLayout::from_pairs(&[("a", 2), ("b", 3)]).unwrap();
        let op = embed(&identity_dense(3), "b", &layout).unwrap();
        let eye = SpinOperator::identity(layout);
        let diff = &op.matrix - &eye.matrix;
        assert!(diff.iter().all(|(v, _)| v.norm() < 1e-15));
    }

    #[test]
    fn embed_z_on_first_of_two_halves() {
        let layout = SpaceLayout::from_pairs(&[("a", 2), ("b", 2)]).unwrap();
        let op = embed(&half_z(), "a", &layout).unwrap();
        let d = op.to_dense();
        let expect = [0.5, 0.5, -0.5, -0.5];
        for (i, e) in expect.iter().enumerate() {
            assert_abs_diff_eq!(d[[i, i]].re, *e, epsilon = 1e-15);
        }
    }

    #[test]
    fn embed_preserves_scaled_trace() {
        let layout = SpaceLayout::from_pairs(&[("a", 2), ("b", 3), ("c", 2)]).unwrap();
        let m = spin_matrices(Spin::One);
        let local = m.z.dot(&m.z); // trace 2
        let op = embed(&local, "b", &layout).unwrap();
        let tr = op.trace();
        assert_abs_diff_eq!(tr.re, 2.0 * (12.0 / 3.0), epsilon = 1e-12);
    }

    #[test]
    fn distinct_site_embeds_commute() {
        let layout = SpaceLayout::from_pairs(&[("a", 2), ("b", 3), ("c", 2)]).unwrap();
        let sm = spin_matrices(Spin::One);
        let a = embed(&spin_matrices(Spin::Half).plus, "a", &layout).unwrap();
        let b = embed(&sm.minus, "b", &layout).unwrap();
        let comm = a.commutator(&b).unwrap();
        assert!(comm.max_abs() < 1e-12);
    }

    #[test]
    fn embed_errors() {
        let layout = SpaceLayout::from_pairs(&[("a", 2)]).unwrap();
        assert!(embed(&identity_dense(2), "nope", &layout).is_err());
        assert!(embed(&identity_dense(3), "a", &layout).is_err());
    }

    #[test]
    fn unit_shift_elements() {
        let (up, down) = unit_shift_matrices();
        assert_abs_diff_eq!(up[[0, 1]].re, 1.0);
        assert_abs_diff_eq!(up[[1, 2]].re, 1.0);
        assert_abs_diff_eq!(down[[1, 0]].re, 1.0);
        assert_abs_diff_eq!(down[[2, 1]].re, 1.0);
    }
}
