//! Non-Hermitian pumped Hamiltonian: reduced two-level model, eigenvalue
//! Riemann surfaces, and the exceptional point.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::model::chain::{build_pair_hamiltonian, pair_layout, ChainSpec};
use crate::operator::{embed, projector, SpinOperator};

/// Reduced two-level pumped Hamiltonian (entries in Hz):
/// [[delta + i gamma, J], [J, -delta - i gamma]].
pub fn reduced_nhh(delta_eff: f64, gamma_op: f64, j_eff: f64) -> Array2<C64> {
    let mut m = Array2::zeros((2, 2));
    m[[0, 0]] = C64::new(delta_eff, gamma_op);
    m[[0, 1]] = C64::new(j_eff, 0.0);
    m[[1, 0]] = C64::new(j_eff, 0.0);
    m[[1, 1]] = C64::new(-delta_eff, -gamma_op);
    m
}

/// Eigenvalues of the reduced model, analytically: +-sqrt((d + ig)^2 + J^2).
pub fn reduced_eigenvalues(delta_eff: f64, gamma_op: f64, j_eff: f64) -> (C64, C64) {
    let z = C64::new(delta_eff, gamma_op);
    let root = (z * z + C64::new(j_eff * j_eff, 0.0)).sqrt();
    (root, -root)
}

/// Full 4-spin non-Hermitian Hamiltonian: the pair Hamiltonian plus the
/// anti-Hermitian pumping term i*gamma(|0><0| - |-1><-1|) on spin S.
pub fn full_nhh(spec: &ChainSpec, gamma_op: f64) -> Result<SpinOperator> {
    let h = build_pair_hamiltonian(spec)?;
    let layout = pair_layout();
    let p0 = embed(&projector(3, 1), "S", &layout)?;
    let pm1 = embed(&projector(3, 2), "S", &layout)?;
    let ig = C64::new(0.0, gamma_op);
    h.add(&p0.scale(ig))?.add(&pm1.scale(-ig))
}

#[derive(Debug, Clone)]
pub struct EigenSurface {
    pub delta_grid: Vec<f64>,
    pub gamma_grid: Vec<f64>,
    /// eigenvalues[i][j] at (delta_grid[i], gamma_grid[j]), branch-tracked
    /// along each gamma row.
    pub eigenvalues: Vec<Vec<[C64; 2]>>,
    pub j_eff: f64,
}

/// Scan the complex eigenvalues over a (delta, gamma) grid with continuous
/// branch assignment along each row (nearest-neighbor matching).
pub fn riemann_scan(
    j_eff: f64,
    delta_range: (f64, f64),
    gamma_range: (f64, f64),
    n_delta: usize,
    n_gamma: usize,
) -> EigenSurface {
    assert!(n_delta >= 2 && n_gamma >= 2, "grid must have at least 2 points per axis");
    let delta_grid: Vec<f64> = (0..n_delta)
        .map(|i| delta_range.0 + (delta_range.1 - delta_range.0) * i as f64 / (n_delta - 1) as f64)
        .collect();
    let gamma_grid: Vec<f64> = (0..n_gamma)
        .map(|j| gamma_range.0 + (gamma_range.1 - gamma_range.0) * j as f64 / (n_gamma - 1) as f64)
        .collect();
    let mut eigenvalues = Vec::with_capacity(n_delta);
    for &d in &delta_grid {
        let mut row: Vec<[C64; 2]> = Vec::with_capacity(n_gamma);
        for (j, &g) in gamma_grid.iter().enumerate() {
            let (a, b) = reduced_eigenvalues(d, g, j_eff);
            let pair = if j == 0 {
                [a, b]
            } else {
                track_branches(row[j - 1], [a, b])
            };
            row.push(pair);
        }
        eigenvalues.push(row);
    }
    EigenSurface { delta_grid, gamma_grid, eigenvalues, j_eff }
}

/// Assign the new pair to branches by nearest-neighbor continuation.
pub fn track_branches(prev: [C64; 2], new: [C64; 2]) -> [C64; 2] {
    let keep = (new[0] - prev[0]).norm() + (new[1] - prev[1]).norm();
    let swap = (new[1] - prev[0]).norm() + (new[0] - prev[1]).norm();
    if swap < keep {
        [new[1], new[0]]
    } else {
        new
    }
}

impl EigenSurface {
    /// Verify that stored eigenvalues satisfy the characteristic polynomial.
    pub fn max_characteristic_residual(&self) -> f64 {
        let mut worst = 0.0_f64;
        for (i, &d) in self.delta_grid.iter().enumerate() {
            for (j, &g) in self.gamma_grid.iter().enumerate() {
                let z = C64::new(d, g);
                let scale = (z.norm() + self.j_eff.abs()).max(1e-300);
                for lam in self.eigenvalues[i][j] {
                    let res = (lam * lam - (z * z + C64::new(self.j_eff * self.j_eff, 0.0)))
                        .norm()
                        / (scale * scale);
                    worst = worst.max(res);
                }
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ExceptionalPoint {
    pub delta_eff: f64,
    pub gamma_op: f64,
    /// |lambda_1 - lambda_2| at the located point (Hz).
    pub eigenvalue_gap: f64,
    /// |<v1|v2>| of the normalized right eigenvectors (1 at coalescence).
    pub eigenvector_overlap: f64,
}

/// Locate the exceptional point of the reduced model by coarse grid search
/// on |discriminant| followed by local refinement.
pub fn find_exceptional_point(j_eff: f64) -> Result<ExceptionalPoint> {
    if !(j_eff > 0.0) {
        return Err(Error::InvalidModel("EP search needs J_eff > 0".into()));
    }
    let disc = |d: f64, g: f64| {
        let z = C64::new(d, g);
        (z * z + C64::new(j_eff * j_eff, 0.0)).norm()
    };
    let mut best = (0.0_f64, 0.0_f64, f64::INFINITY);
    let n = 61;
    for i in 0..n {
        let d = -2.0 * j_eff + 4.0 * j_eff * i as f64 / (n - 1) as f64;
        for j in 0..n {
            let g = 3.0 * j_eff * j as f64 / (n - 1) as f64;
            let v = disc(d, g);
            if v < best.2 {
                best = (d, g, v);
            }
        }
    }
    // local coordinate-descent refinement
    let (mut d, mut g, mut v) = best;
    let mut step = 0.1 * j_eff;
    for _ in 0..200 {
        let mut improved = false;
        for (dd, dg) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
            let cand = disc(d + dd, g + dg);
            if cand < v {
                d += dd;
                g += dg;
                v = cand;
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
            if step < 1e-12 * j_eff {
                break;
            }
        }
    }
    let (l1, l2) = reduced_eigenvalues(d, g, j_eff);
    let gap = (l1 - l2).norm();
    let overlap = eigenvector_overlap(d, g, j_eff)?;
    if gap > 1e-6 * j_eff && overlap < 1.0 - 1e-4 {
        return Err(Error::IntegrationFailure(format!(
            "EP refinement did not converge: gap {gap:.3e}, overlap {overlap:.6}"
        )));
    }
    Ok(ExceptionalPoint { delta_eff: d, gamma_op: g, eigenvalue_gap: gap, eigenvector_overlap: overlap })
}

/// |<v1|v2>| of the normalized right eigenvectors of the reduced model.
pub fn eigenvector_overlap(delta_eff: f64, gamma_op: f64, j_eff: f64) -> Result<f64> {
    use ndarray_linalg::Eig;
    crate::blas_guard::ensure_single_thread_blas();
    let m = reduced_nhh(delta_eff, gamma_op, j_eff);
    let (_, vecs): (Array1<C64>, Array2<C64>) = m.eig()?;
    let v1 = vecs.column(0);
    let v2 = vecs.column(1);
    let n1: f64 = v1.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let n2: f64 = v2.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let ov: C64 = v1.iter().zip(v2.iter()).map(|(a, b)| a.conj() * b).sum();
    Ok(ov.norm() / (n1 * n2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn hermitian_limit() {
        let (l1, l2) = reduced_eigenvalues(0.0, 0.0, 17e3);
        assert_abs_diff_eq!(l1.re, 17e3, epsilon = 1e-6);
        assert_abs_diff_eq!(l1.im, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(l2.re, -17e3, epsilon = 1e-6);
    }

    #[test]
    fn pt_transition_on_the_delta_zero_line() {
        let j = 5e3;
        // below threshold: purely real
        let (l1, _) = reduced_eigenvalues(0.0, 0.4 * j, j);
        assert_abs_diff_eq!(l1.im, 0.0, epsilon = 1e-9);
        assert!(l1.re.abs() > 0.0);
        // above: purely imaginary
        let (l1, _) = reduced_eigenvalues(0.0, 2.5 * j, j);
        assert_abs_diff_eq!(l1.re, 0.0, epsilon = 1e-9);
        assert!(l1.im.abs() > 0.0);
        // analytic value
        let (l1, _) = reduced_eigenvalues(0.0, 0.6 * j, j);
        assert_relative_eq!(l1.re, (j * j - 0.36 * j * j).sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn trace_and_det_identities_random() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(2);
        for _ in 0..200 {
            let d = rng.gen_range(-3e4..3e4);
            let g = rng.gen_range(0.0..3e4);
            let j = rng.gen_range(1e2..3e4);
            let (l1, l2) = reduced_eigenvalues(d, g, j);
            assert!((l1 + l2).norm() < 1e-9 * (l1.norm() + 1.0));
            // det = -(d + ig)^2 - J^2 must equal l1*l2
            let z = C64::new(d, g);
            let det = -(z * z) - C64::new(j * j, 0.0);
            assert!((l1 * l2 - det).norm() < 1e-9 * det.norm().max(1.0));
        }
    }

    #[test]
    fn surface_symmetry_and_residual() {
        let j = 1.0;
        let s = riemann_scan(j, (-3.0, 3.0), (0.0, 3.0), 25, 17);
        assert!(s.max_characteristic_residual() < 1e-9);
        // delta -> -delta maps the spectrum to minus its conjugate
        // (sigma_z (-H*) sigma_z similarity), so lambda(-d) = -conj(lambda(d))
        let n = s.delta_grid.len();
        for i in 0..n {
            let mirrored = n - 1 - i;
            for j_idx in 0..s.gamma_grid.len() {
                let a = s.eigenvalues[i][j_idx];
                let b = s.eigenvalues[mirrored][j_idx];
                let expect = -a[0].conj();
                let direct = (b[0] - expect).norm().min((b[1] - expect).norm());
                assert!(direct < 1e-9, "symmetry violated at ({i},{j_idx})");
            }
        }
    }

    #[test]
    fn branch_swap_around_the_ep() {
        // walk a closed loop around (0, J): the two branches exchange
        let j = 1.0;
        let r = 0.3;
        let n = 400;
        let start = reduced_eigenvalues(r, j, j);
        let mut pair = [start.0, start.1];
        let first = pair;
        for k in 1..=n {
            let th = std::f64::consts::TAU * k as f64 / n as f64;
            let d = r * th.cos();
            let g = j + r * th.sin();
            let (a, b) = reduced_eigenvalues(d, g, j);
            pair = track_branches(pair, [a, b]);
        }
        let swapped = (pair[0] - first[1]).norm() + (pair[1] - first[0]).norm();
        let kept = (pair[0] - first[0]).norm() + (pair[1] - first[1]).norm();
        assert!(swapped < 1e-6, "branches should swap; swap-dist {swapped:.3e}");
        assert!(kept > 0.1, "branches must not return to themselves");
    }

    #[test]
    fn ep_location_and_coalescence() {
        for j in [1.0_f64, 17e3] {
            let ep = find_exceptional_point(j).unwrap();
            assert!(ep.delta_eff.abs() < 1e-3 * j, "delta {}", ep.delta_eff);
            assert_relative_eq!(ep.gamma_op, j, max_relative = 1e-3);
            assert!(ep.eigenvalue_gap < 1e-4 * j);
            assert!(ep.eigenvector_overlap > 1.0 - 1e-4);
        }
    }

    #[test]
    fn ep_matrix_is_defective() {
        // at the EP the matrix has a single eigenvector: rank(H - lambda) = 1
        let j = 1.0;
        let m = reduced_nhh(0.0, j, j);
        // lambda = 0 (double); check rank of m via singular values
        use ndarray_linalg::SVD;
        crate::blas_guard::ensure_single_thread_blas();
        let (_, sv, _) = m.svd(false, false).unwrap();
        let nonzero = sv.iter().filter(|s| **s > 1e-10).count();
        assert_eq!(nonzero, 1, "singular values {sv:?}");
    }

    #[test]
    fn full_nhh_trace_and_hermitian_limit() {
        let spec = crate::model::chain::tests::nv_like_pair();
        let h0 = full_nhh(&spec, 0.0).unwrap();
        assert!(h0.clone().into_hermitian().is_ok());
        let h = full_nhh(&spec, 1e4).unwrap();
        let tr = h.trace();
        // 8 basis states with m_S = 0 and 8 with m_S = -1 cancel exactly
        assert_abs_diff_eq!(tr.im, 0.0, epsilon = 1e-6);
    }
}
