//! Finite-difference discretization of the divergence-form elliptic
//! operator with homogeneous Dirichlet conditions on the unit interval or
//! unit square, complex-shifted band solves, and the weighted eigensolver.
//!
//! The assembled matrix is symmetric by construction: coefficients are
//! averaged harmonically at cell faces and Dirichlet rows are eliminated,
//! so only interior nodes are carried.

use crate::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

/// Real symmetric banded matrix stored by upper diagonals:
/// `diag(k)[i] = A[i][i+k]` for offsets k = 0..=bw.
#[derive(Debug, Clone)]
pub struct SymBand {
    pub n: usize,
    pub bw: usize,
    diags: Vec<Vec<f64>>,
}

impl SymBand {
    pub fn zeros(n: usize, bw: usize) -> Self {
        let diags = (0..=bw).map(|k| vec![0.0; n - k.min(n)]).collect();
        SymBand { n, bw, diags }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        let k = hi - lo;
        if k > self.bw {
            0.0
        } else {
            self.diags[k][lo]
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        let k = hi - lo;
        assert!(k <= self.bw, "entry outside band");
        self.diags[k][lo] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        let k = hi - lo;
        assert!(k <= self.bw, "entry outside band");
        self.diags[k][lo] += v;
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            out[i] += self.diags[0][i] * v[i];
        }
        for k in 1..=self.bw {
            for i in 0..self.n - k {
                let a = self.diags[k][i];
                out[i] += a * v[i + k];
                out[i + k] += a * v[i];
            }
        }
        out
    }

    pub fn apply_complex(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.n];
        for i in 0..self.n {
            out[i] += self.diags[0][i] * v[i];
        }
        for k in 1..=self.bw {
            for i in 0..self.n - k {
                let a = self.diags[k][i];
                out[i] += a * v[i + k];
                out[i + k] += a * v[i];
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }
}

/// LU factorization of a complex banded matrix with partial pivoting.
///
/// Band storage in the factored layout: `ab[r][j]` holds A[i][j] with
/// r = kl + ku + i - j; the top kl rows are fill-in space.
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    ab: Vec<Vec<Complex64>>,
    ipiv: Vec<usize>,
}

impl BandLu {
    /// Factor A + diag(shift) where A is symmetric banded.
    pub fn factor_shifted(a: &SymBand, shift: &[Complex64]) -> Result<Self> {
        if shift.len() != a.n {
            return Err(Error::Shape(format!(
                "shift has length {}, matrix is {}x{}",
                shift.len(),
                a.n,
                a.n
            )));
        }
        let n = a.n;
        let (kl, ku) = (a.bw, a.bw);
        let ldab = 2 * kl + ku + 1;
        let mut ab = vec![vec![Complex64::new(0.0, 0.0); n]; ldab];
        for j in 0..n {
            let ilo = j.saturating_sub(ku);
            let ihi = (j + kl).min(n - 1);
            for i in ilo..=ihi {
                let mut v = Complex64::new(a.get(i, j), 0.0);
                if i == j {
                    v += shift[j];
                }
                ab[kl + ku + i - j][j] = v;
            }
        }
        let mut ipiv = vec![0usize; n];
        let band_row = kl + ku; // row index of the diagonal
        for j in 0..n {
            // pivot search in column j, rows j..=j+kl
            let reach = kl.min(n - 1 - j);
            let mut jp = 0;
            let mut best = ab[band_row][j].norm();
            for r in 1..=reach {
                let cand = ab[band_row + r][j].norm();
                if cand > best {
                    best = cand;
                    jp = r;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::LinearSolve(format!(
                    "zero or non-finite pivot at column {j}"
                )));
            }
            ipiv[j] = j + jp;
            let width = (ku + kl).min(n - 1 - j);
            if jp != 0 {
                // swap rows j and j+jp across columns j..=j+width
                for col in j..=j + width {
                    let ra = kl + ku + j - col;
                    let rb = kl + ku + (j + jp) - col;
                    ab.swap_rows_cols(ra, rb, col);
                }
            }
            // eliminate
            let piv = ab[band_row][j];
            for r in 1..=reach {
                let m = ab[band_row + r][j] / piv;
                ab[band_row + r][j] = m;
                for c in 1..=width {
                    let col = j + c;
                    let upper = ab[kl + ku + j - col][col];
                    let target = kl + ku + (j + r) - col;
                    ab[target][col] -= m * upper;
                }
            }
        }
        Ok(BandLu { n, kl, ku, ab, ipiv })
    }

    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        if b.len() != self.n {
            return Err(Error::Shape(format!(
                "rhs has length {}, expected {}",
                b.len(),
                self.n
            )));
        }
        let band_row = self.kl + self.ku;
        let mut x = b.to_vec();
        // forward: apply pivots and L
        for j in 0..self.n {
            let p = self.ipiv[j];
            if p != j {
                x.swap(j, p);
            }
            let reach = self.kl.min(self.n - 1 - j);
            let xj = x[j];
            for r in 1..=reach {
                let m = self.ab[band_row + r][j];
                x[j + r] -= m * xj;
            }
        }
        // backward: U x = y; U[j][j+c] sits at row band_row - c
        for j in (0..self.n).rev() {
            let width = (self.ku + self.kl).min(self.n - 1 - j);
            let mut acc = x[j];
            for c in 1..=width {
                acc -= self.ab[band_row - c][j + c] * x[j + c];
            }
            x[j] = acc / self.ab[band_row][j];
        }
        Ok(x)
    }
}

trait SwapRowsCols {
    fn swap_rows_cols(&mut self, ra: usize, rb: usize, col: usize);
}

impl SwapRowsCols for Vec<Vec<Complex64>> {
    fn swap_rows_cols(&mut self, ra: usize, rb: usize, col: usize) {
        if ra == rb {
            return;
        }
        let tmp = self[ra][col];
        self[ra][col] = self[rb][col];
        self[rb][col] = tmp;
    }
}

/// ρ-orthonormal eigenpairs of the weighted operator.
#[derive(Debug, Clone)]
pub struct EigenBasis {
    pub eigenvalues: Vec<f64>,
    /// eigenvectors[k] is the k-th mode over interior nodes.
    pub eigenvectors: Vec<Vec<f64>>,
}

/// Discretized elliptic problem on the unit interval or unit square.
#[derive(Debug, Clone)]
pub struct SpatialProblem {
    pub dim: usize,
    pub shape: Vec<usize>,
    /// Grid spacing per axis.
    pub h: Vec<f64>,
    pub a: Vec<f64>,
    pub q: Vec<f64>,
    pub rho: Vec<f64>,
    pub op: SymBand,
}

fn harmonic(a: f64, b: f64) -> f64 {
    2.0 / (1.0 / a + 1.0 / b)
}

/// Assemble the interior-node operator. `shape` counts interior nodes per
/// axis; the domain is the unit interval / unit square so h = 1/(n+1).
pub fn assemble_operator(
    dim: usize,
    shape: &[usize],
    a: &[f64],
    q: &[f64],
    rho: &[f64],
) -> Result<SpatialProblem> {
    if dim != 1 && dim != 2 {
        return Err(Error::Validation(format!("dim must be 1 or 2, got {dim}")));
    }
    if shape.len() != dim {
        return Err(Error::Validation(format!(
            "grid shape has {} entries for dim {dim}",
            shape.len()
        )));
    }
    let n: usize = shape.iter().product();
    if n == 0 {
        return Err(Error::Validation("empty grid".into()));
    }
    if n > 4096 {
        return Err(Error::Validation(format!(
            "grid with {n} interior nodes exceeds the supported dense-eigensolve scale (4096)"
        )));
    }
    for (name, field) in [("a", a), ("q", q), ("rho", rho)] {
        if field.len() != n {
            return Err(Error::Shape(format!(
                "coefficient field {name} has length {}, expected {n}",
                field.len()
            )));
        }
    }
    let mut bad = Vec::new();
    for (i, &v) in a.iter().enumerate() {
        if v <= 0.0 || !v.is_finite() {
            bad.push(format!("a[{i}] = {v}"));
        }
    }
    for (i, &v) in q.iter().enumerate() {
        if v < 0.0 || !v.is_finite() {
            bad.push(format!("q[{i}] = {v}"));
        }
    }
    for (i, &v) in rho.iter().enumerate() {
        if v <= 0.0 || !v.is_finite() {
            bad.push(format!("rho[{i}] = {v}"));
        }
    }
    if !bad.is_empty() {
        return Err(Error::Validation(format!(
            "coefficient bounds violated at: {}",
            bad.join(", ")
        )));
    }

    let (op, h) = match dim {
        1 => {
            let nx = shape[0];
            let hx = 1.0 / (nx as f64 + 1.0);
            let mut op = SymBand::zeros(nx, 1);
            for i in 0..nx {
                // face coefficients; boundary faces take the one-sided value
                let a_left = if i == 0 { a[0] } else { harmonic(a[i - 1], a[i]) };
                let a_right = if i + 1 == nx {
                    a[nx - 1]
                } else {
                    harmonic(a[i], a[i + 1])
                };
                op.add(i, i, (a_left + a_right) / (hx * hx) + q[i]);
                if i + 1 < nx {
                    op.add(i, i + 1, -a_right / (hx * hx));
                }
            }
            (op, vec![hx])
        }
        _ => {
            let (nx, ny) = (shape[0], shape[1]);
            let hx = 1.0 / (nx as f64 + 1.0);
            let hy = 1.0 / (ny as f64 + 1.0);
            let idx = |ix: usize, iy: usize| ix + iy * nx;
            let mut op = SymBand::zeros(nx * ny, nx);
            for iy in 0..ny {
                for ix in 0..nx {
                    let i = idx(ix, iy);
                    let ax_l = if ix == 0 {
                        a[i]
                    } else {
                        harmonic(a[idx(ix - 1, iy)], a[i])
                    };
                    let ax_r = if ix + 1 == nx {
                        a[i]
                    } else {
                        harmonic(a[i], a[idx(ix + 1, iy)])
                    };
                    let ay_l = if iy == 0 {
                        a[i]
                    } else {
                        harmonic(a[idx(ix, iy - 1)], a[i])
                    };
                    let ay_r = if iy + 1 == ny {
                        a[i]
                    } else {
                        harmonic(a[i], a[idx(ix, iy + 1)])
                    };
                    op.add(
                        i,
                        i,
                        (ax_l + ax_r) / (hx * hx) + (ay_l + ay_r) / (hy * hy) + q[i],
                    );
                    if ix + 1 < nx {
                        op.add(i, i + 1, -ax_r / (hx * hx));
                    }
                    if iy + 1 < ny {
                        op.add(i, i + nx, -ay_r / (hy * hy));
                    }
                }
            }
            (op, vec![hx, hy])
        }
    };

    Ok(SpatialProblem {
        dim,
        shape: shape.to_vec(),
        h,
        a: a.to_vec(),
        q: q.to_vec(),
        rho: rho.to_vec(),
        op,
    })
}

impl SpatialProblem {
    pub fn n_interior(&self) -> usize {
        self.op.n
    }

    /// Cell volume h^dim entering every discrete inner product.
    pub fn cell_volume(&self) -> f64 {
        self.h.iter().product()
    }

    /// Plain L2 inner product ⟨u, v⟩ = Σ u v h^dim.
    pub fn l2_dot(&self, u: &[f64], v: &[f64]) -> f64 {
        u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() * self.cell_volume()
    }

    /// Weighted inner product ⟨u, v⟩_ρ = Σ ρ u v h^dim.
    pub fn rho_dot(&self, u: &[f64], v: &[f64]) -> f64 {
        u.iter()
            .zip(v)
            .zip(&self.rho)
            .map(|((a, b), r)| r * a * b)
            .sum::<f64>()
            * self.cell_volume()
    }

    pub fn l2_norm(&self, u: &[f64]) -> f64 {
        self.l2_dot(u, u).sqrt()
    }

    pub fn l2_norm_complex(&self, u: &[Complex64]) -> f64 {
        (u.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.cell_volume()).sqrt()
    }

    /// A_h v on interior nodes.
    pub fn apply_operator(&self, v: &[f64]) -> Vec<f64> {
        self.op.apply(v)
    }

    pub fn apply_operator_complex(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.op.apply_complex(v)
    }

    /// Factor A_h + diag(shift), reusable across right-hand sides.
    pub fn shifted_factor(&self, shift: &[Complex64]) -> Result<BandLu> {
        BandLu::factor_shifted(&self.op, shift)
    }

    /// Solve (A_h + diag(shift)) w = b with a residual check at 1e-10.
    pub fn shifted_solve(&self, shift: &[Complex64], b: &[Complex64]) -> Result<Vec<Complex64>> {
        let lu = self.shifted_factor(shift)?;
        let w = lu.solve(b)?;
        // residual gate
        let mut r = self.op.apply_complex(&w);
        for ((ri, si), (wi, bi)) in r.iter_mut().zip(shift).zip(w.iter().zip(b)) {
            *ri += si * wi - bi;
        }
        let rnorm = r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let bnorm = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if rnorm > 1e-10 * bnorm.max(1e-300) {
            return Err(Error::LinearSolve(format!(
                "shifted solve residual {rnorm:.3e} exceeds 1e-10 * {bnorm:.3e}"
            )));
        }
        Ok(w)
    }

    /// First k eigenpairs of A_h φ = λ diag(ρ) φ, ρ-orthonormal & ascending.
    ///
    /// Dense symmetric solve of D^{-1/2} A_h D^{-1/2}; adequate for the
    /// desk-scale grids this crate targets.
    pub fn eigensolve(&self, k: usize) -> Result<EigenBasis> {
        let n = self.n_interior();
        if k > n {
            return Err(Error::Validation(format!(
                "requested {k} eigenpairs from a {n}-node problem"
            )));
        }
        let d_inv_sqrt: Vec<f64> = self.rho.iter().map(|r| 1.0 / r.sqrt()).collect();
        let b = DMatrix::from_fn(n, n, |i, j| self.op.get(i, j) * d_inv_sqrt[i] * d_inv_sqrt[j]);
        let eig = SymmetricEigen::new(b);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
        let vol_scale = self.cell_volume().sqrt();
        let mut eigenvalues = Vec::with_capacity(k);
        let mut eigenvectors = Vec::with_capacity(k);
        for &idx in order.iter().take(k) {
            eigenvalues.push(eig.eigenvalues[idx]);
            let col = eig.eigenvectors.column(idx);
            let phi: Vec<f64> = (0..n).map(|i| col[i] * d_inv_sqrt[i] / vol_scale).collect();
            eigenvectors.push(phi);
        }
        Ok(EigenBasis {
            eigenvalues,
            eigenvectors,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn unit_problem_1d(n: usize) -> SpatialProblem {
        assemble_operator(1, &[n], &vec![1.0; n], &vec![0.0; n], &vec![1.0; n]).unwrap()
    }

    #[test]
    fn laplacian_stencil_1d() {
        let p = unit_problem_1d(7);
        let h = 1.0 / 8.0;
        for i in 0..7 {
            assert_relative_eq!(p.op.get(i, i), 2.0 / (h * h), max_relative = 1e-14);
            if i + 1 < 7 {
                assert_relative_eq!(p.op.get(i, i + 1), -1.0 / (h * h), max_relative = 1e-14);
            }
        }
        // additive potential
        let pq =
            assemble_operator(1, &[7], &vec![1.0; 7], &vec![3.5; 7], &vec![1.0; 7]).unwrap();
        for i in 0..7 {
            assert_relative_eq!(
                pq.op.get(i, i),
                2.0 / (h * h) + 3.5,
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn coefficient_validation_lists_offenders() {
        let err = assemble_operator(
            1,
            &[3],
            &[1.0, -2.0, 1.0],
            &[0.0, 0.0, -1.0],
            &[1.0, 1.0, 1.0],
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("a[1]"));
        assert!(msg.contains("q[2]"));
    }

    #[test]
    fn tridiagonal_eigenvalues_closed_form() {
        let n = 31;
        let p = unit_problem_1d(n);
        let h = 1.0 / (n as f64 + 1.0);
        let basis = p.eigensolve(n).unwrap();
        for (k, lam) in basis.eigenvalues.iter().enumerate() {
            let expect = (2.0 - 2.0 * ((k + 1) as f64 * PI * h).cos()) / (h * h);
            assert_relative_eq!(lam, &expect, max_relative = 1e-11);
        }
        // rho-orthonormality
        for i in 0..4 {
            for j in 0..4 {
                let dot = p.rho_dot(&basis.eigenvectors[i], &basis.eigenvectors[j]);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-10, "gram[{i}][{j}] = {dot}");
            }
        }
        // eigen residual A phi = lambda rho phi
        for k in 0..4 {
            let phi = &basis.eigenvectors[k];
            let lam = basis.eigenvalues[k];
            let av = p.apply_operator(phi);
            let mut resid: f64 = 0.0;
            for i in 0..n {
                resid = resid.max((av[i] - lam * p.rho[i] * phi[i]).abs());
            }
            assert!(resid <= 1e-8 * lam, "eigen residual {resid}");
        }
    }

    #[test]
    fn constant_weight_rescales_spectrum() {
        let n = 15;
        let p1 = unit_problem_1d(n);
        let p4 =
            assemble_operator(1, &[n], &vec![1.0; n], &vec![0.0; n], &vec![4.0; n]).unwrap();
        let b1 = p1.eigensolve(5).unwrap();
        let b4 = p4.eigensolve(5).unwrap();
        for (l1, l4) in b1.eigenvalues.iter().zip(&b4.eigenvalues) {
            assert_relative_eq!(l4 * 4.0, *l1, max_relative = 1e-12);
        }
    }

    #[test]
    fn first_eigenvalue_converges_to_continuum() {
        let mut errs = Vec::new();
        for n in [15usize, 31, 63] {
            let p = unit_problem_1d(n);
            let b = p.eigensolve(1).unwrap();
            errs.push((b.eigenvalues[0] - PI * PI).abs());
        }
        for pair in errs.windows(2) {
            let rate = (pair[0] / pair[1]).log2();
            assert!(rate > 1.9, "eigenvalue convergence rate: {errs:?}");
        }
    }

    #[test]
    fn two_dimensional_smallest_eigenvalue() {
        let mut errs = Vec::new();
        for n in [7usize, 15] {
            let nn = n * n;
            let p = assemble_operator(
                2,
                &[n, n],
                &vec![1.0; nn],
                &vec![0.0; nn],
                &vec![1.0; nn],
            )
            .unwrap();
            let b = p.eigensolve(1).unwrap();
            errs.push((b.eigenvalues[0] - 2.0 * PI * PI).abs());
        }
        assert!(errs[1] < errs[0], "2d eigenvalue not converging: {errs:?}");
        let rate = (errs[0] / errs[1]).log2();
        assert!(rate > 1.8, "2d convergence rate {rate}: {errs:?}");
    }

    #[test]
    fn shifted_solve_matches_dense_lu_oracle() {
        let n = 8;
        let alpha = 0.5;
        let p = assemble_operator(
            1,
            &[n],
            &vec![1.0; n],
            &vec![0.5; n],
            &vec![1.3; n],
        )
        .unwrap();
        let pc = Complex64::new(1.0, 2.0);
        let shift: Vec<Complex64> = (0..n).map(|i| p.rho[i] * pc.powf(alpha)).collect();
        // deterministic pseudo-random rhs
        let b: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new((i as f64 + 1.0).sin(), (2.0 * i as f64 + 0.3).cos()))
            .collect();
        let w = p.shifted_solve(&shift, &b).unwrap();

        // dense oracle
        let dense = DMatrix::from_fn(n, n, |i, j| {
            Complex64::new(p.op.get(i, j), 0.0) + if i == j { shift[i] } else { Complex64::ZERO }
        });
        let rhs = nalgebra::DVector::from_iterator(n, b.iter().copied());
        let sol = dense.lu().solve(&rhs).expect("dense solve");
        for i in 0..n {
            assert!(
                (w[i] - sol[i]).norm() <= 1e-12 * sol[i].norm().max(1.0),
                "node {i}: {} vs {}",
                w[i],
                sol[i]
            );
        }
    }

    #[test]
    fn conjugate_input_gives_conjugate_solution() {
        let n = 12;
        let p = unit_problem_1d(n);
        let pc = Complex64::new(0.7, 1.9);
        let shift: Vec<Complex64> = (0..n).map(|_| pc.powf(0.6)).collect();
        let b: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new((i as f64).cos(), (i as f64 * 0.7).sin()))
            .collect();
        let w = p.shifted_solve(&shift, &b).unwrap();
        let shift_c: Vec<Complex64> = shift.iter().map(|s| s.conj()).collect();
        let b_c: Vec<Complex64> = b.iter().map(|s| s.conj()).collect();
        let w_c = p.shifted_solve(&shift_c, &b_c).unwrap();
        for i in 0..n {
            assert!((w[i].conj() - w_c[i]).norm() <= 1e-13 * w[i].norm().max(1e-30));
        }
    }

    #[test]
    fn real_shift_real_input_stays_real() {
        let n = 10;
        let p = unit_problem_1d(n);
        let shift: Vec<Complex64> = vec![Complex64::new(2.5, 0.0); n];
        let b: Vec<Complex64> = (0..n).map(|i| Complex64::new(1.0 / (i + 1) as f64, 0.0)).collect();
        let w = p.shifted_solve(&shift, &b).unwrap();
        for wi in &w {
            assert!(wi.im.abs() <= 1e-13 * wi.re.abs().max(1e-30));
        }
    }

    #[test]
    fn eigenmode_scalar_resolvent() {
        // (A + rho s)^{-1} rho phi_n = phi_n / (lambda_n + s)
        let n = 15;
        let p = assemble_operator(1, &[n], &vec![1.0; n], &vec![0.0; n], &vec![2.0; n]).unwrap();
        let basis = p.eigensolve(3).unwrap();
        let s = Complex64::new(0.8, -0.4);
        let lam = basis.eigenvalues[2];
        let phi = &basis.eigenvectors[2];
        let shift: Vec<Complex64> = p.rho.iter().map(|r| r * s).collect();
        let b: Vec<Complex64> = phi
            .iter()
            .zip(&p.rho)
            .map(|(v, r)| Complex64::new(v * r, 0.0))
            .collect();
        let w = p.shifted_solve(&shift, &b).unwrap();
        for (wi, pi) in w.iter().zip(phi) {
            let expect = pi / (lam + s);
            assert!((wi - expect).norm() <= 1e-10 * expect.norm().max(1e-30));
        }
    }

    #[test]
    fn discrete_ellipticity_bound() {
        // v' A v >= min(a) v' L v for the unit-coefficient Laplacian L
        let n = 20;
        let a: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i as f64).sin() + 1.0)).collect();
        let p = assemble_operator(1, &[n], &a, &vec![0.0; n], &vec![1.0; n]).unwrap();
        let l = unit_problem_1d(n);
        let amin = a.iter().cloned().fold(f64::INFINITY, f64::min);
        // deterministic sample vectors
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut rnd = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state as f64 / u64::MAX as f64) * 2.0 - 1.0
        };
        for _ in 0..50 {
            let v: Vec<f64> = (0..n).map(|_| rnd()).collect();
            let quad_a = p.l2_dot(&v, &p.apply_operator(&v));
            let quad_l = l.l2_dot(&v, &l.apply_operator(&v));
            assert!(quad_a >= amin * quad_l - 1e-10);
        }
    }

    #[test]
    fn eigensolve_rejects_oversized_request() {
        let p = unit_problem_1d(5);
        assert!(p.eigensolve(6).is_err());
        assert!(p.eigensolve(5).is_ok());
    }
}
