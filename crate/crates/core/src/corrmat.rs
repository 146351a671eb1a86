//! Antenna correlation matrices: construction, validation, eigensystems and
//! square roots.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default relative gap enforced between eigenvalues, as a fraction of the largest.
pub const DEFAULT_DISTINCT_TOL: f64 = 1e-6;

const UNIT_DIAG_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        CMatrix {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from rows; every row must have the same length as the row count.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// `M v`.
    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// Row vector times matrix, `v M`.
    pub fn vec_mul(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|j| (0..self.n).map(|i| v[i] * self[(i, j)]).sum())
            .collect()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.n, other.n);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.n).map(|i| self[(i, j)]).collect()
    }

    fn hermitian_deviation(&self) -> f64 {
        let mut dev = 0.0f64;
        for i in 0..self.n {
            for j in i..self.n {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }
}

/// A validated Hermitian, unit-diagonal, positive-definite correlation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationModel {
    entries: CMatrix,
}

impl CorrelationModel {
    /// Validates and wraps an explicit matrix.
    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        if m.n() == 0 {
            return Err(Error::param("n", "correlation matrix must be at least 1x1"));
        }
        let dev = m.hermitian_deviation();
        if dev != 0.0 {
            return Err(Error::NotHermitian { deviation: dev });
        }
        for i in 0..m.n() {
            let d = m[(i, i)];
            if (d.re - 1.0).abs() > UNIT_DIAG_TOL || d.im != 0.0 {
                return Err(Error::NotUnitDiagonal {
                    index: i,
                    value: d.re,
                });
            }
        }
        let (values, _) = jacobi_hermitian(&m);
        let smallest = values.iter().copied().fold(f64::INFINITY, f64::min);
        if !(smallest > 0.0) {
            return Err(Error::NotPositiveDefinite { smallest });
        }
        Ok(CorrelationModel { entries: m })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::from_matrix(CMatrix::identity(n))
    }

    pub fn n(&self) -> usize {
        self.entries.n()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn eigen(&self, distinct_tol: f64) -> Result<EigenSystem> {
        eigendecompose(self, distinct_tol)
    }
}

/// Exponential correlation model, `R_ij = r^{|i-j|}`.
pub fn exp_correlation(n: usize, r: f64) -> Result<CorrelationModel> {
    if n == 0 {
        return Err(Error::param("n", "antenna count must be >= 1"));
    }
    if !(0.0..1.0).contains(&r) {
        return Err(Error::param(
            "r",
            format!("correlation coefficient must lie in [0, 1), got {r}"),
        ));
    }
    let m = CMatrix::from_fn(n, |i, j| Complex64::new(r.powi(i.abs_diff(j) as i32), 0.0));
    CorrelationModel::from_matrix(m)
}

/// Eigenvalues (descending) and unitary eigenvector basis.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    raw: Vec<f64>,
    values: Vec<f64>,
    basis: CMatrix,
    distinct_tol: f64,
}

impl EigenSystem {
    /// Eigensystem of `diag(values)` with the identity basis.
    ///
    /// Channel statistics depend on the correlation only through its
    /// eigenvalues, so ordering studies can work from the spectrum directly.
    pub fn from_values(values: &[f64], distinct_tol: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::param("values", "need at least one eigenvalue"));
        }
        if let Some(&v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::NotPositiveDefinite { smallest: v });
        }
        let mut raw = values.to_vec();
        raw.sort_by(|a, b| b.total_cmp(a));
        let guarded = spread_repeated(&raw, distinct_tol)?;
        Ok(EigenSystem {
            basis: CMatrix::identity(raw.len()),
            raw,
            values: guarded,
            distinct_tol,
        })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// Eigenvalues after the distinctness guard; used by every closed form.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Eigenvalues as computed, before the distinctness guard.
    pub fn raw_values(&self) -> &[f64] {
        &self.raw
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn distinct_tol(&self) -> f64 {
        self.distinct_tol
    }

    /// `U diag(raw) Uᴴ`.
    pub fn reconstruct(&self) -> CMatrix {
        let d = CMatrix::from_diagonal(&self.raw);
        self.basis.matmul(&d).matmul(&self.basis.adjoint())
    }

    pub fn sqrt_matrix(&self) -> CMatrix {
        sqrt_matrix(self)
    }

    pub fn principal_weight(&self) -> Vec<Complex64> {
        principal_weight(self)
    }
}

/// Cyclic complex Jacobi iteration. Returns unsorted eigenvalues and the
/// matching eigenvector columns.
fn jacobi_hermitian(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.n();
    let mut a = m.clone();
    let mut v = CMatrix::identity(n);
    let scale = a.data.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                off = off.max(a[(p, q)].norm());
            }
        }
        if off <= 1e-17 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= 1e-300 {
                    continue;
                }
                let phase = apq / mag;
                let theta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let vpp = Complex64::new(c, 0.0);
                let vpq = Complex64::new(s, 0.0);
                let vqp = -s * phase.conj();
                let vqq = c * phase.conj();
                // A <- A V
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * vpp + akq * vqp;
                    a[(k, q)] = akp * vpq + akq * vqq;
                }
                // A <- Vᴴ A
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = vpp.conj() * apk + vqp.conj() * aqk;
                    a[(q, k)] = vpq.conj() * apk + vqq.conj() * aqk;
                }
                a[(p, q)] = Complex64::new(0.0, 0.0);
                a[(q, p)] = Complex64::new(0.0, 0.0);
                a[(p, p)].im = 0.0;
                a[(q, q)].im = 0.0;
                for k in 0..n {
                    let ukp = v[(k, p)];
                    let ukq = v[(k, q)];
                    v[(k, p)] = ukp * vpp + ukq * vqp;
                    v[(k, q)] = ukp * vpq + ukq * vqq;
                }
            }
        }
    }
    ((0..n).map(|i| a[(i, i)].re).collect(), v)
}

/// Spreads clusters of nearly equal values (descending input) so adjacent
/// gaps are at least `tol * max`, keeping each cluster's mean.
fn spread_repeated(sorted_desc: &[f64], tol: f64) -> Result<Vec<f64>> {
    if !(0.0..0.1).contains(&tol) {
        return Err(Error::param(
            "distinct_tol",
            format!("must lie in [0, 0.1), got {tol}"),
        ));
    }
    let mut v = sorted_desc.to_vec();
    let n = v.len();
    if tol == 0.0 || n < 2 {
        return Ok(v);
    }
    let eps = tol * v[0] / (1.0 - tol * (n as f64 - 1.0) / 2.0) * (1.0 + 1e-9);
    for _ in 0..n * n + 1 {
        let need = tol * v[0];
        if v.windows(2).all(|w| w[0] - w[1] >= need) {
            if v[n - 1] <= 0.0 {
                return Err(Error::RepeatedEigenvalues { gap: need });
            }
            return Ok(v);
        }
        let mut start = 0;
        while start < n {
            let mut end = start + 1;
            while end < n && v[end - 1] - v[end] < need {
                end += 1;
            }
            let k = end - start;
            if k > 1 {
                let mean = v[start..end].iter().sum::<f64>() / k as f64;
                let half = (k as f64 - 1.0) / 2.0;
                for (j, x) in v[start..end].iter_mut().enumerate() {
                    *x = mean + (half - j as f64) * eps;
                }
            }
            start = end;
        }
    }
    Err(Error::RepeatedEigenvalues { gap: tol * v[0] })
}

/// Eigen-decomposition with descending eigenvalues, phase-normalized
/// eigenvectors, and the distinctness guard applied to the stored values.
pub fn eigendecompose(r: &CorrelationModel, distinct_tol: f64) -> Result<EigenSystem> {
    let (vals, vecs) = jacobi_hermitian(r.entries());
    let n = vals.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    let raw: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
    if !(raw[n - 1] > 0.0) {
        return Err(Error::NotPositiveDefinite { smallest: raw[n - 1] });
    }
    let mut basis = CMatrix::zeros(n);
    for (dst, &src) in order.iter().enumerate() {
        let col = vecs.column(src);
        let lead = col
            .iter()
            .copied()
            .find(|z| z.norm() > 1e-12)
            .unwrap_or(Complex64::new(1.0, 0.0));
        let rot = lead.conj() / lead.norm();
        for (i, z) in col.iter().enumerate() {
            basis[(i, dst)] = z * rot;
        }
        let first = (0..n).find(|&i| col[i].norm() > 1e-12).unwrap_or(0);
        basis[(first, dst)].im = 0.0;
    }
    let values = spread_repeated(&raw, distinct_tol)?;
    Ok(EigenSystem {
        raw,
        values,
        basis,
        distinct_tol,
    })
}

/// `U diag(√v) Uᴴ` over the guarded eigenvalues.
pub fn sqrt_matrix(e: &EigenSystem) -> CMatrix {
    let roots: Vec<f64> = e.values.iter().map(|v| v.sqrt()).collect();
    let d = CMatrix::from_diagonal(&roots);
    let mut m = e.basis.matmul(&d).matmul(&e.basis.adjoint());
    // Symmetrize away rounding so the result is exactly Hermitian.
    for i in 0..m.n() {
        m[(i, i)].im = 0.0;
        for j in i + 1..m.n() {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)].conj());
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
    m
}

/// Unit-norm eigenvector of the largest eigenvalue.
pub fn principal_weight(e: &EigenSystem) -> Vec<Complex64> {
    e.basis.column(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn unitarity_error(u: &CMatrix) -> f64 {
        u.adjoint().matmul(u).max_abs_diff(&CMatrix::identity(u.n()))
    }

    #[test]
    fn exp_correlation_entries() {
        let r = exp_correlation(3, 0.5).unwrap();
        let want = [[1.0, 0.5, 0.25], [0.5, 1.0, 0.5], [0.25, 0.5, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(r.entries()[(i, j)], c(want[i][j]));
            }
        }
        assert_eq!(exp_correlation(2, 0.0).unwrap().entries(), &CMatrix::identity(2));
    }

    #[test]
    fn exp_correlation_rejects_bad_r() {
        assert!(exp_correlation(3, 1.0).is_err());
        assert!(exp_correlation(3, -0.1).is_err());
        assert!(exp_correlation(0, 0.5).is_err());
    }

    #[test]
    fn two_by_two_eigenvalues() {
        let e = exp_correlation(2, 0.5).unwrap().eigen(DEFAULT_DISTINCT_TOL).unwrap();
        assert!((e.values()[0] - 1.5).abs() < 1e-14);
        assert!((e.values()[1] - 0.5).abs() < 1e-14);
        let w = e.principal_weight();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((w[0] - c(h)).norm() < 1e-14 && (w[1] - c(h)).norm() < 1e-14);
    }

    #[test]
    fn three_by_three_matches_characteristic_roots() {
        let r = exp_correlation(3, 0.5).unwrap();
        let e = r.eigen(DEFAULT_DISTINCT_TOL).unwrap();
        let m = r.entries();
        let a = [
            [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
            [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
            [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
        ];
        let roots = oracle::eigenvalues_3x3(&a);
        for (x, y) in e.values().iter().zip(roots) {
            assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
    }

    #[test]
    fn identity_is_spread_with_trace_kept() {
        let e = CorrelationModel::identity(3).unwrap().eigen(1e-6).unwrap();
        let v = e.values();
        assert!(v[0] - v[1] >= 1e-6 * v[0] && v[1] - v[2] >= 1e-6 * v[0]);
        assert!((v.iter().sum::<f64>() - 3.0).abs() < 1e-12);
        assert_eq!(e.raw_values(), &[1.0, 1.0, 1.0]);
        let w = e.principal_weight();
        assert_eq!(w[0], c(1.0));
        assert!(e.sqrt_matrix().max_abs_diff(&CMatrix::identity(3)) < 1e-6);
    }

    #[test]
    fn guard_disabled_with_zero_tolerance() {
        let e = CorrelationModel::identity(4).unwrap().eigen(0.0).unwrap();
        assert_eq!(e.values(), &[1.0; 4]);
        assert_eq!(e.sqrt_matrix(), CMatrix::identity(4));
    }

    #[test]
    fn guard_handles_partial_clusters() {
        let e = EigenSystem::from_values(&[2.0, 0.5, 0.5, 1.0], 1e-3).unwrap();
        let v = e.values();
        assert_eq!(v[0], 2.0);
        assert_eq!(v[1], 1.0);
        assert!(v[2] - v[3] >= 1e-3 * 2.0);
        assert!((v[2] + v[3] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sqrt_of_diagonal() {
        let e = EigenSystem::from_values(&[4.0, 1.0], 0.0).unwrap();
        let s = e.sqrt_matrix();
        assert_eq!(s, CMatrix::from_diagonal(&[2.0, 1.0]));
    }

    #[test]
    fn principal_vector_residual() {
        let r = exp_correlation(3, 0.8).unwrap();
        let e = r.eigen(DEFAULT_DISTINCT_TOL).unwrap();
        let w = e.principal_weight();
        let rw = r.entries().mul_vec(&w);
        let res: f64 = rw
            .iter()
            .zip(&w)
            .map(|(a, b)| (a - e.values()[0] * b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(res < 1e-10);
        let norm: f64 = w.iter().map(|z| z.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-14);
        assert!(w[0].im == 0.0 && w[0].re > 0.0);
    }

    #[test]
    fn validation_errors() {
        let mut m = CMatrix::identity(2);
        m[(0, 1)] = Complex64::new(0.3, 0.1);
        m[(1, 0)] = Complex64::new(0.3, 0.1);
        assert!(matches!(CorrelationModel::from_matrix(m), Err(Error::NotHermitian { .. })));
        let m = CMatrix::from_diagonal(&[1.0, 2.0]);
        assert!(matches!(
            CorrelationModel::from_matrix(m),
            Err(Error::NotUnitDiagonal { index: 1, .. })
        ));
        let m = CMatrix::from_rows(&[vec![c(1.0), c(1.0)], vec![c(1.0), c(1.0)]]).unwrap();
        assert!(matches!(
            CorrelationModel::from_matrix(m),
            Err(Error::NotPositiveDefinite { .. })
        ));
        assert!(CMatrix::from_rows(&[vec![c(1.0)], vec![c(1.0), c(0.0)]]).is_err());
    }

    #[test]
    fn complex_hermitian_example() {
        let z = Complex64::new(0.3, 0.4);
        let m = CMatrix::from_rows(&[vec![c(1.0), z], vec![z.conj(), c(1.0)]]).unwrap();
        let r = CorrelationModel::from_matrix(m).unwrap();
        let e = r.eigen(DEFAULT_DISTINCT_TOL).unwrap();
        assert!((e.values()[0] - 1.5).abs() < 1e-14);
        assert!((e.values()[1] - 0.5).abs() < 1e-14);
        assert!(e.reconstruct().max_abs_diff(r.entries()) < 1e-14);
    }

    fn random_correlation(n: usize, seed: &[f64]) -> CorrelationModel {
        // B Bᴴ + 0.05 I, rescaled to unit diagonal.
        let b = CMatrix::from_fn(n, |i, j| {
            let k = 2 * (i * n + j);
            Complex64::new(seed[k % seed.len()], seed[(k + 1) % seed.len()])
        });
        let mut a = b.matmul(&b.adjoint());
        for i in 0..n {
            a[(i, i)] += c(0.05);
        }
        let d: Vec<f64> = (0..n).map(|i| a[(i, i)].re.sqrt()).collect();
        let mut r = CMatrix::from_fn(n, |i, j| a[(i, j)] / (d[i] * d[j]));
        for i in 0..n {
            r[(i, i)] = c(1.0);
            for j in i + 1..n {
                r[(j, i)] = r[(i, j)].conj();
            }
        }
        CorrelationModel::from_matrix(r).unwrap()
    }

    proptest! {
        #[test]
        fn exp_model_decomposition(n in 1usize..=8, r in 0.0f64..0.99) {
            let m = exp_correlation(n, r).unwrap();
            let e = m.eigen(DEFAULT_DISTINCT_TOL).unwrap();
            prop_assert!(e.raw_values().iter().all(|&v| v > 0.0));
            prop_assert!((e.values().iter().sum::<f64>() - n as f64).abs() < 1e-10);
            prop_assert!((e.raw_values().iter().sum::<f64>() - n as f64).abs() < 1e-10);
            prop_assert!(e.reconstruct().max_abs_diff(m.entries()) < 1e-10);
            prop_assert!(unitarity_error(e.basis()) < 1e-10);
            let gap = e.values().windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min);
            prop_assert!(n == 1 || gap >= DEFAULT_DISTINCT_TOL * e.values()[0]);
            let s = e.sqrt_matrix();
            // exp_correlation spectra are distinct unless r = 0, where the guard moves values by ~1e-6.
            let tol = if r < 1e-3 { 1e-5 } else { 1e-9 };
            prop_assert!(s.matmul(&s).max_abs_diff(m.entries()) < tol);
        }

        #[test]
        fn random_hermitian_decomposition(
            n in 1usize..=8,
            seed in proptest::collection::vec(-1.0f64..1.0, 16..64),
        ) {
            let m = random_correlation(n, &seed);
            let e = m.eigen(DEFAULT_DISTINCT_TOL).unwrap();
            prop_assert!(e.reconstruct().max_abs_diff(m.entries()) < 1e-10);
            prop_assert!(unitarity_error(e.basis()) < 1e-10);
            prop_assert!((e.raw_values().iter().sum::<f64>() - n as f64).abs() < 1e-10);
            let spread = e.values().iter().zip(e.raw_values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if spread == 0.0 {
                let s = e.sqrt_matrix();
                prop_assert!(s.matmul(&s).max_abs_diff(m.entries()) < 1e-9);
                prop_assert!(s.hermitian_deviation() == 0.0);
            }
        }
    }
}
