//! Dense Hermitian matrix kernel.
//!
//! Everything here is backed by `nalgebra`. Hermitian matrices are stored as
//! full complex matrices and symmetrized on construction so downstream code
//! can rely on exact Hermiticity.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type RealMatrix = DMatrix<f64>;

pub const C0: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const C1: Complex64 = Complex64 { re: 1.0, im: 0.0 };
pub const CI: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Default eigenvalue floor for inverse square roots and full-rank checks.
pub const PSD_FLOOR: f64 = 1e-10;

const HERM_TOL: f64 = 1e-8;
const EIG_MAX_ITER: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(ComplexMatrix);

impl HermitianMatrix {
    /// Validates Hermiticity (relative tolerance 1e-8) and symmetrizes.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Dimension(format!(
                "expected square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let scale = m.iter().fold(1.0f64, |acc, z| acc.max(z.norm()));
        let asym = max_asymmetry(&m);
        if asym > HERM_TOL * scale {
            return Err(Error::NotHermitian(asym));
        }
        Ok(Self::symmetrize(m))
    }

    /// Projects onto the Hermitian part, `(M + M†)/2`, without validation.
    pub fn symmetrize(m: ComplexMatrix) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "symmetrize needs a square matrix");
        let n = m.nrows();
        let mut h = m;
        for i in 0..n {
            h[(i, i)] = Complex64::new(h[(i, i)].re, 0.0);
            for j in (i + 1)..n {
                let v = (h[(i, j)] + h[(j, i)].conj()) * 0.5;
                h[(i, j)] = v;
                h[(j, i)] = v.conj();
            }
        }
        HermitianMatrix(h)
    }

    pub fn from_real(m: &RealMatrix) -> Self {
        Self::symmetrize(m.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn zeros(n: usize) -> Self {
        HermitianMatrix(ComplexMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        HermitianMatrix(ComplexMatrix::identity(n, n))
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = ComplexMatrix::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(*v, 0.0);
        }
        HermitianMatrix(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.0[(i, i)].re).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.0.iter().all(|z| z.im.abs() <= tol)
    }

    pub fn real_part(&self) -> RealMatrix {
        self.0.map(|z| z.re)
    }

    pub fn scale(&self, t: f64) -> Self {
        HermitianMatrix(self.0.map(|z| z * t))
    }

    /// Re tr(self · other), which is the real inner product for Hermitian pairs.
    pub fn inner(&self, other: &HermitianMatrix) -> f64 {
        // tr(AB) = Σ_ij A_ij B_ji = Σ_ij A_ij conj(B_ij) for Hermitian B
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum()
    }

    /// Conjugation `U self U†`.
    pub fn conjugate_by(&self, u: &ComplexMatrix) -> Self {
        Self::symmetrize(u * &self.0 * u.adjoint())
    }

    /// The anticommutator average `(A B + B A)/2`.
    pub fn jordan(&self, other: &HermitianMatrix) -> Self {
        let ab = &self.0 * &other.0;
        Self::symmetrize((&ab + ab.adjoint()) * Complex64::new(0.5, 0.0))
    }
}

fn max_asymmetry(m: &ComplexMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

impl Add for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn add(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn sub(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix(&self.0 - &rhs.0)
    }
}

impl Neg for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn neg(self) -> HermitianMatrix {
        HermitianMatrix(-&self.0)
    }
}

impl Mul for &HermitianMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &HermitianMatrix) -> ComplexMatrix {
        &self.0 * &rhs.0
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    dim: usize,
    entries: Vec<[f64; 2]>,
}

impl Serialize for HermitianMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.dim();
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let z = self.0[(i, j)];
                entries.push([z.re, z.im]);
            }
        }
        MatrixJson { dim: n, entries }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for HermitianMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = MatrixJson::deserialize(d)?;
        if raw.entries.len() != raw.dim * raw.dim {
            return Err(D::Error::custom(format!(
                "\"entries\" has {} items, expected dim^2 = {}",
                raw.entries.len(),
                raw.dim * raw.dim
            )));
        }
        let m = ComplexMatrix::from_row_iterator(
            raw.dim,
            raw.dim,
            raw.entries.iter().map(|e| Complex64::new(e[0], e[1])),
        );
        HermitianMatrix::new(m).map_err(D::Error::custom)
    }
}

/// Spectral decomposition with ascending eigenvalues.
///
/// Each eigenvector is rephased so that its largest-magnitude component is
/// real and positive (first such component on ties).
pub fn eigh(h: &HermitianMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let n = h.dim();
    if n == 0 {
        return Ok((vec![], ComplexMatrix::zeros(0, 0)));
    }
    let eig = SymmetricEigen::try_new(h.0.clone(), f64::EPSILON, EIG_MAX_ITER)
        .ok_or(Error::NoConvergence)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = ComplexMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(src);
        let mut best = 0;
        let mut best_abs = -1.0;
        for r in 0..n {
            let a = v[r].norm();
            if a > best_abs + 1e-12 {
                best = r;
                best_abs = a;
            }
        }
        let phase = if best_abs > 0.0 { v[best].conj() / best_abs } else { C1 };
        for r in 0..n {
            vecs[(r, col)] = v[r] * phase;
        }
    }
    Ok((vals, vecs))
}

/// Real symmetric counterpart of [`eigh`]; sign fixed so the
/// largest-magnitude component is positive.
pub fn eigh_real(m: &RealMatrix) -> Result<(Vec<f64>, RealMatrix)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((vec![], RealMatrix::zeros(0, 0)));
    }
    let eig =
        SymmetricEigen::try_new(m.clone(), f64::EPSILON, EIG_MAX_ITER).ok_or(Error::NoConvergence)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = RealMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(src);
        let mut best = 0;
        for r in 1..n {
            if v[r].abs() > v[best].abs() + 1e-12 {
                best = r;
            }
        }
        let s = if v[best] < 0.0 { -1.0 } else { 1.0 };
        for r in 0..n {
            vecs[(r, col)] = v[r] * s;
        }
    }
    Ok((vals, vecs))
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(h: &HermitianMatrix) -> Result<Vec<f64>> {
    if h.dim() == 0 {
        return Ok(vec![]);
    }
    let mut v: Vec<f64> = h
        .0
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NoConvergence);
    }
    v.sort_by(f64::total_cmp);
    Ok(v)
}

pub fn lambda_min(h: &HermitianMatrix) -> Result<f64> {
    Ok(eigvalsh(h)?.first().copied().unwrap_or(0.0))
}

pub fn lambda_min_real(m: &RealMatrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.clone().symmetric_eigenvalues().min()
}

fn spectral_map(h: &HermitianMatrix, f: impl Fn(f64) -> f64) -> Result<HermitianMatrix> {
    let (vals, v) = eigh(h)?;
    let n = h.dim();
    let mut scaled = v.clone();
    for (j, &l) in vals.iter().enumerate() {
        let fl = f(l);
        for i in 0..n {
            scaled[(i, j)] *= fl;
        }
    }
    Ok(HermitianMatrix::symmetrize(&scaled * v.adjoint()))
}

/// `V diag(1/sqrt(max(λ, floor))) V†`; errors when some λ < -floor.
pub fn psd_inv_sqrt(h: &HermitianMatrix, floor: f64) -> Result<HermitianMatrix> {
    let (vals, _) = eigh(h)?;
    if let Some(&bad) = vals.iter().find(|&&l| l < -floor) {
        return Err(Error::NotPsd { value: bad, floor });
    }
    spectral_map(h, |l| 1.0 / l.max(floor).sqrt())
}

/// Principal square root of a PSD matrix; negative eigenvalues within
/// `floor` are clipped to zero.
pub fn psd_sqrt(h: &HermitianMatrix, floor: f64) -> Result<HermitianMatrix> {
    let (vals, _) = eigh(h)?;
    if let Some(&bad) = vals.iter().find(|&&l| l < -floor) {
        return Err(Error::NotPsd { value: bad, floor });
    }
    spectral_map(h, |l| l.max(0.0).sqrt())
}

pub fn trace_norm(h: &HermitianMatrix) -> Result<f64> {
    Ok(eigvalsh(h)?.iter().map(|l| l.abs()).sum())
}

pub fn op_norm(h: &HermitianMatrix) -> Result<f64> {
    Ok(eigvalsh(h)?.iter().fold(0.0f64, |acc, l| acc.max(l.abs())))
}

/// Matrix exponential (scaling and squaring with Padé approximants).
pub fn expm(l: &ComplexMatrix) -> Result<ComplexMatrix> {
    if l.nrows() != l.ncols() {
        return Err(Error::Dimension("expm needs a square matrix".into()));
    }
    if l.nrows() == 0 {
        return Ok(l.clone());
    }
    let e = l.exp();
    if e.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(e)
}

/// Returns `(exp(L), Dexp_L[E])` using the block identity
/// `exp([[L, E], [0, L]]) = [[exp(L), Dexp_L[E]], [0, exp(L)]]`.
pub fn frechet_expm(l: &ComplexMatrix, e: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let n = l.nrows();
    if l.ncols() != n || e.nrows() != n || e.ncols() != n {
        return Err(Error::Dimension(format!(
            "frechet_expm: L is {}x{}, E is {}x{}",
            l.nrows(),
            l.ncols(),
            e.nrows(),
            e.ncols()
        )));
    }
    let mut big = ComplexMatrix::zeros(2 * n, 2 * n);
    big.view_mut((0, 0), (n, n)).copy_from(l);
    big.view_mut((n, n), (n, n)).copy_from(l);
    big.view_mut((0, n), (n, n)).copy_from(e);
    let x = expm(&big)?;
    Ok((
        x.view((0, 0), (n, n)).into_owned(),
        x.view((0, n), (n, n)).into_owned(),
    ))
}

/// `[[Re H, -Im H], [Im H, Re H]]`. The embedding has each eigenvalue of `H`
/// twice, so traces double.
pub fn herm_to_real_embed(h: &HermitianMatrix) -> RealMatrix {
    let n = h.dim();
    let mut out = RealMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = h.0[(i, j)];
            out[(i, j)] = z.re;
            out[(i + n, j + n)] = z.re;
            out[(i, j + n)] = -z.im;
            out[(i + n, j)] = z.im;
        }
    }
    out
}

/// Left inverse of [`herm_to_real_embed`] that averages the redundant copies.
pub fn real_embed_to_herm(y: &RealMatrix) -> Result<HermitianMatrix> {
    if y.nrows() != y.ncols() || y.nrows() % 2 != 0 {
        return Err(Error::Dimension(format!(
            "real embedding must be square of even size, got {}x{}",
            y.nrows(),
            y.ncols()
        )));
    }
    let n = y.nrows() / 2;
    let mut m = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let re = 0.5 * (y[(i, j)] + y[(i + n, j + n)]);
            let im = 0.5 * (y[(i + n, j)] - y[(i, j + n)]);
            m[(i, j)] = Complex64::new(re, im);
        }
    }
    Ok(HermitianMatrix::symmetrize(m))
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn to_complex(m: &RealMatrix) -> ComplexMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[C0, C1, C1, C0])
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[C0, -CI, CI, C0])
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[C1, C0, C0, -C1])
}

/// Block diagonal matrix with Hermitian blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockDiagMatrix {
    pub blocks: Vec<HermitianMatrix>,
}

impl BlockDiagMatrix {
    pub fn new(blocks: Vec<HermitianMatrix>) -> Self {
        Self { blocks }
    }

    pub fn zeros(dims: &[usize]) -> Self {
        Self {
            blocks: dims.iter().map(|&n| HermitianMatrix::zeros(n)).collect(),
        }
    }

    pub fn identity(dims: &[usize]) -> Self {
        Self {
            blocks: dims.iter().map(|&n| HermitianMatrix::identity(n)).collect(),
        }
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.dim()).collect()
    }

    pub fn conforms(&self, dims: &[usize]) -> bool {
        self.blocks.len() == dims.len() && self.blocks.iter().zip(dims).all(|(b, &n)| b.dim() == n)
    }

    pub fn inner(&self, other: &BlockDiagMatrix) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a.inner(b))
            .sum()
    }

    pub fn trace(&self) -> f64 {
        self.blocks.iter().map(|b| b.trace()).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.frobenius().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn lambda_min(&self) -> Result<f64> {
        let mut m = f64::INFINITY;
        for b in &self.blocks {
            m = m.min(lambda_min(b)?);
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_herm(n: usize, seed: u64) -> HermitianMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = ComplexMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        HermitianMatrix::symmetrize(&m + m.adjoint())
    }

    fn reconstruct(vals: &[f64], v: &ComplexMatrix) -> ComplexMatrix {
        let mut s = v.clone();
        for (j, l) in vals.iter().enumerate() {
            s.column_mut(j).scale_mut(*l);
        }
        s * v.adjoint()
    }

    #[test]
    fn eigh_diagonal_is_sorted_permutation() {
        let (vals, v) = eigh(&HermitianMatrix::diag(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(vals, vec![1.0, 2.0, 3.0]);
        assert!((v[(1, 0)] - C1).norm() < 1e-14);
        assert!((v[(2, 1)] - C1).norm() < 1e-14);
        assert!((v[(0, 2)] - C1).norm() < 1e-14);
    }

    #[test]
    fn eigh_pauli_x() {
        let (vals, v) = eigh(&HermitianMatrix::new(pauli_x()).unwrap()).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-14 && (vals[1] - 1.0).abs() < 1e-14);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        // sign convention: largest component positive; ties go to the first row
        assert!((v[(0, 0)].re - r).abs() < 1e-12 && (v[(1, 0)].re + r).abs() < 1e-12);
        assert!((v[(0, 1)].re - r).abs() < 1e-12 && (v[(1, 1)].re - r).abs() < 1e-12);
    }

    #[test]
    fn eigh_random_reconstructs() {
        let h = random_herm(8, 11);
        let (vals, v) = eigh(&h).unwrap();
        let err = (reconstruct(&vals, &v) - h.as_matrix()).norm();
        assert!(err <= 1e-10 * h.frobenius().max(1.0), "residual {err}");
        let unit = (v.adjoint() * &v - ComplexMatrix::identity(8, 8)).norm();
        assert!(unit < 1e-10);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn inv_sqrt_examples() {
        let i3 = HermitianMatrix::identity(3);
        assert!((psd_inv_sqrt(&i3, PSD_FLOOR).unwrap().as_matrix() - i3.as_matrix()).norm() < 1e-14);
        let d = psd_inv_sqrt(&HermitianMatrix::diag(&[4.0, 1.0]), PSD_FLOOR).unwrap();
        assert!((d.as_matrix()[(0, 0)].re - 0.5).abs() < 1e-14);
        assert!((d.as_matrix()[(1, 1)].re - 1.0).abs() < 1e-14);
        let rho = HermitianMatrix::identity(5).scale(0.2);
        let r = psd_inv_sqrt(&rho, PSD_FLOOR).unwrap();
        let want = HermitianMatrix::identity(5).scale(5f64.sqrt());
        assert!((r.as_matrix() - want.as_matrix()).norm() < 1e-12);
    }

    #[test]
    fn inv_sqrt_rejects_negative() {
        match psd_inv_sqrt(&HermitianMatrix::diag(&[1.0, -0.5]), PSD_FLOOR) {
            Err(Error::NotPsd { value, .. }) => assert!((value + 0.5).abs() < 1e-14),
            other => panic!("expected NotPsd, got {other:?}"),
        }
    }

    #[test]
    fn norms() {
        let d = HermitianMatrix::diag(&[1.0, -2.0]);
        assert!((trace_norm(&d).unwrap() - 3.0).abs() < 1e-14);
        assert!((op_norm(&d).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(trace_norm(&HermitianMatrix::zeros(3)).unwrap(), 0.0);
        let zi = HermitianMatrix::new(kron(&pauli_z(), &ComplexMatrix::identity(2, 2))).unwrap();
        assert!((trace_norm(&zi).unwrap() - 4.0).abs() < 1e-13);
        assert!((op_norm(&HermitianMatrix::identity(4)).unwrap() - 1.0).abs() < 1e-14);
        let p = HermitianMatrix::from_real(&RealMatrix::from_element(2, 2, 0.5)).scale(3.0);
        assert!((op_norm(&p).unwrap() - 3.0).abs() < 1e-13);
    }

    #[test]
    fn frechet_trivial_cases() {
        let n = 3;
        let z = ComplexMatrix::zeros(n, n);
        let e = random_herm(n, 3).into_matrix();
        let (ex, de) = frechet_expm(&z, &e).unwrap();
        assert!((ex - ComplexMatrix::identity(n, n)).norm() < 1e-14);
        assert!((de - &e).norm() < 1e-13);
        let l = HermitianMatrix::diag(&[0.3, -0.7]).into_matrix();
        let (_, de) = frechet_expm(&l, &ComplexMatrix::zeros(2, 2)).unwrap();
        assert!(de.norm() < 1e-15);
    }

    #[test]
    fn frechet_commuting_matches_product() {
        let l = HermitianMatrix::diag(&[0.3, -0.7, 0.1]).into_matrix();
        let e = HermitianMatrix::diag(&[1.0, 0.5, -2.0]).into_matrix();
        let (ex, de) = frechet_expm(&l, &e).unwrap();
        let want = &ex * &e;
        assert!((&de - &want).norm() < 1e-12 * want.norm());
        let h = 1e-6;
        let fd = (expm(&(&l + &e * Complex64::new(h, 0.0))).unwrap()
            - expm(&(&l - &e * Complex64::new(h, 0.0))).unwrap())
            / Complex64::new(2.0 * h, 0.0);
        assert!((&de - fd).norm() < 1e-6 * de.norm());
    }

    #[test]
    fn frechet_rejects_mismatch() {
        let a = ComplexMatrix::zeros(2, 2);
        let b = ComplexMatrix::zeros(3, 3);
        assert!(matches!(frechet_expm(&a, &b), Err(Error::Dimension(_))));
    }

    #[test]
    fn embed_examples() {
        let r = RealMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, -1.0]);
        let e = herm_to_real_embed(&HermitianMatrix::from_real(&r));
        assert_eq!(e.view((0, 0), (2, 2)), r.view((0, 0), (2, 2)));
        assert_eq!(e.view((2, 2), (2, 2)), r.view((0, 0), (2, 2)));
        assert!(e.view((0, 2), (2, 2)).iter().all(|x| *x == 0.0));

        let y = herm_to_real_embed(&HermitianMatrix::new(pauli_y()).unwrap());
        let mut ev: Vec<f64> = y.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip([-1.0, -1.0, 1.0, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(herm_to_real_embed(&HermitianMatrix::identity(3)), RealMatrix::identity(6, 6));
    }

    #[test]
    fn embed_round_trip() {
        let h = random_herm(5, 9);
        let back = real_embed_to_herm(&herm_to_real_embed(&h)).unwrap();
        assert!((back.as_matrix() - h.as_matrix()).norm() < 1e-14);
    }

    #[test]
    fn json_round_trip() {
        let h = random_herm(3, 5);
        let s = serde_json::to_string(&h).unwrap();
        assert!(s.contains("\"dim\":3"));
        let back: HermitianMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, h);
        let bad = r#"{"dim":2,"entries":[[1,0],[0,1],[0,0]]}"#;
        assert!(serde_json::from_str::<HermitianMatrix>(bad).is_err());
        let nonherm = r#"{"dim":2,"entries":[[1,0],[1,0],[0,0],[1,0]]}"#;
        assert!(serde_json::from_str::<HermitianMatrix>(nonherm).is_err());
    }

    #[test]
    fn new_validates() {
        let mut m = random_herm(3, 1).into_matrix();
        m[(0, 1)] += Complex64::new(0.1, 0.0);
        assert!(matches!(HermitianMatrix::new(m), Err(Error::NotHermitian(_))));
        let mut m = ComplexMatrix::zeros(2, 2);
        m[(0, 0)] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(HermitianMatrix::new(m), Err(Error::NonFinite)));
        let mut m = ComplexMatrix::identity(2, 2);
        m[(0, 0)] = Complex64::new(1.0, 1e-13);
        let h = HermitianMatrix::new(m).unwrap();
        assert_eq!(h.as_matrix()[(0, 0)].im, 0.0);
    }
}
