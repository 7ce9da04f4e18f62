//! `C₁`, `C₂(a)`, the operator `Π(a, S)` and the grid search for `κ`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrixcore::{eigh, eigh_real, kron, op_norm, psd_inv_sqrt, to_complex, ComplexMatrix, HermitianMatrix, RealMatrix, PSD_FLOOR};
use crate::model::QuantumModel;

/// `Π(a, S) = G ⊗ ρ - ½ Σ a_ij (|0⟩⟨i| + |i⟩⟨0|) ⊗ D_j - |0⟩⟨0| ⊗ S`.
pub fn pi_operator(m: &QuantumModel, a: &RealMatrix, s: &HermitianMatrix) -> Result<HermitianMatrix> {
    let (n, d) = (m.n(), m.d());
    if a.nrows() != d || a.ncols() != d || s.dim() != n {
        return Err(Error::Dimension(format!("certificate shapes do not match n = {n}, d = {d}")));
    }
    let mut glift = RealMatrix::zeros(d + 1, d + 1);
    glift.view_mut((1, 1), (d, d)).copy_from(m.weight());
    let mut out = kron(&to_complex(&glift), m.rho().as_matrix());
    for i in 0..d {
        let mut acc = ComplexMatrix::zeros(n, n);
        for (j, dj) in m.derivs().iter().enumerate() {
            acc += dj.as_matrix() * Complex64::new(0.5 * a[(i, j)], 0.0);
        }
        let r = (i + 1) * n;
        let mut top = out.view_mut((0, r), (n, n));
        top -= &acc;
        let mut left = out.view_mut((r, 0), (n, n));
        left -= &acc;
    }
    let mut corner = out.view_mut((0, 0), (n, n));
    corner -= s.as_matrix();
    Ok(HermitianMatrix::symmetrize(out))
}

fn whitened_derivs(m: &QuantumModel) -> Result<Vec<ComplexMatrix>> {
    let r = psd_inv_sqrt(m.rho(), PSD_FLOOR).map_err(|_| Error::InvalidModel("rho is rank-deficient".into()))?;
    Ok(m.derivs()
        .iter()
        .map(|d| r.as_matrix() * d.as_matrix() * r.as_matrix())
        .collect())
}

/// `C₂(a) = ½ ‖Σ_i (Σ_j a_ij A_j)²‖^{1/2}` with `A_j = ρ^{-1/2} D_j ρ^{-1/2}`.
pub fn compute_c2(m: &QuantumModel, a: &RealMatrix) -> Result<f64> {
    let d = m.d();
    if a.nrows() != d || a.ncols() != d {
        return Err(Error::Dimension(format!("a must be {d}x{d}")));
    }
    let aw = whitened_derivs(m)?;
    let n = m.n();
    let mut sum = ComplexMatrix::zeros(n, n);
    for i in 0..d {
        let mut b = ComplexMatrix::zeros(n, n);
        for (j, aj) in aw.iter().enumerate() {
            b += aj * Complex64::new(a[(i, j)], 0.0);
        }
        sum += &b * &b;
    }
    Ok(0.5 * op_norm(&HermitianMatrix::symmetrize(sum))?.sqrt())
}

/// `C₁ = C₂(I)`.
pub fn compute_c1(m: &QuantumModel) -> Result<f64> {
    compute_c2(m, &RealMatrix::identity(m.d(), m.d()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KappaMode {
    /// Full tensor grid with this many points per axis.
    Grid(usize),
    /// Halton points in the cube, rejected outside the ball.
    Sampling(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaOptions {
    /// `None` picks the default grid for the parameter count.
    pub mode: Option<KappaMode>,
    /// Local descent from the best grid or sample points. `None` refines
    /// only for `d ≥ 3`.
    pub refine: Option<bool>,
}

impl Default for KappaOptions {
    fn default() -> Self {
        Self { mode: None, refine: None }
    }
}

impl KappaOptions {
    pub fn grid(points: usize) -> Self {
        Self {
            mode: Some(KappaMode::Grid(points)),
            refine: None,
        }
    }
}

pub fn default_grid(d: usize) -> Option<usize> {
    match d {
        1 => Some(100_000),
        2 => Some(1000),
        3 => Some(120),
        _ => None,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KappaReport {
    pub kappa_raw: f64,
    /// `max(κ_raw, 0)`.
    pub kappa: f64,
    /// Upper bound on the exact `κ` over the ball; grid mode only.
    pub kappa_certified: Option<f64>,
    pub argmin: Vec<f64>,
    pub c2: f64,
    pub mode: KappaMode,
    pub points_evaluated: usize,
    pub refined: bool,
}

/// Sub-blocks of `Π` combined so that `M(y) = Σ w_k w_j Π^{kj}` with `w = (1, y)`
/// is `q0 + Σ_k y_k lin_k + Σ_{k≤j} y_k y_j quad_kj`.
enum Quadratic {
    Real {
        q0: RealMatrix,
        lin: Vec<RealMatrix>,
        quad: Vec<(usize, usize, RealMatrix)>,
    },
    Complex {
        q0: ComplexMatrix,
        lin: Vec<ComplexMatrix>,
        quad: Vec<(usize, usize, ComplexMatrix)>,
    },
}

fn block(p: &ComplexMatrix, n: usize, k: usize, j: usize) -> ComplexMatrix {
    p.view((k * n, j * n), (n, n)).into_owned()
}

impl Quadratic {
    fn new(pi: &HermitianMatrix, n: usize, d: usize) -> Self {
        let p = pi.as_matrix();
        let q0 = block(p, n, 0, 0);
        let lin: Vec<ComplexMatrix> = (1..=d).map(|k| block(p, n, k, 0) + block(p, n, 0, k)).collect();
        let mut quad = Vec::new();
        for k in 1..=d {
            quad.push((k - 1, k - 1, block(p, n, k, k)));
            for j in k + 1..=d {
                quad.push((k - 1, j - 1, block(p, n, k, j) + block(p, n, j, k)));
            }
        }
        if pi.is_real(0.0) {
            let re = |m: &ComplexMatrix| m.map(|z| z.re);
            Quadratic::Real {
                q0: re(&q0),
                lin: lin.iter().map(re).collect(),
                quad: quad.iter().map(|(a, b, m)| (*a, *b, re(m))).collect(),
            }
        } else {
            Quadratic::Complex { q0, lin, quad }
        }
    }

    fn eval_real(q0: &RealMatrix, lin: &[RealMatrix], quad: &[(usize, usize, RealMatrix)], y: &[f64]) -> RealMatrix {
        let mut m = q0.clone();
        for (k, l) in lin.iter().enumerate() {
            m += l * y[k];
        }
        for (k, j, q) in quad {
            m += q * (y[*k] * y[*j]);
        }
        m
    }

    fn eval_complex(
        q0: &ComplexMatrix,
        lin: &[ComplexMatrix],
        quad: &[(usize, usize, ComplexMatrix)],
        y: &[f64],
    ) -> ComplexMatrix {
        let mut m = q0.clone();
        for (k, l) in lin.iter().enumerate() {
            m += l * Complex64::new(y[k], 0.0);
        }
        for (k, j, q) in quad {
            m += q * Complex64::new(y[*k] * y[*j], 0.0);
        }
        m
    }

    fn lambda_min(&self, y: &[f64]) -> f64 {
        match self {
            Quadratic::Real { q0, lin, quad } => Self::eval_real(q0, lin, quad, y).symmetric_eigenvalues().min(),
            Quadratic::Complex { q0, lin, quad } => {
                let m = Self::eval_complex(q0, lin, quad, y);
                let m = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
                m.symmetric_eigenvalues().min()
            }
        }
    }

    /// `λ_min(M(y))` and its gradient `v† ∂M/∂y_k v` for the lowest eigenvector.
    fn lambda_min_grad(&self, y: &[f64]) -> Result<(f64, Vec<f64>)> {
        let d = y.len();
        match self {
            Quadratic::Real { q0, lin, quad } => {
                let (vals, vecs) = eigh_real(&Self::eval_real(q0, lin, quad, y))?;
                let v = vecs.column(0);
                let form = |m: &RealMatrix| (v.transpose() * m * v)[(0, 0)];
                let mut g: Vec<f64> = lin.iter().map(form).collect();
                for (k, j, q) in quad {
                    let f = form(q);
                    g[*k] += f * y[*j];
                    g[*j] += f * y[*k];
                }
                debug_assert_eq!(g.len(), d);
                Ok((vals[0], g))
            }
            Quadratic::Complex { q0, lin, quad } => {
                let h = HermitianMatrix::symmetrize(Self::eval_complex(q0, lin, quad, y));
                let (vals, vecs) = eigh(&h)?;
                let v = vecs.column(0);
                let form = |m: &ComplexMatrix| (v.adjoint() * m * v)[(0, 0)].re;
                let mut g: Vec<f64> = lin.iter().map(form).collect();
                for (k, j, q) in quad {
                    let f = form(q);
                    g[*k] += f * y[*j];
                    g[*j] += f * y[*k];
                }
                Ok((vals[0], g))
            }
        }
    }
}

fn norm(y: &[f64]) -> f64 {
    y.iter().map(|t| t * t).sum::<f64>().sqrt()
}

fn project_ball(y: &mut [f64], c: f64) {
    let r = norm(y);
    if r > c && r > 0.0 {
        for t in y.iter_mut() {
            *t *= c / r;
        }
    }
}

/// Grid coordinate `-c + 2cj/(p-1)`; grids with `p` and `2p - 1` points nest.
fn grid_coord(c: f64, p: usize, j: usize) -> f64 {
    if p == 1 {
        0.0
    } else {
        -c + 2.0 * c * j as f64 / (p - 1) as f64
    }
}

fn radical_inverse(mut i: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

const PRIMES: [usize; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

#[derive(Clone, Copy)]
struct Best {
    value: f64,
    index: usize,
}

/// Searches `min λ_min(Σ w_k w_j Π^{kj})` over `w = (1, y)`, `‖y‖ ≤ c2`.
pub fn kappa_search(m: &QuantumModel, pi: &HermitianMatrix, c2: f64, opts: &KappaOptions) -> Result<KappaReport> {
    let (n, d) = (m.n(), m.d());
    if pi.dim() != (d + 1) * n {
        return Err(Error::Dimension("Π does not match the model".into()));
    }
    if !(c2 >= 0.0 && c2.is_finite()) {
        return Err(Error::InvalidParameter(format!("C2 must be finite and nonnegative, got {c2}")));
    }
    let mode = match opts.mode {
        Some(mode) => mode,
        None => KappaMode::Grid(default_grid(d).ok_or_else(|| {
            Error::InvalidParameter(format!(
                "a full κ grid is impractical for d = {d}; use sampling mode"
            ))
        })?),
    };
    let q = Quadratic::new(pi, n, d);
    let (best, points, candidates) = match mode {
        KappaMode::Grid(p) => {
            if p < 2 {
                return Err(Error::InvalidParameter("κ grid needs at least 2 points per axis".into()));
            }
            if d > 3 {
                return Err(Error::InvalidParameter(format!(
                    "a full κ grid is impractical for d = {d}; use sampling mode"
                )));
            }
            let total = p.checked_pow(d as u32).ok_or_else(|| Error::InvalidParameter("κ grid too large".into()))?;
            let point = |mut idx: usize| -> Vec<f64> {
                let mut y = vec![0.0; d];
                for t in y.iter_mut() {
                    *t = grid_coord(c2, p, idx % p);
                    idx /= p;
                }
                y
            };
            search(&q, total, c2, point)
        }
        KappaMode::Sampling(samples) => {
            if d > PRIMES.len() {
                return Err(Error::InvalidParameter(format!("sampling mode supports d <= {}", PRIMES.len())));
            }
            let point = |idx: usize| -> Vec<f64> {
                (0..d)
                    .map(|k| c2 * (2.0 * radical_inverse(idx + 1, PRIMES[k]) - 1.0))
                    .collect()
            };
            search(&q, samples, c2, point)
        }
    };
    let mut value = best.value;
    let mut argmin = best.argmin;
    let refine = opts.refine.unwrap_or(d >= 3);
    if refine && c2 > 0.0 {
        for start in candidates {
            let (v, y) = descend(&q, start, c2)?;
            if v < value {
                value = v;
                argmin = y;
            }
        }
    }
    let kappa_raw = -value;
    let kappa = kappa_raw.max(0.0);
    let kappa_certified = match mode {
        KappaMode::Grid(p) => {
            // every y in the ball has an in-ball grid point within r = h√d
            let h = if p > 1 { 2.0 * c2 / (p - 1) as f64 } else { 2.0 * c2 };
            let r = h * (d as f64).sqrt();
            let x_norm = op_norm(pi)?;
            let padding = x_norm * (1.0 + c2 * c2) * (4.0 * r).min(2.0);
            Some(kappa * (1.0 + r * (2.0 * c2 + r)) + padding)
        }
        KappaMode::Sampling(_) => None,
    };
    Ok(KappaReport {
        kappa_raw,
        kappa,
        kappa_certified,
        argmin,
        c2,
        mode,
        points_evaluated: points,
        refined: refine,
    })
}

struct Found {
    value: f64,
    argmin: Vec<f64>,
}

const DESCENT_STARTS: usize = 8;

fn search<F>(q: &Quadratic, total: usize, c2: f64, point: F) -> (Found, usize, Vec<Vec<f64>>)
where
    F: Fn(usize) -> Vec<f64> + Sync,
{
    const CHUNK: usize = 2048;
    let chunks = total.div_ceil(CHUNK);
    let tol = c2 * (1.0 + 1e-12);
    // per chunk: (evaluated, best few)
    let partial: Vec<(usize, Vec<Best>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut count = 0;
            let mut top: Vec<Best> = Vec::new();
            for idx in c * CHUNK..((c + 1) * CHUNK).min(total) {
                let y = point(idx);
                if norm(&y) > tol {
                    continue;
                }
                count += 1;
                let b = Best {
                    value: q.lambda_min(&y),
                    index: idx,
                };
                insert_top(&mut top, b);
            }
            (count, top)
        })
        .collect();
    let mut count = 0;
    let mut top: Vec<Best> = Vec::new();
    for (c, t) in partial {
        count += c;
        for b in t {
            insert_top(&mut top, b);
        }
    }
    let best = top.first().copied().unwrap_or(Best {
        value: q.lambda_min(&vec![0.0; point(0).len()]),
        index: usize::MAX,
    });
    let argmin = if best.index == usize::MAX {
        vec![0.0; point(0).len()]
    } else {
        point(best.index)
    };
    let starts = top.iter().map(|b| point(b.index)).collect();
    (
        Found {
            value: best.value,
            argmin,
        },
        count,
        starts,
    )
}

fn insert_top(top: &mut Vec<Best>, b: Best) {
    let pos = top
        .iter()
        .position(|t| b.value < t.value || (b.value == t.value && b.index < t.index))
        .unwrap_or(top.len());
    if pos < DESCENT_STARTS {
        top.insert(pos, b);
        top.truncate(DESCENT_STARTS);
    }
}

/// Projected gradient descent on `λ_min(M(y))` inside the ball, with backtracking.
fn descend(q: &Quadratic, mut y: Vec<f64>, c2: f64) -> Result<(f64, Vec<f64>)> {
    let (mut f, mut g) = q.lambda_min_grad(&y)?;
    let mut step = 0.1 * c2.max(1e-3);
    for _ in 0..200 {
        let gn = norm(&g);
        if gn < 1e-14 || step < 1e-14 * c2.max(1.0) {
            break;
        }
        let mut cand: Vec<f64> = y.iter().zip(&g).map(|(a, b)| a - step * b / gn).collect();
        project_ball(&mut cand, c2);
        let (fc, gc) = q.lambda_min_grad(&cand)?;
        if fc < f {
            y = cand;
            f = fc;
            g = gc;
            step *= 1.5;
        } else {
            step *= 0.5;
        }
    }
    Ok((f, y))
}
