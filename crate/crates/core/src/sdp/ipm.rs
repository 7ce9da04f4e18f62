//! HKM primal-dual path following with Mehrotra predictor-corrector steps.
//!
//! All work happens on real symmetric blocks. Constraint rows are normalized
//! to unit Frobenius norm before the solve; residuals and multipliers are
//! reported against the original data.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{Cholesky, DVector};
use rayon::prelude::*;

use super::{BlockKind, SdpProblem, SdpSolution, SolveOptions, SolveStatus, IterStats, Term};
use crate::matrixcore::{herm_to_real_embed, real_embed_to_herm, BlockDiagMatrix, HermitianMatrix, RealMatrix};

const CHUNK: usize = 64;
const STEP_FRACTION: f64 = 0.98;
const INDEPENDENCE_TOL: f64 = 1e-10;
const INFEASIBILITY_RATIO: f64 = 1e-8;

#[derive(Debug, Clone)]
enum RTerm {
    /// Symmetric entries `(r, c, v)`: `v` at `(r, c)` and `(c, r)`.
    Sparse(Vec<(usize, usize, f64)>),
    Dense(Arc<RealMatrix>, f64),
}

impl RTerm {
    fn norm_sq(&self) -> f64 {
        match self {
            RTerm::Sparse(es) => es
                .iter()
                .map(|&(r, c, v)| if r == c { v * v } else { 2.0 * v * v })
                .sum(),
            RTerm::Dense(m, s) => s * s * m.norm_squared(),
        }
    }

    fn scale(&mut self, t: f64) {
        match self {
            RTerm::Sparse(es) => es.iter_mut().for_each(|e| e.2 *= t),
            RTerm::Dense(_, s) => *s *= t,
        }
    }

    /// `tr(A Y)` for symmetric `Y`.
    fn inner(&self, y: &RealMatrix) -> f64 {
        match self {
            RTerm::Sparse(es) => es
                .iter()
                .map(|&(r, c, v)| if r == c { v * y[(r, r)] } else { 2.0 * v * y[(r, c)] })
                .sum(),
            RTerm::Dense(m, s) => s * m.dot(y),
        }
    }

    /// `tr(A P)` for arbitrary square `P`.
    fn inner_general(&self, p: &RealMatrix) -> f64 {
        match self {
            RTerm::Sparse(es) => es
                .iter()
                .map(|&(r, c, v)| if r == c { v * p[(r, r)] } else { v * (p[(r, c)] + p[(c, r)]) })
                .sum(),
            RTerm::Dense(m, s) => s * m.dot(p),
        }
    }

    fn add_to(&self, coef: f64, y: &mut RealMatrix) {
        match self {
            RTerm::Sparse(es) => {
                for &(r, c, v) in es {
                    y[(r, c)] += coef * v;
                    if r != c {
                        y[(c, r)] += coef * v;
                    }
                }
            }
            RTerm::Dense(m, s) => *y += m.as_ref() * (coef * s),
        }
    }

    /// `X A Zinv`.
    fn sandwich(&self, x: &RealMatrix, zinv: &RealMatrix) -> RealMatrix {
        let n = x.nrows();
        match self {
            RTerm::Sparse(es) => {
                let mut p = RealMatrix::zeros(n, n);
                for &(r, c, v) in es {
                    p.ger(v, &x.column(r), &zinv.column(c), 1.0);
                    if r != c {
                        p.ger(v, &x.column(c), &zinv.column(r), 1.0);
                    }
                }
                p
            }
            RTerm::Dense(m, s) => (x * m.as_ref()) * zinv * *s,
        }
    }
}

struct Prepared {
    dims: Vec<usize>,
    kinds: Vec<BlockKind>,
    c: Vec<RealMatrix>,
    /// Per block: `(constraint, term)` sorted by constraint, one term per pair.
    terms: Vec<Vec<(usize, RTerm)>>,
    b: Vec<f64>,
    row_scale: Vec<f64>,
    m: usize,
}

fn prepare(p: &SdpProblem) -> Prepared {
    let dims: Vec<usize> = p
        .blocks
        .iter()
        .map(|b| match b.kind {
            BlockKind::Real => b.dim,
            BlockKind::Complex => 2 * b.dim,
        })
        .collect();
    let kinds: Vec<BlockKind> = p.blocks.iter().map(|b| b.kind).collect();
    let mut cache: HashMap<(*const HermitianMatrix, BlockKind), Arc<RealMatrix>> = HashMap::new();
    let mut convert = |t: &Term, block: usize| -> RTerm {
        let kind = kinds[block];
        let n = p.blocks[block].dim;
        match t {
            Term::Dense { matrix, scale } => {
                let key = (Arc::as_ptr(matrix), kind);
                let m = cache
                    .entry(key)
                    .or_insert_with(|| {
                        Arc::new(match kind {
                            BlockKind::Real => matrix.real_part(),
                            BlockKind::Complex => herm_to_real_embed(matrix) * 0.5,
                        })
                    })
                    .clone();
                RTerm::Dense(m, *scale)
            }
            Term::Sparse(es) => {
                let mut acc: HashMap<(usize, usize), f64> = HashMap::new();
                let mut push = |r: usize, c: usize, v: f64| {
                    let key = if r <= c { (r, c) } else { (c, r) };
                    *acc.entry(key).or_insert(0.0) += v;
                };
                for e in es {
                    let (r, c, z) = if e.row <= e.col {
                        (e.row, e.col, e.value)
                    } else {
                        (e.col, e.row, e.value.conj())
                    };
                    match kind {
                        BlockKind::Real => push(r, c, z.re),
                        BlockKind::Complex => {
                            push(r, c, 0.5 * z.re);
                            push(r + n, c + n, 0.5 * z.re);
                            if r != c {
                                push(r, c + n, -0.5 * z.im);
                                push(c, r + n, 0.5 * z.im);
                            }
                        }
                    }
                }
                let mut v: Vec<(usize, usize, f64)> = acc
                    .into_iter()
                    .filter(|&(_, v)| v != 0.0)
                    .map(|((r, c), v)| (r, c, v))
                    .collect();
                v.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
                RTerm::Sparse(v)
            }
        }
    };

    let mut c: Vec<RealMatrix> = dims.iter().map(|&n| RealMatrix::zeros(n, n)).collect();
    for t in &p.objective {
        let rt = convert(&t.term, t.block);
        rt.add_to(1.0, &mut c[t.block]);
    }

    let m = p.constraints.len();
    let mut terms: Vec<Vec<(usize, RTerm)>> = vec![Vec::new(); dims.len()];
    for (ci, con) in p.constraints.iter().enumerate() {
        for t in &con.terms {
            let rt = convert(&t.term, t.block);
            terms[t.block].push((ci, rt));
        }
    }
    for (blk, list) in terms.iter_mut().enumerate() {
        list.sort_by_key(|(ci, _)| *ci);
        let mut merged: Vec<(usize, RTerm)> = Vec::with_capacity(list.len());
        for (ci, t) in list.drain(..) {
            match merged.last_mut() {
                Some((cj, prev)) if *cj == ci => {
                    *prev = merge_terms(prev, &t, dims[blk]);
                }
                _ => merged.push((ci, t)),
            }
        }
        *list = merged;
    }

    let mut norm_sq = vec![0.0; m];
    for list in &terms {
        for (ci, t) in list {
            norm_sq[*ci] += t.norm_sq();
        }
    }
    let row_scale: Vec<f64> = norm_sq
        .iter()
        .map(|&s| if s > 0.0 { s.sqrt() } else { 1.0 })
        .collect();
    for list in terms.iter_mut() {
        for (ci, t) in list.iter_mut() {
            t.scale(1.0 / row_scale[*ci]);
        }
    }
    let b = p
        .constraints
        .iter()
        .zip(&row_scale)
        .map(|(con, s)| con.b / s)
        .collect();
    Prepared {
        dims,
        kinds,
        c,
        terms,
        b,
        row_scale,
        m,
    }
}

fn merge_terms(a: &RTerm, b: &RTerm, n: usize) -> RTerm {
    match (a, b) {
        (RTerm::Sparse(x), RTerm::Sparse(y)) => {
            let mut acc: HashMap<(usize, usize), f64> = HashMap::new();
            for &(r, c, v) in x.iter().chain(y) {
                *acc.entry((r, c)).or_insert(0.0) += v;
            }
            let mut v: Vec<_> = acc.into_iter().map(|((r, c), v)| (r, c, v)).collect();
            v.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
            RTerm::Sparse(v)
        }
        _ => {
            let mut m = RealMatrix::zeros(n, n);
            a.add_to(1.0, &mut m);
            b.add_to(1.0, &mut m);
            RTerm::Dense(Arc::new(m), 1.0)
        }
    }
}

fn chunk_ranges(nblocks: usize) -> Vec<(usize, usize)> {
    (0..nblocks)
        .step_by(CHUNK)
        .map(|s| (s, (s + CHUNK).min(nblocks)))
        .collect()
}

/// `A(Y)` for symmetric blocks.
fn a_op(prep: &Prepared, y: &[RealMatrix]) -> Vec<f64> {
    let partials: Vec<Vec<f64>> = chunk_ranges(prep.dims.len())
        .into_par_iter()
        .map(|(s, e)| {
            let mut acc = vec![0.0; prep.m];
            for blk in s..e {
                for (ci, t) in &prep.terms[blk] {
                    acc[*ci] += t.inner(&y[blk]);
                }
            }
            acc
        })
        .collect();
    sum_partials(partials, prep.m)
}

fn sum_partials(partials: Vec<Vec<f64>>, m: usize) -> Vec<f64> {
    let mut out = vec![0.0; m];
    for p in partials {
        for (o, v) in out.iter_mut().zip(p) {
            *o += v;
        }
    }
    out
}

/// `Σ y_i A_i`.
fn at_op(prep: &Prepared, y: &[f64]) -> Vec<RealMatrix> {
    (0..prep.dims.len())
        .into_par_iter()
        .map(|blk| {
            let n = prep.dims[blk];
            let mut out = RealMatrix::zeros(n, n);
            for (ci, t) in &prep.terms[blk] {
                t.add_to(y[*ci], &mut out);
            }
            out
        })
        .collect()
}

/// `M_ij = tr(A_i X A_j Zinv)`.
fn schur(prep: &Prepared, x: &[RealMatrix], zinv: &[RealMatrix]) -> RealMatrix {
    let m = prep.m;
    let partials: Vec<Vec<f64>> = chunk_ranges(prep.dims.len())
        .into_par_iter()
        .map(|(s, e)| {
            let mut acc = vec![0.0; m * m];
            for blk in s..e {
                let ts = &prep.terms[blk];
                for (jj, (cj, tj)) in ts.iter().enumerate() {
                    let pj = tj.sandwich(&x[blk], &zinv[blk]);
                    for (ci, ti) in &ts[..=jj] {
                        acc[ci * m + cj] += ti.inner_general(&pj);
                    }
                }
            }
            acc
        })
        .collect();
    let upper = sum_partials(partials, m * m);
    let mut out = RealMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v = upper[i * m + j];
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

pub(super) struct IndependenceReport {
    pub kept: Vec<usize>,
    pub dependent: Vec<usize>,
    pub inconsistent: Vec<usize>,
}

/// Greedy in-order Gram-Schmidt on the normalized constraint rows.
pub(super) fn independence(p: &SdpProblem) -> IndependenceReport {
    let prep = prepare(p);
    let ident: Vec<RealMatrix> = prep.dims.iter().map(|&n| RealMatrix::identity(n, n)).collect();
    let gram = schur(&prep, &ident, &ident);
    let m = prep.m;
    // rows of the (partial) Cholesky factor of the Gram matrix over kept rows
    let mut kept: Vec<usize> = Vec::new();
    let mut l: Vec<Vec<f64>> = Vec::new();
    let mut dependent = Vec::new();
    let mut inconsistent = Vec::new();
    for i in 0..m {
        let k = kept.len();
        let mut li = vec![0.0; k];
        for a in 0..k {
            let mut s = gram[(kept[a], i)];
            for bb in 0..a {
                s -= l[a][bb] * li[bb];
            }
            li[a] = s / l[a][a];
        }
        let resid = gram[(i, i)] - li.iter().map(|v| v * v).sum::<f64>();
        if resid > INDEPENDENCE_TOL {
            li.push(resid.sqrt());
            l.push(li);
            kept.push(i);
        } else {
            dependent.push(i);
            // coefficients c with G_KK c = G_Ki, via L L^T c = G_Ki
            let mut c = li.clone();
            for a in (0..k).rev() {
                let mut s = c[a];
                for bb in (a + 1)..k {
                    s -= l[bb][a] * c[bb];
                }
                c[a] = s / l[a][a];
            }
            let pred: f64 = kept.iter().zip(&c).map(|(&j, cj)| cj * prep.b[j]).sum();
            let mag: f64 = 1.0 + prep.b[i].abs() + kept.iter().zip(&c).map(|(&j, cj)| (cj * prep.b[j]).abs()).sum::<f64>();
            if (pred - prep.b[i]).abs() > 1e-8 * mag {
                inconsistent.push(i);
            }
        }
    }
    IndependenceReport {
        kept,
        dependent,
        inconsistent,
    }
}

fn sym(m: RealMatrix) -> RealMatrix {
    let t = m.transpose();
    (m + t) * 0.5
}

fn dot_blocks(a: &[RealMatrix], b: &[RealMatrix]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn frob_blocks(a: &[RealMatrix]) -> f64 {
    a.iter().map(|x| x.norm_squared()).sum::<f64>().sqrt()
}

/// Largest `α ≤ cap` with `X + α dX ⪰ 0`, or `None` when `X` is not
/// numerically positive definite.
fn max_step(x: &[RealMatrix], dx: &[RealMatrix]) -> Option<f64> {
    let steps: Vec<Option<f64>> = x
        .par_iter()
        .zip(dx.par_iter())
        .map(|(xb, db)| {
            let chol = Cholesky::new(xb.clone())?;
            let l = chol.l();
            let w = l.solve_lower_triangular(db)?;
            let w = l.solve_lower_triangular(&w.transpose())?;
            let w = sym(w);
            let lmin = if w.nrows() == 0 {
                0.0
            } else {
                w.symmetric_eigenvalues().min()
            };
            Some(if lmin < 0.0 { -1.0 / lmin } else { f64::INFINITY })
        })
        .collect();
    let mut best = f64::INFINITY;
    for s in steps {
        best = best.min(s?);
    }
    Some(best)
}

enum SchurFactor {
    Chol(Cholesky<f64, nalgebra::Dyn>),
    Lu(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl SchurFactor {
    fn new(m: &RealMatrix) -> Option<Self> {
        if let Some(c) = Cholesky::new(m.clone()) {
            return Some(SchurFactor::Chol(c));
        }
        let dmax = m.diagonal().iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
        for reg in [1e-14, 1e-12, 1e-10] {
            let mut r = m.clone();
            for i in 0..r.nrows() {
                r[(i, i)] += reg * dmax;
            }
            if let Some(c) = Cholesky::new(r) {
                return Some(SchurFactor::Chol(c));
            }
        }
        let lu = m.clone().lu();
        if lu.is_invertible() {
            Some(SchurFactor::Lu(lu))
        } else {
            None
        }
    }

    fn solve(&self, m: &RealMatrix, rhs: &DVector<f64>) -> Option<DVector<f64>> {
        let raw = |r: &DVector<f64>| -> Option<DVector<f64>> {
            match self {
                SchurFactor::Chol(c) => Some(c.solve(r)),
                SchurFactor::Lu(l) => l.solve(r),
            }
        };
        let mut x = raw(rhs)?;
        let r = rhs - m * &x;
        x += raw(&r)?;
        if x.iter().all(|v| v.is_finite()) {
            Some(x)
        } else {
            None
        }
    }
}

struct Residuals {
    rp: Vec<f64>,
    rd: Vec<RealMatrix>,
    pobj: f64,
    dobj: f64,
    xz: f64,
    pinf: f64,
    dinf: f64,
    gap: f64,
}

pub(super) fn run(p: &SdpProblem, opts: &SolveOptions) -> SdpSolution {
    let prep = prepare(p);
    let nb = prep.dims.len();
    let ntot: usize = prep.dims.iter().sum();
    let c_norm = frob_blocks(&prep.c);
    let b_orig_norm = p.constraints.iter().map(|c| c.b * c.b).sum::<f64>().sqrt();
    let bmax = prep.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let tau = 1f64.max(c_norm).max(bmax);

    let mut x: Vec<RealMatrix> = prep.dims.iter().map(|&n| RealMatrix::identity(n, n) * tau).collect();
    let mut z = x.clone();
    let mut y = vec![0.0; prep.m];
    let bvec = DVector::from_vec(prep.b.clone());

    let residuals = |x: &[RealMatrix], y: &[f64], z: &[RealMatrix]| -> Residuals {
        let ax = a_op(&prep, x);
        let rp: Vec<f64> = prep.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let aty = at_op(&prep, y);
        let rd: Vec<RealMatrix> = (0..nb).map(|k| &prep.c[k] - &z[k] - &aty[k]).collect();
        let pobj = dot_blocks(&prep.c, x);
        let dobj: f64 = prep.b.iter().zip(y).map(|(b, y)| b * y).sum();
        let xz = dot_blocks(x, z);
        let rp_orig = rp
            .iter()
            .zip(&prep.row_scale)
            .map(|(r, s)| (r * s).powi(2))
            .sum::<f64>()
            .sqrt();
        Residuals {
            pinf: rp_orig / (1.0 + b_orig_norm),
            dinf: frob_blocks(&rd) / (1.0 + c_norm),
            gap: xz / (1.0 + pobj.abs() + dobj.abs()),
            rp,
            rd,
            pobj,
            dobj,
            xz,
        }
    };

    let mut history = Vec::new();
    let status;
    let mut stalled = 0usize;
    let mut iter = 0usize;
    let mut last = (1.0, 1.0);
    loop {
        let r = residuals(&x, &y, &z);
        let ytrp: f64 = y.iter().zip(&r.rp).map(|(a, b)| a * b).sum();
        let rdx = dot_blocks(&r.rd, &x);
        history.push(IterStats {
            iter,
            primal_obj: r.pobj,
            dual_obj: r.dobj,
            primal_residual: r.pinf,
            dual_residual: r.dinf,
            gap: r.gap,
            complementarity: r.xz,
            weak_duality_slack: r.pobj - r.dobj + ytrp - rdx,
            weak_duality_scale: 1f64.max(r.pobj.abs()).max(r.dobj.abs()).max(ytrp.abs()).max(rdx.abs()),
            step_primal: last.0,
            step_dual: last.1,
        });
        if r.gap <= opts.gap_tol && r.pinf <= opts.feas_tol && r.dinf <= opts.feas_tol {
            status = SolveStatus::Optimal;
            break;
        }
        // Farkas-type rays
        let aty_z = (0..nb)
            .map(|k| (&prep.c[k] - &r.rd[k]).norm_squared())
            .sum::<f64>()
            .sqrt();
        if r.dobj > 0.0 && aty_z <= INFEASIBILITY_RATIO * r.dobj && iter > 0 {
            status = SolveStatus::Infeasible;
            break;
        }
        let ax_norm = prep
            .b
            .iter()
            .zip(&r.rp)
            .map(|(b, rp)| (b - rp).powi(2))
            .sum::<f64>()
            .sqrt();
        if r.pobj < 0.0 && ax_norm <= INFEASIBILITY_RATIO * (-r.pobj) && iter > 0 {
            status = SolveStatus::Infeasible;
            break;
        }
        if iter >= opts.max_iter {
            status = SolveStatus::MaxIter;
            break;
        }

        let zinv: Option<Vec<RealMatrix>> = z
            .par_iter()
            .map(|zb| Cholesky::new(zb.clone()).map(|c| sym(c.inverse())))
            .collect();
        let Some(zinv) = zinv else {
            status = SolveStatus::NumericalFailure;
            break;
        };
        let m = schur(&prep, &x, &zinv);
        let Some(factor) = SchurFactor::new(&m) else {
            status = SolveStatus::NumericalFailure;
            break;
        };

        let xrdz: Vec<RealMatrix> = (0..nb)
            .into_par_iter()
            .map(|k| sym(&x[k] * &r.rd[k] * &zinv[k]))
            .collect();
        let rhs_base = &bvec + DVector::from_vec(a_op(&prep, &xrdz));

        let direction = |rhs: &DVector<f64>, extra: &(dyn Fn(usize) -> RealMatrix + Sync)| {
            let dy = factor.solve(&m, rhs)?;
            let atdy = at_op(&prep, dy.as_slice());
            let dz: Vec<RealMatrix> = (0..nb).map(|k| &r.rd[k] - &atdy[k]).collect();
            let dx: Vec<RealMatrix> = (0..nb)
                .into_par_iter()
                .map(|k| sym(extra(k) - &x[k] - &x[k] * &dz[k] * &zinv[k]))
                .collect();
            Some((dx, dy, dz))
        };

        let Some((dxa, _, dza)) = direction(&rhs_base, &|k| RealMatrix::zeros(prep.dims[k], prep.dims[k])) else {
            status = SolveStatus::NumericalFailure;
            break;
        };
        let (Some(ap), Some(ad)) = (max_step(&x, &dxa), max_step(&z, &dza)) else {
            status = SolveStatus::NumericalFailure;
            break;
        };
        let (ap, ad) = (ap.min(1.0), ad.min(1.0));
        let mu = r.xz / ntot as f64;
        let xa: Vec<RealMatrix> = (0..nb).map(|k| &x[k] + &dxa[k] * ap).collect();
        let za: Vec<RealMatrix> = (0..nb).map(|k| &z[k] + &dza[k] * ad).collect();
        let mu_aff = dot_blocks(&xa, &za) / ntot as f64;
        let sigma = if mu > 0.0 { (mu_aff / mu).clamp(0.0, 1.0).powi(3) } else { 0.0 };

        let corr: Vec<RealMatrix> = (0..nb)
            .into_par_iter()
            .map(|k| &dxa[k] * &dza[k] * &zinv[k])
            .collect();
        let corr_sym: Vec<RealMatrix> = corr.iter().map(|c| sym(c.clone())).collect();
        let azinv = a_op(&prep, &zinv);
        let acorr = a_op(&prep, &corr_sym);
        let rhs = &rhs_base - DVector::from_vec(azinv) * (sigma * mu) + DVector::from_vec(acorr);
        let extra = |k: usize| &zinv[k] * (sigma * mu) - &corr[k];
        let Some((dx, dy, dz)) = direction(&rhs, &extra) else {
            status = SolveStatus::NumericalFailure;
            break;
        };
        let (Some(ap), Some(ad)) = (max_step(&x, &dx), max_step(&z, &dz)) else {
            status = SolveStatus::NumericalFailure;
            break;
        };
        let ap = (STEP_FRACTION * ap).min(1.0);
        let ad = (STEP_FRACTION * ad).min(1.0);
        for k in 0..nb {
            x[k] += &dx[k] * ap;
            z[k] += &dz[k] * ad;
        }
        for (yi, di) in y.iter_mut().zip(dy.iter()) {
            *yi += ad * di;
        }
        last = (ap, ad);
        if ap.max(ad) < 1e-9 {
            stalled += 1;
            if stalled >= 5 {
                status = SolveStatus::NumericalFailure;
                iter += 1;
                break;
            }
        } else {
            stalled = 0;
        }
        iter += 1;
    }

    let fin = history.last().copied().expect("at least one iterate");
    let to_herm = |blocks: &[RealMatrix], factor: f64| -> BlockDiagMatrix {
        BlockDiagMatrix::new(
            blocks
                .iter()
                .zip(&prep.kinds)
                .map(|(b, kind)| match kind {
                    BlockKind::Real => HermitianMatrix::from_real(b),
                    BlockKind::Complex => real_embed_to_herm(&(b * factor)).expect("even-sized block"),
                })
                .collect(),
        )
    };
    SdpSolution {
        x: to_herm(&x, 1.0),
        y: y.iter().zip(&prep.row_scale).map(|(v, s)| v / s).collect(),
        z: to_herm(&z, 2.0),
        primal_obj: fin.primal_obj,
        dual_obj: fin.dual_obj,
        gap: fin.gap,
        primal_residual: fin.primal_residual,
        dual_residual: fin.dual_residual,
        status,
        iterations: iter,
        history,
        report_dual: p.maximize_dual_report,
    }
}
