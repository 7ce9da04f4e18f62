//! SLD, Holevo-Nagaoka and Nagaoka-Hayashi bounds as SDPs over one
//! Hermitian variable on `R_C ⊗ H`.
//!
//! The variable `X` has dimension `(d+1) n` and sub-blocks `X^{k,j}`,
//! `k, j ∈ 0..=d`, with `X^{k,j}[a, b] = X[k n + a, j n + b]`. All three
//! programs share the objective `tr((G ⊗ ρ) X)` (with `G` padded by a zero
//! row and column for index 0) and the constraints
//!
//! * `X^{0,0} = I`,
//! * `Re tr(D_j X^{i,0}) = δ_ij`,
//!
//! and differ only in which blocks are forced to be Hermitian:
//!
//! | program | extra structure |
//! |---------|-----------------|
//! | P4 (SLD) | `X^{k,0}` Hermitian |
//! | P5 (HN)  | P4 and `Im tr(ρ X^{i,j}) = 0` for `i < j` |
//! | P2 (NH)  | every `X^{k,j}` Hermitian |

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrixcore::{kron, to_complex, HermitianMatrix, RealMatrix};
use crate::model::{sld_bound, QuantumModel};
use crate::sdp::{
    solve_unchecked, Block, BlockKind, BlockTerm, Constraint, SdpProblem, SdpSolution, SolveOptions, SolveStatus,
    SparseEntry, Term,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConicVariableLayout {
    pub n: usize,
    pub d: usize,
}

impl ConicVariableLayout {
    pub fn new(n: usize, d: usize) -> Self {
        Self { n, d }
    }

    pub fn dim(&self) -> usize {
        (self.d + 1) * self.n
    }

    /// Row or column of entry `a` inside sub-block index `k`.
    pub fn index(&self, k: usize, a: usize) -> usize {
        k * self.n + a
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundKind {
    /// SLD bound, program P4.
    Sld,
    /// Holevo-Nagaoka bound, program P5.
    Hn,
    /// Nagaoka-Hayashi bound, program P2.
    Nh,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveDiag {
    pub status: SolveStatus,
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub constraints: usize,
}

impl SolveDiag {
    pub fn from_solution(sol: &SdpSolution, constraints: usize) -> Self {
        Self {
            status: sol.status,
            gap: sol.gap,
            primal_residual: sol.primal_residual,
            dual_residual: sol.dual_residual,
            iterations: sol.iterations,
            constraints,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundSolve {
    pub value: f64,
    pub diag: SolveDiag,
}

/// A linear functional `X ↦ Σ c · X[row, col]` on a Hermitian matrix.
type Functional = Vec<(usize, usize, Complex64)>;

/// Sparse Hermitian term `T` with `Re tr(T X) = Re f(X)`. On a real block
/// only real coefficients survive.
fn re_part(f: &Functional, real: bool) -> Vec<SparseEntry> {
    let mut acc: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
    for &(r, c, v) in f {
        // Re(v X[r, c]) is represented by v/2 at (c, r) plus its conjugate
        let (key, val) = if r == c {
            ((r, r), Complex64::new(v.re, 0.0))
        } else if c < r {
            ((c, r), v * 0.5)
        } else {
            ((r, c), v.conj() * 0.5)
        };
        *acc.entry(key).or_default() += val;
    }
    acc.into_iter()
        .map(|((row, col), mut value)| {
            if real {
                value.im = 0.0;
            }
            SparseEntry { row, col, value }
        })
        .filter(|e| e.value.norm() > 0.0)
        .collect()
}

fn im_part(f: &Functional, real: bool) -> Vec<SparseEntry> {
    let rotated: Functional = f.iter().map(|&(r, c, v)| (r, c, v * Complex64::new(0.0, -1.0))).collect();
    re_part(&rotated, real)
}

/// Constraints making sub-block `X^{k,j}` (`k != j`) Hermitian.
fn hermitian_block(lay: &ConicVariableLayout, k: usize, j: usize) -> Vec<Functional> {
    let one = Complex64::new(1.0, 0.0);
    let mut out = Vec::new();
    for a in 0..lay.n {
        for b in a..lay.n {
            // X^{kj}[a,b] - conj(X^{kj}[b,a]) = 0
            let p = (lay.index(k, a), lay.index(j, b));
            let q = (lay.index(k, b), lay.index(j, a));
            if a == b {
                out.push(vec![(p.0, p.1, -Complex64::i())]);
            } else {
                out.push(vec![(p.0, p.1, one), (q.0, q.1, -one)]);
                out.push(vec![(p.0, p.1, -Complex64::i()), (q.0, q.1, -Complex64::i())]);
            }
        }
    }
    out
}

/// Builds the SDP for one of the three bounds, with redundant rows removed.
pub fn build_problem(m: &QuantumModel, kind: BoundKind) -> Result<SdpProblem> {
    let n = m.n();
    let d = m.d();
    let lay = ConicVariableLayout::new(n, d);
    let real = m.is_real();
    let one = Complex64::new(1.0, 0.0);
    let mut rows: Vec<(Vec<SparseEntry>, f64)> = Vec::new();
    let mut push = |e: Vec<SparseEntry>, b: f64| {
        if !e.is_empty() {
            rows.push((e, b));
        }
    };

    for a in 0..n {
        for b in a..n {
            let f = vec![(a, b, one)];
            push(re_part(&f, real), if a == b { 1.0 } else { 0.0 });
            if a != b {
                push(im_part(&f, real), 0.0);
            }
        }
    }
    for i in 1..=d {
        for (j, dj) in m.derivs().iter().enumerate() {
            // tr(D_j X^{i0}) = Σ D_j[b, a] X^{i0}[a, b]
            let dm = dj.as_matrix();
            let mut f = Functional::new();
            for a in 0..n {
                for b in 0..n {
                    if dm[(b, a)] != Complex64::new(0.0, 0.0) {
                        f.push((lay.index(i, a), lay.index(0, b), dm[(b, a)]));
                    }
                }
            }
            push(re_part(&f, real), if i == j + 1 { 1.0 } else { 0.0 });
        }
    }
    let pairs: Vec<(usize, usize)> = match kind {
        BoundKind::Sld | BoundKind::Hn => (1..=d).map(|k| (k, 0)).collect(),
        BoundKind::Nh => (0..=d).flat_map(|k| (k + 1..=d).map(move |j| (j, k))).collect(),
    };
    for (k, j) in pairs {
        for f in hermitian_block(&lay, k, j) {
            push(re_part(&f, real), 0.0);
        }
    }
    if kind == BoundKind::Hn {
        let rho = m.rho().as_matrix();
        for i in 1..=d {
            for j in i + 1..=d {
                // tr(ρ X^{ij}) = Σ ρ[b, a] X^{ij}[a, b]
                let mut f = Functional::new();
                for a in 0..n {
                    for b in 0..n {
                        f.push((lay.index(i, a), lay.index(j, b), rho[(b, a)]));
                    }
                }
                push(im_part(&f, real), 0.0);
            }
        }
    }

    let mut glift = RealMatrix::zeros(d + 1, d + 1);
    glift.view_mut((1, 1), (d, d)).copy_from(m.weight());
    let c = HermitianMatrix::symmetrize(kron(&to_complex(&glift), m.rho().as_matrix()));
    let mut p = SdpProblem {
        blocks: vec![Block {
            dim: lay.dim(),
            kind: if real { BlockKind::Real } else { BlockKind::Complex },
        }],
        objective: vec![BlockTerm {
            block: 0,
            term: Term::dense(Arc::new(c), 1.0),
        }],
        constraints: rows
            .into_iter()
            .map(|(e, b)| Constraint {
                terms: vec![BlockTerm {
                    block: 0,
                    term: Term::Sparse(e),
                }],
                b,
            })
            .collect(),
        maximize_dual_report: false,
    };
    p.remove_redundant().map_err(model_defect)?;
    Ok(p)
}

fn model_defect(e: Error) -> Error {
    match e {
        Error::Infeasible(s) => Error::InvalidModel(format!("bound program is infeasible ({s}); the model is defective")),
        other => other,
    }
}

pub fn solve_bound(m: &QuantumModel, kind: BoundKind, opts: &SolveOptions) -> Result<BoundSolve> {
    let p = build_problem(m, kind)?;
    let sol = solve_unchecked(&p, opts)?;
    let diag = SolveDiag::from_solution(&sol, p.num_constraints());
    match sol.status {
        SolveStatus::Optimal => Ok(BoundSolve {
            value: sol.value(),
            diag,
        }),
        SolveStatus::Infeasible => Err(Error::InvalidModel(format!(
            "{kind:?} bound program reported infeasible; the model is defective"
        ))),
        s => Err(Error::Solver(format!(
            "{kind:?} bound: solver stopped with {s:?} after {} iterations (gap {:e}, residuals {:e}/{:e})",
            sol.iterations, sol.gap, sol.primal_residual, sol.dual_residual
        ))),
    }
}

pub fn solve_p4(m: &QuantumModel) -> Result<f64> {
    Ok(solve_bound(m, BoundKind::Sld, &SolveOptions::default())?.value)
}

pub fn solve_p5(m: &QuantumModel) -> Result<f64> {
    Ok(solve_bound(m, BoundKind::Hn, &SolveOptions::default())?.value)
}

pub fn solve_p2(m: &QuantumModel) -> Result<f64> {
    Ok(solve_bound(m, BoundKind::Nh, &SolveOptions::default())?.value)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    /// P4 optimum.
    pub sld: f64,
    pub hn: f64,
    pub nh: f64,
    /// `tr(G J⁻¹)` from the closed form.
    pub sld_closed_form: f64,
    pub sld_diag: SolveDiag,
    pub hn_diag: SolveDiag,
    pub nh_diag: SolveDiag,
}

impl BoundReport {
    /// `nh ≥ hn ≥ sld` up to `tol · max(1, |nh|)`.
    pub fn is_ordered(&self, tol: f64) -> bool {
        let t = tol * self.nh.abs().max(1.0);
        self.nh >= self.hn - t && self.hn >= self.sld - t
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// All three bounds, solved concurrently.
pub fn bound_report(m: &QuantumModel, opts: &SolveOptions) -> Result<BoundReport> {
    let (p4, (p5, p2)) = rayon::join(
        || solve_bound(m, BoundKind::Sld, opts),
        || {
            rayon::join(
                || solve_bound(m, BoundKind::Hn, opts),
                || solve_bound(m, BoundKind::Nh, opts),
            )
        },
    );
    let (p4, p5, p2) = (p4?, p5?, p2?);
    Ok(BoundReport {
        sld: p4.value,
        hn: p5.value,
        nh: p2.value,
        sld_closed_form: sld_bound(m)?,
        sld_diag: p4.diag,
        hn_diag: p5.diag,
        nh_diag: p2.diag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrixcore::{pauli_x, pauli_z, BlockDiagMatrix};
    use crate::model::make_random_model;

    #[test]
    fn layout_indexing() {
        let l = ConicVariableLayout::new(3, 2);
        assert_eq!(l.dim(), 9);
        assert_eq!(l.index(0, 2), 2);
        assert_eq!(l.index(2, 1), 7);
    }

    fn random_herm(seed: u64, n: usize) -> HermitianMatrix {
        let mut s = seed;
        let mut next = || {
            s = crate::rng::mix64(s);
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let m = crate::matrixcore::ComplexMatrix::from_fn(n, n, |_, _| Complex64::new(next(), next()));
        HermitianMatrix::symmetrize(m)
    }

    fn eval(entries: &[SparseEntry], x: &HermitianMatrix) -> f64 {
        crate::sdp::term_inner(&Term::Sparse(entries.to_vec()), x)
    }

    #[test]
    fn functional_parts_match_direct_evaluation() {
        let x = random_herm(5, 4);
        let f: Functional = vec![
            (0, 1, Complex64::new(0.3, -1.2)),
            (2, 2, Complex64::new(-0.7, 0.4)),
            (3, 0, Complex64::new(1.5, 0.25)),
            (1, 0, Complex64::new(0.1, 0.0)),
        ];
        let direct: Complex64 = f.iter().map(|&(r, c, v)| v * x.as_matrix()[(r, c)]).sum();
        assert!((eval(&re_part(&f, false), &x) - direct.re).abs() < 1e-14);
        assert!((eval(&im_part(&f, false), &x) - direct.im).abs() < 1e-14);
    }

    #[test]
    fn hermitian_block_constraints_vanish_exactly_on_hermitian_blocks() {
        let lay = ConicVariableLayout::new(3, 2);
        // X^{21} Hermitian and X^{10} not
        let mut x = random_herm(9, lay.dim()).into_matrix();
        let h = random_herm(10, 3).into_matrix();
        for a in 0..3 {
            for b in 0..3 {
                x[(lay.index(2, a), lay.index(1, b))] = h[(a, b)];
                x[(lay.index(1, b), lay.index(2, a))] = h[(a, b)].conj();
            }
        }
        let x = HermitianMatrix::new(x).unwrap();
        let worst = |k, j| {
            hermitian_block(&lay, k, j)
                .iter()
                .map(|f| eval(&re_part(f, false), &x).abs())
                .fold(0.0, f64::max)
        };
        assert!(worst(2, 1) < 1e-14);
        assert!(worst(1, 0) > 1e-3);
        assert_eq!(hermitian_block(&lay, 2, 1).len(), 9);
    }

    #[test]
    fn sld_identity_structure_is_feasible() {
        // X = |v><v| with blocks (I, Σ L_j J^{-1}_{ji}, ...) is feasible for P4,
        // and for P5 when the model is real; X^{ij} = X_i X_j is not Hermitian
        let m = make_random_model(3, 2, 4).unwrap();
        let sld = crate::model::compute_sld(&m).unwrap();
        let jinv = sld.j.clone().try_inverse().unwrap();
        let n = 3;
        let lay = ConicVariableLayout::new(n, 2);
        let mut col = crate::matrixcore::ComplexMatrix::zeros(lay.dim(), n);
        col.view_mut((0, 0), (n, n)).fill_with_identity();
        for i in 0..2 {
            let mut xi = crate::matrixcore::ComplexMatrix::zeros(n, n);
            for j in 0..2 {
                xi += sld.l[j].as_matrix() * Complex64::new(jinv[(j, i)], 0.0);
            }
            col.view_mut((lay.index(i + 1, 0), 0), (n, n)).copy_from(&xi);
        }
        let x = HermitianMatrix::symmetrize(&col * col.adjoint());
        for kind in [BoundKind::Sld, BoundKind::Hn] {
            let p = build_problem(&m, kind).unwrap();
            let xb = BlockDiagMatrix::new(vec![x.clone()]);
            let r = p.apply(&xb);
            for (ri, c) in r.iter().zip(&p.constraints) {
                assert!((ri - c.b).abs() < 1e-10, "{kind:?}");
            }
            let obj = p.objective_value(&xb);
            assert!((obj - crate::model::sld_bound(&m).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn one_parameter_qubit() {
        let m = QuantumModel::new(
            HermitianMatrix::identity(2).scale(0.5),
            vec![HermitianMatrix::new(pauli_z()).unwrap().scale(0.5)],
            RealMatrix::identity(1, 1),
        )
        .unwrap();
        for v in [solve_p4(&m).unwrap(), solve_p5(&m).unwrap(), solve_p2(&m).unwrap()] {
            assert!((v - 1.0).abs() < 1e-6, "{v}");
        }
    }

    #[test]
    fn complex_one_parameter_model() {
        let rho = HermitianMatrix::diag(&[0.7, 0.3]);
        let m = QuantumModel::new(rho, vec![HermitianMatrix::new(pauli_x()).unwrap().scale(0.2)], RealMatrix::identity(1, 1))
            .unwrap();
        let u = crate::matrixcore::expm(&(crate::matrixcore::pauli_y() * Complex64::new(0.0, 0.4))).unwrap();
        let u = u * crate::matrixcore::expm(&(pauli_z() * Complex64::new(0.0, 0.9))).unwrap();
        let mc = m.conjugate_by(&u).unwrap();
        assert!(!mc.is_real());
        let want = sld_bound(&m).unwrap();
        let got = solve_p2(&mc).unwrap();
        assert!((got - want).abs() < 1e-6 * want, "{got} {want}");
    }
}
