//! Primal-dual interior-point solver for block-diagonal SDPs.
//!
//! Primal: minimize `<C, X>` subject to `<A_i, X> = b_i`, `X ⪰ 0` blockwise.
//! Dual: maximize `b·y` subject to `Z = C - Σ y_i A_i ⪰ 0`.
//!
//! Blocks are either real symmetric or complex Hermitian; complex blocks are
//! solved through the real embedding of [`crate::matrixcore`].

mod ipm;

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrixcore::{BlockDiagMatrix, HermitianMatrix, RealMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    Real,
    Complex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub dim: usize,
    pub kind: BlockKind,
}

/// One Hermitian entry: `value` at `(row, col)` and its conjugate at
/// `(col, row)`. Diagonal entries must be real.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparseEntry {
    pub row: usize,
    pub col: usize,
    pub value: Complex64,
}

impl SparseEntry {
    pub fn real(row: usize, col: usize, v: f64) -> Self {
        Self {
            row,
            col,
            value: Complex64::new(v, 0.0),
        }
    }
}

/// The restriction of a constraint (or of the objective) to one block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Term {
    Sparse(Vec<SparseEntry>),
    /// `scale * matrix`; the matrix is shared so that many blocks can reuse it.
    Dense {
        matrix: Arc<HermitianMatrix>,
        scale: f64,
    },
}

impl Term {
    pub fn dense(matrix: Arc<HermitianMatrix>, scale: f64) -> Self {
        Term::Dense { matrix, scale }
    }

    pub fn to_hermitian(&self, dim: usize) -> HermitianMatrix {
        match self {
            Term::Dense { matrix, scale } => matrix.scale(*scale),
            Term::Sparse(entries) => {
                let mut m = DMatrix::<Complex64>::zeros(dim, dim);
                for e in entries {
                    m[(e.row, e.col)] += e.value;
                    if e.row != e.col {
                        m[(e.col, e.row)] += e.value.conj();
                    }
                }
                HermitianMatrix::symmetrize(m)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockTerm {
    pub block: usize,
    pub term: Term,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub terms: Vec<BlockTerm>,
    pub b: f64,
}

/// Standard-form block-diagonal SDP.
///
/// The serialized form of this struct is the debug dump format accepted by
/// `tightcr solve-sdp`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpProblem {
    pub blocks: Vec<Block>,
    pub objective: Vec<BlockTerm>,
    pub constraints: Vec<Constraint>,
    /// Report the dual objective as the value of the problem.
    #[serde(default)]
    pub maximize_dual_report: bool,
}

impl SdpProblem {
    /// Builds a problem from dense block-diagonal data.
    pub fn from_dense(
        kinds: &[BlockKind],
        c: &BlockDiagMatrix,
        constraints: &[(BlockDiagMatrix, f64)],
    ) -> Result<Self> {
        let dims = c.block_dims();
        if kinds.len() != dims.len() {
            return Err(Error::Dimension("one kind per block required".into()));
        }
        let blocks = dims
            .iter()
            .zip(kinds)
            .map(|(&dim, &kind)| Block { dim, kind })
            .collect();
        let lift = |m: &BlockDiagMatrix| -> Result<Vec<BlockTerm>> {
            if !m.conforms(&dims) {
                return Err(Error::Dimension("block dims differ from the objective".into()));
            }
            Ok(m.blocks
                .iter()
                .enumerate()
                .filter(|(_, h)| h.frobenius() > 0.0)
                .map(|(block, h)| BlockTerm {
                    block,
                    term: Term::dense(Arc::new(h.clone()), 1.0),
                })
                .collect())
        };
        let p = SdpProblem {
            blocks,
            objective: lift(c)?,
            constraints: constraints
                .iter()
                .map(|(a, b)| Ok(Constraint { terms: lift(a)?, b: *b }))
                .collect::<Result<_>>()?,
            maximize_dual_report: false,
        };
        p.check_shapes()?;
        Ok(p)
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.dim).collect()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Dense objective matrix.
    pub fn objective_matrix(&self) -> BlockDiagMatrix {
        self.assemble(&self.objective)
    }

    /// Dense matrix of constraint `i`.
    pub fn constraint_matrix(&self, i: usize) -> BlockDiagMatrix {
        self.assemble(&self.constraints[i].terms)
    }

    fn assemble(&self, terms: &[BlockTerm]) -> BlockDiagMatrix {
        let mut out = BlockDiagMatrix::zeros(&self.block_dims());
        for t in terms {
            let h = t.term.to_hermitian(self.blocks[t.block].dim);
            out.blocks[t.block] = &out.blocks[t.block] + &h;
        }
        out
    }

    /// `<A_i, X>` for every constraint.
    pub fn apply(&self, x: &BlockDiagMatrix) -> Vec<f64> {
        self.constraints
            .iter()
            .map(|c| {
                c.terms
                    .iter()
                    .map(|t| term_inner(&t.term, &x.blocks[t.block]))
                    .sum()
            })
            .collect()
    }

    /// `Σ y_i A_i`.
    pub fn apply_adjoint(&self, y: &[f64]) -> BlockDiagMatrix {
        let dims = self.block_dims();
        let mut out = BlockDiagMatrix::zeros(&dims);
        for (c, &yi) in self.constraints.iter().zip(y) {
            for t in &c.terms {
                let h = t.term.to_hermitian(dims[t.block]).scale(yi);
                out.blocks[t.block] = &out.blocks[t.block] + &h;
            }
        }
        out
    }

    pub fn objective_value(&self, x: &BlockDiagMatrix) -> f64 {
        self.objective
            .iter()
            .map(|t| term_inner(&t.term, &x.blocks[t.block]))
            .sum()
    }

    /// Structural checks: indices in range, Hermitian diagonal entries, real
    /// data on real blocks, at least one constraint.
    pub fn check_shapes(&self) -> Result<()> {
        if self.constraints.is_empty() {
            return Err(Error::InvalidParameter("an SDP needs at least one constraint".into()));
        }
        let all = self
            .objective
            .iter()
            .map(|t| (None, t))
            .chain(self.constraints.iter().enumerate().flat_map(|(i, c)| c.terms.iter().map(move |t| (Some(i), t))));
        for (ci, t) in all {
            let what = match ci {
                Some(i) => format!("constraint {i}"),
                None => "objective".to_string(),
            };
            let blk = self.blocks.get(t.block).ok_or_else(|| {
                Error::Dimension(format!("{what}: block {} out of range", t.block))
            })?;
            match &t.term {
                Term::Sparse(es) => {
                    for e in es {
                        if e.row >= blk.dim || e.col >= blk.dim {
                            return Err(Error::Dimension(format!(
                                "{what}: entry ({}, {}) outside block {} of dim {}",
                                e.row, e.col, t.block, blk.dim
                            )));
                        }
                        if !e.value.re.is_finite() || !e.value.im.is_finite() {
                            return Err(Error::NonFinite);
                        }
                        let imag_ok = e.value.im == 0.0 || (e.row != e.col && blk.kind == BlockKind::Complex);
                        if !imag_ok {
                            return Err(Error::InvalidParameter(format!(
                                "{what}: imaginary entry at ({}, {}) not allowed in block {}",
                                e.row, e.col, t.block
                            )));
                        }
                    }
                }
                Term::Dense { matrix, scale } => {
                    if matrix.dim() != blk.dim {
                        return Err(Error::Dimension(format!(
                            "{what}: dense term of dim {} in block {} of dim {}",
                            matrix.dim(),
                            t.block,
                            blk.dim
                        )));
                    }
                    if !scale.is_finite() {
                        return Err(Error::NonFinite);
                    }
                    if blk.kind == BlockKind::Real && !matrix.is_real(0.0) {
                        return Err(Error::InvalidParameter(format!(
                            "{what}: complex data in real block {}",
                            t.block
                        )));
                    }
                }
            }
        }
        if self.constraints.iter().any(|c| !c.b.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(())
    }

    /// Shape checks plus linear independence of the constraint matrices
    /// (Gram-matrix rank at tolerance 1e-10).
    pub fn validate(&self) -> Result<()> {
        self.check_shapes()?;
        let report = ipm::independence(self);
        if let Some(i) = report.dependent.first() {
            return Err(Error::InvalidParameter(format!(
                "constraint {i} is linearly dependent on earlier constraints"
            )));
        }
        Ok(())
    }

    /// Drops constraints that are linear combinations of earlier ones.
    /// Returns the original indices that were kept. An inconsistent
    /// right-hand side on a dropped row means the problem is infeasible.
    pub fn remove_redundant(&mut self) -> Result<Vec<usize>> {
        self.check_shapes()?;
        let report = ipm::independence(self);
        if let Some(&i) = report.inconsistent.first() {
            return Err(Error::Infeasible(format!(
                "constraint {i} is a combination of earlier constraints with a different right-hand side"
            )));
        }
        let keep = report.kept;
        let mut it = keep.iter().peekable();
        let mut idx = 0;
        self.constraints.retain(|_| {
            let k = it.peek().is_some_and(|&&j| j == idx);
            if k {
                it.next();
            }
            idx += 1;
            k
        });
        Ok(keep)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: SdpProblem = serde_json::from_str(s)?;
        p.check_shapes()?;
        Ok(p)
    }
}

/// `Re tr(T X)` for a term and a Hermitian block.
pub fn term_inner(t: &Term, x: &HermitianMatrix) -> f64 {
    match t {
        Term::Dense { matrix, scale } => scale * matrix.inner(x),
        Term::Sparse(es) => es
            .iter()
            .map(|e| {
                let z = x.as_matrix()[(e.col, e.row)];
                if e.row == e.col {
                    e.value.re * z.re
                } else {
                    2.0 * (e.value * z).re
                }
            })
            .sum(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    MaxIter,
    Infeasible,
    NumericalFailure,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolveOptions {
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-8,
            feas_tol: 1e-8,
            max_iter: 200,
        }
    }
}

/// Per-iterate diagnostics.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IterStats {
    pub iter: usize,
    pub primal_obj: f64,
    pub dual_obj: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    /// `<X, Z>`.
    pub complementarity: f64,
    /// `pobj - dobj + y·(b - A(X)) - <C - Z - A*y, X>`, which equals `<X, Z>`
    /// and is nonnegative whenever both iterates are PSD.
    pub weak_duality_slack: f64,
    /// Magnitude of the largest term in `weak_duality_slack`.
    pub weak_duality_scale: f64,
    pub step_primal: f64,
    pub step_dual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SdpSolution {
    pub x: BlockDiagMatrix,
    pub y: Vec<f64>,
    pub z: BlockDiagMatrix,
    pub primal_obj: f64,
    pub dual_obj: f64,
    /// Relative complementarity `<X, Z> / (1 + |pobj| + |dobj|)`.
    pub gap: f64,
    /// `‖b - A(X)‖ / (1 + ‖b‖)`.
    pub primal_residual: f64,
    /// `‖C - Z - A*y‖_F / (1 + ‖C‖_F)`.
    pub dual_residual: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    pub history: Vec<IterStats>,
    pub report_dual: bool,
}

impl SdpSolution {
    pub fn value(&self) -> f64 {
        if self.report_dual {
            self.dual_obj
        } else {
            self.primal_obj
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

pub fn solve(p: &SdpProblem, opts: &SolveOptions) -> Result<SdpSolution> {
    p.validate()?;
    Ok(ipm::run(p, opts))
}

/// Solve without the linear-independence check, for callers whose
/// constraints are independent by construction.
pub fn solve_unchecked(p: &SdpProblem, opts: &SolveOptions) -> Result<SdpSolution> {
    p.check_shapes()?;
    Ok(ipm::run(p, opts))
}

/// How dual multipliers map back to a certificate `(a, S)`:
/// `S = Σ y_k E_k` over `s_terms`, and `a[i][j] = y_k` over `a_terms`.
#[derive(Debug, Clone)]
pub struct DualLayout {
    pub n: usize,
    pub d: usize,
    pub s_terms: Vec<(usize, HermitianMatrix)>,
    pub a_terms: Vec<(usize, usize, usize)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DualPair {
    pub a: RealMatrix,
    pub s: HermitianMatrix,
}

pub fn extract_dual_pair(sol: &SdpSolution, layout: &DualLayout) -> Result<DualPair> {
    if sol.status != SolveStatus::Optimal {
        return Err(Error::Solver(format!(
            "dual pair requested from a {:?} solution",
            sol.status
        )));
    }
    let m = sol.y.len();
    let used = layout.s_terms.len() + layout.a_terms.len();
    if used != m {
        return Err(Error::Dimension(format!(
            "layout covers {used} multipliers, solution has {m}"
        )));
    }
    let mut seen = vec![false; m];
    let mut s = HermitianMatrix::zeros(layout.n);
    for (k, e) in &layout.s_terms {
        if *k >= m || seen[*k] || e.dim() != layout.n {
            return Err(Error::Dimension(format!("bad layout entry for multiplier {k}")));
        }
        seen[*k] = true;
        s = &s + &e.scale(sol.y[*k]);
    }
    let mut a = RealMatrix::zeros(layout.d, layout.d);
    for &(k, i, j) in &layout.a_terms {
        if k >= m || seen[k] || i >= layout.d || j >= layout.d {
            return Err(Error::Dimension(format!("bad layout entry for multiplier {k}")));
        }
        seen[k] = true;
        a[(i, j)] = sol.y[k];
    }
    Ok(DualPair { a, s })
}
