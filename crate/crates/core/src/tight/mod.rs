//! Inner approximation `[P1, W_R]` of the tight bound, its dual
//! certificate, the gap parameter `κ` and the resulting lower bound.
//!
//! Each direction `w ∈ W_R ⊂ S^d` contributes one `n × n` PSD block `X_w`.
//! The program is
//!
//! ```text
//! min Σ_w ⟨w|G|w⟩ tr(ρ X_w)
//! s.t. Σ_w (w⁰)² X_w = I,   Σ_w w⁰ wⁱ tr(D_j X_w) = δ_ij
//! ```
//!
//! and its multipliers assemble into `(a, S)` with per-block slack
//! `⟨w|Π(a, S)|w⟩`.

mod estimator;
mod kappa;

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use estimator::{classical_fisher, extract_estimator, EstimatorPOVM, PovmElement, PRUNE_TOL};
pub use kappa::{compute_c1, compute_c2, default_grid, kappa_search, pi_operator, KappaMode, KappaOptions, KappaReport};

use crate::bounds::SolveDiag;
use crate::designs::{dedup_indices, layered_delta_bound, Construction, DirectionSet};
use crate::error::{Error, Result};
use crate::matrixcore::{lambda_min, op_norm, BlockDiagMatrix, ComplexMatrix, HermitianMatrix, RealMatrix};
use crate::model::{sld_bound, QuantumModel};
use crate::sdp::{
    extract_dual_pair, solve_unchecked, Block, BlockKind, BlockTerm, Constraint, DualLayout, SdpProblem, SolveOptions,
    SolveStatus, SparseEntry, Term,
};

/// Directions with `|w⁰|` at or below this carry no weight in any constraint.
const W0_TOL: f64 = 1e-12;

const NOT_EXPRESSIBLE: &str = "direction set cannot express a locally unbiased estimator";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DualCertificate {
    pub a: RealMatrix,
    pub s: HermitianMatrix,
    pub pi_as: HermitianMatrix,
    /// `C₂(a)`.
    pub c2: f64,
    /// `‖Π(a, S)‖`.
    pub op_norm_x: f64,
    /// `min_w λ_min(⟨w|Π(a, S)|w⟩)` over the directions of the program.
    pub min_block_slack: f64,
}

/// Optimal `[P1, W_R]` data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct P1Solution {
    /// Primal optimum `S[P1, W_R]`.
    pub upper: f64,
    /// Dual objective `tr a + tr S`.
    pub dual_value: f64,
    pub blocks: BlockDiagMatrix,
    /// Directions actually used, sign-normalized so that `w⁰ > 0`.
    pub directions: Vec<Vec<f64>>,
    /// Index into the input set for each used direction.
    pub sources: Vec<usize>,
    pub certificate: DualCertificate,
    pub diag: SolveDiag,
}

/// Drops `w⁰ = 0` directions and merges `±w`, which give identical blocks.
fn effective_directions(wr: &DirectionSet) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut dirs = Vec::new();
    let mut src = Vec::new();
    for (i, v) in wr.vectors.iter().enumerate() {
        if v[0].abs() <= W0_TOL {
            continue;
        }
        let sign = v[0].signum();
        dirs.push(v.iter().map(|x| sign * x).collect::<Vec<f64>>());
        src.push(i);
    }
    let keep = dedup_indices(&dirs);
    let mut out = Vec::with_capacity(keep.len());
    let mut sources = Vec::with_capacity(keep.len());
    for k in keep {
        out.push(std::mem::take(&mut dirs[k]));
        sources.push(src[k]);
    }
    (out, sources)
}

fn quad_form(g: &RealMatrix, w: &[f64]) -> f64 {
    let d = g.nrows();
    let mut acc = 0.0;
    for i in 0..d {
        for j in 0..d {
            acc += w[i + 1] * g[(i, j)] * w[j + 1];
        }
    }
    acc
}

/// `⟨w|X|w⟩ = Σ_kj w_k w_j X^{kj}` for an operator on `R^{d+1} ⊗ H`.
pub fn contract(x: &HermitianMatrix, n: usize, w: &[f64]) -> HermitianMatrix {
    let p = x.as_matrix();
    let mut out = ComplexMatrix::zeros(n, n);
    for (k, wk) in w.iter().enumerate() {
        for (j, wj) in w.iter().enumerate() {
            let c = wk * wj;
            if c != 0.0 {
                out += p.view((k * n, j * n), (n, n)) * Complex64::new(c, 0.0);
            }
        }
    }
    HermitianMatrix::symmetrize(out)
}

struct Assembled {
    problem: SdpProblem,
    layout: DualLayout,
}

/// Objective weights are divided by `scale`.
fn assemble(m: &QuantumModel, dirs: &[Vec<f64>], scale: f64) -> Assembled {
    let (n, d) = (m.n(), m.d());
    let real = m.is_real();
    let kind = if real { BlockKind::Real } else { BlockKind::Complex };
    let blocks = vec![Block { dim: n, kind }; dirs.len()];
    let rho = Arc::new(m.rho().clone());
    let objective = dirs
        .iter()
        .enumerate()
        .map(|(s, w)| BlockTerm {
            block: s,
            term: Term::dense(rho.clone(), quad_form(m.weight(), w) / scale),
        })
        .collect();
    let mut constraints = Vec::new();
    let mut s_terms = Vec::new();
    let mut a_terms = Vec::new();
    // completeness: one real constraint per entry on and above the diagonal,
    // one more per off-diagonal entry for the imaginary part
    let mut unit = |e: SparseEntry, b: f64| {
        let k = constraints.len();
        let terms = dirs
            .iter()
            .enumerate()
            .map(|(s, w)| BlockTerm {
                block: s,
                term: Term::Sparse(vec![SparseEntry {
                    value: e.value * (w[0] * w[0]),
                    ..e
                }]),
            })
            .collect();
        constraints.push(Constraint { terms, b });
        s_terms.push((k, Term::Sparse(vec![e]).to_hermitian(n)));
    };
    for r in 0..n {
        unit(SparseEntry::real(r, r, 1.0), 1.0);
        for c in r + 1..n {
            unit(SparseEntry::real(r, c, 0.5), 0.0);
            if !real {
                unit(
                    SparseEntry {
                        row: r,
                        col: c,
                        value: Complex64::new(0.0, 0.5),
                    },
                    0.0,
                );
            }
        }
    }
    let derivs: Vec<Arc<HermitianMatrix>> = m.derivs().iter().cloned().map(Arc::new).collect();
    for i in 0..d {
        for (j, dj) in derivs.iter().enumerate() {
            let terms = dirs
                .iter()
                .enumerate()
                .filter(|(_, w)| w[i + 1] != 0.0)
                .map(|(s, w)| BlockTerm {
                    block: s,
                    term: Term::dense(dj.clone(), w[0] * w[i + 1]),
                })
                .collect();
            a_terms.push((constraints.len(), i, j));
            constraints.push(Constraint {
                terms,
                b: if i == j { 1.0 } else { 0.0 },
            });
        }
    }
    Assembled {
        problem: SdpProblem {
            blocks,
            objective,
            constraints,
            maximize_dual_report: false,
        },
        layout: DualLayout { n, d, s_terms, a_terms },
    }
}

/// Builds the `[P1, W_R]` program without solving it.
pub fn build_p1_wr(m: &QuantumModel, wr: &DirectionSet) -> Result<SdpProblem> {
    check_dims(m, wr)?;
    let (dirs, _) = effective_directions(wr);
    if dirs.is_empty() {
        return Err(Error::Infeasible(format!("{NOT_EXPRESSIBLE}: every direction has w0 = 0")));
    }
    Ok(assemble(m, &dirs, 1.0).problem)
}

fn check_dims(m: &QuantumModel, wr: &DirectionSet) -> Result<()> {
    if wr.d != m.d() {
        return Err(Error::Dimension(format!(
            "direction set has d = {}, model has d = {}",
            wr.d,
            m.d()
        )));
    }
    Ok(())
}

pub fn solve_p1_wr(m: &QuantumModel, wr: &DirectionSet, opts: &SolveOptions) -> Result<P1Solution> {
    check_dims(m, wr)?;
    let (dirs, sources) = effective_directions(wr);
    if dirs.is_empty() {
        return Err(Error::Infeasible(format!("{NOT_EXPRESSIBLE}: every direction has w0 = 0")));
    }
    // the solver's gap is relative to 1 + |objective|; solving with values
    // of order one makes it relative to the bound itself
    let scale = match sld_bound(m) {
        Ok(v) if v.is_finite() && v > 0.0 => v,
        _ => 1.0,
    };
    let Assembled { problem, layout } = assemble(m, &dirs, scale);
    // too few directions leave the unbiasedness rows dependent
    problem
        .validate()
        .map_err(|e| Error::Infeasible(format!("{NOT_EXPRESSIBLE}: {e}")))?;
    let sol = solve_unchecked(&problem, opts)?;
    match sol.status {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible => return Err(Error::Infeasible(NOT_EXPRESSIBLE.into())),
        other => {
            return Err(Error::Solver(format!(
                "[P1, W_R] solve ended with {other:?} after {} iterations (gap {:e})",
                sol.iterations, sol.gap
            )))
        }
    }
    let mut pair = extract_dual_pair(&sol, &layout)?;
    pair.a *= scale;
    pair.s = pair.s.scale(scale);
    let pi_as = pi_operator(m, &pair.a, &pair.s)?;
    let c2 = compute_c2(m, &pair.a)?;
    let op_norm_x = op_norm(&pi_as)?;
    let n = m.n();
    let min_block_slack = dirs
        .par_iter()
        .map(|w| lambda_min(&contract(&pi_as, n, w)))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let diag = SolveDiag::from_solution(&sol, problem.num_constraints());
    Ok(P1Solution {
        upper: sol.primal_obj * scale,
        dual_value: sol.dual_obj * scale,
        blocks: sol.x,
        directions: dirs,
        sources,
        certificate: DualCertificate {
            a: pair.a,
            s: pair.s,
            pi_as,
            c2,
            op_norm_x,
            min_block_slack,
        },
        diag,
    })
}

/// `κ` for a certificate, searched over `‖y‖ ≤ C₂(a)`.
pub fn compute_kappa(m: &QuantumModel, cert: &DualCertificate, opts: &KappaOptions) -> Result<KappaReport> {
    kappa_search(m, &cert.pi_as, cert.c2, opts)
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct TightOptions {
    pub solve: SolveOptions,
    pub kappa: KappaOptions,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WrMeta {
    pub construction: Construction,
    pub d: usize,
    pub len: usize,
    pub constructed_count: usize,
    /// Directions left after dropping `w⁰ = 0` and merging `±w`.
    pub used: usize,
    pub delta_formula: Option<f64>,
    pub params: BTreeMap<String, f64>,
}

/// Norm estimates reported alongside the bounds. None of them gate a result.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Diagnostics {
    pub c1: f64,
    pub trace_a: f64,
    /// Spectral norm of `a`.
    pub norm_a: f64,
    /// `n ‖Π‖ (1 + ‖a‖² C₁²)`.
    pub xi: f64,
    /// `tr(G J⁻¹)` of the SLD bound.
    pub sld_value: f64,
    /// `d / (2 √t)`, `d / (2 t)` and `d / (4 t)` with `t = tr(G J⁻¹)`.
    pub trace_a_bound_sqrt: f64,
    pub trace_a_bound_half: f64,
    pub trace_a_bound_quarter: f64,
    /// `‖G‖ + d/(2√t) + d/(4t)`.
    pub norm_a_bound: f64,
    /// `‖Π‖ (1 + C₂²) δ` when the set has a closed-form radius.
    pub kappa_bound_delta: Option<f64>,
    /// `‖Π‖ max_{0≤s≤C₂} (1 + s²) δ(s)` for layered sets.
    pub kappa_bound_layered: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TightResult {
    pub upper: f64,
    /// `upper - n κ`.
    pub lower: f64,
    /// `upper - n κ_certified`, when available.
    pub lower_certified: Option<f64>,
    pub kappa: f64,
    pub kappa_raw: f64,
    pub kappa_certified: Option<f64>,
    pub dual_value: f64,
    pub kappa_report: KappaReport,
    pub certificate: DualCertificate,
    pub estimator: EstimatorPOVM,
    pub wr_meta: WrMeta,
    pub diag: SolveDiag,
    pub diagnostics: Diagnostics,
}

impl TightResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn spectral_norm(a: &RealMatrix) -> f64 {
    a.clone().singular_values().max()
}

fn diagnostics(m: &QuantumModel, wr: &DirectionSet, cert: &DualCertificate) -> Result<Diagnostics> {
    let (n, d) = (m.n() as f64, m.d() as f64);
    let c1 = compute_c1(m)?;
    let norm_a = spectral_norm(&cert.a);
    let t = sld_bound(m)?;
    let kappa_bound_delta = wr
        .delta_formula
        .map(|delta| cert.op_norm_x * (1.0 + cert.c2 * cert.c2) * delta);
    let kappa_bound_layered = wr.layers.as_ref().map(|info| {
        const STEPS: usize = 1000;
        let worst = (0..=STEPS)
            .map(|k| {
                let s = cert.c2 * k as f64 / STEPS as f64;
                (1.0 + s * s) * layered_delta_bound(info, s)
            })
            .fold(0.0, f64::max);
        cert.op_norm_x * worst
    });
    Ok(Diagnostics {
        c1,
        trace_a: cert.a.trace(),
        norm_a,
        xi: n * cert.op_norm_x * (1.0 + norm_a * norm_a * c1 * c1),
        sld_value: t,
        trace_a_bound_sqrt: d / (2.0 * t.sqrt()),
        trace_a_bound_half: d / (2.0 * t),
        trace_a_bound_quarter: d / (4.0 * t),
        norm_a_bound: spectral_norm(m.weight()) + d / (2.0 * t.sqrt()) + d / (4.0 * t),
        kappa_bound_delta,
        kappa_bound_layered,
    })
}

/// Upper bound `S[P1, W_R]`, lower bound `S[P1, W_R] - n κ`, and the
/// estimator that attains the upper bound.
pub fn tight_bounds(m: &QuantumModel, wr: &DirectionSet, opts: &TightOptions) -> Result<TightResult> {
    let sol = solve_p1_wr(m, wr, &opts.solve)?;
    let estimator = extract_estimator(m, &sol)?;
    let kr = compute_kappa(m, &sol.certificate, &opts.kappa)?;
    let n = m.n() as f64;
    let diagnostics = diagnostics(m, wr, &sol.certificate)?;
    let wr_meta = WrMeta {
        construction: wr.construction,
        d: wr.d,
        len: wr.len(),
        constructed_count: wr.constructed_count,
        used: sol.directions.len(),
        delta_formula: wr.delta_formula,
        params: wr.params.clone(),
    };
    Ok(TightResult {
        upper: sol.upper,
        lower: sol.upper - n * kr.kappa,
        lower_certified: kr.kappa_certified.map(|k| sol.upper - n * k),
        kappa: kr.kappa,
        kappa_raw: kr.kappa_raw,
        kappa_certified: kr.kappa_certified,
        dual_value: sol.dual_value,
        kappa_report: kr,
        certificate: sol.certificate,
        estimator,
        wr_meta,
        diag: sol.diag,
        diagnostics,
    })
}
