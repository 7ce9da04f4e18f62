//! The locally unbiased POVM read off an optimal `[P1, W_R]` solution.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::P1Solution;
use crate::error::{Error, Result};
use crate::matrixcore::{psd_inv_sqrt, ComplexMatrix, HermitianMatrix, RealMatrix, PSD_FLOOR};
use crate::model::QuantumModel;
use crate::sdp::SolveStatus;

/// Elements with `tr M_s < PRUNE_TOL · n` are dropped.
pub const PRUNE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PovmElement {
    pub m: HermitianMatrix,
    /// Estimate `θ̂(s) = w_s[1..] / w_s[0]` at the chart origin `θ = 0`.
    pub thetahat: Vec<f64>,
    /// Index of the generating direction in the input direction set.
    pub direction: usize,
    /// `tr(ρ M_s)`.
    pub probability: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimatorPOVM {
    pub elements: Vec<PovmElement>,
    /// `max |(Σ M_s - I)_{ab}|`.
    pub completeness_residual: f64,
    /// `max_ij |Σ_s θ̂ⁱ(s) tr(M_s D_j) - δ_ij|`.
    pub unbiasedness_residual: f64,
    /// `Σ_s θ̂(s)ᵀ G θ̂(s) tr(ρ M_s)`.
    pub weighted_mse: f64,
    /// Total trace of the pruned elements before renormalization.
    pub dropped_mass: f64,
    pub dropped_count: usize,
}

impl EstimatorPOVM {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One line per outcome: index, direction, probability and estimate.
    pub fn to_table(&self) -> String {
        let mut out = String::from("outcome\tdirection\tprobability\tthetahat\n");
        for (k, e) in self.elements.iter().enumerate() {
            let th: Vec<String> = e.thetahat.iter().map(|t| format!("{t:.6e}")).collect();
            let _ = writeln!(out, "{k}\t{}\t{:.6e}\t{}", e.direction, e.probability, th.join(" "));
        }
        out
    }
}

/// Builds `M_s = (w_s⁰)² X*_s`, prunes numerically empty elements and
/// restores exact completeness by the congruence `T^{-1/2} M_s T^{-1/2}`
/// with `T` the sum of the kept elements.
pub fn extract_estimator(m: &QuantumModel, sol: &P1Solution) -> Result<EstimatorPOVM> {
    if sol.diag.status != SolveStatus::Optimal {
        return Err(Error::Solver(format!(
            "estimator requested from a {:?} solution",
            sol.diag.status
        )));
    }
    let n = m.n();
    if sol.blocks.blocks.len() != sol.directions.len() {
        return Err(Error::Dimension("one block per direction expected".into()));
    }
    let mut kept = Vec::new();
    let mut dropped_mass = 0.0;
    let mut dropped_count = 0;
    for (s, (x, w)) in sol.blocks.blocks.iter().zip(&sol.directions).enumerate() {
        let ms = x.scale(w[0] * w[0]);
        let tr = ms.trace();
        if tr < PRUNE_TOL * n as f64 {
            dropped_mass += tr.max(0.0);
            dropped_count += 1;
            continue;
        }
        let thetahat = w[1..].iter().map(|wi| wi / w[0]).collect();
        kept.push((ms, thetahat, sol.sources[s]));
    }
    if kept.is_empty() {
        return Err(Error::Solver("every POVM element was pruned".into()));
    }
    let mut total = ComplexMatrix::zeros(n, n);
    for (ms, _, _) in &kept {
        total += ms.as_matrix();
    }
    let t = HermitianMatrix::symmetrize(total);
    let r = psd_inv_sqrt(&t, PSD_FLOOR)?;
    let elements: Vec<PovmElement> = kept
        .into_iter()
        .map(|(ms, thetahat, direction)| {
            let mm = HermitianMatrix::symmetrize(r.as_matrix() * ms.as_matrix() * r.as_matrix());
            let probability = m.rho().inner(&mm);
            PovmElement {
                m: mm,
                thetahat,
                direction,
                probability,
            }
        })
        .collect();
    let (completeness_residual, unbiasedness_residual, weighted_mse) = residuals(m, &elements);
    Ok(EstimatorPOVM {
        elements,
        completeness_residual,
        unbiasedness_residual,
        weighted_mse,
        dropped_mass,
        dropped_count,
    })
}

fn residuals(m: &QuantumModel, elements: &[PovmElement]) -> (f64, f64, f64) {
    let (n, d) = (m.n(), m.d());
    let mut sum = ComplexMatrix::zeros(n, n);
    let mut ub = RealMatrix::zeros(d, d);
    let mut mse = 0.0;
    for e in elements {
        sum += e.m.as_matrix();
        for j in 0..d {
            let t = m.derivs()[j].inner(&e.m);
            for i in 0..d {
                ub[(i, j)] += e.thetahat[i] * t;
            }
        }
        let th = nalgebra::DVector::from_column_slice(&e.thetahat);
        mse += (th.transpose() * m.weight() * &th)[(0, 0)] * e.probability;
    }
    sum -= ComplexMatrix::identity(n, n);
    let completeness = sum.iter().map(|z: &Complex64| z.norm()).fold(0.0, f64::max);
    let unbiased = (ub - RealMatrix::identity(d, d)).amax();
    (completeness, unbiased, mse)
}

const PROB_FLOOR: f64 = 1e-14;

/// `J(Π)_ij = Σ_s tr(D_i M_s) tr(D_j M_s) / tr(ρ M_s)`.
pub fn classical_fisher(m: &QuantumModel, est: &EstimatorPOVM) -> Result<RealMatrix> {
    let d = m.d();
    let mut j = RealMatrix::zeros(d, d);
    for (s, e) in est.elements.iter().enumerate() {
        let p = m.rho().inner(&e.m);
        let dp: Vec<f64> = m.derivs().iter().map(|di| di.inner(&e.m)).collect();
        if p <= PROB_FLOOR {
            if dp.iter().any(|x| x.abs() > 1e-12) {
                return Err(Error::DegenerateOutcome(s));
            }
            continue;
        }
        for a in 0..d {
            for b in 0..d {
                j[(a, b)] += dp[a] * dp[b] / p;
            }
        }
    }
    Ok(j)
}
