use nalgebra::Cholesky;
use serde::{Deserialize, Serialize};

use super::QuantumModel;
use crate::error::{Error, Result};
use crate::matrixcore::{eigh, HermitianMatrix, RealMatrix};

/// Symmetric logarithmic derivatives and the SLD Fisher matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SldData {
    pub l: Vec<HermitianMatrix>,
    pub j: RealMatrix,
}

/// Solves `D_j = (L_j rho + rho L_j)/2` in the eigenbasis of rho.
pub fn compute_sld(m: &QuantumModel) -> Result<SldData> {
    let (lam, v) = eigh(m.rho())?;
    let n = m.n();
    let vh = v.adjoint();
    let l: Vec<HermitianMatrix> = m
        .derivs()
        .iter()
        .map(|d| {
            let mut t = &vh * d.as_matrix() * &v;
            for i in 0..n {
                for k in 0..n {
                    t[(i, k)] *= 2.0 / (lam[i] + lam[k]);
                }
            }
            HermitianMatrix::symmetrize(&v * t * &vh)
        })
        .collect();
    let d = m.d();
    let rho = m.rho().as_matrix();
    let mut j = RealMatrix::zeros(d, d);
    for a in 0..d {
        for b in a..d {
            let v = (rho * l[a].as_matrix() * l[b].as_matrix()).trace().re;
            j[(a, b)] = v;
            j[(b, a)] = v;
        }
    }
    Ok(SldData { l, j })
}

/// `tr(G J^{-1})`.
pub fn sld_bound(m: &QuantumModel) -> Result<f64> {
    let sld = compute_sld(m)?;
    let chol = Cholesky::new(sld.j.clone())
        .ok_or_else(|| Error::InvalidModel("SLD Fisher matrix is singular".into()))?;
    let jinv = chol.inverse();
    Ok((m.weight() * jinv).trace())
}
