//! Finite-dimensional estimation models at a fixed parameter point.

mod generators;
mod lindblad;
mod sld;

pub use generators::{make_qubit_model, make_random_ds, make_random_model};
pub use lindblad::{
    depolarizing_jumps, evolve, ghz_like, make_field_model, make_lindblad_model, superoperator, vec_col, unvec_col,
    Jump,
};
pub use sld::{compute_sld, sld_bound, SldData};

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrixcore::{eigvalsh, ComplexMatrix, HermitianMatrix, RealMatrix, PSD_FLOOR};

const TRACE_TOL: f64 = 1e-10;
const INDEPENDENCE_TOL: f64 = 1e-10;
const ZERO_DERIV_TOL: f64 = 1e-12;

/// State `rho`, derivatives `derivs[j] = ∂rho/∂θ^j`, and weight matrix `G`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelJson", into = "ModelJson")]
pub struct QuantumModel {
    n: usize,
    d: usize,
    rho: HermitianMatrix,
    derivs: Vec<HermitianMatrix>,
    weight: RealMatrix,
}

impl QuantumModel {
    pub fn new(rho: HermitianMatrix, derivs: Vec<HermitianMatrix>, weight: RealMatrix) -> Result<Self> {
        let n = rho.dim();
        let d = derivs.len();
        if n == 0 {
            return Err(Error::InvalidModel("rho is empty".into()));
        }
        if d == 0 {
            return Err(Error::InvalidModel("at least one derivative is required".into()));
        }
        if let Some((j, dj)) = derivs.iter().enumerate().find(|(_, dj)| dj.dim() != n) {
            return Err(Error::InvalidModel(format!(
                "derivs[{j}] has dim {}, rho has dim {n}",
                dj.dim()
            )));
        }
        if weight.nrows() != d || weight.ncols() != d {
            return Err(Error::InvalidModel(format!(
                "G is {}x{}, expected {d}x{d}",
                weight.nrows(),
                weight.ncols()
            )));
        }
        let tr = rho.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidModel(format!("trace(rho) = {tr}, expected 1")));
        }
        let lmin = eigvalsh(&rho)?[0];
        if lmin < PSD_FLOOR {
            return Err(Error::InvalidModel(format!(
                "rho is not full rank: smallest eigenvalue {lmin:e} < {PSD_FLOOR:e}; \
                 mix with the maximally mixed state to regularize"
            )));
        }
        for (j, dj) in derivs.iter().enumerate() {
            if dj.frobenius() < ZERO_DERIV_TOL {
                return Err(Error::InvalidModel(format!(
                    "derivs[{j}] vanishes; derivatives are linearly dependent"
                )));
            }
            let t = dj.trace();
            if t.abs() > TRACE_TOL * dj.frobenius().max(1.0) {
                return Err(Error::InvalidModel(format!("trace(derivs[{j}]) = {t:e}, expected 0")));
            }
        }
        let gram = RealMatrix::from_fn(d, d, |i, j| {
            derivs[i].inner(&derivs[j]) / (derivs[i].frobenius() * derivs[j].frobenius()).max(f64::MIN_POSITIVE)
        });
        let gmin = SymmetricEigen::new(gram).eigenvalues.min();
        if gmin <= INDEPENDENCE_TOL {
            return Err(Error::InvalidModel(format!(
                "derivatives are linearly dependent (normalized Gram eigenvalue {gmin:e})"
            )));
        }
        let asym = (&weight - weight.transpose()).amax();
        if asym > 1e-12 * weight.amax().max(1.0) {
            return Err(Error::InvalidModel("G is not symmetric".into()));
        }
        let weight = (&weight + weight.transpose()) * 0.5;
        let wmin = SymmetricEigen::new(weight.clone()).eigenvalues.min();
        if wmin < -1e-12 * weight.amax().max(1.0) {
            return Err(Error::InvalidModel(format!("G is not PSD (eigenvalue {wmin:e})")));
        }
        Ok(Self {
            n,
            d,
            rho,
            derivs,
            weight,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn rho(&self) -> &HermitianMatrix {
        &self.rho
    }

    pub fn derivs(&self) -> &[HermitianMatrix] {
        &self.derivs
    }

    pub fn weight(&self) -> &RealMatrix {
        &self.weight
    }

    pub fn with_weight(&self, weight: RealMatrix) -> Result<Self> {
        Self::new(self.rho.clone(), self.derivs.clone(), weight)
    }

    /// True when rho and every derivative are real symmetric.
    pub fn is_real(&self) -> bool {
        self.rho.is_real(0.0) && self.derivs.iter().all(|d| d.is_real(0.0))
    }

    /// `U rho U†`, `U D_j U†`.
    pub fn conjugate_by(&self, u: &ComplexMatrix) -> Result<Self> {
        Self::new(
            self.rho.conjugate_by(u),
            self.derivs.iter().map(|d| d.conjugate_by(u)).collect(),
            self.weight.clone(),
        )
    }

    /// New coordinates `θ' = O θ` for orthogonal `O`: `D'_k = Σ_j O_kj D_j`, `G' = O G Oᵀ`.
    pub fn reparametrize(&self, o: &RealMatrix) -> Result<Self> {
        let d = self.d;
        let derivs = (0..d)
            .map(|k| {
                let mut acc = HermitianMatrix::zeros(self.n);
                for j in 0..d {
                    acc = &acc + &self.derivs[j].scale(o[(k, j)]);
                }
                acc
            })
            .collect();
        Self::new(self.rho.clone(), derivs, o * &self.weight * o.transpose())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }
}

#[derive(Serialize, Deserialize)]
struct ModelJson {
    n: usize,
    d: usize,
    rho: HermitianMatrix,
    derivs: Vec<HermitianMatrix>,
    #[serde(rename = "G")]
    g: Vec<Vec<f64>>,
}

impl TryFrom<ModelJson> for QuantumModel {
    type Error = Error;

    fn try_from(j: ModelJson) -> Result<Self> {
        if j.rho.dim() != j.n {
            return Err(Error::InvalidModel(format!(
                "field \"n\" is {} but \"rho\" has dim {}",
                j.n,
                j.rho.dim()
            )));
        }
        if j.derivs.len() != j.d {
            return Err(Error::InvalidModel(format!(
                "field \"d\" is {} but \"derivs\" has {} entries",
                j.d,
                j.derivs.len()
            )));
        }
        if j.g.len() != j.d || j.g.iter().any(|r| r.len() != j.d) {
            return Err(Error::InvalidModel(format!("field \"G\" must be a {0}x{0} array", j.d)));
        }
        let g = RealMatrix::from_fn(j.d, j.d, |r, c| j.g[r][c]);
        QuantumModel::new(j.rho, j.derivs, g)
    }
}

impl From<QuantumModel> for ModelJson {
    fn from(m: QuantumModel) -> Self {
        let g = (0..m.d)
            .map(|r| (0..m.d).map(|c| m.weight[(r, c)]).collect())
            .collect();
        ModelJson {
            n: m.n,
            d: m.d,
            rho: m.rho,
            derivs: m.derivs,
            g,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrixcore::pauli_z;

    fn qubit_z() -> QuantumModel {
        QuantumModel::new(
            HermitianMatrix::identity(2).scale(0.5),
            vec![HermitianMatrix::new(pauli_z()).unwrap().scale(0.5)],
            RealMatrix::identity(1, 1),
        )
        .unwrap()
    }

    #[test]
    fn rejects_bad_models() {
        let half = HermitianMatrix::identity(2).scale(0.5);
        let dz = HermitianMatrix::new(pauli_z()).unwrap().scale(0.5);
        let g = RealMatrix::identity(1, 1);
        let pure = HermitianMatrix::diag(&[1.0, 0.0]);
        let e = QuantumModel::new(pure, vec![dz.clone()], g.clone()).unwrap_err();
        assert!(e.to_string().contains("full rank"));
        let e = QuantumModel::new(half.clone(), vec![HermitianMatrix::identity(2)], g.clone()).unwrap_err();
        assert!(e.to_string().contains("trace(derivs[0])"));
        let e = QuantumModel::new(half.clone(), vec![dz.clone(), dz.scale(2.0)], RealMatrix::identity(2, 2)).unwrap_err();
        assert!(e.to_string().contains("linearly dependent"));
        let e = QuantumModel::new(half.scale(2.0), vec![dz.clone()], g.clone()).unwrap_err();
        assert!(e.to_string().contains("trace(rho)"));
        let e = QuantumModel::new(half, vec![dz], -g).unwrap_err();
        assert!(e.to_string().contains("PSD"));
    }

    #[test]
    fn json_round_trip_and_field_errors() {
        let m = qubit_z();
        let s = m.to_json().unwrap();
        assert!(s.contains("\"G\""));
        assert_eq!(QuantumModel::from_json(&s).unwrap(), m);
        let missing = s.replace("\"G\"", "\"weights\"");
        let err = QuantumModel::from_json(&missing).unwrap_err().to_string();
        assert!(err.contains("G"), "{err}");
        let wrong_d = s.replace("\"d\": 1", "\"d\": 2");
        let err = QuantumModel::from_json(&wrong_d).unwrap_err().to_string();
        assert!(err.contains("\"d\""), "{err}");
    }
}
