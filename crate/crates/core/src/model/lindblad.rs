//! Models generated by exponentiating Liouvillians.
//!
//! Vectorization is column stacking, so `vec(A ρ B) = (Bᵀ ⊗ A) vec(ρ)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::QuantumModel;
use crate::error::{Error, Result};
use crate::matrixcore::{
    eigvalsh, expm, frechet_expm, kron, pauli_x, pauli_y, pauli_z, ComplexMatrix, HermitianMatrix, RealMatrix, C1, CI,
    PSD_FLOOR,
};

#[derive(Debug, Clone)]
pub struct Jump {
    pub op: ComplexMatrix,
    pub rate: f64,
}

pub fn vec_col(m: &ComplexMatrix) -> DVector<Complex64> {
    DVector::from_column_slice(m.as_slice())
}

pub fn unvec_col(v: &DVector<Complex64>, n: usize) -> ComplexMatrix {
    DMatrix::from_column_slice(n, n, v.as_slice())
}

fn commutator_superop(h: &ComplexMatrix) -> ComplexMatrix {
    let n = h.nrows();
    let id = ComplexMatrix::identity(n, n);
    (kron(&id, h) - kron(&h.transpose(), &id)) * (-CI)
}

/// Matrix of `ρ ↦ -i[H, ρ] + Σ γ (L ρ L† - {L†L, ρ}/2)`.
pub fn superoperator(h: &ComplexMatrix, jumps: &[Jump]) -> ComplexMatrix {
    let n = h.nrows();
    let id = ComplexMatrix::identity(n, n);
    let mut s = commutator_superop(h);
    for j in jumps {
        let l = &j.op;
        let ldl = l.adjoint() * l;
        let g = Complex64::new(j.rate, 0.0);
        s += (kron(&l.conjugate(), l) - (kron(&id, &ldl) + kron(&ldl.transpose(), &id)) * Complex64::new(0.5, 0.0)) * g;
    }
    s
}

/// `ρ(θ) = exp(t L_θ)(ρ0)` and `∂ρ/∂θ_k` at `θ = 0`, where `H_θ = h0 + Σ θ_k dh_k`.
/// Derivatives are exact Fréchet derivatives of the exponential. No model
/// validation is done here.
pub fn evolve(
    h0: &ComplexMatrix,
    dh: &[ComplexMatrix],
    jumps: &[Jump],
    rho0: &HermitianMatrix,
    t: f64,
) -> Result<(HermitianMatrix, Vec<HermitianMatrix>)> {
    let n = rho0.dim();
    if h0.nrows() != n {
        return Err(Error::Dimension(format!("Hamiltonian has dim {}, state has dim {n}", h0.nrows())));
    }
    if let Some(j) = jumps.iter().find(|j| j.op.nrows() != n || j.op.ncols() != n) {
        return Err(Error::Dimension(format!("jump operator of shape {}x{}", j.op.nrows(), j.op.ncols())));
    }
    if jumps.iter().any(|j| !(j.rate >= 0.0)) {
        return Err(Error::InvalidParameter("jump rates must be nonnegative".into()));
    }
    if (rho0.trace() - 1.0).abs() > 1e-10 || eigvalsh(rho0)?[0] < -1e-10 {
        return Err(Error::InvalidModel("rho0 is not a density matrix".into()));
    }
    let tc = Complex64::new(t, 0.0);
    let l = superoperator(h0, jumps) * tc;
    let v0 = vec_col(rho0.as_matrix());
    let rho = HermitianMatrix::symmetrize(unvec_col(&(expm(&l)? * &v0), n));
    let derivs = dh
        .iter()
        .map(|d| {
            let (_, de) = frechet_expm(&l, &(commutator_superop(d) * tc))?;
            Ok(HermitianMatrix::symmetrize(unvec_col(&(de * &v0), n)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((rho, derivs))
}

fn channel_model(
    h0: &ComplexMatrix,
    dh: &[ComplexMatrix],
    jumps: &[Jump],
    rho0: &HermitianMatrix,
    t: f64,
    weight: Option<RealMatrix>,
) -> Result<QuantumModel> {
    let (rho, derivs) = evolve(h0, dh, jumps, rho0, t)?;
    let lmin = eigvalsh(&rho)?[0];
    if lmin < PSD_FLOOR {
        return Err(Error::InvalidModel(format!(
            "output state is rank-deficient (smallest eigenvalue {lmin:e}); \
             add depolarizing noise or mix rho0 with the maximally mixed state"
        )));
    }
    let d = dh.len();
    QuantumModel::new(rho, derivs, weight.unwrap_or_else(|| RealMatrix::identity(d, d)))
}

/// Two-qubit XY model `H = a X⊗X + b Y⊗Y` with parameters `(a, b)`.
pub fn make_lindblad_model(
    a: f64,
    b: f64,
    jumps: &[Jump],
    rho0: &HermitianMatrix,
    t: f64,
    weight: Option<RealMatrix>,
) -> Result<QuantumModel> {
    let xx = kron(&pauli_x(), &pauli_x());
    let yy = kron(&pauli_y(), &pauli_y());
    let h = &xx * Complex64::new(a, 0.0) + &yy * Complex64::new(b, 0.0);
    channel_model(&h, &[xx, yy], jumps, rho0, t, weight)
}

/// Two-qubit collective field `x(XI + IX) + y(YI + IY) + z(ZI + IZ)`.
pub fn make_field_model(
    rho0: &HermitianMatrix,
    jumps: &[Jump],
    at: (f64, f64, f64),
    t: f64,
    weight: Option<RealMatrix>,
) -> Result<QuantumModel> {
    let id = ComplexMatrix::identity(2, 2);
    let collective = |p: ComplexMatrix| kron(&p, &id) + kron(&id, &p);
    let gens = [collective(pauli_x()), collective(pauli_y()), collective(pauli_z())];
    let h = &gens[0] * Complex64::new(at.0, 0.0) + &gens[1] * Complex64::new(at.1, 0.0) + &gens[2] * Complex64::new(at.2, 0.0);
    channel_model(&h, &gens, jumps, rho0, t, weight)
}

/// Single-qubit X, Y, Z jumps on both qubits, each at rate `gamma`.
pub fn depolarizing_jumps(gamma: f64) -> Vec<Jump> {
    let id = ComplexMatrix::identity(2, 2);
    let mut out = Vec::new();
    for p in [pauli_x(), pauli_y(), pauli_z()] {
        out.push(Jump {
            op: kron(&p, &id),
            rate: gamma,
        });
        out.push(Jump {
            op: kron(&id, &p),
            rate: gamma,
        });
    }
    out
}

/// `(1-ε)|ψ⟩⟨ψ| + ε I/4` with `|ψ⟩ = (R(θ) ⊗ I)(|00⟩ + |11⟩)/√2`, where
/// `R(θ)` rotates qubit one by `θ` about the axis `(1,1,1)/√3`.
///
/// The unrotated GHZ state is a poor probe for the XY model: `X⊗X` and
/// `Y⊗Y` act on it identically up to sign, so the two derivatives coincide.
pub fn ghz_like(eps: f64, theta: f64) -> HermitianMatrix {
    let r = 0.5f64.sqrt();
    let ghz = DVector::from_vec(vec![C1 * r, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), C1 * r]);
    let axis = (pauli_x() + pauli_y() + pauli_z()) * Complex64::new(1.0 / 3f64.sqrt(), 0.0);
    let rot = expm(&(axis * Complex64::new(0.0, -theta / 2.0))).expect("2x2 exponential");
    let u = kron(&rot, &ComplexMatrix::identity(2, 2));
    let psi = u * ghz;
    let pure = &psi * psi.adjoint();
    let mixed = pure * Complex64::new(1.0 - eps, 0.0) + ComplexMatrix::identity(4, 4) * Complex64::new(eps / 4.0, 0.0);
    HermitianMatrix::symmetrize(mixed)
}
