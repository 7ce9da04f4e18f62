use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;

use super::QuantumModel;
use crate::error::{Error, Result};
use crate::matrixcore::{pauli_x, pauli_y, pauli_z, HermitianMatrix, RealMatrix};
use crate::rng::{rng_from_seed, Rng as StreamRng};

fn random_traceless(rng: &mut StreamRng, n: usize) -> HermitianMatrix {
    // entries drawn row by row
    let mut m = RealMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = rng.random::<f64>();
        }
    }
    let mut d = m.transpose() * &m;
    let shift = d.trace() / n as f64;
    for i in 0..n {
        d[(i, i)] -= shift;
    }
    HermitianMatrix::from_real(&d)
}

/// Two real symmetric traceless matrices `MᵀM - tr(MᵀM)/n · I` with
/// `M` having i.i.d. Uniform[0,1) entries.
pub fn make_random_ds(n: usize, seed: u64) -> Result<(HermitianMatrix, HermitianMatrix)> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("make_random_ds needs n >= 2, got {n}")));
    }
    let mut rng = rng_from_seed(seed);
    let d1 = random_traceless(&mut rng, n);
    let d2 = random_traceless(&mut rng, n);
    Ok((d1, d2))
}

/// `rho = I/n` with `d` random derivatives from the same recipe and `G = I`.
/// For `d = 2` the derivatives are exactly those of [`make_random_ds`].
pub fn make_random_model(n: usize, d: usize, seed: u64) -> Result<QuantumModel> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("n must be >= 2, got {n}")));
    }
    let mut rng = rng_from_seed(seed);
    let derivs = (0..d).map(|_| random_traceless(&mut rng, n)).collect();
    QuantumModel::new(
        HermitianMatrix::identity(n).scale(1.0 / n as f64),
        derivs,
        RealMatrix::identity(d, d),
    )
}

/// Qubit with `rho = (I + α σ3)/2`, SLDs `σ1`, `σ2`, `(σ3 - α I)/sqrt(1-α²)`,
/// so the SLD Fisher matrix is the identity, and `G = diag(g)`.
pub fn make_qubit_model(g: [f64; 3], alpha: f64) -> Result<QuantumModel> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("alpha must lie in [0, 1), got {alpha}")));
    }
    if g.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::InvalidParameter("weights must be positive".into()));
    }
    let c = |x: f64| Complex64::new(x, 0.0);
    let id = nalgebra::DMatrix::<Complex64>::identity(2, 2);
    let rho = HermitianMatrix::new((&id + pauli_z() * c(alpha)) * c(0.5))?;
    let s = (1.0 - alpha * alpha).sqrt();
    let l3 = (pauli_z() - &id * c(alpha)) / c(s);
    let slds = [pauli_x(), pauli_y(), l3];
    let derivs = slds
        .iter()
        .map(|l| HermitianMatrix::new(l.clone()).map(|l| l.jordan(&rho)))
        .collect::<Result<Vec<_>>>()?;
    QuantumModel::new(rho, derivs, RealMatrix::from_diagonal(&DVector::from_vec(g.to_vec())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::compute_sld;

    #[test]
    fn random_ds_are_traceless_and_shifted_gram() {
        for n in [2usize, 3, 5, 8] {
            let (d1, d2) = make_random_ds(n, 99).unwrap();
            for d in [&d1, &d2] {
                assert!(d.trace().abs() < 1e-12);
                assert!(d.is_real(0.0));
                let shift = -crate::matrixcore::lambda_min(d).unwrap();
                // D + tr(MᵀM)/n I is a Gram matrix, so the shift is nonnegative
                assert!(shift > -1e-12);
            }
        }
    }

    #[test]
    fn random_ds_deterministic() {
        let a = make_random_ds(3, 1234).unwrap();
        let b = make_random_ds(3, 1234).unwrap();
        assert_eq!(a, b);
        let c = make_random_ds(3, 1235).unwrap();
        assert_ne!(a, c);
        let m = make_random_model(3, 2, 1234).unwrap();
        assert_eq!(m.derivs()[0], a.0);
        assert_eq!(m.derivs()[1], a.1);
    }

    #[test]
    fn random_ds_rejects_small_n() {
        assert!(make_random_ds(1, 0).is_err());
    }

    #[test]
    fn qubit_model_alpha_zero() {
        let m = make_qubit_model([1.0, 1.0, 1.0], 0.0).unwrap();
        assert!((m.rho().as_matrix() - HermitianMatrix::identity(2).scale(0.5).as_matrix()).norm() < 1e-15);
        let want = HermitianMatrix::new(pauli_z()).unwrap().scale(0.5);
        assert!((m.derivs()[2].as_matrix() - want.as_matrix()).norm() < 1e-15);
    }

    #[test]
    fn qubit_model_unit_fisher() {
        for alpha in [0.0, 0.3, 0.5, 0.9] {
            let m = make_qubit_model([1.0, 4.0, 9.0], alpha).unwrap();
            let j = compute_sld(&m).unwrap().j;
            assert!((j - RealMatrix::identity(3, 3)).amax() < 1e-10, "alpha {alpha}");
        }
        assert!(make_qubit_model([1.0, 1.0, 1.0], 1.0).is_err());
        assert!(make_qubit_model([1.0, 1.0, 1.0], -0.1).is_err());
    }
}
