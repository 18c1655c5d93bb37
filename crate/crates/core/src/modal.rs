//! Modal truncation of the clamped device.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::femodel::DeviceModel;
use crate::scalar::Float;

/// Default number of retained modes.
pub const DEFAULT_MODES: usize = 5;

/// Mass-normalized modal model with Rayleigh modal damping.
#[derive(Debug, Clone)]
pub struct ReducedModel<T: Float> {
    /// Mode shapes on the free DOFs, one column per mode.
    pub modes: DMatrix<T>,
    /// Natural angular frequencies [rad/s], ascending.
    pub omega: Vec<T>,
    pub zeta: Vec<T>,
    /// Modal coupling `Phi^T Theta`.
    pub coupling: DVector<T>,
    /// Modal participation `Phi^T F`.
    pub force: DVector<T>,
    pub capacitance: T,
    pub load_resistance: T,
}

impl<T: Float> ReducedModel<T> {
    pub fn num_modes(&self) -> usize {
        self.omega.len()
    }

    /// Diagonal of the reduced stiffness, `omega_i^2`.
    pub fn stiffness_diag(&self) -> Vec<T> {
        self.omega.iter().map(|&w| w * w).collect()
    }

    /// Diagonal of the reduced damping, `2 zeta_i omega_i`.
    pub fn damping_diag(&self) -> Vec<T> {
        self.omega.iter().zip(&self.zeta).map(|(&w, &z)| T::TWO * z * w).collect()
    }

    /// Natural frequencies in Hz.
    pub fn frequencies_hz(&self) -> Vec<f64> {
        self.omega.iter().map(|w| w.as_f64() / (2.0 * std::f64::consts::PI)).collect()
    }

    pub fn fundamental_hz(&self) -> f64 {
        self.frequencies_hz()[0]
    }

    pub fn with_load_resistance(mut self, r: T) -> Self {
        self.load_resistance = r;
        self
    }

    /// Keeps only the first `k` modes.
    pub fn truncate(&self, k: usize) -> Self {
        let k = k.clamp(1, self.num_modes());
        Self {
            modes: self.modes.columns(0, k).into_owned(),
            omega: self.omega[..k].to_vec(),
            zeta: self.zeta[..k].to_vec(),
            coupling: self.coupling.rows(0, k).into_owned(),
            force: self.force.rows(0, k).into_owned(),
            capacitance: self.capacitance,
            load_resistance: self.load_resistance,
        }
    }
}

/// Rayleigh modal damping ratio.
pub fn rayleigh_ratio<T: Float>(alpha: T, beta: T, omega: T) -> T {
    alpha / (T::TWO * omega) + beta * omega * T::HALF
}

/// Sorted eigenpairs of the constrained pencil `(K, M)`, modes mass-normalized.
pub fn generalized_eigen<T: Float>(k: &DMatrix<T>, m: &DMatrix<T>) -> Result<(Vec<T>, DMatrix<T>)> {
    let n = m.nrows();
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Eigen("mass matrix is not positive definite".into()))?;
    let l = chol.l();
    // A = L^-1 K L^-T
    let mut tmp = k.clone();
    if !l.solve_lower_triangular_mut(&mut tmp) {
        return Err(Error::Eigen("singular Cholesky factor".into()));
    }
    let mut a = tmp.transpose();
    if !l.solve_lower_triangular_mut(&mut a) {
        return Err(Error::Eigen("singular Cholesky factor".into()));
    }
    let a = (&a + a.transpose()) * T::HALF;
    let eig = SymmetricEigen::try_new(a, T::eps(), 0)
        .ok_or_else(|| Error::Eigen(format!("symmetric eigensolver did not converge on {n} DOFs")))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap_or(std::cmp::Ordering::Equal));
    let values: Vec<T> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut y = DMatrix::<T>::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        y.set_column(c, &eig.eigenvectors.column(i));
    }
    // phi = L^-T y
    let lt = l.transpose();
    if !lt.solve_upper_triangular_mut(&mut y) {
        return Err(Error::Eigen("singular Cholesky factor".into()));
    }
    Ok((values, y))
}

/// Solves for the lowest `count` modes and builds the reduced system.
pub fn solve_modes<T: Float>(model: &DeviceModel<T>, count: usize) -> Result<ReducedModel<T>> {
    let n = model.num_free();
    if count == 0 || count > n {
        return Err(Error::Argument(format!("mode count {count} outside 1..={n}")));
    }
    let m = model.constrained_mass();
    let k = model.constrained_stiffness();
    let (values, vectors) = generalized_eigen(&k, &m)?;
    if values.iter().take(count).any(|v| !(*v > T::ZERO) || !v.is_finite()) {
        let diag_max = (0..n).map(|i| k[(i, i)]).fold(T::ZERO, |a, b| a.max(b));
        let diag_min = (0..n).map(|i| k[(i, i)]).fold(diag_max, |a, b| a.min(b));
        return Err(Error::Eigen(format!(
            "non-positive eigenvalue {:e}; stiffness diagonal spread {:e}",
            values[0].as_f64(),
            (diag_max / diag_min).as_f64()
        )));
    }
    let modes = vectors.columns(0, count).into_owned();
    let omega: Vec<T> = values[..count].iter().map(|v| v.sqrt()).collect();
    let alpha = T::lit(model.materials.damping.alpha);
    let beta = T::lit(model.materials.damping.beta);
    let zeta = omega.iter().map(|&w| rayleigh_ratio(alpha, beta, w)).collect();
    let coupling = modes.tr_mul(&model.constrained_coupling());
    let force = modes.tr_mul(&model.constrained_force());
    Ok(ReducedModel {
        modes,
        omega,
        zeta,
        coupling,
        force,
        capacitance: model.capacitance,
        load_resistance: model.load_resistance,
    })
}

/// Lowest natural frequency [Hz].
pub fn fundamental_frequency<T: Float>(model: &DeviceModel<T>) -> Result<f64> {
    Ok(solve_modes(model, 1)?.fundamental_hz())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rayleigh_arithmetic() {
        let z: f64 = rayleigh_ratio(14.65, 1e-5, 13.19);
        assert!((z - 0.55539).abs() < 5e-5);
    }

    #[test]
    fn eigen_of_diagonal_pencil() {
        let k = DMatrix::from_diagonal(&DVector::from_vec(vec![9.0, 4.0, 1.0]));
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 4.0]));
        let (v, phi): (Vec<f64>, _) = generalized_eigen(&k, &m).unwrap();
        assert!((v[0] - 0.25).abs() < 1e-14 && (v[1] - 4.0).abs() < 1e-14 && (v[2] - 9.0).abs() < 1e-14);
        let g = phi.transpose() * &m * &phi;
        assert!((g - DMatrix::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn mode_count_is_checked() {
        use crate::femodel::*;
        use crate::geometry::ShapeParams;
        let dims = ShapeParams::square(0.3, 0.5, 0.2).unwrap().expand().unwrap();
        let m: DeviceModel<f64> = build_device(&dims, &MaterialSet::default(), &MeshSettings::default(), 1000.0, &AssemblyOptions::default()).unwrap();
        assert!(solve_modes(&m, 0).is_err());
        assert!(solve_modes(&m, m.num_free() + 1).is_err());
    }
}
