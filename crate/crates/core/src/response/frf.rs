use nalgebra::{Complex, DMatrix, DVector};

use crate::femodel::DeviceModel;
use crate::modal::ReducedModel;
use crate::scalar::Float;

/// Voltage per unit base acceleration over a frequency grid.
#[derive(Debug, Clone)]
pub struct FrfCurve<T> {
    /// Grid [Hz], ascending.
    pub frequencies: Vec<T>,
    /// `H_v` [V s^2/m]
    pub values: Vec<Complex<T>>,
    /// Grid points where the system matrix was singular; the value there is 0.
    pub poles: Vec<usize>,
}

impl<T: Float> FrfCurve<T> {
    pub fn magnitudes(&self) -> Vec<T> {
        self.values.iter().map(|c| c.norm_sqr().sqrt()).collect()
    }

    /// Grid point of maximum magnitude.
    pub fn peak(&self) -> Option<(T, T)> {
        let mags = self.magnitudes();
        let mut best: Option<(usize, T)> = None;
        for (i, &m) in mags.iter().enumerate() {
            if best.is_none_or(|(_, b)| m > b) {
                best = Some((i, m));
            }
        }
        best.map(|(i, m)| (self.frequencies[i], m))
    }
}

/// `i w / (1/R_l + i w C_p)`, the electrical admittance factor.
fn electrical_factor<T: Float>(omega: T, capacitance: T, resistance: T) -> Complex<T> {
    let iw = Complex::new(T::ZERO, omega);
    iw / Complex::new(T::ONE / resistance, omega * capacitance)
}

/// Transfer function of the reduced model at one angular frequency, or `None`
/// at an undamped pole.
pub fn reduced_response<T: Float>(reduced: &ReducedModel<T>, omega: T) -> Option<Complex<T>> {
    if omega == T::ZERO {
        return Some(Complex::new(T::ZERO, T::ZERO));
    }
    let s = electrical_factor(omega, reduced.capacitance, reduced.load_resistance);
    let c = reduced.damping_diag();
    // With a diagonal modal block D, theta^T (D + s theta theta^T)^-1 f
    // collapses to theta^T D^-1 f / (1 + s theta^T D^-1 theta).
    let mut tg = Complex::new(T::ZERO, T::ZERO);
    let mut tu = Complex::new(T::ZERO, T::ZERO);
    for i in 0..reduced.num_modes() {
        let w = reduced.omega[i];
        let d = Complex::new(w * w - omega * omega, omega * c[i]);
        if d.norm_sqr() == T::ZERO {
            return None;
        }
        let th = reduced.coupling[i];
        tg += Complex::new(th * reduced.force[i], T::ZERO) / d;
        tu += Complex::new(th * th, T::ZERO) / d;
    }
    let denom = Complex::new(T::ONE, T::ZERO) + s * tu;
    if denom.norm_sqr() == T::ZERO {
        return None;
    }
    Some(s * tg / denom)
}

fn collect<T: Float, F: Fn(T) -> Option<Complex<T>>>(grid_hz: &[T], eval: F) -> FrfCurve<T> {
    let two_pi = T::TWO * T::pi();
    let mut values = Vec::with_capacity(grid_hz.len());
    let mut poles = Vec::new();
    for (i, &f) in grid_hz.iter().enumerate() {
        match eval(two_pi * f) {
            Some(v) => values.push(v),
            None => {
                poles.push(i);
                values.push(Complex::new(T::ZERO, T::ZERO));
            }
        }
    }
    FrfCurve {
        frequencies: grid_hz.to_vec(),
        values,
        poles,
    }
}

/// Voltage FRF of the reduced model on a grid in Hz.
pub fn frf<T: Float>(reduced: &ReducedModel<T>, grid_hz: &[T]) -> FrfCurve<T> {
    collect(grid_hz, |w| reduced_response(reduced, w))
}

/// Voltage FRF of the unreduced clamped system, solving the full complex
/// system at each frequency.
pub fn frf_full<T: Float>(model: &DeviceModel<T>, grid_hz: &[T]) -> FrfCurve<T> {
    let m = model.constrained_mass();
    let k = model.constrained_stiffness();
    let c = model.constrained_damping();
    let theta = model.constrained_coupling();
    let force = model.constrained_force();
    let n = m.nrows();
    let theta_c: DVector<Complex<T>> = theta.map(|x| Complex::new(x, T::ZERO));
    let force_c: DVector<Complex<T>> = force.map(|x| Complex::new(x, T::ZERO));
    collect(grid_hz, |omega| {
        if omega == T::ZERO {
            return Some(Complex::new(T::ZERO, T::ZERO));
        }
        let s = electrical_factor(omega, model.capacitance, model.load_resistance);
        let a = DMatrix::from_fn(n, n, |i, j| {
            Complex::new(k[(i, j)] - omega * omega * m[(i, j)], omega * c[(i, j)]) + s * theta_c[i] * theta_c[j]
        });
        let x = a.lu().solve(&force_c)?;
        Some(s * theta_c.dot(&x))
    })
}

/// Uniform grid `[start, stop]` with `count` points.
pub fn linear_grid<T: Float>(start: T, stop: T, count: usize) -> Vec<T> {
    if count < 2 {
        return vec![start];
    }
    let step = (stop - start) / T::lit((count - 1) as f64);
    (0..count).map(|i| start + step * T::lit(i as f64)).collect()
}
