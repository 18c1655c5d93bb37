//! Adaptive Dormand-Prince 5(4) integrator.

use crate::error::{Error, Result};
use crate::scalar::Float;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// difference between the 5th and embedded 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrator tolerances.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rtol: 1e-6, atol: 1e-9 }
    }
}

/// Dormand-Prince stepper that keeps its step size across calls, so a long
/// record can be integrated interval by interval.
#[derive(Debug, Clone)]
pub struct Dopri5<T: Float> {
    tol: Tolerances,
    h: Option<T>,
    k: [Vec<T>; 7],
    tmp: Vec<T>,
    y_new: Vec<T>,
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

impl<T: Float> Dopri5<T> {
    pub fn new(dim: usize, tol: Tolerances) -> Self {
        Self {
            tol,
            h: None,
            k: std::array::from_fn(|_| vec![T::ZERO; dim]),
            tmp: vec![T::ZERO; dim],
            y_new: vec![T::ZERO; dim],
            accepted: 0,
            rejected: 0,
            evaluations: 0,
        }
    }

    fn stage(&mut self, y: &[T], h: T, coeffs: &[f64]) {
        for i in 0..y.len() {
            let mut s = T::ZERO;
            for (j, &c) in coeffs.iter().enumerate() {
                if c != 0.0 {
                    s += T::lit(c) * self.k[j][i];
                }
            }
            self.tmp[i] = y[i] + h * s;
        }
    }

    /// Advances `y` from `t0` to `t1` in place.
    pub fn integrate<F>(&mut self, f: &mut F, t0: T, t1: T, y: &mut [T]) -> Result<()>
    where
        F: FnMut(T, &[T], &mut [T]),
    {
        let span = t1 - t0;
        if span <= T::ZERO {
            return Ok(());
        }
        let rtol = T::lit(self.tol.rtol);
        let atol = T::lit(self.tol.atol);
        let n = y.len();
        let mut t = t0;
        let mut h = self.h.unwrap_or(span).min(span);
        let h_min = T::lit(1e-14).max(span * T::lit(1e-12));
        f(t, y, &mut self.k[0]);
        self.evaluations += 1;
        loop {
            let planned = h;
            let last = t + h >= t1 - span * T::lit(1e-12);
            if last {
                h = t1 - t;
            }
            self.stage(y, h, &[A21]);
            f(t + T::lit(C2) * h, &self.tmp, &mut self.k[1]);
            self.stage(y, h, &[A31, A32]);
            f(t + T::lit(C3) * h, &self.tmp, &mut self.k[2]);
            self.stage(y, h, &[A41, A42, A43]);
            f(t + T::lit(C4) * h, &self.tmp, &mut self.k[3]);
            self.stage(y, h, &[A51, A52, A53, A54]);
            f(t + T::lit(C5) * h, &self.tmp, &mut self.k[4]);
            self.stage(y, h, &[A61, A62, A63, A64, A65]);
            f(t + h, &self.tmp, &mut self.k[5]);
            self.stage(y, h, &[B1, 0.0, B3, B4, B5, B6]);
            self.y_new.copy_from_slice(&self.tmp);
            f(t + h, &self.y_new, &mut self.k[6]);
            self.evaluations += 6;

            let mut err = T::ZERO;
            for i in 0..n {
                let e = h
                    * (T::lit(E1) * self.k[0][i]
                        + T::lit(E3) * self.k[2][i]
                        + T::lit(E4) * self.k[3][i]
                        + T::lit(E5) * self.k[4][i]
                        + T::lit(E6) * self.k[5][i]
                        + T::lit(E7) * self.k[6][i]);
                let sc = atol + rtol * y[i].abs().max(self.y_new[i].abs());
                let r = e / sc;
                err += r * r;
            }
            err = (err / T::lit(n as f64)).sqrt();

            if err <= T::ONE {
                t = if last { t1 } else { t + h };
                y.copy_from_slice(&self.y_new);
                let (k0, rest) = self.k.split_at_mut(1);
                k0[0].copy_from_slice(&rest[5]);
                self.accepted += 1;
                let fac = if err == T::ZERO {
                    T::lit(5.0)
                } else {
                    (T::lit(0.9) * err.powf(T::lit(-0.2))).min(T::lit(5.0)).max(T::lit(0.2))
                };
                let grown = h * fac;
                if last {
                    // a step clipped to the interval end says little about the next one
                    self.h = Some(if h < planned { planned } else { grown });
                    return Ok(());
                }
                h = grown;
                self.h = Some(h);
            } else {
                self.rejected += 1;
                let fac = (T::lit(0.9) * err.powf(T::lit(-0.2))).max(T::lit(0.1));
                h *= fac;
                if h < h_min || !h.is_finite() {
                    return Err(Error::Stiffness {
                        time: t.as_f64(),
                        step: h.as_f64(),
                    });
                }
            }
        }
    }
}
