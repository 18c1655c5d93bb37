use crate::error::{Error, Result};
use crate::scalar::Float;

/// Open (clamped) knot vector of a univariate B-spline basis.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector<T> {
    degree: usize,
    knots: Vec<T>,
}

impl<T: Float> KnotVector<T> {
    /// Validates an explicit knot sequence.
    pub fn new(degree: usize, knots: Vec<T>) -> Result<Self> {
        if knots.len() < 2 * (degree + 1) {
            return Err(Error::Mesh(format!("{} knots cannot carry a degree-{degree} basis", knots.len())));
        }
        if knots.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Mesh("knot sequence is decreasing".into()));
        }
        let first = knots[0];
        let last = knots[knots.len() - 1];
        if knots[..=degree].iter().any(|&k| k != first) || knots[knots.len() - degree - 1..].iter().any(|&k| k != last) {
            return Err(Error::Mesh("knot vector is not open".into()));
        }
        Ok(Self { degree, knots })
    }

    /// Uniform open knot vector on `[0, 1]` with `spans` elements and an
    /// optional extra interior knot. An extra knot that coincides with an
    /// existing breakpoint is merged.
    pub fn uniform(degree: usize, spans: usize, extra: Option<T>) -> Result<Self> {
        if spans == 0 {
            return Err(Error::Mesh("at least one knot span is required".into()));
        }
        let mut breaks: Vec<T> = (0..=spans).map(|i| T::lit(i as f64 / spans as f64)).collect();
        if let Some(x) = extra {
            if !(x >= T::ZERO && x <= T::ONE) {
                return Err(Error::Mesh(format!("interface knot {} outside [0, 1]", x.as_f64())));
            }
            let tol = T::lit(1e-9);
            if breaks.iter().all(|&b| (b - x).abs() > tol) {
                breaks.push(x);
                breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
            }
        }
        let mut knots = Vec::with_capacity(breaks.len() + 2 * degree);
        knots.extend(std::iter::repeat_n(T::ZERO, degree));
        knots.extend(breaks);
        knots.extend(std::iter::repeat_n(T::ONE, degree));
        Self::new(degree, knots)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[T] {
        &self.knots
    }

    /// Number of basis functions.
    pub fn len(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Distinct breakpoints, i.e. element boundaries.
    pub fn breakpoints(&self) -> Vec<T> {
        let mut out: Vec<T> = Vec::new();
        for &k in &self.knots {
            if out.last().is_none_or(|&l| k > l) {
                out.push(k);
            }
        }
        out
    }

    /// Greville abscissae; placing control points here reproduces the identity map.
    pub fn greville(&self) -> Vec<T> {
        let p = self.degree;
        let denom = T::lit(p as f64);
        (0..self.len())
            .map(|i| self.knots[i + 1..=i + p].iter().fold(T::ZERO, |acc, &k| acc + k) / denom)
            .collect()
    }

    /// Knot span index `s` with `knots[s] <= u < knots[s+1]`, using the last
    /// non-empty span at the right end.
    pub fn find_span(&self, u: T) -> usize {
        let n = self.len() - 1;
        let p = self.degree;
        if u >= self.knots[n + 1] {
            return n;
        }
        if u <= self.knots[p] {
            return p;
        }
        let (mut lo, mut hi) = (p, n + 1);
        let mut mid = (lo + hi) / 2;
        while u < self.knots[mid] || u >= self.knots[mid + 1] {
            if u < self.knots[mid] {
                hi = mid;
            } else {
                lo = mid;
            }
            mid = (lo + hi) / 2;
        }
        mid
    }

    /// Non-zero basis functions at `u` and their derivatives up to `order`.
    /// Returns `(span, ders)` where `ders[k][j]` is the `k`-th derivative of
    /// basis function `span - degree + j`.
    pub fn basis_derivatives(&self, u: T, order: usize) -> (usize, Vec<Vec<T>>) {
        let p = self.degree;
        let span = self.find_span(u);
        let k = &self.knots;

        let mut ndu = vec![vec![T::ZERO; p + 1]; p + 1];
        let mut left = vec![T::ZERO; p + 1];
        let mut right = vec![T::ZERO; p + 1];
        ndu[0][0] = T::ONE;
        for j in 1..=p {
            left[j] = u - k[span + 1 - j];
            right[j] = k[span + j] - u;
            let mut saved = T::ZERO;
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }

        let n = order.min(p);
        let mut ders = vec![vec![T::ZERO; p + 1]; order + 1];
        for j in 0..=p {
            ders[0][j] = ndu[j][p];
        }
        let mut a = vec![vec![T::ZERO; p + 1]; 2];
        for r in 0..=p {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0][0] = T::ONE;
            for kk in 1..=n {
                let mut d = T::ZERO;
                let rk = r as isize - kk as isize;
                let pk = p - kk;
                if r >= kk {
                    a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                    d = a[s2][0] * ndu[rk as usize][pk];
                }
                let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
                let j2 = if (r as isize - 1) <= pk as isize { kk - 1 } else { p - r };
                for j in j1..=j2 {
                    let idx = (rk + j as isize) as usize;
                    a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                    d += a[s2][j] * ndu[idx][pk];
                }
                if r <= pk {
                    a[s2][kk] = -a[s1][kk - 1] / ndu[pk + 1][r];
                    d += a[s2][kk] * ndu[r][pk];
                }
                ders[kk][r] = d;
                std::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut factor = T::lit(p as f64);
        for kk in 1..=n {
            for v in ders[kk].iter_mut() {
                *v *= factor;
            }
            factor *= T::lit((p - kk) as f64);
        }
        (span, ders)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_four_spans_has_seven_functions() {
        let kv = KnotVector::<f64>::uniform(3, 4, Some(0.5)).unwrap();
        assert_eq!(kv.len(), 7);
        let kv = KnotVector::<f64>::uniform(3, 4, Some(0.3)).unwrap();
        assert_eq!(kv.len(), 8);
        assert_eq!(kv.breakpoints().len(), 6);
    }

    #[test]
    fn rejects_closed_vector() {
        assert!(KnotVector::<f64>::new(2, vec![0.0, 0.0, 0.5, 1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn endpoint_interpolation() {
        let kv = KnotVector::<f64>::uniform(3, 5, None).unwrap();
        let (span, d) = kv.basis_derivatives(0.0, 2);
        assert_eq!(span, 3);
        assert_eq!(d[0], vec![1.0, 0.0, 0.0, 0.0]);
        let (span, d) = kv.basis_derivatives(1.0, 0);
        assert_eq!(span, kv.len() - 1);
        assert!((d[0][3] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let kv = KnotVector::<f64>::uniform(3, 6, Some(0.37)).unwrap();
        for &u in &[0.05, 0.2, 0.41, 0.66, 0.93] {
            let (span, d) = kv.basis_derivatives(u, 2);
            let h = 1e-6;
            let (s1, dp) = kv.basis_derivatives(u + h, 1);
            let (s0, dm) = kv.basis_derivatives(u - h, 1);
            assert_eq!((s0, s1), (span, span));
            for j in 0..4 {
                let fd1 = (dp[0][j] - dm[0][j]) / (2.0 * h);
                let fd2 = (dp[1][j] - dm[1][j]) / (2.0 * h);
                assert!((fd1 - d[1][j]).abs() < 1e-6 * (1.0 + d[1][j].abs()));
                assert!((fd2 - d[2][j]).abs() < 1e-5 * (1.0 + d[2][j].abs()));
            }
        }
    }
}
