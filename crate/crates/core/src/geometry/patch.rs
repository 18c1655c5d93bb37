use super::knots::KnotVector;
use super::quadrature::gauss_on;
use crate::error::{Error, Result};
use crate::scalar::Float;

/// Tensor-product NURBS patch over a rectangle `[0, L] x [0, W]`.
///
/// Control points sit at the Greville abscissae with unit weights, so the
/// geometric map is the affine scaling `x = L u`, `y = W v`. Control point
/// `I = j * nu + i` carries index `i` along the length and `j` across the width.
#[derive(Debug, Clone)]
pub struct NurbsPatch<T> {
    u: KnotVector<T>,
    v: KnotVector<T>,
    control_points: Vec<[T; 2]>,
    weights: Vec<T>,
    length: T,
    width: T,
    interface: Option<T>,
}

/// Non-zero basis functions at a point, with physical-space derivatives.
#[derive(Debug, Clone)]
pub struct BasisValues<T> {
    /// Global control-point indices of the non-zero functions.
    pub indices: Vec<usize>,
    pub n: Vec<T>,
    pub dx: Vec<T>,
    pub dy: Vec<T>,
    pub dxx: Vec<T>,
    pub dyy: Vec<T>,
    pub dxy: Vec<T>,
}

impl<T: Float> NurbsPatch<T> {
    /// Rectangle `[0, length] x [0, width]` with uniform spans, plus an interior
    /// knot at normalized position `interface` along the length.
    pub fn rectangle(length: T, width: T, degrees: (usize, usize), elements: (usize, usize), interface: Option<T>) -> Result<Self> {
        let (p, q) = degrees;
        if p < 2 || q < 2 {
            return Err(Error::Continuity(p.min(q)));
        }
        if elements.0 < 2 || elements.1 < 2 {
            return Err(Error::Mesh(format!("need at least 2x2 elements, got {}x{}", elements.0, elements.1)));
        }
        if !(length > T::ZERO && width > T::ZERO) {
            return Err(Error::Mesh("rectangle sides must be positive".into()));
        }
        // An interface at the clamped or free end needs no extra knot.
        let interface = interface.filter(|&x| x > T::ZERO && x < T::ONE);
        let u = KnotVector::uniform(p, elements.0, interface)?;
        let v = KnotVector::uniform(q, elements.1, None)?;
        let gu = u.greville();
        let gv = v.greville();
        let mut control_points = Vec::with_capacity(gu.len() * gv.len());
        for &b in &gv {
            for &a in &gu {
                control_points.push([a * length, b * width]);
            }
        }
        let weights = vec![T::ONE; control_points.len()];
        Ok(Self {
            u,
            v,
            control_points,
            weights,
            length,
            width,
            interface,
        })
    }

    pub fn degrees(&self) -> (usize, usize) {
        (self.u.degree(), self.v.degree())
    }

    pub fn knots_u(&self) -> &KnotVector<T> {
        &self.u
    }

    pub fn knots_v(&self) -> &KnotVector<T> {
        &self.v
    }

    /// Control points per direction `(along length, across width)`.
    pub fn shape(&self) -> (usize, usize) {
        (self.u.len(), self.v.len())
    }

    pub fn num_control_points(&self) -> usize {
        self.control_points.len()
    }

    pub fn control_points(&self) -> &[[T; 2]] {
        &self.control_points
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn length(&self) -> T {
        self.length
    }

    pub fn width(&self) -> T {
        self.width
    }

    /// Normalized interface position, if a piezo boundary is inside the plate.
    pub fn interface(&self) -> Option<T> {
        self.interface
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.u.len() + i
    }

    /// Elements as parametric rectangles `([u0, u1], [v0, v1])`.
    pub fn elements(&self) -> Vec<([T; 2], [T; 2])> {
        let bu = self.u.breakpoints();
        let bv = self.v.breakpoints();
        let mut out = Vec::with_capacity((bu.len() - 1) * (bv.len() - 1));
        for wv in bv.windows(2) {
            for wu in bu.windows(2) {
                out.push(([wu[0], wu[1]], [wv[0], wv[1]]));
            }
        }
        out
    }

    /// Tensor Gauss points of one element: `(u, v, physical weight)`.
    pub fn element_quadrature(&self, element: &([T; 2], [T; 2]), points: (usize, usize)) -> Vec<(T, T, T)> {
        let qu = gauss_on(points.0, element.0[0], element.0[1]);
        let qv = gauss_on(points.1, element.1[0], element.1[1]);
        let jac = self.length * self.width;
        let mut out = Vec::with_capacity(qu.len() * qv.len());
        for &(v, wv) in &qv {
            for &(u, wu) in &qu {
                out.push((u, v, wu * wv * jac));
            }
        }
        out
    }

    /// Physical coordinates of parametric point `(u, v)` from the control net.
    pub fn point(&self, u: T, v: T) -> Result<[T; 2]> {
        let b = self.eval_basis(u, v, 0)?;
        let mut x = [T::ZERO; 2];
        for (k, &idx) in b.indices.iter().enumerate() {
            x[0] += b.n[k] * self.control_points[idx][0];
            x[1] += b.n[k] * self.control_points[idx][1];
        }
        Ok(x)
    }

    /// Rational basis functions at `(u, v)` and their physical derivatives up
    /// to `order` (0, 1 or 2). Unrequested derivatives are left empty.
    pub fn eval_basis(&self, u: T, v: T, order: usize) -> Result<BasisValues<T>> {
        if !(u >= T::ZERO && u <= T::ONE && v >= T::ZERO && v <= T::ONE) {
            return Err(Error::Domain(u.as_f64(), v.as_f64()));
        }
        if order > 2 {
            return Err(Error::Argument(format!("derivative order {order} not supported")));
        }
        let (p, q) = self.degrees();
        let (su, du) = self.u.basis_derivatives(u, order);
        let (sv, dv) = self.v.basis_derivatives(v, order);
        let nloc = (p + 1) * (q + 1);

        let mut indices = Vec::with_capacity(nloc);
        // Weighted tensor products and their parametric derivatives.
        let mut a = vec![T::ZERO; nloc];
        let mut a_u = vec![T::ZERO; nloc];
        let mut a_v = vec![T::ZERO; nloc];
        let mut a_uu = vec![T::ZERO; nloc];
        let mut a_vv = vec![T::ZERO; nloc];
        let mut a_uv = vec![T::ZERO; nloc];
        for jb in 0..=q {
            for ib in 0..=p {
                let k = jb * (p + 1) + ib;
                let idx = self.index(su - p + ib, sv - q + jb);
                let w = self.weights[idx];
                indices.push(idx);
                a[k] = du[0][ib] * dv[0][jb] * w;
                if order >= 1 {
                    a_u[k] = du[1][ib] * dv[0][jb] * w;
                    a_v[k] = du[0][ib] * dv[1][jb] * w;
                }
                if order >= 2 {
                    a_uu[k] = du[2][ib] * dv[0][jb] * w;
                    a_vv[k] = du[0][ib] * dv[2][jb] * w;
                    a_uv[k] = du[1][ib] * dv[1][jb] * w;
                }
            }
        }
        let sum = |x: &[T]| x.iter().fold(T::ZERO, |s, &y| s + y);
        let w0 = sum(&a);
        let (w_u, w_v, w_uu, w_vv, w_uv) = (sum(&a_u), sum(&a_v), sum(&a_uu), sum(&a_vv), sum(&a_uv));

        let n: Vec<T> = a.iter().map(|&x| x / w0).collect();
        let mut out = BasisValues {
            indices,
            n,
            dx: Vec::new(),
            dy: Vec::new(),
            dxx: Vec::new(),
            dyy: Vec::new(),
            dxy: Vec::new(),
        };
        if order == 0 {
            return Ok(out);
        }
        // Quotient rule in parametric space, then the affine map to physical space.
        let sx = T::ONE / self.length;
        let sy = T::ONE / self.width;
        let r_u: Vec<T> = (0..nloc).map(|k| (a_u[k] - out.n[k] * w_u) / w0).collect();
        let r_v: Vec<T> = (0..nloc).map(|k| (a_v[k] - out.n[k] * w_v) / w0).collect();
        if order >= 2 {
            out.dxx = (0..nloc)
                .map(|k| (a_uu[k] - T::TWO * r_u[k] * w_u - out.n[k] * w_uu) / w0 * sx * sx)
                .collect();
            out.dyy = (0..nloc)
                .map(|k| (a_vv[k] - T::TWO * r_v[k] * w_v - out.n[k] * w_vv) / w0 * sy * sy)
                .collect();
            out.dxy = (0..nloc)
                .map(|k| (a_uv[k] - r_u[k] * w_v - r_v[k] * w_u - out.n[k] * w_uv) / w0 * sx * sy)
                .collect();
        }
        out.dx = r_u.into_iter().map(|x| x * sx).collect();
        out.dy = r_v.into_iter().map(|x| x * sy).collect();
        Ok(out)
    }

    /// Evaluates `sum_I N_I(u, v) c_I` for control coefficients `c`.
    pub fn evaluate(&self, coeffs: &[T], u: T, v: T) -> Result<T> {
        let b = self.eval_basis(u, v, 0)?;
        Ok(b.indices.iter().zip(&b.n).fold(T::ZERO, |s, (&i, &n)| s + n * coeffs[i]))
    }
}
