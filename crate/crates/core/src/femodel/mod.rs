//! Coupled electromechanical system of the cantilevered bimorph.

mod materials;

pub use materials::{Damping, MaterialSet, Piezo, Substrate};

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DeviceDimensions, NurbsPatch};
use crate::scalar::Float;

/// Default load resistance [Ohm].
pub const DEFAULT_LOAD_RESISTANCE: f64 = 1000.0;

/// Through-thickness weight of the coupling integrand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingWeight {
    /// First moment of each piezo layer with the series voltage split,
    /// `((h/2)^2 - (h_s/2)^2) / 2`.
    #[default]
    FirstMoment,
    /// Second moment of the layer pair, `(2/3)((h/2)^3 - (h_s/2)^3)`.
    ZSquared,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AssemblyOptions {
    pub coupling: CouplingWeight,
    /// Gauss points added per direction on top of `degree + 1`.
    pub extra_quadrature: usize,
}

/// Assembled mass, stiffness, coupling and force of one device, over all
/// control points. The clamp is applied by restricting to `free_dofs`.
#[derive(Debug, Clone)]
pub struct DeviceModel<T: Float> {
    pub mass: DMatrix<T>,
    pub stiffness: DMatrix<T>,
    pub coupling: DVector<T>,
    pub force: DVector<T>,
    /// `C_p` [F]
    pub capacitance: T,
    /// `R_l` [Ohm]
    pub load_resistance: T,
    pub free_dofs: Vec<usize>,
    pub patch: NurbsPatch<T>,
    pub dims: DeviceDimensions<T>,
    pub materials: MaterialSet,
}

impl<T: Float> DeviceModel<T> {
    pub fn num_dofs(&self) -> usize {
        self.mass.nrows()
    }

    pub fn num_free(&self) -> usize {
        self.free_dofs.len()
    }

    fn restrict_matrix(&self, m: &DMatrix<T>) -> DMatrix<T> {
        let n = self.free_dofs.len();
        DMatrix::from_fn(n, n, |i, j| m[(self.free_dofs[i], self.free_dofs[j])])
    }

    fn restrict_vector(&self, v: &DVector<T>) -> DVector<T> {
        DVector::from_iterator(self.free_dofs.len(), self.free_dofs.iter().map(|&i| v[i]))
    }

    pub fn constrained_mass(&self) -> DMatrix<T> {
        self.restrict_matrix(&self.mass)
    }

    pub fn constrained_stiffness(&self) -> DMatrix<T> {
        self.restrict_matrix(&self.stiffness)
    }

    pub fn constrained_coupling(&self) -> DVector<T> {
        self.restrict_vector(&self.coupling)
    }

    pub fn constrained_force(&self) -> DVector<T> {
        self.restrict_vector(&self.force)
    }

    /// Rayleigh damping `alpha M + beta K` on the free DOFs.
    pub fn constrained_damping(&self) -> DMatrix<T> {
        let a = T::lit(self.materials.damping.alpha);
        let b = T::lit(self.materials.damping.beta);
        self.constrained_mass() * a + self.constrained_stiffness() * b
    }

    /// Copy with a different load resistance.
    pub fn with_load_resistance(mut self, r: T) -> Self {
        self.load_resistance = r;
        self
    }
}

/// Capacitance of the series-connected piezo pair, each layer a parallel-plate
/// capacitor over the electroded area `L_pzt x W`.
pub fn capacitance<T: Float>(dims: &DeviceDimensions<T>, mats: &MaterialSet) -> T {
    let eps = T::lit(mats.piezo.permittivity);
    eps * dims.piezo_length * dims.width / (T::TWO * dims.piezo_thickness)
}

/// Per-area section properties of the laminate.
#[derive(Debug, Clone, Copy)]
struct Section<T: Float> {
    /// translational inertia [kg/m^2]
    inertia: T,
    /// rotary inertia [kg]
    rotary: T,
    /// bending stiffness [N m]
    bending: Matrix3<T>,
    /// coupling row `z_w e^T Z` [C/m^2]
    coupling: Vector3<T>,
}

/// Bare-substrate and piezo-covered sections.
fn sections<T: Float>(dims: &DeviceDimensions<T>, mats: &MaterialSet, options: &AssemblyOptions) -> (Section<T>, Section<T>) {
    let h_s = dims.substrate_thickness;
    let h_p = dims.piezo_thickness;
    let half = dims.total_thickness() * T::HALF;
    let half_s = h_s * T::HALF;
    let twelve = T::lit(12.0);
    let rho_s = T::lit(mats.substrate.density);
    let rho_p = T::lit(mats.piezo.density);
    // second moment of the piezo pair about the mid-plane
    let pair_second = T::lit(2.0 / 3.0) * (half * half * half - half_s * half_s * half_s);
    let first_moment = (half * half - half_s * half_s) * T::HALF;
    let z_weight = match options.coupling {
        CouplingWeight::FirstMoment => first_moment,
        CouplingWeight::ZSquared => pair_second,
    };
    let substrate_bend = mats.substrate_matrix::<T>() * (h_s * h_s * h_s / twelve);
    let e_z = Vector3::new(T::lit(mats.piezo.e31) / h_p, T::lit(mats.piezo.e32) / h_p, T::ZERO);

    let bare = Section {
        inertia: rho_s * h_s,
        rotary: rho_s * h_s * h_s * h_s / twelve,
        bending: substrate_bend,
        coupling: Vector3::zeros(),
    };
    let covered = Section {
        inertia: bare.inertia + T::TWO * rho_p * h_p,
        rotary: bare.rotary + rho_p * pair_second,
        bending: substrate_bend + mats.piezo_matrix::<T>() * pair_second,
        coupling: e_z * z_weight,
    };
    (bare, covered)
}

fn check_inputs<T: Float>(patch: &NurbsPatch<T>, dims: &DeviceDimensions<T>, mats: &MaterialSet, load_resistance: T) -> Result<()> {
    mats.validate()?;
    if !(load_resistance > T::ZERO) {
        return Err(Error::Argument("load resistance must be positive".into()));
    }
    if !(dims.piezo_thickness > T::ZERO && dims.substrate_thickness > T::ZERO) {
        return Err(Error::Argument("layer thicknesses must be positive".into()));
    }
    if (patch.length() - dims.length).abs() > T::lit(1e-12) * dims.length
        || (patch.width() - dims.width).abs() > T::lit(1e-12) * dims.width
    {
        return Err(Error::Mesh("patch does not match the device outline".into()));
    }
    let ratio = dims.interface_ratio();
    let tol = T::lit(1e-9);
    let interior = ratio > tol && ratio < T::ONE - tol;
    if interior && !patch.knots_u().breakpoints().iter().any(|&b| (b - ratio).abs() <= tol) {
        return Err(Error::Mesh(format!("no element edge at piezo boundary u = {}", ratio.as_f64())));
    }
    Ok(())
}

/// Whether the element spanning `[u0, u1]` along the length lies under the piezo layers.
fn is_covered<T: Float>(u0: T, u1: T, ratio: T) -> bool {
    ratio >= T::ONE - T::lit(1e-9) || (u0 + u1) * T::HALF < ratio
}

/// Applies the root clamp and checks the constrained mass.
#[allow(clippy::too_many_arguments)]
fn finish<T: Float>(
    patch: &NurbsPatch<T>,
    dims: &DeviceDimensions<T>,
    mats: &MaterialSet,
    load_resistance: T,
    mass: DMatrix<T>,
    stiffness: DMatrix<T>,
    coupling: DVector<T>,
    force: DVector<T>,
) -> Result<DeviceModel<T>> {
    // Clamp: deflection and slope vanish on x = 0 through the first two columns.
    let (nu, nv) = patch.shape();
    let free_dofs: Vec<usize> = (0..nv).flat_map(|j| (2..nu).map(move |i| j * nu + i)).collect();
    let model = DeviceModel {
        mass,
        stiffness,
        coupling,
        force,
        capacitance: capacitance(dims, mats),
        load_resistance,
        free_dofs,
        patch: patch.clone(),
        dims: *dims,
        materials: *mats,
    };
    if model.constrained_mass().cholesky().is_none() {
        return Err(Error::Assembly("constrained mass matrix is not positive definite".into()));
    }
    Ok(model)
}

/// Assembles the coupled system.
///
/// Section properties vary only along the length and the patch is an affine
/// B-spline rectangle, so every integral separates into 1D integrals and
/// the global matrices are sums of Kronecker products. Patches with
/// non-unit weights go through [`assemble_direct`].
pub fn assemble<T: Float>(
    patch: &NurbsPatch<T>,
    dims: &DeviceDimensions<T>,
    mats: &MaterialSet,
    load_resistance: T,
    options: &AssemblyOptions,
) -> Result<DeviceModel<T>> {
    if patch.weights().iter().any(|&w| w != T::ONE) {
        return assemble_direct(patch, dims, mats, load_resistance, options);
    }
    check_inputs(patch, dims, mats, load_resistance)?;
    let (bare, covered) = sections(dims, mats, options);
    let ratio = dims.interface_ratio();
    let (p, q) = patch.degrees();
    let extra = options.extra_quadrature;

    let along = Line::new(patch.knots_u(), patch.length(), p + 1 + extra, |u0, u1| {
        if is_covered(u0, u1, ratio) {
            covered
        } else {
            bare
        }
    });
    let across = Line::new(patch.knots_v(), patch.width(), q + 1 + extra, |_, _| bare);

    let x = |d1: usize, d2: usize, f: &dyn Fn(&Section<T>) -> T| along.matrix(d1, d2, f);
    let y = |d1: usize, d2: usize| across.matrix(d1, d2, &|_| T::ONE);
    let y00 = y(0, 0);
    let y11 = y(1, 1);
    let y22 = y(2, 2);
    let y02 = y(0, 2);

    let mass = y00.kronecker(&x(0, 0, &|s| s.inertia)) + y00.kronecker(&x(1, 1, &|s| s.rotary)) + y11.kronecker(&x(0, 0, &|s| s.rotary));
    let x20 = x(2, 0, &|s| s.bending[(0, 1)]);
    let stiffness = y00.kronecker(&x(2, 2, &|s| s.bending[(0, 0)]))
        + y02.kronecker(&x20)
        + y02.transpose().kronecker(&x20.transpose())
        + y22.kronecker(&x(0, 0, &|s| s.bending[(1, 1)]))
        + y11.kronecker(&x(1, 1, &|s| s.bending[(2, 2)])) * T::lit(4.0);

    let yv0 = across.vector(0, &|_| T::ONE);
    let yv2 = across.vector(2, &|_| T::ONE);
    // B = (-w_xx, -w_yy, -2 w_xy); the coupling row has no shear entry
    let coupling = -(yv0.kronecker(&along.vector(2, &|s| s.coupling[0])) + yv2.kronecker(&along.vector(0, &|s| s.coupling[1])));
    let force = yv0.kronecker(&along.vector(0, &|s| s.inertia));

    finish(patch, dims, mats, load_resistance, mass, stiffness, coupling, force)
}

/// Gauss points of one parametric direction, with basis derivatives and the
/// section that applies at each point.
struct Line<T: Float> {
    n: usize,
    points: Vec<LinePoint<T>>,
}

struct LinePoint<T: Float> {
    first: usize,
    /// `ders[k][a]`: k-th physical derivative of basis `first + a`
    ders: Vec<Vec<T>>,
    weight: T,
    section: Section<T>,
}

impl<T: Float> Line<T> {
    fn new(knots: &crate::geometry::KnotVector<T>, extent: T, gauss: usize, section: impl Fn(T, T) -> Section<T>) -> Self {
        let p = knots.degree();
        let scale = T::ONE / extent;
        let mut points = Vec::new();
        for w in knots.breakpoints().windows(2) {
            let sec = section(w[0], w[1]);
            for (u, wt) in crate::geometry::quadrature::gauss_on(gauss, w[0], w[1]) {
                let (span, mut ders) = knots.basis_derivatives(u, 2);
                for (k, row) in ders.iter_mut().enumerate() {
                    let f = (0..k).fold(T::ONE, |a, _| a * scale);
                    row.iter_mut().for_each(|v| *v *= f);
                }
                points.push(LinePoint {
                    first: span - p,
                    ders,
                    weight: wt * extent,
                    section: sec,
                });
            }
        }
        Self { n: knots.len(), points }
    }

    /// `int f(section) N_i^(d1) N_k^(d2)`
    fn matrix(&self, d1: usize, d2: usize, f: &dyn Fn(&Section<T>) -> T) -> DMatrix<T> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for pt in &self.points {
            let c = pt.weight * f(&pt.section);
            if c == T::ZERO {
                continue;
            }
            for (a, &na) in pt.ders[d1].iter().enumerate() {
                for (b, &nb) in pt.ders[d2].iter().enumerate() {
                    m[(pt.first + a, pt.first + b)] += c * na * nb;
                }
            }
        }
        m
    }

    /// `int f(section) N_i^(d)`
    fn vector(&self, d: usize, f: &dyn Fn(&Section<T>) -> T) -> DVector<T> {
        let mut v = DVector::zeros(self.n);
        for pt in &self.points {
            let c = pt.weight * f(&pt.section);
            for (a, &na) in pt.ders[d].iter().enumerate() {
                v[pt.first + a] += c * na;
            }
        }
        v
    }
}

/// Assembles the coupled system by pointwise Gauss quadrature over the 2D
/// elements. Slower than [`assemble`], and valid for any weights.
pub fn assemble_direct<T: Float>(
    patch: &NurbsPatch<T>,
    dims: &DeviceDimensions<T>,
    mats: &MaterialSet,
    load_resistance: T,
    options: &AssemblyOptions,
) -> Result<DeviceModel<T>> {
    check_inputs(patch, dims, mats, load_resistance)?;
    let (bare, covered) = sections(dims, mats, options);
    let ratio = dims.interface_ratio();

    let n = patch.num_control_points();
    let mut mass = DMatrix::<T>::zeros(n, n);
    let mut stiffness = DMatrix::<T>::zeros(n, n);
    let mut coupling = DVector::<T>::zeros(n);
    let mut force = DVector::<T>::zeros(n);

    let (p, q) = patch.degrees();
    let points = (p + 1 + options.extra_quadrature, q + 1 + options.extra_quadrature);
    for element in patch.elements() {
        let sec = if is_covered(element.0[0], element.0[1], ratio) { &covered } else { &bare };
        for (u, v, w) in patch.element_quadrature(&element, points) {
            let b = patch.eval_basis(u, v, 2)?;
            let nloc = b.indices.len();
            let bmat: Vec<Vector3<T>> = (0..nloc)
                .map(|k| Vector3::new(-b.dxx[k], -b.dyy[k], -T::TWO * b.dxy[k]))
                .collect();
            let db: Vec<Vector3<T>> = bmat.iter().map(|bk| sec.bending * bk).collect();
            for a in 0..nloc {
                let ia = b.indices[a];
                force[ia] += w * sec.inertia * b.n[a];
                coupling[ia] += w * bmat[a].dot(&sec.coupling);
                for c in 0..nloc {
                    let ic = b.indices[c];
                    mass[(ia, ic)] += w * (sec.inertia * b.n[a] * b.n[c] + sec.rotary * (b.dx[a] * b.dx[c] + b.dy[a] * b.dy[c]));
                    stiffness[(ia, ic)] += w * bmat[a].dot(&db[c]);
                }
            }
        }
    }
    finish(patch, dims, mats, load_resistance, mass, stiffness, coupling, force)
}

/// Discretization settings for building a device from a shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshSettings {
    pub degrees: (usize, usize),
    pub elements: (usize, usize),
}

impl Default for MeshSettings {
    fn default() -> Self {
        Self {
            degrees: (3, 3),
            elements: (8, 8),
        }
    }
}

/// Patch construction and assembly in one call.
pub fn build_device<T: Float>(
    dims: &DeviceDimensions<T>,
    mats: &MaterialSet,
    mesh: &MeshSettings,
    load_resistance: T,
    options: &AssemblyOptions,
) -> Result<DeviceModel<T>> {
    let patch = crate::geometry::build_patch(dims, mesh.degrees, mesh.elements)?;
    assemble(&patch, dims, mats, load_resistance, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_patch, ShapeParams};

    fn model(shape: ShapeParams, mats: &MaterialSet) -> DeviceModel<f64> {
        let dims = shape.expand().unwrap();
        build_device(&dims, mats, &MeshSettings::default(), 1000.0, &AssemblyOptions::default()).unwrap()
    }

    #[test]
    fn capacitance_parallel_plate() {
        let dims: DeviceDimensions<f64> = ShapeParams::square(0.3, 0.5, 0.2).unwrap().expand().unwrap();
        let c = capacitance(&dims, &MaterialSet::default());
        assert!((c - 1.0766e-6).abs() / 1.0766e-6 < 1e-4);
        let mut thin = dims;
        thin.piezo_thickness *= 0.5;
        assert!((capacitance(&thin, &MaterialSet::default()) / c - 2.0).abs() < 1e-12);
    }

    #[test]
    fn capacitance_scales_with_area() {
        let a: DeviceDimensions<f64> = ShapeParams::square(0.3, 0.4, 0.2).unwrap().expand().unwrap();
        let b: DeviceDimensions<f64> = ShapeParams::square(0.3, 0.2, 0.2).unwrap().expand().unwrap();
        let m = MaterialSet::default();
        assert!((capacitance(&b, &m) / capacitance(&a, &m) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn force_is_mass_times_ones() {
        let m = model(ShapeParams::square(0.27, 0.43, 0.17).unwrap(), &MaterialSet::default());
        let ones = DVector::from_element(m.num_dofs(), 1.0);
        let r = &m.force - &m.mass * ones;
        assert!(r.norm() / m.force.norm() < 1e-10);
    }

    #[test]
    fn zero_piezo_constants_give_zero_coupling() {
        let mut mats = MaterialSet::default();
        mats.piezo.e31 = 0.0;
        mats.piezo.e32 = 0.0;
        let m = model(ShapeParams::square(0.3, 0.6, 0.2).unwrap(), &mats);
        assert!(m.coupling.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn misaligned_interface_is_mesh_error() {
        let dims: DeviceDimensions<f64> = ShapeParams::square(0.3, 0.37, 0.2).unwrap().expand().unwrap();
        let patch = NurbsPatch::rectangle(0.3, 0.3, (3, 3), (8, 8), None).unwrap();
        assert!(matches!(
            assemble(&patch, &dims, &MaterialSet::default(), 1000.0, &AssemblyOptions::default()),
            Err(Error::Mesh(_))
        ));
        let patch = build_patch(&dims, (3, 3), (8, 8)).unwrap();
        assert!(assemble(&patch, &dims, &MaterialSet::default(), 1000.0, &AssemblyOptions::default()).is_ok());
    }

    #[test]
    fn clamp_removes_two_columns() {
        let m = model(ShapeParams::square(0.3, 0.5, 0.2).unwrap(), &MaterialSet::default());
        let (nu, nv) = m.patch.shape();
        assert_eq!(m.num_free(), (nu - 2) * nv);
    }

    #[test]
    fn separated_assembly_matches_pointwise() {
        let dims: DeviceDimensions<f64> = ShapeParams::new(0.23, 0.41, 0.31, 0.7, 0.001).unwrap().expand().unwrap();
        let patch = build_patch(&dims, (3, 2), (5, 4)).unwrap();
        let mats = MaterialSet::default();
        let opts = AssemblyOptions::default();
        let a = assemble(&patch, &dims, &mats, 1000.0, &opts).unwrap();
        let b = assemble_direct(&patch, &dims, &mats, 1000.0, &opts).unwrap();
        let rel = |diff: f64, scale: f64| diff / scale;
        assert!(rel((&a.mass - &b.mass).amax(), b.mass.amax()) < 1e-12);
        assert!(rel((&a.stiffness - &b.stiffness).amax(), b.stiffness.amax()) < 1e-12);
        assert!(rel((&a.coupling - &b.coupling).amax(), b.coupling.amax()) < 1e-12);
        assert!(rel((&a.force - &b.force).amax(), b.force.amax()) < 1e-12);
    }

    #[test]
    fn extra_quadrature_points_change_nothing() {
        let dims: DeviceDimensions<f64> = ShapeParams::square(0.3, 0.5, 0.2).unwrap().expand().unwrap();
        let patch = build_patch(&dims, (3, 3), (6, 6)).unwrap();
        let mats = MaterialSet::default();
        let a = assemble(&patch, &dims, &mats, 1000.0, &AssemblyOptions::default()).unwrap();
        let more = AssemblyOptions { extra_quadrature: 2, ..Default::default() };
        let b = assemble(&patch, &dims, &mats, 1000.0, &more).unwrap();
        assert!((&a.stiffness - &b.stiffness).amax() / b.stiffness.amax() < 1e-10);
        assert!((&a.mass - &b.mass).amax() / b.mass.amax() < 1e-10);
    }

    #[test]
    fn z_squared_variant_scales_coupling() {
        let shape = ShapeParams::square(0.3, 0.5, 0.2).unwrap();
        let dims: DeviceDimensions<f64> = shape.expand().unwrap();
        let mats = MaterialSet::default();
        let mesh = MeshSettings::default();
        let first = build_device(&dims, &mats, &mesh, 1000.0, &AssemblyOptions::default()).unwrap();
        let opts = AssemblyOptions {
            coupling: CouplingWeight::ZSquared,
            extra_quadrature: 0,
        };
        let second = build_device(&dims, &mats, &mesh, 1000.0, &opts).unwrap();
        let (h, hs) = (0.5e-3, 0.3e-3);
        let ratio = (2.0 / 3.0 * (h * h * h - hs * hs * hs)) / ((h * h - hs * hs) / 2.0);
        let k = first.coupling.iter().position(|c| c.abs() > 0.0).unwrap();
        assert!((second.coupling[k] / first.coupling[k] - ratio).abs() < 1e-9 * ratio);
    }
}
