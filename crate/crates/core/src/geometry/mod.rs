//! Design vector, device dimensions and the NURBS patch describing the plate mid-surface.

mod knots;
mod patch;
pub mod quadrature;

pub use knots::KnotVector;
pub use patch::{BasisValues, NurbsPatch};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Float;

/// Admissible range of the plate length `L` [m].
pub const LENGTH_BOUNDS: (f64, f64) = (0.1, 0.5);
/// Admissible range of the piezo length ratio `l = L_pzt / L`.
pub const PIEZO_LENGTH_BOUNDS: (f64, f64) = (0.1, 1.0);
/// Admissible range of the piezo thickness ratio `H = h_p / h`.
pub const PIEZO_THICKNESS_BOUNDS: (f64, f64) = (0.05, 0.45);

/// Default aspect ratio `R = W / L`.
pub const DEFAULT_ASPECT: f64 = 1.0;
/// Default total thickness `h` [m].
pub const DEFAULT_THICKNESS: f64 = 1.0e-3;

/// Harvester shape: the optimized vector `[L, l, H]` together with the fixed
/// aspect ratio `R` and total thickness `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeParams {
    /// Plate length [m].
    pub length: f64,
    /// Piezo length ratio `L_pzt / L`.
    pub piezo_length_ratio: f64,
    /// Piezo thickness ratio `h_p / h`.
    pub piezo_thickness_ratio: f64,
    /// Aspect ratio `W / L`.
    pub aspect: f64,
    /// Total laminate thickness [m].
    pub thickness: f64,
}

fn check_range(field: &'static str, value: f64, (min, max): (f64, f64)) -> Result<()> {
    if value.is_finite() && value >= min && value <= max {
        Ok(())
    } else {
        Err(Error::Bounds { field, value, min, max })
    }
}

impl ShapeParams {
    /// Builds a shape, rejecting anything outside the admissible design box.
    pub fn new(length: f64, piezo_length_ratio: f64, piezo_thickness_ratio: f64, aspect: f64, thickness: f64) -> Result<Self> {
        let s = Self {
            length,
            piezo_length_ratio,
            piezo_thickness_ratio,
            aspect,
            thickness,
        };
        s.validate()?;
        Ok(s)
    }

    /// Shape with `R = 1` and `h = 1 mm`.
    pub fn square(length: f64, piezo_length_ratio: f64, piezo_thickness_ratio: f64) -> Result<Self> {
        Self::new(length, piezo_length_ratio, piezo_thickness_ratio, DEFAULT_ASPECT, DEFAULT_THICKNESS)
    }

    /// Builds a shape from the design vector `[L, l, H]`.
    pub fn from_design(x: [f64; 3], aspect: f64, thickness: f64) -> Result<Self> {
        Self::new(x[0], x[1], x[2], aspect, thickness)
    }

    pub fn design_vector(&self) -> [f64; 3] {
        [self.length, self.piezo_length_ratio, self.piezo_thickness_ratio]
    }

    pub fn validate(&self) -> Result<()> {
        check_range("L", self.length, LENGTH_BOUNDS)?;
        check_range("l", self.piezo_length_ratio, PIEZO_LENGTH_BOUNDS)?;
        check_range("H", self.piezo_thickness_ratio, PIEZO_THICKNESS_BOUNDS)?;
        if !(self.aspect.is_finite() && self.aspect > 0.0) {
            return Err(Error::Bounds {
                field: "R",
                value: self.aspect,
                min: f64::MIN_POSITIVE,
                max: f64::INFINITY,
            });
        }
        if !(self.thickness.is_finite() && self.thickness > 0.0) {
            return Err(Error::Bounds {
                field: "h",
                value: self.thickness,
                min: f64::MIN_POSITIVE,
                max: f64::INFINITY,
            });
        }
        Ok(())
    }

    /// Expands the shape into physical layer dimensions.
    pub fn expand<T: Float>(&self) -> Result<DeviceDimensions<T>> {
        self.validate()?;
        let h_p = self.piezo_thickness_ratio * self.thickness;
        Ok(DeviceDimensions {
            length: T::lit(self.length),
            width: T::lit(self.aspect * self.length),
            piezo_thickness: T::lit(h_p),
            substrate_thickness: T::lit(self.thickness - 2.0 * h_p),
            piezo_length: T::lit(self.piezo_length_ratio * self.length),
        })
    }

    /// Clamps every design variable into its admissible range.
    pub fn clamped(mut self) -> Self {
        self.length = self.length.clamp(LENGTH_BOUNDS.0, LENGTH_BOUNDS.1);
        self.piezo_length_ratio = self.piezo_length_ratio.clamp(PIEZO_LENGTH_BOUNDS.0, PIEZO_LENGTH_BOUNDS.1);
        self.piezo_thickness_ratio = self
            .piezo_thickness_ratio
            .clamp(PIEZO_THICKNESS_BOUNDS.0, PIEZO_THICKNESS_BOUNDS.1);
        self
    }
}

/// Lower and upper corners of the design box for `[L, l, H]`.
pub fn design_bounds() -> ([f64; 3], [f64; 3]) {
    (
        [LENGTH_BOUNDS.0, PIEZO_LENGTH_BOUNDS.0, PIEZO_THICKNESS_BOUNDS.0],
        [LENGTH_BOUNDS.1, PIEZO_LENGTH_BOUNDS.1, PIEZO_THICKNESS_BOUNDS.1],
    )
}

/// Physical dimensions of the three-layer laminate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceDimensions<T> {
    /// `L` [m]
    pub length: T,
    /// `W` [m]
    pub width: T,
    /// `h_p` [m], thickness of each piezo layer
    pub piezo_thickness: T,
    /// `h_s` [m]
    pub substrate_thickness: T,
    /// `L_pzt` [m], piezo layers cover `0 <= x <= L_pzt`
    pub piezo_length: T,
}

impl<T: Float> DeviceDimensions<T> {
    pub fn total_thickness(&self) -> T {
        self.substrate_thickness + T::TWO * self.piezo_thickness
    }

    /// Normalized position of the piezo boundary along the length.
    pub fn interface_ratio(&self) -> T {
        self.piezo_length / self.length
    }
}

/// Expands a shape into device dimensions.
pub fn expand_shape<T: Float>(params: &ShapeParams) -> Result<DeviceDimensions<T>> {
    params.expand()
}

/// Builds the plate patch for the given dimensions with the piezo boundary on
/// an element edge.
pub fn build_patch<T: Float>(dims: &DeviceDimensions<T>, degrees: (usize, usize), elements: (usize, usize)) -> Result<NurbsPatch<T>> {
    NurbsPatch::rectangle(dims.length, dims.width, degrees, elements, Some(dims.interface_ratio()))
}
