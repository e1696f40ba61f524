use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MIN_POINTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Field vanishes at the wall.
    Dirichlet,
    /// Zero radial flux through the wall.
    Neumann,
}

/// Uniform cell-centred radial grid on a sphere of radius `R`.
///
/// Node `i` sits at `(i + 1/2) dr` with `dr = R / N`; cell faces sit at
/// `i dr`. The innermost face has zero area, which is the regularity
/// condition at the centre. The wall face at `R` is where boundary
/// conditions are imposed through a mirrored ghost node.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    cell_radius: f64,
    spacing: f64,
    nodes: Vec<f64>,
    /// `(r_{i+1/2}^3 - r_{i-1/2}^3) / 3`: quadrature weights for `∫ f r^2 dr`.
    weights: Vec<f64>,
    /// Coupling to the inner neighbour, `r_{i-1/2}^2 / (dr V_i)`.
    lower: Vec<f64>,
    /// Coupling to the outer neighbour, `r_{i+1/2}^2 / (dr V_i)`.
    upper: Vec<f64>,
}

impl RadialGrid {
    pub fn new(cell_radius: f64, point_count: usize) -> Result<Self> {
        if !(cell_radius > 0.0 && cell_radius.is_finite()) {
            return Err(Error::param("cell_radius", "must be finite and > 0"));
        }
        if point_count < MIN_POINTS {
            return Err(Error::param(
                "point_count",
                format!("need at least {MIN_POINTS} nodes, got {point_count}"),
            ));
        }
        let dr = cell_radius / point_count as f64;
        let face = |i: usize| i as f64 * dr;
        let mut nodes = Vec::with_capacity(point_count);
        let mut weights = Vec::with_capacity(point_count);
        let mut lower = Vec::with_capacity(point_count);
        let mut upper = Vec::with_capacity(point_count);
        for i in 0..point_count {
            let (inner, outer) = (face(i), face(i + 1));
            let v = (outer.powi(3) - inner.powi(3)) / 3.0;
            nodes.push((i as f64 + 0.5) * dr);
            weights.push(v);
            lower.push(inner * inner / (dr * v));
            upper.push(outer * outer / (dr * v));
        }
        Ok(Self {
            cell_radius,
            spacing: dr,
            nodes,
            weights,
            lower,
            upper,
        })
    }

    pub fn cell_radius(&self) -> f64 {
        self.cell_radius
    }

    pub fn point_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn node_positions(&self) -> &[f64] {
        &self.nodes
    }

    pub fn volume_weights(&self) -> &[f64] {
        &self.weights
    }

    /// `∫ |f|^2 r^2 dr` over the cell.
    pub fn norm_sq(&self, field: &[Complex64]) -> f64 {
        field
            .iter()
            .zip(&self.weights)
            .map(|(f, w)| w * f.norm_sqr())
            .sum()
    }

    /// `∫ f r^2 dr` over the cell.
    pub fn moment(&self, field: &[Complex64]) -> Complex64 {
        field.iter().zip(&self.weights).map(|(f, w)| f * w).sum()
    }

    /// Adds `scale * Laplacian(field)` to `out`.
    pub(crate) fn add_laplacian(
        &self,
        field: &[Complex64],
        bc: Boundary,
        scale: f64,
        out: &mut [Complex64],
    ) {
        let n = field.len();
        if scale == 0.0 {
            return;
        }
        for i in 0..n {
            let f = field[i];
            let inner = if i > 0 {
                self.lower[i] * (field[i - 1] - f)
            } else {
                Complex64::new(0.0, 0.0)
            };
            let outer = if i + 1 < n {
                self.upper[i] * (field[i + 1] - f)
            } else {
                match bc {
                    // ghost = -f
                    Boundary::Dirichlet => self.upper[i] * (-2.0 * f),
                    // ghost = +f
                    Boundary::Neumann => Complex64::new(0.0, 0.0),
                }
            };
            out[i] += scale * (inner + outer);
        }
    }
}

/// Spherically symmetric Laplacian `(1/r^2) d/dr (r^2 df/dr)` by second-order
/// finite volumes.
pub fn radial_laplacian(
    field: &[Complex64],
    grid: &RadialGrid,
    bc: Boundary,
) -> Result<Vec<Complex64>> {
    if field.len() != grid.point_count() {
        return Err(Error::LengthMismatch {
            expected: grid.point_count(),
            found: field.len(),
        });
    }
    let mut out = vec![Complex64::new(0.0, 0.0); field.len()];
    grid.add_laplacian(field, bc, 1.0, &mut out);
    Ok(out)
}
