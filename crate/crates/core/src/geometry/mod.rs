//! Empirical Lipschitz-Killing curvatures of pixelized excursion sets and
//! the Monte Carlo harnesses built on them.

mod critical;
pub mod mc;
mod mesh;
mod sphere;
mod sup;

pub use critical::{critical_points, morse_euler_characteristic, CriticalKind, CriticalPoint};
pub use mc::{
    mc_cumulant_decay, mc_sup_probability, mc_validate_lkcs, CumulantRow, CumulantTable,
    FieldModel, McOptions, McReport, McRow,
};
pub use mesh::{boundary_length, euler_characteristic, excursion_area, Excursion, SaddleRule};
pub use sup::{sup_estimate, SupEstimate};

use crate::error::{Error, Result};
use crate::simsphere::{HarmonicCoefficients, PixelField, SphereGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcursionSummary {
    pub level: f64,
    pub area: f64,
    pub boundary_length: f64,
    pub euler_char: i64,
    pub sup_value: f64,
}

/// All excursion measurements of one field at one level. `exact` enables
/// exact pole and saddle values, boundary refinement and sup refinement.
pub fn summarize(
    field: &PixelField,
    grid: &SphereGrid,
    exact: Option<&HarmonicCoefficients>,
    u: f64,
) -> Result<ExcursionSummary> {
    if !u.is_finite() {
        return Err(Error::domain("level must be finite"));
    }
    let mut ex = Excursion::new(field, grid)?;
    if let Some(alm) = exact {
        ex = ex.with_exact(alm);
    }
    Ok(ExcursionSummary {
        level: u,
        area: ex.area(u),
        boundary_length: ex.boundary_length(u),
        euler_char: ex.euler_characteristic(u),
        sup_value: sup_estimate(field, grid, exact)?.refined,
    })
}
