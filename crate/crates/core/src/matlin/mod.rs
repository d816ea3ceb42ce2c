//! Dense real linear algebra.

mod dd;
mod lu;
mod matrix;
mod norms;
mod spectral;

pub use lu::{
    growth_factors, lu_nopivot, lu_nopivot_recorded, lu_partial, solve_lu, solve_lu_transposed,
    GrowthReport, LuFactors, PIVOT_FLOOR,
};
pub use matrix::Matrix;
pub use norms::{matrix_norm, vec_norm1, vec_norm2, vec_norm_inf, NormKind};
pub use spectral::{
    condition_number, smallest_singular, spectral_norm, SmallestSingular, MAX_ITERATIONS,
    RAYLEIGH_TOL, SINGULAR_FLOOR,
};
