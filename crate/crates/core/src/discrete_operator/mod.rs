//! Lattice operators `L_h^σ` (second differences along σ) and `L_h^μ`
//! (cell quadrature of a Lévy measure), and the grid functions they act on.

mod assemble;
mod consistency;
mod grid;
mod stencil;

pub use assemble::{
    assemble_local, assemble_nonlocal, grid_normalize, GridTransform, NonlocalOptions, OriginCell, RANK_THRESHOLD,
};
pub use consistency::{
    bump, consistency_error, fractional_image_1d, gaussian, gaussian_fractional, gaussian_laplacian,
};
pub use grid::{Boundary, GridFunction};
pub(crate) use grid::format_17;
pub use stencil::{StencilWeights, TailPolicy};
