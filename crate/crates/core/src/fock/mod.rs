//! Truncated bosonic Fock space over a few modes of `h`, tensored with the particle grid.
//!
//! Flat indices are `node * D + state` with `D` the Fock dimension.

mod basis;
mod bounds;
mod dressed;
mod resolvent;
mod system;

pub use basis::{fock_dimension, FockBasis, DEFAULT_MAX_FOCK_DIM};
pub use bounds::{
    coupling_norm, form_bound, operator_bounds, operator_norm, BoundRow, FormBound, FreeSpectrum,
    NumberWeight,
};
pub use dressed::{
    project_dressing, van_hove_energy, verify_weyl_shift, ProjectedDressing, WeylShiftReport,
};
pub use resolvent::{
    dense_resolvent, ground_state, ground_state_of, read_dense, resolvent_apply,
    resolvent_apply_below, write_dense, GroundState, DENSE_LIMIT,
};
pub use system::{
    dressing_unitary_block, exp_apply, unitarity_defect, CoupledSystem, DressedParts, ModeSet,
};

#[cfg(test)]
mod tests;
