//! Heat-kernel lattice gauge theory on compact groups.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fw;
pub mod group;
pub mod heat_kernel;
pub mod lattice;
pub mod mc;
pub mod quadrature;

pub use error::{Error, Result};
pub use group::{GroupElement, GroupKind, Irrep, UnitQuaternion};
pub use heat_kernel::{HeatKernel, HeatKernelParams};
pub use lattice::{Boundary, FieldConfig, Lattice, LatticeSpec, PlaquetteRef};
