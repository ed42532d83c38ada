//! Radially symmetric nematic flow: a parabolic velocity equation coupled to
//! a damped k-equivariant wave map, with modulation and energy diagnostics.

pub mod cli_io;
pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod grid;
pub mod initial_data;
pub mod modulation;
pub mod profiles;
pub mod tridiag;
