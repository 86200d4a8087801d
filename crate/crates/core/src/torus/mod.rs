//! Flat rectangular torus: grid fields, spectral calculus, the periodic
//! Green's function with its exact log singularity, and quadrature that
//! copes with integrable point singularities.

mod domain;
mod dump;
mod field;
mod green;
mod quadrature;
mod spectral;

pub use domain::{ConformalFactor, FourierMode, TorusDomain};
pub use dump::{read_field, write_field, FieldSidecar, SidecarPuncture};
pub use field::{pairwise_sum, Field};
pub use green::{build_green_table, green_eval, GreenTable, TorusGreen};
pub use quadrature::{integrate, singular_disk_integral, SingularKind, SingularTerm};
pub use spectral::{PointDerivatives, Spectral, Spectrum};
