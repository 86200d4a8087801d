//! Exact existence/uniqueness criterion for singular strengths.
//!
//! Everything here works in exact rational arithmetic. The criterion only
//! depends on the column sums `s_j = Σ_p μ_j(p)`, so puncture positions are
//! carried along as metadata and never enter a comparison.

mod cartan;
mod criterion;
mod scan;
mod strengths;

pub use cartan::{cartan, closed_form_inverse, CartanData};
pub use criterion::{
    criterion, criterion_smooth, degrees, exponents, exponents_from_sums, masses,
    masses_from_sums, report_from_sums, Degrees, StabilityReport, Variant, Verdict,
};
pub use scan::{consistency_scan, draw_sample, ScanParams, ScanReport, ScanSample, Witness};
pub use strengths::{Puncture, SingularStrengths};
