//! Numerical checks of the analytic toolkit.

pub mod gronwall;
pub mod identities;
pub mod inequalities;

pub use gronwall::{generate_instance, gronwall_bound, GronwallBound, GronwallInput};
pub use identities::{dz_identity_residual, l4_identity_residual, DzProbe, L4Probe};
pub use inequalities::{verify_aniso_embedding, verify_b_bound, verify_dissipation, RatioReport};
