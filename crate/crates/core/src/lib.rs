//! Copula-aware distributionally robust optimization for day-ahead OPF.
//!
//! The crate reformulates worst-case expectations over Wasserstein ambiguity
//! sets — optionally restricted by a second Wasserstein ball around the
//! empirical copula — into linear programs, applies them to DC and
//! LinDistFlow optimal power flow with linear decision rules and
//! CVaR-approximated chance constraints, and replays the resulting day-ahead
//! decisions against out-of-sample data.

pub mod lp;
pub mod model;
pub mod stats;
pub mod transport;
pub mod wce;
pub mod scenario;
pub mod opf_dc;
pub mod opf_radial;
pub mod oos;
pub mod instances;

pub(crate) mod linalg;
