//! Brumer-Stark p-units of real quadratic fields.
//!
//! For a real quadratic field `F`, an inert prime `p` and a smoothing prime `ell`, the conjugates
//! of the Brumer-Stark unit over the narrow Hilbert class field are computed in the unramified
//! quadratic extension of `Q_p` as `p^{zeta(b,0)}` times a multiplicative integral against the
//! Shintani measure, and the minimal polynomial over `F` is recovered exactly.

pub mod cache;
pub mod error;
pub mod groupring;
pub mod linalg;
pub mod measure;
pub mod padic;
pub mod pipeline;
pub mod recognize;
pub mod quadfield;
pub mod shintani;

pub use error::{Error, Result};
