//! Shared error type for the analysis modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Adaptive refinement stalled before reaching the requested accuracy.
    #[error("accuracy failure: achieved {achieved:.3e}, requested {requested:.3e} ({context})")]
    AccuracyFailure {
        achieved: f64,
        requested: f64,
        context: String,
    },

    /// Derivative order not available for this profile kind.
    #[error("unsupported derivative order {order} for {kind} profile")]
    UnsupportedOrder { order: u8, kind: String },

    /// Input outside the operation's domain of validity.
    #[error("domain error: {0}")]
    Domain(String),

    /// Penrose contour passes through (or within tolerance of) the origin:
    /// the winding number is ill-defined and the state is critical.
    #[error("critical contour: |epsilon({u_c})| = {eps_abs:.3e}; winding ill-defined")]
    CriticalContour { u_c: f64, eps_abs: f64 },

    /// A transform context cannot be built because |epsilon|^2 collapses
    /// somewhere on the grid (embedded mode / critical equilibrium).
    #[error("|epsilon|^2 = {min:.3e} at u = {at}; transform not invertible")]
    EmbeddedMode { at: f64, min: f64 },

    /// A root-counting rectangle has a near-zero of the dispersion function
    /// on its boundary; the caller should jitter the region and retry.
    #[error("degenerate counting region: |epsilon| = {eps_abs:.3e} on boundary near {at}")]
    RegionDegenerate { at: String, eps_abs: f64 },

    /// Newton refinement failed to converge.
    #[error("no convergence after {iterations} iterations (last residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    /// A bisection search found no change of the target property in range.
    #[error("not found: {0}")]
    NotFound(String),

    /// Root set not closed under complex conjugation: the quadrature that
    /// produced it is inconsistent.
    #[error("symmetry violation: root {root} has no conjugate partner")]
    SymmetryViolation { root: String },

    /// Mismatched grids between a context and data passed to it.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Invalid construction parameters.
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
