//! Numerical stability analysis for linear Hamiltonian systems with
//! continuous spectra.
//!
//! The crate decides spectral and structural stability of homogeneous
//! equilibria of the linearized Vlasov-Poisson system, and of a harmonic
//! oscillator coupled to a continuum bath, by
//!
//! * building Penrose/Nyquist contours and counting their winding numbers,
//! * attaching a Krein-type signature to the continuous spectrum,
//! * locating dispersion roots in the complex frequency plane with the
//!   argument principle plus Newton refinement,
//! * constructing explicit compactly supported destabilizing perturbations
//!   and checking dynamical accessibility,
//! * evolving initial data exactly through the diagonalizing G-transform
//!   (Landau damping as an independent time-domain oracle).
//!
//! Everything is built on two kernels: an adaptive Gauss-Kronrod quadrature
//! ([`quad`]) and a principal-value Hilbert transform ([`hilbert`]). All
//! operations are pure functions over immutable inputs and safe to call from
//! multiple threads.

pub mod caldeira;
pub mod dispersion;
pub mod equilibria;
pub mod error;
pub mod gtransform;
pub mod hilbert;
pub mod interp;
pub mod penrose;
pub mod quad;
pub mod structural;

mod argwind;

pub use error::{Error, Result};
