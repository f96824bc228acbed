//! Synthesis of static state-feedback controllers from finite noisy
//! input-state(-output) data, such that every linear system consistent with
//! the data is dissipative in closed loop with respect to a given quadratic
//! supply rate.
//!
//! The crate is organised as follows:
//!
//! * [`matcore`] — dense symmetric-matrix utilities: inertia, semidefiniteness
//!   with tolerances, pseudo-inverse, generalised Schur complements and
//!   kernel-containment tests.
//! * [`qmi`] — sets induced by quadratic matrix inequalities: the Π-class,
//!   membership and boundedness tests, the Π_W transform, ellipsoid sampling
//!   and the matrix S-lemma containment certificate.
//! * [`dissipativity`] — quadratic supply rates, the dissipation LMI for a
//!   known quadruple, dissipativity analysis and the dualisation transform.
//! * [`datamodel`] — experiment data containers, the noise model, the
//!   data-matrix builders for the consistency sets and the synthesis LMI
//!   blocks, consistent-set sampling and trajectory simulation.
//! * [`synthesis`] — end-to-end controller synthesis: hypothesis validation,
//!   LMI assembly, feasibility, controller extraction and closed-loop
//!   verification against sampled consistent systems.
//! * [`sdpsolve`] — a linear-matrix-expression builder compiled to a conic
//!   program, an interior-point backend adapter and a solver-independent
//!   recheck.

pub mod datamodel;
pub mod dissipativity;
mod error;
pub mod matcore;
pub mod par;
pub mod qmi;
pub mod sdpsolve;
pub mod synthesis;

// Link the system BLAS/LAPACK used by the semidefinite cone support.
use openblas_src as _;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
