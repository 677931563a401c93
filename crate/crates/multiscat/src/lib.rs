//! Iterative solver for 2-D time-harmonic acoustic multiple scattering from
//! impenetrable obstacles in locally inhomogeneous media.
//!
//! The scattered field is decomposed into purely outgoing waves, one per
//! obstacle. The coupled system for their boundary traces is solved with
//! operator-level GMRES: every iteration only solves independent
//! single-obstacle subproblems (spectral-element interior solves closed by a
//! Dirichlet-to-Neumann condition on a circular artificial boundary, plus
//! analytic Hankel-series propagation outside the circles).
//!
//! Module map:
//! - [`specfun`]: real-argument cylindrical and half-integer Bessel machinery
//! - [`geometry`]: obstacle boundaries, artificial disks, annular meshes,
//!   Gordon-Hall curvilinear maps, point location
//! - [`sem`]: spectral element discretization and direct subdomain solves
//! - [`harmonics`]: circular-harmonic transforms, DtN application, outgoing
//!   expansions, incident-wave data
//! - [`multiscatter`]: the coupled outer system, GMRES, field assembly
//! - [`scenes`]: scene configuration, refraction-index profiles, output files
//! - [`cli`]: command-line front end

pub mod cli;
pub mod geometry;
pub mod harmonics;
pub mod multiscatter;
pub mod scenes;
pub mod sem;
pub mod specfun;
