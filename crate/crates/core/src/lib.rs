//! Numerical laboratory for graphical translating solitons of mean curvature
//! flow: solvers for the translator equations, Grassmannian Gauss-map
//! geometry, and discrete checks of the identities and inequalities that
//! translators satisfy.

pub mod diagnostics;
pub mod error;
pub mod grassmann;
pub mod grid;
pub mod immersion;
pub mod solver;

pub use error::{LabError, Result};
pub use grid::Grid;

/// Maps `f` over `0..len`, in parallel when the `parallel` feature is on.
/// Output order is the index order either way.
pub(crate) fn par_map<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..len).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).collect()
    }
}
