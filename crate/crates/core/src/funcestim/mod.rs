//! Harmonic-analysis functionals: boundary norms, maximal functions, the
//! Hilbert transform, BMO, H¹ atoms, non-tangential and square functions,
//! tent functionals and empirical `L^p` problem constants.

pub mod boundary;
pub mod cone;

pub use boundary::{
    bmo_norm, hilbert_norm_estimate, hilbert_periodic, hilbert_pv, hl_maximal, mean_oscillation, BoundaryFunction,
    H1Atom, MatrixFunction,
};
pub use cone::{
    lp_problem_constant, nt_max, nt_max_avg, square_function, tent_duality, tent_functionals, AdaptedDistance,
    CellField, CellQuantity, ConeParams, ConeTable, Problem,
};
