//! Generators for the linear-Gaussian, image deblurring and Lorenz'96 test
//! problems.

pub mod l96;
pub mod linear;

pub use l96::{
    build_l96_problem, build_l96_problem_with, climatology, gauss_newton_map, gauss_newton_map_strict, l96_adjoint, l96_adjoint_grad,
    l96_assignment, l96_forward, l96_jacobian, l96_rhs, ForwardModel, GaussNewtonResult, L96Model, LinearModel, LocalizedTerms,
    NonlinearLikelihood, NonlinearPosterior, NonlinearProblem, SpinUp,
};
pub use linear::{
    blur_matrix, build_deblur, build_example1, build_example2, build_example3, build_isotropic, periodic_laplacian, pixel,
    synthetic_image, write_pgm, DeblurExample, Grid1D, LinearExample,
};
