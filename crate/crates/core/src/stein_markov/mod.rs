//! Stein coefficients, Ehrenfest-like chains, the coupled joint chain
//! and its stationary couplings, with the theorem-level verification
//! built on top.

pub mod hoeffding;
pub mod joint;
pub mod solve;
pub mod stein;
pub mod theorems;

pub use hoeffding::{
    calibrate_exp_square, centered_replacement_sum, centered_sample_sum, hoeffding_bounds_check,
    hoeffding_exact_hinge, HoeffdingReport, SumLaw,
};
pub use joint::{build_joint_chain, Dir, JointChainRates, DIRECTIONS};
pub use solve::{
    coupling_functionals, find_recurrent_class, solve_stationary, FunctionalReport,
    StationaryCoupling,
};
pub use stein::{
    stein_binomial, stein_convolve, stein_from_pmf, stein_hypergeometric, stein_scale_perturb,
    SteinCoefficient,
};
pub use theorems::{
    binomial_pair_coupling, binomial_theta_admissible, couple_binomials, couple_hypergeos,
    hypergeo_pair_coupling, hypergeo_part1_sweep, hypergeo_part2_fit, hypergeo_part2_functional,
    theorem_1_5_sweep, CoupleInstance, HypergeoPart1Report, HypergeoPart2Report, Theorem15Report,
};
