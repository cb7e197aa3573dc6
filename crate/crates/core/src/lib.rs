//! Numerics for the p-adic string tachyon equations.
//!
//! The open, closed and open-closed equations are nonlinear integral
//! equations built on the Gaussian smoothing operator `K_gamma`. This crate
//! solves them by successive approximation on a symmetric grid and provides
//! the diagnostics used to check the solutions: zeros and local exponents,
//! conservation laws, Hermite expansions and heat-polynomial branching.
//!
//! All numerical types are generic over [`Real`] (`f64` or `f32`); heat
//! polynomials additionally work over exact rationals.

pub mod analysis;
pub mod error;
pub mod hermite;
pub mod kernel;
pub mod polynomial;
pub mod profile;
mod quadrature;
pub mod reproduction;
pub mod scalar;
pub mod solvers;

pub use error::{Error, Result};
pub use kernel::{
    apply_kernel, apply_kernel_symmetric, heat_interpolate, kernel_at, kernel_slope_at, KernelParams,
    SymmetricOperator,
};
pub use polynomial::{evolve_polynomial, HeatPolynomial};
pub use profile::{sample, sgn, sup_diff, Grid, Parity, Profile, TailModel};
pub use scalar::Real;

pub type Grid64 = Grid<f64>;
pub type Grid32 = Grid<f32>;
pub type Profile64 = Profile<f64>;
pub type Profile32 = Profile<f32>;
pub type KernelParams64 = KernelParams<f64>;
pub type KernelParams32 = KernelParams<f32>;
pub type HeatPolynomial64 = HeatPolynomial<f64>;
/// Heat polynomial with exact rational coefficients.
pub type HeatPolynomialExact = HeatPolynomial<num_rational::Ratio<num_bigint::BigInt>>;
