//! Two- and three-point quadrature rules for Riemann–Stieltjes integrals
//! `∫_a^b f(t) du(t)`, together with computable a-priori error bounds and a
//! high-accuracy reference integrator to check them against.
//!
//! Modules, bottom-up:
//! - [`expr`]: expression language for `f` and `u` (parse, evaluate, print,
//!   differentiate).
//! - [`oracle`]: reference integrals, interval means, `erf`.
//! - [`funcspace`]: regularity certificates (Lipschitz, Hölder, total
//!   variation, L^p norms of derivatives).
//! - [`quadrature`]: the blended rule family, its kernel and error, composite
//!   and Mercer-type rules.
//! - [`bounds`]: a-priori error bounds and their validation.
//! - [`cli`]: JSON configs, experiment drivers and report emitters.

#![cfg_attr(test, allow(clippy::excessive_precision))]

pub mod expr;
pub mod oracle;
pub mod funcspace;
pub mod quadrature;
pub mod bounds;
pub mod cli;
