//! Coupled Markov chain model of joint credit-rating migrations, with
//! likelihood estimation, Monte Carlo scenario generation, CDX tranche pricing
//! and mean-CVaR portfolio selection over tranche menus.

pub mod cli;
pub mod estimation;
pub mod portfolio;
pub mod presets;
pub mod pricing;
pub mod ratings;
pub mod rng;
pub mod simulation;
