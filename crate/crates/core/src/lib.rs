pub mod bayes;
pub mod error;
pub mod experiment;
pub mod fem;
pub mod mcmc;
pub mod mlmcmc;
pub mod prior;
pub mod rng;
pub mod timing;
pub mod wavelet;

pub use error::{Error, Result};
