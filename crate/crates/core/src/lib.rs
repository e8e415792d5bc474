pub mod adjust;
pub mod classical;
pub mod cmaes;
pub mod data;
pub mod error;
pub mod metrics;
pub mod qnn;
pub mod quantum;
pub mod rng;
pub mod stats;
pub mod survival;

pub use error::{Error, Result};

// Book chapters, compiled as doc-tests so the snippets stay in sync.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/overview.md")]
    mod overview {}
    #[doc = include_str!("../../../book/src/encoding.md")]
    mod encoding {}
    #[doc = include_str!("../../../book/src/qnn.md")]
    mod qnn {}
    #[doc = include_str!("../../../book/src/cmaes.md")]
    mod cmaes {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/adjustment.md")]
    mod adjustment {}
    #[doc = include_str!("../../../book/src/balance.md")]
    mod balance {}
    #[doc = include_str!("../../../book/src/survival.md")]
    mod survival {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
