pub mod autodiff;
pub mod error;
pub mod games;
pub mod harness;
pub mod nn;
pub mod params;
pub mod seed;
pub mod toy;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/autodiff.md")]
    pub struct Autodiff;
    #[doc = include_str!("../../../book/src/reversal.md")]
    pub struct Reversal;
    #[doc = include_str!("../../../book/src/networks.md")]
    pub struct Networks;
    #[doc = include_str!("../../../book/src/game.md")]
    pub struct Game;
    #[doc = include_str!("../../../book/src/toy-worlds.md")]
    pub struct ToyWorlds;
    #[doc = include_str!("../../../book/src/harness.md")]
    pub struct Harness;
}
