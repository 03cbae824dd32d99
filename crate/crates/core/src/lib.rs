//! Simulation and exact analysis of the longest common subsequence between a
//! random word and a longer random word, through interacting particle
//! dynamics, small adversarial games and a finite Markov chain.

pub mod error;
pub mod estimators;
pub mod games;
pub mod montecarlo;
pub mod particles;
pub mod rng;
pub mod seqalgs;
pub mod verify;
pub mod words;

pub use error::{Error, Result};
pub use rng::{Lane, RngStream};
pub use words::Word;
