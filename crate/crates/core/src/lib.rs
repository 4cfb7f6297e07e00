//! Search problems in TFNP: instances, verifiers, oracles, reductions and the stone game.

pub mod game;
pub mod gen;
pub mod harness;
pub mod lc;
pub mod model;
pub mod oracles;
pub mod problems;
pub mod reductions;
