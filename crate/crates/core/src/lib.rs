//! Course scheduling with student assignment, optionally envy-free.

pub mod datagen;
pub mod encoder;
pub mod fixtures;
pub mod ilp;
pub mod io;
pub mod model;
pub mod solver;
pub mod validator;
