pub mod cocycle;
pub mod cuntz;
pub mod error;
pub mod exec;
pub mod gallery;
pub mod opalg;
pub mod rep;
pub mod rotation;
pub mod thompson;
pub mod trees;
