pub mod autodiff;
pub mod graph;
pub mod linalg;
pub mod models;
pub mod rng;
pub mod spectral;
pub mod tasks;
