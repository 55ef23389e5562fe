pub mod bipartite;
pub mod experiments;
pub mod filterbank;
pub mod generate;
pub mod graph;
pub mod io;
pub mod kernels;
mod linalg;
pub mod metrics;
pub mod poly;
pub mod raster;
pub mod scalar;

use num_rational::BigRational;

pub use poly::{Polynomial, RootSet};

pub type Poly64 = Polynomial<f64>;
pub type ExactPoly = Polynomial<BigRational>;
pub type Graph64 = graph::Graph<f64>;
pub type Graph32 = graph::Graph<f32>;
