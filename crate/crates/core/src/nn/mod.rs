//! Small dense/conv building blocks with hand-written backward passes.
//!
//! Everything is `f64` and single-threaded so that gradient checks hold to
//! finite-difference precision and training is bit-reproducible.

mod activation;
mod adam;
mod conv;
mod linear;

pub use activation::{leaky_relu, leaky_relu_grad, relu, relu_grad, sigmoid, softplus};
pub use adam::AdamState;
pub use conv::{upsample2x_backward, upsample2x_nearest, Conv2d, Conv2dGrad};
pub use linear::{Linear, LinearGrad};
