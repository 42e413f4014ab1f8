//! Dense linear algebra, elementwise nonlinearities, a seeded PRNG, a
//! full-batch logistic trainer, and a finite-difference gradient oracle.
//!
//! Everything here is 64-bit, allocation-simple, and deterministic. All
//! operations are pure functions over immutable inputs and are safe to call
//! concurrently.

mod gradcheck;
mod logistic;
mod matrix;
mod rng;

pub use gradcheck::finite_diff_grad;
pub use logistic::{accuracy, cross_entropy, train_logistic, LogisticModel, LogisticConfig};
pub(crate) use logistic::argmax as argmax_slice;
pub use matrix::{matmul, relu, softmax, Matrix, Vector};
pub use rng::Rng;
