//! Outsourced Gaussian kernel density classification over Paillier
//! encryption, with the distance-learning attacks that break exact k-NN.

pub mod attacks;
pub mod codec;
pub mod dp;
pub mod fixedpoint;
pub mod garble;
pub mod harness;
pub mod kde;
pub mod math;
pub mod paillier;
pub mod protocol;
