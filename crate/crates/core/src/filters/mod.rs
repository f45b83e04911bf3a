//! Gaussian propensity filtering: dense linear algebra, the softmax
//! observation link and the extended Kalman filter predict/update steps.

pub mod ekf;
pub mod linalg;
pub mod softmax;

pub use ekf::{ekf_predict, ekf_update, GaussianBelief, NoiseConfig, ZetaSchedule};
pub use linalg::Matrix;
pub use softmax::{softmax_jacobian, softmax_link};
