//! Numerical backbone: seeded RNG streams, bivariate normal draws, the
//! symmetric eigensolver, a quasi-Newton minimizer and the weighted median.

mod eigen;
mod median;
mod optim;
mod rng;

pub use eigen::{sym_eigen, SymmetricEigen};
pub use median::weighted_median;
pub use optim::{minimize, Minimum, MinimizeOptions};
pub use rng::{label_hash, mvn_sample, RngStream};
