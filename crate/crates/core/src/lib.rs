//! Classic, learned, and sandwiched learned Bloom filters with an
//! in-library pluggable classifier layer, plus the evaluation harness used
//! by the `lbf` benchmark CLI.
//!
//! - [`bloom`]: classic filter, hash family, and sizing math.
//! - [`dataset`] / [`features`]: URL standardization and bag-of-characters
//!   encoding.
//! - [`classifiers`]: NB, LR, linear SVM, and FFNN scorers.
//! - [`learned`]: LBF/SLBF budgets, calibration, build, and query.
//! - [`harness`]: cross-validation screening, filter sweeps, timing.

pub mod bloom;
pub mod classifiers;
pub mod codec;
pub mod dataset;
pub mod features;
pub mod harness;
pub mod learned;

/// Approximate membership: `false` is definite, `true` may be a false
/// positive. Implementations are immutable and safe to query concurrently.
pub trait Membership {
    fn contains(&self, key: &[u8]) -> bool;
}

impl Membership for bloom::BloomFilter {
    fn contains(&self, key: &[u8]) -> bool {
        self.query(key)
    }
}
