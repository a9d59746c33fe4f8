//! Labeled, splittable random streams.
//!
//! Every stochastic site in the system (parameter init, dropout masks, defense
//! noise, batch shuffling, attack optimizers) draws from its own named
//! substream of a single root seed. Substreams are derived by hashing the
//! root seed together with a label path, so adding or removing one site never
//! shifts the draws of another. This is what makes standalone and distributed
//! runs of the same experiment produce identical transcripts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// A node in the seed tree. Cheap to clone; does not hold generator state.
#[derive(Debug, Clone)]
pub struct SeedTree {
    key: [u8; 32],
}

impl SeedTree {
    pub fn new(seed: u64) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(b"splitbench-root");
        hasher.update(seed.to_le_bytes());
        Self { key: hasher.finalize().into() }
    }

    /// Derive a child tree; `child("a").child("b")` != `child("b").child("a")`.
    pub fn child(&self, label: &str) -> SeedTree {
        let mut hasher = Sha256::new();
        hasher.update(self.key);
        hasher.update([0x1f]); // path separator, cannot occur in labels we use
        hasher.update(label.as_bytes());
        Self { key: hasher.finalize().into() }
    }

    /// A counter-based generator for the named site.
    pub fn stream(&self, label: &str) -> ChaCha8Rng {
        ChaCha8Rng::from_seed(self.child(label).key)
    }
}

/// Draw from Laplace(0, scale) by inverse CDF.
pub fn sample_laplace<R: rand::Rng>(rng: &mut R, scale: f64) -> f64 {
    // u uniform in (-1/2, 1/2]; branch keeps the transform exact at u = 1/2.
    let u: f64 = rng.random::<f64>() - 0.5;
    if u >= 0.0 {
        -scale * (1.0 - 2.0 * u).max(f64::MIN_POSITIVE).ln()
    } else {
        scale * (1.0 + 2.0 * u).max(f64::MIN_POSITIVE).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_deterministic() {
        let a = SeedTree::new(7).stream("init/wq");
        let b = SeedTree::new(7).stream("init/wq");
        let xs: Vec<u64> = a.clone().random_iter().take(8).collect();
        let ys: Vec<u64> = b.clone().random_iter().take(8).collect();
        assert_eq!(xs, ys);
    }

    #[test]
    fn labels_separate_streams() {
        let tree = SeedTree::new(7);
        let x: u64 = tree.stream("dropout/step0").random();
        let y: u64 = tree.stream("dropout/step1").random();
        assert_ne!(x, y);
    }

    #[test]
    fn child_paths_are_order_sensitive() {
        let t = SeedTree::new(1);
        let ab: u64 = t.child("a").stream("b").random();
        let ba: u64 = t.child("b").stream("a").random();
        assert_ne!(ab, ba);
    }

    #[test]
    fn laplace_moments() {
        // Mean ~ 0, variance ~ 2b^2. 1e5 draws keeps the test under a second.
        let mut rng = SeedTree::new(11).stream("laplace");
        let b = 0.7;
        let n = 100_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let x = sample_laplace(&mut rng, b);
            sum += x;
            sumsq += x * x;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        // std of the sample mean is b*sqrt(2/n); allow 4 sigma.
        assert!(mean.abs() < 4.0 * b * (2.0 / n as f64).sqrt(), "mean {mean}");
        assert!((var - 2.0 * b * b).abs() < 0.05, "var {var}");
    }
}
