//! Seed splitting.
//!
//! Every random stream in an experiment is derived from one experiment seed:
//! `experiment seed -> per-run seed -> per-component stream`. Derivation is a
//! SplitMix64 finalizer over the parent seed mixed with a stable label hash,
//! so streams are independent of thread scheduling and platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used by every stochastic component.
pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

// FNV-1a, stable across Rust versions unlike `DefaultHasher`.
fn label_hash(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Derives a child seed for a named component.
pub fn derive(parent: u64, label: &str) -> u64 {
    splitmix64(parent ^ splitmix64(label_hash(label)))
}

/// Derives a child seed for the `index`-th member of a family.
pub fn derive_indexed(parent: u64, label: &str, index: u64) -> u64 {
    splitmix64(derive(parent, label) ^ splitmix64(index.wrapping_add(1)))
}

/// Builds a generator for a named component.
pub fn stream(parent: u64, label: &str) -> Rng {
    Rng::seed_from_u64(derive(parent, label))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivation_is_stable_and_label_sensitive() {
        assert_eq!(derive(7, "env"), derive(7, "env"));
        assert_ne!(derive(7, "env"), derive(7, "init"));
        assert_ne!(derive(7, "env"), derive(8, "env"));
        assert_ne!(derive_indexed(7, "run", 0), derive_indexed(7, "run", 1));
    }

    #[test]
    fn known_value_is_frozen() {
        // Guards the splitting scheme: changing it silently changes every run.
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
    }
}
