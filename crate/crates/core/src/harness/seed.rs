use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic expansion of one root seed into independent RNG streams.
///
/// A `(label, index)` pair selects the ChaCha key (from `root` and `label`)
/// and the stream number (`index`), so the draws seen by run `index` do not
/// depend on how runs are scheduled across threads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedTree {
    root: u64,
}

impl SeedTree {
    pub fn new(root: u64) -> Self {
        Self { root }
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    /// Sub-tree keyed by `label`, for handing to a nested experiment.
    pub fn child(&self, label: u64) -> SeedTree {
        SeedTree::new(splitmix64(self.root ^ splitmix64(label)))
    }

    pub fn stream(&self, label: u64, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(self.root ^ splitmix64(label ^ 0xA5A5)));
        rng.set_stream(index);
        rng
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}
