//! Counter-based splittable random streams.
//!
//! Every stream is a pure function of `(key, counter)`, so derived
//! substreams can be handed to parallel workers in any order without
//! changing the sampled values. Keys are derived by mixing the parent
//! key with structural coordinates (replication index, tree level,
//! node index), never by drawing from the parent stream.

/// SplitMix64 finalizer; the core bijective mixer.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// Derive a child key from a parent key and up to three coordinates.
pub fn derive_key(parent: u64, a: u64, b: u64, c: u64) -> u64 {
    let mut k = parent;
    k = mix(k ^ a.wrapping_mul(GOLDEN).rotate_left(17));
    k = mix(k ^ b.wrapping_mul(GOLDEN).rotate_left(31));
    k = mix(k ^ c.wrapping_mul(GOLDEN).rotate_left(47));
    k
}

/// A counter-based stream: the i-th output is `mix(key + i * GOLDEN)`.
#[derive(Debug, Clone)]
pub struct Stream {
    key: u64,
    ctr: u64,
}

impl Stream {
    pub fn new(key: u64) -> Self {
        Stream { key, ctr: 0 }
    }

    /// Stream for structural coordinates `(a, b, c)` under a seed.
    pub fn derived(seed: u64, a: u64, b: u64, c: u64) -> Self {
        Stream::new(derive_key(seed, a, b, c))
    }

    pub fn next_u64(&mut self) -> u64 {
        let v = mix(self.key.wrapping_add(self.ctr.wrapping_mul(GOLDEN)).wrapping_add(GOLDEN));
        self.ctr += 1;
        v
    }

    /// Uniform in the open interval (0, 1); 53-bit resolution, never 0 or 1.
    pub fn next_f64_open(&mut self) -> f64 {
        let bits = self.next_u64() >> 11; // 53 bits
        (bits as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Standard normal via the inverse CDF, so a draw is literally the
    /// quantile coupling with its underlying uniform.
    pub fn next_standard_normal(&mut self) -> f64 {
        crate::monotone_coupling::normal::inverse_cdf(self.next_f64_open())
    }

    /// The uniform together with the normal obtained from it.
    pub fn next_uniform_normal_pair(&mut self) -> (f64, f64) {
        let u = self.next_f64_open();
        (u, crate::monotone_coupling::normal::inverse_cdf(u))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible() {
        let mut a = Stream::derived(7, 1, 2, 3);
        let mut b = Stream::derived(7, 1, 2, 3);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn sibling_streams_differ() {
        let mut a = Stream::derived(7, 1, 2, 3);
        let mut b = Stream::derived(7, 1, 2, 4);
        let hits = (0..64).filter(|_| a.next_u64() == b.next_u64()).count();
        assert_eq!(hits, 0);
    }

    #[test]
    fn uniforms_lie_in_open_interval() {
        let mut s = Stream::new(42);
        let mut mean = 0.0;
        let n = 10_000;
        for _ in 0..n {
            let u = s.next_f64_open();
            assert!(u > 0.0 && u < 1.0);
            mean += u;
        }
        mean /= n as f64;
        assert!((mean - 0.5).abs() < 0.02);
    }
}
