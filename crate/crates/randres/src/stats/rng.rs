//! Reproducible counter-based random number streams.
//!
//! Every random draw in the crate flows through [`RngStream`], a wrapper
//! around `ChaCha12Rng`. ChaCha is counter-based with a dedicated 64-bit
//! stream field, so a `(master seed, stream id)` pair addresses an
//! independent sequence (period well above 2^128 per stream) and the same
//! pair produces the same draws on every platform.
//!
//! Parallel code must derive one child stream per unit of work *before* the
//! parallel region starts (see [`RngStream::child`]) and reduce results in
//! slot order; thread scheduling then cannot affect any output.

use rand::{Error as RandError, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// SplitMix64 step; used to expand a 64-bit seed into key material and to
/// mix stream ids when deriving children.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A named, reproducible random stream.
#[derive(Clone, Debug)]
pub struct RngStream {
    master: u64,
    stream_id: u64,
    inner: ChaCha12Rng,
}

impl RngStream {
    /// Stream addressed by `(master_seed, stream_id)`. The master seed is
    /// expanded into the 256-bit ChaCha key via SplitMix64; the stream id is
    /// placed in the ChaCha stream (nonce) field.
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        let mut state = master_seed;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut inner = ChaCha12Rng::from_seed(key);
        inner.set_stream(stream_id);
        RngStream {
            master: master_seed,
            stream_id,
            inner,
        }
    }

    /// Derive the child stream for work slot `slot`. Children of distinct
    /// slots (and grandchildren, and so on) get well-separated stream ids by
    /// SplitMix64 mixing, independent of how much the parent has been used.
    pub fn child(&self, slot: u64) -> Self {
        let mut state = self
            .stream_id
            .wrapping_add(slot.wrapping_mul(0x9E37_79B9_7F4A_7C15))
            .wrapping_add(0xD1B5_4A32_D192_ED03);
        RngStream::new(self.master, splitmix64(&mut state))
    }

    pub fn master_seed(&self) -> u64 {
        self.master
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform draw from `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        use rand::Rng;
        self.inner.gen_range(lo..hi)
    }

    /// Standard normal draw.
    pub fn standard_normal(&mut self) -> f64 {
        use rand_distr::{Distribution, StandardNormal};
        StandardNormal.sample(&mut self.inner)
    }

    /// Uniform index in `0..upper` (rejection-free range draw).
    pub fn index(&mut self, upper: usize) -> usize {
        use rand::Rng;
        assert!(upper > 0, "index needs a nonempty range");
        self.inner.gen_range(0..upper)
    }

    /// Fills `out` with a point drawn uniformly from the centered ball of
    /// the given radius: a normalized Gaussian direction scaled by the
    /// inverse-CDF radius `radius * U^(1/dim)`.
    pub fn fill_uniform_ball(&mut self, radius: f64, out: &mut [f64]) {
        assert!(!out.is_empty() && radius > 0.0);
        loop {
            let mut n2 = 0.0;
            for x in out.iter_mut() {
                *x = self.standard_normal();
                n2 += *x * *x;
            }
            // An all-zero Gaussian draw has no direction; redraw (probability
            // zero in exact arithmetic, subnormal-rare in floats).
            if n2 > 0.0 {
                let u = self.uniform(0.0, 1.0);
                let scale = radius * u.powf(1.0 / out.len() as f64) / n2.sqrt();
                for x in out.iter_mut() {
                    *x *= scale;
                }
                return;
            }
        }
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), RandError> {
        self.inner.try_fill_bytes(dest)
    }
}
