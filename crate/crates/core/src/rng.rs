//! Counter-based random numbers.
//!
//! Every variate is a pure function of `(key, row, column)`, so any split of a
//! sample range across workers reproduces the sequential stream exactly.

use statrs::function::erf::erfc_inv;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stateless generator keyed by a 64-bit value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng { key: mix(seed.wrapping_add(GOLDEN)) }
    }

    /// Independent child generator for a named stream.
    pub fn split(&self, stream: u64) -> Self {
        CounterRng { key: mix(self.key ^ mix(stream.wrapping_mul(GOLDEN).wrapping_add(0x632b_e59b_d9b4_e019))) }
    }

    #[inline]
    pub fn bits(&self, row: u64, col: u64) -> u64 {
        let h = mix(self.key.wrapping_add(row.wrapping_mul(GOLDEN)));
        mix(h ^ mix(col.wrapping_add(GOLDEN).wrapping_mul(0xd1b5_4a32_d192_ed03)))
    }

    /// Uniform on the open interval (0, 1).
    #[inline]
    pub fn uniform(&self, row: u64, col: u64) -> f64 {
        ((self.bits(row, col) >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal by inversion of the CDF.
    #[inline]
    pub fn normal(&self, row: u64, col: u64) -> f64 {
        std_normal_quantile(self.uniform(row, col))
    }
}

/// Φ⁻¹(u) for u in (0, 1).
#[inline]
pub fn std_normal_quantile(u: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * u)
}
