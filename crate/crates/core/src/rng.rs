//! Deterministic pseudo-random number generation.
//!
//! Every stochastic step in this crate (weight init, data synthesis, epoch
//! shuffling) draws from [`Pcg32`], the PCG-XSH-RR 64/32 generator with the
//! reference constants, so results reproduce bit-for-bit across platforms and
//! implementations. Sub-streams are derived with [`SplitMix64`].

/// SplitMix64 (Steele, Lea & Flood). Used only to derive independent
/// sub-seeds from a single user-facing 64-bit seed.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

/// PCG-XSH-RR 64/32 with the reference multiplier and stream constant
/// (O'Neill, "PCG: A Family of Simple Fast Space-Efficient Statistically
/// Good Algorithms for Random Number Generation", pcg32 variant).
#[derive(Debug, Clone)]
pub struct Pcg32 {
    state: u64,
}

const PCG_MULT: u64 = 6_364_136_223_846_793_005;
const PCG_INC: u64 = 1_442_695_040_888_963_407; // fixed odd stream constant

impl Pcg32 {
    /// Seeds with the reference `pcg32_srandom` procedure at the fixed stream.
    pub fn new(seed: u64) -> Self {
        let mut rng = Self { state: 0 };
        rng.step();
        rng.state = rng.state.wrapping_add(seed);
        rng.step();
        rng
    }

    fn step(&mut self) {
        self.state = self.state.wrapping_mul(PCG_MULT).wrapping_add(PCG_INC);
    }

    pub fn next_u32(&mut self) -> u32 {
        let old = self.state;
        self.step();
        let xorshifted = (((old >> 18) ^ old) >> 27) as u32;
        let rot = (old >> 59) as u32;
        xorshifted.rotate_right(rot)
    }

    pub fn next_u64(&mut self) -> u64 {
        let hi = u64::from(self.next_u32());
        let lo = u64::from(self.next_u32());
        (hi << 32) | lo
    }

    /// Uniform f64 in [0, 1) with the full 53-bit mantissa.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform f64 in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Standard normal via Box-Muller. Each call draws two uniforms and
    /// returns the cosine variate; the sine variate is discarded so that the
    /// stream position never depends on caller history.
    pub fn next_normal(&mut self) -> f64 {
        let u1 = self.next_f64().max(f64::MIN_POSITIVE);
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Uniform integer in [0, n). Plain modulo reduction; the bias for the
    /// desk-scale `n` used here (< 2^20) is far below statistical resolution.
    pub fn bounded(&mut self, n: usize) -> usize {
        assert!(n > 0, "bounded(0) is undefined");
        (self.next_u64() % n as u64) as usize
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.bounded(i + 1);
            xs.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pcg32_matches_reference_stream() {
        // Expected outputs computed with an independent implementation of the
        // published algorithm (same multiplier, fixed stream constant).
        let cases: &[(u64, [u32; 6])] = &[
            (
                0,
                [
                    0xe823_a24e, 0x7a7e_cbd9, 0x89fd_6c06, 0xae64_6aa8, 0xcd3c_f945, 0x6204_b303,
                ],
            ),
            (
                42,
                [
                    0xc2f5_7bd6, 0x6b07_c4a9, 0x72b7_b29b, 0x4421_5383, 0xf5af_5ead, 0x68be_b632,
                ],
            ),
            (
                2026,
                [
                    0x54fa_c1b2, 0x368e_5e11, 0x3d4f_7d07, 0x99b4_aa82, 0x8183_4651, 0xbf66_a1c1,
                ],
            ),
        ];
        for &(seed, expected) in cases {
            let mut rng = Pcg32::new(seed);
            let got: Vec<u32> = (0..6).map(|_| rng.next_u32()).collect();
            assert_eq!(got, expected, "seed {seed}");
        }
    }

    #[test]
    fn distinct_seeds_diverge() {
        let a: Vec<u32> = {
            let mut r = Pcg32::new(1);
            (0..8).map(|_| r.next_u32()).collect()
        };
        let b: Vec<u32> = {
            let mut r = Pcg32::new(2);
            (0..8).map(|_| r.next_u32()).collect()
        };
        assert_ne!(a, b);
    }

    #[test]
    fn uniform_and_normal_are_finite_and_in_range() {
        let mut rng = Pcg32::new(7);
        for _ in 0..10_000 {
            let u = rng.next_f64();
            assert!((0.0..1.0).contains(&u));
        }
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let n = 20_000;
        for _ in 0..n {
            let z = rng.next_normal();
            assert!(z.is_finite());
            sum += z;
            sum_sq += z * z;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.05, "normal mean drifted: {mean}");
        assert!((var - 1.0).abs() < 0.05, "normal variance drifted: {var}");
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut rng = Pcg32::new(11);
        let mut xs: Vec<usize> = (0..100).collect();
        rng.shuffle(&mut xs);
        let mut sorted = xs.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..100).collect::<Vec<_>>());
    }
}
