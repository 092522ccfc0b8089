//! Counter-based Gaussian streams.
//!
//! Every Gaussian draw is a pure function of `(seed, stream_id, counter,
//! lane, mode)`, computed with Philox4x32-10 and mapped to a standard normal
//! through Wichura's AS241 inverse CDF. No generator state is carried
//! around, so Monte Carlo results do not depend on evaluation order or on
//! how samples are split across workers.

use crate::math;

const PHILOX_M0: u32 = 0xD251_1F53;
const PHILOX_M1: u32 = 0xCD9E_8D57;
const PHILOX_W0: u32 = 0x9E37_79B9;
const PHILOX_W1: u32 = 0xBB67_AE85;

#[inline(always)]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let p = u64::from(a) * u64::from(b);
    ((p >> 32) as u32, p as u32)
}

/// Philox4x32 with 10 rounds.
#[inline]
pub fn philox4x32_10(counter: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut c = counter;
    let mut k = key;
    for round in 0..10 {
        if round > 0 {
            k[0] = k[0].wrapping_add(PHILOX_W0);
            k[1] = k[1].wrapping_add(PHILOX_W1);
        }
        let (hi0, lo0) = mulhilo(PHILOX_M0, c[0]);
        let (hi1, lo1) = mulhilo(PHILOX_M1, c[2]);
        c = [hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0];
    }
    c
}

/// Identifies one Gaussian vector: `seed` selects the experiment, `stream_id`
/// the Monte Carlo sample, `counter` the increment within that sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedPath {
    pub seed: u64,
    pub stream_id: u32,
    pub counter: u64,
}

/// Number of independent lanes per `(seed, stream_id, counter)`; samplers that
/// need more than one vector per counter (e.g. split increments) use distinct
/// lanes.
pub const LANES: u32 = 8;
const MODE_BITS: u32 = 29;
/// Largest mode count a single draw can address.
pub const MAX_MODES: usize = 2 << MODE_BITS;

impl SeedPath {
    pub fn new(seed: u64, stream_id: u32, counter: u64) -> Self {
        Self { seed, stream_id, counter }
    }

    pub fn with_counter(self, counter: u64) -> Self {
        Self { counter, ..self }
    }

    pub fn with_stream(self, stream_id: u32) -> Self {
        Self { stream_id, ..self }
    }

    /// Fills `out` with standard normals for modes `1..=out.len()` on `lane`.
    /// Mode k's value does not depend on `out.len()`.
    pub fn fill_normals(&self, lane: u32, out: &mut [f64]) {
        debug_assert!(lane < LANES);
        debug_assert!(out.len() <= MAX_MODES);
        let key = [self.seed as u32, (self.seed >> 32) as u32];
        let ctr_hi = [self.counter as u32, (self.counter >> 32) as u32, self.stream_id];
        for (block, pair) in out.chunks_mut(2).enumerate() {
            let w = philox4x32_10([(lane << MODE_BITS) | block as u32, ctr_hi[0], ctr_hi[1], ctr_hi[2]], key);
            pair[0] = standard_normal_from_bits(w[0], w[1]);
            if pair.len() > 1 {
                pair[1] = standard_normal_from_bits(w[2], w[3]);
            }
        }
    }

    /// A single standard normal for 1-based `mode`.
    pub fn normal(&self, lane: u32, mode: usize) -> f64 {
        let key = [self.seed as u32, (self.seed >> 32) as u32];
        let block = ((mode - 1) / 2) as u32;
        let w = philox4x32_10(
            [(lane << MODE_BITS) | block, self.counter as u32, (self.counter >> 32) as u32, self.stream_id],
            key,
        );
        if (mode - 1).is_multiple_of(2) {
            standard_normal_from_bits(w[0], w[1])
        } else {
            standard_normal_from_bits(w[2], w[3])
        }
    }
}

/// Maps 64 random bits to a uniform on the open interval (0, 1) with 52 bits
/// of resolution: `(u + 1/2) 2^{-52}`.
#[inline]
pub fn open_uniform(hi: u32, lo: u32) -> f64 {
    // 52 bits so that `bits + 0.5` stays exact and the top value is below 1
    let bits = (u64::from(hi) << 20) | u64::from(lo >> 12);
    (bits as f64 + 0.5) * (1.0 / 4_503_599_627_370_496.0)
}

#[inline]
fn standard_normal_from_bits(hi: u32, lo: u32) -> f64 {
    normal_quantile(open_uniform(hi, lo))
}

#[inline(always)]
fn horner(c: &[f64; 8], x: f64) -> f64 {
    let mut r = c[7];
    for &ci in c[..7].iter().rev() {
        r = r * x + ci;
    }
    r
}

#[allow(clippy::excessive_precision)]
const A: [f64; 8] = [
    3.387_132_872_796_366_608_0,
    1.331_416_678_917_843_774_5e2,
    1.971_590_950_306_551_442_7e3,
    1.373_169_376_550_946_112_5e4,
    4.592_195_393_154_987_145_7e4,
    6.726_577_092_700_870_085_3e4,
    3.343_057_558_358_812_810_5e4,
    2.509_080_928_730_122_672_7e3,
];
#[allow(clippy::excessive_precision)]
const B: [f64; 8] = [
    1.0,
    4.231_333_070_160_091_125_2e1,
    6.871_870_074_920_579_083_0e2,
    5.394_196_021_424_751_107_7e3,
    2.121_379_430_158_659_586_7e4,
    3.930_789_580_009_271_061_0e4,
    2.872_908_573_572_194_267_4e4,
    5.226_495_278_852_854_561_0e3,
];
#[allow(clippy::excessive_precision)]
const C: [f64; 8] = [
    1.423_437_110_749_683_577_34,
    4.630_337_846_156_545_295_90,
    5.769_497_221_460_691_405_50,
    3.647_848_324_763_204_605_04,
    1.270_458_252_452_368_382_58,
    2.417_807_251_774_506_117_70e-1,
    2.272_384_498_926_918_458_33e-2,
    7.745_450_142_783_414_076_40e-4,
];
#[allow(clippy::excessive_precision)]
const D: [f64; 8] = [
    1.0,
    2.053_191_626_637_758_821_87,
    1.676_384_830_183_803_849_40,
    6.897_673_349_851_000_045_50e-1,
    1.481_039_764_274_800_745_90e-1,
    1.519_866_656_361_645_719_66e-2,
    5.475_938_084_995_344_946_00e-4,
    1.050_750_071_644_416_843_24e-9,
];
#[allow(clippy::excessive_precision)]
const E: [f64; 8] = [
    6.657_904_643_501_103_777_20,
    5.463_784_911_164_114_369_90,
    1.784_826_539_917_291_335_80,
    2.965_605_718_285_048_912_30e-1,
    2.653_218_952_657_612_309_30e-2,
    1.242_660_947_388_078_438_60e-3,
    2.711_555_568_743_487_578_15e-5,
    2.010_334_399_292_288_132_65e-7,
];
#[allow(clippy::excessive_precision)]
const F: [f64; 8] = [
    1.0,
    5.998_322_065_558_879_376_90e-1,
    1.369_298_809_227_358_053_10e-1,
    1.487_536_129_085_061_485_25e-2,
    7.868_691_311_456_132_591_00e-4,
    1.846_318_317_510_054_681_80e-5,
    1.421_511_758_316_445_888_70e-7,
    2.044_263_103_389_939_785_64e-15,
];

/// Standard normal quantile `Φ^{-1}(p)` for `p ∈ (0, 1)` (Wichura, AS241
/// PPND16; relative accuracy about 1e-16).
pub fn normal_quantile(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    let q = p - 0.5;
    if math::abs(q) <= 0.425 {
        let r = 0.180625 - q * q;
        return q * horner(&A, r) / horner(&B, r);
    }
    let r = if q < 0.0 { p } else { 1.0 - p };
    let r = math::sqrt(-math::ln(r));
    let v = if r <= 5.0 {
        let r = r - 1.6;
        horner(&C, r) / horner(&D, r)
    } else {
        let r = r - 5.0;
        horner(&E, r) / horner(&F, r)
    };
    if q < 0.0 {
        -v
    } else {
        v
    }
}
