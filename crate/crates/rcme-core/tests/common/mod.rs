//! Shared test support: an independent brute-force search oracle (its own
//! Golomb lengths, its own SAD loops, its own tie-breaking) and synthetic
//! clip builders.

#![allow(dead_code)]

use rand::Rng;
use rcme_core::frame::{BlockGeometry, LumaFrame};
use rcme_core::motion::MotionVector;

/// Golomb length by walking the codeword groups: group `k` holds 2^k
/// codewords of length 2k+1, covering code numbers 2^k-1 ..= 2^(k+1)-2.
pub fn oracle_golomb_length(v: i64) -> u32 {
    let code_num = if v > 0 { 2 * v as u64 - 1 } else { (-2 * v) as u64 };
    let mut k = 0u32;
    let mut first = 0u64;
    let mut group = 1u64;
    loop {
        if code_num < first + group {
            return 2 * k + 1;
        }
        first += group;
        group *= 2;
        k += 1;
    }
}

pub fn oracle_mvd_rate(dx: i32, dy: i32) -> u32 {
    oracle_golomb_length(i64::from(dx)) + oracle_golomb_length(i64::from(dy))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleBest {
    pub mv: (i32, i32),
    pub total_x256: u64,
    pub distortion: u64,
    pub rate_bits: u32,
}

pub struct OracleScan {
    pub best: Option<OracleBest>,
    pub admitted: u64,
    pub emitted: u64,
}

/// Exhaustive argmin of `d + lambda * r` over an inclusive MV rectangle,
/// written without touching the library's search or rate paths. Ties break
/// on lower rate, then |y|, then |x|, then scan order.
pub fn oracle_full_search(
    current: &LumaFrame,
    reference: &LumaFrame,
    geom: BlockGeometry,
    rect: (i32, i32, i32, i32),
    mvp: (i32, i32),
    lambda_x256: u64,
    threshold: Option<u32>,
) -> OracleScan {
    let (min_x, max_x, min_y, max_y) = rect;
    let mut best: Option<OracleBest> = None;
    let mut admitted = 0u64;
    let mut emitted = 0u64;
    for y in min_y..=max_y {
        for x in min_x..=max_x {
            emitted += 1;
            let rate = oracle_mvd_rate(x - mvp.0, y - mvp.1);
            if let Some(t) = threshold {
                if rate > t {
                    continue;
                }
            }
            admitted += 1;
            let mut sad = 0u64;
            for j in 0..geom.height {
                for i in 0..geom.width {
                    let ox = geom.origin_x + i;
                    let oy = geom.origin_y + j;
                    let cx = (i64::from(ox) + i64::from(x))
                        .clamp(0, i64::from(reference.width()) - 1) as u32;
                    let cy = (i64::from(oy) + i64::from(y))
                        .clamp(0, i64::from(reference.height()) - 1) as u32;
                    sad += u64::from(current.sample(ox, oy).abs_diff(reference.sample(cx, cy)));
                }
            }
            let candidate = OracleBest {
                mv: (x, y),
                total_x256: sad * 256 + lambda_x256 * u64::from(rate),
                distortion: sad,
                rate_bits: rate,
            };
            let wins = match &best {
                None => true,
                Some(b) => {
                    (candidate.total_x256, candidate.rate_bits, y.abs(), x.abs())
                        < (b.total_x256, b.rate_bits, b.mv.1.abs(), b.mv.0.abs())
                }
            };
            if wins {
                best = Some(candidate);
            }
        }
    }
    OracleScan { best, admitted, emitted }
}

/// Deterministic texture: a smooth gradient with coarse noise on top, so
/// SAD landscapes have structure without being flat.
pub fn textured_frame(width: u32, height: u32, index: u32, seed: u64) -> LumaFrame {
    LumaFrame::from_fn(width, height, index, |x, y| {
        let mut cell = u64::from(x / 4) ^ (u64::from(y / 4) << 20) ^ seed;
        cell ^= cell << 13;
        cell ^= cell >> 7;
        cell ^= cell << 17;
        let noise = (cell >> 24) as u8;
        let gradient = ((x * 2 + y * 3) % 160) as u8;
        gradient / 2 + noise / 2
    })
}

pub fn noise_frame(width: u32, height: u32, index: u32, seed: u64) -> LumaFrame {
    let mut state = seed | 1;
    LumaFrame::from_fn(width, height, index, move |_, _| {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 24) as u8
    })
}

/// Identical frames of textured content.
pub fn static_clip(width: u32, height: u32, frames: u32) -> Vec<LumaFrame> {
    let base = textured_frame(width, height, 0, 0xC0FFEE);
    (0..frames)
        .map(|k| LumaFrame::from_fn(width, height, k, |x, y| base.sample(x, y)))
        .collect()
}

/// Global translation alternating between +shift and back, so consecutive
/// pairs move by (+dx,+dy) and (-dx,-dy).
pub fn translation_clip(width: u32, height: u32, frames: u32, dx: i32, dy: i32) -> Vec<LumaFrame> {
    let base = textured_frame(width, height, 0, 0xBEEF);
    (0..frames)
        .map(|k| {
            let (ox, oy) = if k % 2 == 0 { (0, 0) } else { (dx, dy) };
            LumaFrame::from_fn(width, height, k, |x, y| {
                base.sample_clamped(i64::from(x) + i64::from(ox), i64::from(y) + i64::from(oy))
            })
        })
        .collect()
}

/// Frames of independent noise; motion search finds nothing stable.
pub fn noise_clip(width: u32, height: u32, frames: u32) -> Vec<LumaFrame> {
    (0..frames)
        .map(|k| noise_frame(width, height, k, 0x9E3779B97F4A7C15u64.wrapping_mul(u64::from(k) + 1)))
        .collect()
}

/// One randomized 16x16 search problem for the oracle-equivalence corpus.
pub struct RandomContext {
    pub current: LumaFrame,
    pub reference: LumaFrame,
    pub geom: BlockGeometry,
    pub mvp: (i32, i32),
    pub range: u32,
    pub lambda_x256: u64,
    pub threshold: Option<u32>,
}

pub fn random_context<R: Rng>(rng: &mut R) -> RandomContext {
    let width = rng.gen_range(20..=56);
    let height = rng.gen_range(20..=56);
    let seed = rng.gen::<u64>();
    let (reference, current) = if rng.gen_bool(0.5) {
        (noise_frame(width, height, 0, seed), noise_frame(width, height, 1, seed ^ 0x5bd1e995))
    } else {
        let reference = textured_frame(width, height, 0, seed);
        let sx = rng.gen_range(-4i64..=4);
        let sy = rng.gen_range(-4i64..=4);
        let current = LumaFrame::from_fn(width, height, 1, |x, y| {
            reference.sample_clamped(i64::from(x) + sx, i64::from(y) + sy)
        });
        (reference, current)
    };
    let geom = BlockGeometry::new(
        rng.gen_range(0..=width - 16),
        rng.gen_range(0..=height - 16),
        16,
        16,
    );
    let range = rng.gen_range(1..=16u32);
    let r = range as i32;
    let raw_mvp = (rng.gen_range(-r..=r), rng.gen_range(-r..=r));
    let mvp = (
        raw_mvp.0.clamp(
            -(geom.origin_x as i32),
            width as i32 - 16 - geom.origin_x as i32,
        ),
        raw_mvp.1.clamp(
            -(geom.origin_y as i32),
            height as i32 - 16 - geom.origin_y as i32,
        ),
    );
    let lambda_x256 = if rng.gen_bool(0.15) { 0 } else { rng.gen_range(1..=4096) };
    let threshold = if rng.gen_bool(0.25) {
        None
    } else {
        Some(rng.gen_range(2..=24u32))
    };
    RandomContext { current, reference, geom, mvp, range, lambda_x256, threshold }
}

impl RandomContext {
    pub fn mvp_vector(&self) -> MotionVector {
        MotionVector::new(self.mvp.0, self.mvp.1)
    }
}
