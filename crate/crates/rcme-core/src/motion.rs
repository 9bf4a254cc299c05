//! Motion vectors, block distortion and the Lagrangian cost model.

use crate::frame::{Block, BlockGeometry, LumaFrame};
use crate::rate::RateTable;

/// Integer-pel displacement into the reference frame.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct MotionVector {
    pub x: i32,
    pub y: i32,
}

impl MotionVector {
    pub const ZERO: MotionVector = MotionVector { x: 0, y: 0 };

    pub fn new(x: i32, y: i32) -> Self {
        MotionVector { x, y }
    }

    pub fn offset(self, dx: i32, dy: i32) -> Self {
        MotionVector {
            x: self.x + dx,
            y: self.y + dy,
        }
    }
}

/// Difference between a motion vector and its predictor. This is the
/// quantity whose signalling cost the rate model estimates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Mvd {
    pub x: i32,
    pub y: i32,
}

impl Mvd {
    pub fn new(x: i32, y: i32) -> Self {
        Mvd { x, y }
    }
}

impl std::ops::Sub for MotionVector {
    type Output = Mvd;

    fn sub(self, rhs: MotionVector) -> Mvd {
        Mvd::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl std::fmt::Display for MotionVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

#[derive(thiserror::Error, Debug, PartialEq, Eq)]
pub enum MotionError {
    #[error("qp {0} out of range 0..=51")]
    QpOutOfRange(u8),
}

/// Sum of absolute differences between two blocks of identical dimensions.
///
/// Panics on a dimension mismatch; comparing blocks of different shapes is a
/// caller bug. The accumulator is wide enough for a 128x128 block of 8-bit
/// samples (max 128*128*255).
pub fn sad(a: &Block, b: &Block) -> u64 {
    assert_eq!(
        (a.width(), a.height()),
        (b.width(), b.height()),
        "sad: block dimensions differ"
    );
    a.samples()
        .iter()
        .zip(b.samples())
        .map(|(&p, &q)| u64::from(p.abs_diff(q)))
        .sum()
}

/// SAD between `original` and the candidate block at `geom` displaced by
/// `mv`, sampled straight from the reference with edge clamping. Equivalent
/// to `sad(original, &sample_candidate(reference, geom, mv))` without the
/// intermediate copy.
pub fn candidate_sad(
    original: &Block,
    reference: &LumaFrame,
    geom: BlockGeometry,
    mv: MotionVector,
) -> u64 {
    debug_assert_eq!((original.width(), original.height()), (geom.width, geom.height));
    let base_x = i64::from(geom.origin_x) + i64::from(mv.x);
    let base_y = i64::from(geom.origin_y) + i64::from(mv.y);
    let mut acc = 0u64;
    for j in 0..geom.height {
        let row = original.row(j);
        let sy = base_y + i64::from(j);
        for (i, &orig) in row.iter().enumerate() {
            let cand = reference.sample_clamped(base_x + i as i64, sy);
            acc += u64::from(orig.abs_diff(cand));
        }
    }
    acc
}

/// Sum of squared differences over the same candidate sampling; used to pool
/// prediction error into PSNR figures.
pub fn candidate_sse(
    original: &Block,
    reference: &LumaFrame,
    geom: BlockGeometry,
    mv: MotionVector,
) -> u64 {
    let base_x = i64::from(geom.origin_x) + i64::from(mv.x);
    let base_y = i64::from(geom.origin_y) + i64::from(mv.y);
    let mut acc = 0u64;
    for j in 0..geom.height {
        let row = original.row(j);
        let sy = base_y + i64::from(j);
        for (i, &orig) in row.iter().enumerate() {
            let d = u64::from(orig.abs_diff(reference.sample_clamped(base_x + i as i64, sy)));
            acc += d * d;
        }
    }
    acc
}

/// Rate-distortion cost of one candidate, split into its components.
///
/// The total is kept as a fixed-point integer (1/256 units) so that cost
/// comparisons are exact integer comparisons on every platform.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cost {
    pub distortion: u64,
    pub rate_bits: u32,
    total_x256: u64,
}

impl Cost {
    /// Total cost `distortion + lambda * rate_bits` as a float.
    pub fn total(&self) -> f64 {
        self.total_x256 as f64 / 256.0
    }

    /// Total cost in exact 1/256 units.
    pub fn total_x256(&self) -> u64 {
        self.total_x256
    }
}

/// The cost model of a single search: Lagrange multiplier, rate table and
/// the motion vector predictor the rate is anchored to.
///
/// Lambda is stored as an exact rational scaled by 256, making the cost
/// ordering deterministic.
#[derive(Clone, Copy)]
pub struct CostModel<'t> {
    lambda_x256: u64,
    mvp: MotionVector,
    table: &'t RateTable,
}

impl<'t> CostModel<'t> {
    pub fn new(table: &'t RateTable, mvp: MotionVector, lambda: f64) -> Self {
        assert!(lambda >= 0.0 && lambda.is_finite(), "lambda must be a non-negative finite value");
        CostModel {
            lambda_x256: (lambda * 256.0).round() as u64,
            mvp,
            table,
        }
    }

    pub fn with_lambda_x256(table: &'t RateTable, mvp: MotionVector, lambda_x256: u64) -> Self {
        CostModel { lambda_x256, mvp, table }
    }

    pub fn from_qp(table: &'t RateTable, mvp: MotionVector, qp: u8) -> Result<Self, MotionError> {
        Ok(Self::new(table, mvp, lambda_from_qp(qp)?))
    }

    pub fn mvp(&self) -> MotionVector {
        self.mvp
    }

    pub fn lambda_x256(&self) -> u64 {
        self.lambda_x256
    }

    pub fn lambda(&self) -> f64 {
        self.lambda_x256 as f64 / 256.0
    }

    /// Estimated signalling rate of `mv` relative to the predictor.
    ///
    /// Panics if the difference exceeds the rate table bound (the table must
    /// be sized for the search window in use).
    pub fn rate_bits(&self, mv: MotionVector) -> u32 {
        self.table.mvd_bits(mv - self.mvp)
    }

    /// Cost `j = d + lambda * r(mv - mvp)`.
    pub fn cost(&self, mv: MotionVector, distortion: u64) -> Cost {
        self.cost_from_parts(distortion, self.rate_bits(mv))
    }

    /// Cost from an already computed rate, avoiding a second table lookup.
    pub fn cost_from_parts(&self, distortion: u64, rate_bits: u32) -> Cost {
        Cost {
            distortion,
            rate_bits,
            total_x256: distortion * 256 + self.lambda_x256 * u64::from(rate_bits),
        }
    }
}

/// Motion-search Lagrange multiplier for a quantization parameter,
/// `sqrt(0.85 * 2^((qp-12)/3))`.
pub fn lambda_from_qp(qp: u8) -> Result<f64, MotionError> {
    if qp > 51 {
        return Err(MotionError::QpOutOfRange(qp));
    }
    Ok((0.85 * 2f64.powf((f64::from(qp) - 12.0) / 3.0)).sqrt())
}

/// Component-wise median of the available neighbor motion vectors (left,
/// above, above-right in coding order). Returns the zero vector when no
/// neighbor is available; with an even number of neighbors the lower middle
/// element is taken so the result stays integer-pel.
pub fn predict_mv(neighbors: &[Option<MotionVector>]) -> MotionVector {
    let mut xs: Vec<i32> = Vec::with_capacity(neighbors.len());
    let mut ys: Vec<i32> = Vec::with_capacity(neighbors.len());
    for mv in neighbors.iter().flatten() {
        xs.push(mv.x);
        ys.push(mv.y);
    }
    if xs.is_empty() {
        return MotionVector::ZERO;
    }
    xs.sort_unstable();
    ys.sort_unstable();
    let mid = (xs.len() - 1) / 2;
    MotionVector::new(xs[mid], ys[mid])
}
