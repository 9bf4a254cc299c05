//! MVD bitrate model: signed exp-Golomb code lengths, the lookup table used
//! by the searches, the admission threshold and the rate surface grid.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use crate::gridio;
use crate::motion::{MotionVector, Mvd};

/// Bit length of the order-0 signed Exponential-Golomb codeword for `v`.
///
/// Positive values map to code number `2v - 1`, non-positive values to
/// `-2v`; both signs of the same magnitude land in the same length group,
/// so `g(v) == g(-v)`.
pub fn golomb_signed_length(v: i32) -> u32 {
    let code_num = if v > 0 {
        2 * v as u64 - 1
    } else {
        2 * (-(i64::from(v))) as u64
    };
    2 * (code_num + 1).ilog2() + 1
}

/// Signalling rate of a motion vector difference: `g(x) + g(y)`, evaluated
/// with the closed form (no table bound).
pub fn mvd_rate(mvd: Mvd) -> u32 {
    golomb_signed_length(mvd.x) + golomb_signed_length(mvd.y)
}

/// Precomputed per-component code lengths, indexed by magnitude.
///
/// Immutable after construction and freely shared across concurrent
/// searches.
#[derive(Clone, Debug)]
pub struct RateTable {
    max_magnitude: u32,
    lengths: Vec<u8>,
}

impl RateTable {
    pub fn new(max_magnitude: u32) -> Self {
        let lengths = (0..=max_magnitude)
            .map(|m| golomb_signed_length(m as i32) as u8)
            .collect();
        RateTable { max_magnitude, lengths }
    }

    /// Table sized for a search window: twice the range, so any difference
    /// between an in-window vector and a predictor that is itself within
    /// range of the window center stays inside the table.
    pub fn for_search_range(range: u32) -> Self {
        Self::new(range.saturating_mul(2).max(1))
    }

    pub fn max_magnitude(&self) -> u32 {
        self.max_magnitude
    }

    /// Code length of one component. Panics when `|v|` exceeds the table
    /// bound: that means the search window is larger than the table it was
    /// given, which is a caller bug.
    pub fn component_bits(&self, v: i32) -> u32 {
        let mag = v.unsigned_abs();
        assert!(
            mag <= self.max_magnitude,
            "mvd component {v} exceeds rate table bound {}",
            self.max_magnitude
        );
        u32::from(self.lengths[mag as usize])
    }

    /// `g(x) + g(y)` via the lookup table. Minimum value (2 bits) occurs at
    /// the zero difference.
    pub fn mvd_bits(&self, mvd: Mvd) -> u32 {
        self.component_bits(mvd.x) + self.component_bits(mvd.y)
    }

    /// The admission predicate: true iff signalling `mv` against `mvp`
    /// costs no more than `t`.
    pub fn within_budget(&self, mv: MotionVector, mvp: MotionVector, t: RateThreshold) -> bool {
        match t {
            RateThreshold::Unbounded => true,
            RateThreshold::Bits(limit) => self.mvd_bits(mv - mvp) <= limit,
        }
    }
}

/// Candidate admission budget in bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RateThreshold {
    Bits(u32),
    Unbounded,
}

impl RateThreshold {
    pub fn admits(self, rate_bits: u32) -> bool {
        match self {
            RateThreshold::Bits(t) => rate_bits <= t,
            RateThreshold::Unbounded => true,
        }
    }

    pub fn is_unbounded(self) -> bool {
        matches!(self, RateThreshold::Unbounded)
    }
}

impl fmt::Display for RateThreshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateThreshold::Bits(t) => write!(f, "{t}"),
            RateThreshold::Unbounded => write!(f, "unbounded"),
        }
    }
}

impl FromStr for RateThreshold {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("unbounded") {
            return Ok(RateThreshold::Unbounded);
        }
        s.parse::<u32>()
            .map(RateThreshold::Bits)
            .map_err(|_| format!("bad threshold {s:?}: expected a bit count or \"unbounded\""))
    }
}

/// MVD rate over a square window of displacements relative to the
/// predictor: cell `(dx, dy)` holds `mvd_rate((dx, dy))`.
///
/// Rows run `dy = -radius..=radius` top to bottom, columns likewise in x.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RateSurface {
    radius: u32,
    values: Vec<u32>,
}

/// Evaluate the rate surface for the given window radius.
pub fn rate_surface(radius: u32) -> RateSurface {
    let side = 2 * radius as usize + 1;
    let r = radius as i64;
    let mut values = Vec::with_capacity(side * side);
    for dy in -r..=r {
        for dx in -r..=r {
            values.push(mvd_rate(Mvd::new(dx as i32, dy as i32)));
        }
    }
    RateSurface { radius, values }
}

impl RateSurface {
    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn side(&self) -> usize {
        2 * self.radius as usize + 1
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn value_at(&self, dx: i32, dy: i32) -> u32 {
        let r = self.radius as i32;
        assert!(dx.abs() <= r && dy.abs() <= r, "({dx},{dy}) outside surface radius {r}");
        let side = self.side();
        self.values[(dy + r) as usize * side + (dx + r) as usize]
    }

    /// Cells as `(dx, dy, rate)` in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (i32, i32, u32)> + '_ {
        let r = self.radius as i32;
        let side = self.side() as i32;
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (i as i32 % side - r, i as i32 / side - r, v))
    }

    /// Number of cells admitted by `t`.
    pub fn admitted_count(&self, t: RateThreshold) -> usize {
        self.values.iter().filter(|&&v| t.admits(v)).count()
    }

    /// Row-major integer CSV.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        gridio::write_csv_grid(w, self.side(), &self.values)
    }

    /// 8-bit binary PGM, values linearly scaled to 0..=255; the header
    /// comment records the radius.
    pub fn write_pgm<W: Write>(&self, w: &mut W) -> io::Result<()> {
        let wide: Vec<u64> = self.values.iter().map(|&v| u64::from(v)).collect();
        let bytes = gridio::scale_to_bytes(&wide);
        gridio::write_pgm(w, self.side(), self.side(), &format!("mvd rate surface, radius {}", self.radius), &bytes)
    }
}
