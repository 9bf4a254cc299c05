//! Complexity accounting, MV decision heatmaps and their correlation with
//! the rate surface, plus PSNR and BD-rate utilities for RD reporting.

use std::collections::BTreeMap;
use std::io::{self, Write};

use crate::frame::LumaFrame;
use crate::gridio;
use crate::motion::Mvd;
use crate::rate::RateSurface;

#[derive(thiserror::Error, Debug, PartialEq, Eq)]
pub enum AnalyticsError {
    #[error("grid dimensions do not match")]
    DimensionMismatch,
    #[error("not enough data points")]
    NotEnoughData,
    #[error("zero variance in one of the series")]
    ZeroVariance,
    #[error("baseline complexity is zero")]
    ZeroBaseline,
    #[error("curves do not overlap in quality")]
    NonOverlappingCurves,
    #[error("degenerate curve fit: {0}")]
    DegenerateFit(&'static str),
    #[error("bad RD curve: {0}")]
    BadCurve(&'static str),
}

/// Distortion-evaluation counters keyed by block size.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    per_size: BTreeMap<(u32, u32), u64>,
}

impl SearchStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, width: u32, height: u32, candidates: u64) {
        *self.per_size.entry((width, height)).or_insert(0) += candidates;
    }

    pub fn merge(&mut self, other: &SearchStats) {
        for (&size, &count) in &other.per_size {
            *self.per_size.entry(size).or_insert(0) += count;
        }
    }

    pub fn candidates(&self, width: u32, height: u32) -> u64 {
        self.per_size.get(&(width, height)).copied().unwrap_or(0)
    }

    pub fn total_candidates(&self) -> u64 {
        self.per_size.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((u32, u32), u64)> + '_ {
        self.per_size.iter().map(|(&size, &count)| (size, count))
    }

    pub fn is_empty(&self) -> bool {
        self.per_size.is_empty()
    }
}

/// Machine-independent search effort: the sum over block sizes of
/// distortion evaluations weighted by block area.
pub fn complexity(stats: &SearchStats) -> u64 {
    stats
        .iter()
        .map(|((w, h), count)| count * u64::from(w) * u64::from(h))
        .sum()
}

/// Relative complexity saved by a modified run against a baseline, in
/// percent. Negative values (the modified run did more work) pass through.
pub fn complexity_reduction(c_ori: u64, c_mod: u64) -> Result<f64, AnalyticsError> {
    if c_ori == 0 {
        return Err(AnalyticsError::ZeroBaseline);
    }
    Ok((c_ori as f64 - c_mod as f64) / c_ori as f64 * 100.0)
}

/// Occurrence counts of selected MVs, relative to the predictor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Heatmap {
    radius: u32,
    counts: Vec<u64>,
    overflow: u64,
}

impl Heatmap {
    pub fn new(radius: u32) -> Self {
        let side = 2 * radius as usize + 1;
        Heatmap { radius, counts: vec![0; side * side], overflow: 0 }
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn side(&self) -> usize {
        2 * self.radius as usize + 1
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count_at(&self, dx: i32, dy: i32) -> u64 {
        let r = self.radius as i32;
        assert!(dx.abs() <= r && dy.abs() <= r);
        self.counts[(dy + r) as usize * self.side() + (dx + r) as usize]
    }

    /// Decisions that fell outside the grid radius.
    pub fn overflow(&self) -> u64 {
        self.overflow
    }

    /// Grid mass plus overflow: every recorded decision lands in exactly
    /// one of the two.
    pub fn total_recorded(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.overflow
    }

    pub fn record(&mut self, mvd: Mvd) {
        let r = self.radius as i32;
        if mvd.x.abs() > r || mvd.y.abs() > r {
            self.overflow += 1;
            return;
        }
        let idx = (mvd.y + r) as usize * self.side() + (mvd.x + r) as usize;
        self.counts[idx] += 1;
    }

    pub fn merge(&mut self, other: &Heatmap) {
        assert_eq!(self.radius, other.radius, "cannot merge heatmaps of different radii");
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.overflow += other.overflow;
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        gridio::write_csv_grid(w, self.side(), &self.counts)
    }

    /// 8-bit PGM of ln(1+count), linearly scaled; brighter cells mean
    /// exponentially more decisions.
    pub fn write_pgm<W: Write>(&self, w: &mut W) -> io::Result<()> {
        let max = self
            .counts
            .iter()
            .map(|&c| (1.0 + c as f64).ln())
            .fold(0.0f64, f64::max);
        let bytes: Vec<u8> = self
            .counts
            .iter()
            .map(|&c| {
                if max == 0.0 {
                    0
                } else {
                    (((1.0 + c as f64).ln() / max) * 255.0).round() as u8
                }
            })
            .collect();
        gridio::write_pgm(
            w,
            self.side(),
            self.side(),
            &format!("mv decision heatmap, radius {}, log-scaled", self.radius),
            &bytes,
        )
    }
}

/// Pearson correlation coefficient of two equally long series.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, AnalyticsError> {
    if xs.len() != ys.len() {
        return Err(AnalyticsError::DimensionMismatch);
    }
    if xs.len() < 2 {
        return Err(AnalyticsError::NotEnoughData);
    }
    let constant = |s: &[f64]| s.iter().all(|v| v == &s[0]);
    if constant(xs) || constant(ys) {
        return Err(AnalyticsError::ZeroVariance);
    }
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(AnalyticsError::ZeroVariance);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// How zero-count heatmap cells enter the log-domain correlation: floor
/// every count with +1, or exclude zero cells entirely.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZeroCountPolicy {
    AddOne,
    Exclude,
}

impl ZeroCountPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            ZeroCountPolicy::AddOne => "add_one",
            ZeroCountPolicy::Exclude => "exclude",
        }
    }
}

/// Pearson r of `(rate, ln(count))` pairs under the given zero-cell policy.
pub fn rate_log_correlation(
    pairs: impl IntoIterator<Item = (f64, f64)>,
    policy: ZeroCountPolicy,
) -> Result<f64, AnalyticsError> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (rate, count) in pairs {
        match policy {
            ZeroCountPolicy::AddOne => {
                xs.push(rate);
                ys.push((count + 1.0).ln());
            }
            ZeroCountPolicy::Exclude => {
                if count > 0.0 {
                    xs.push(rate);
                    ys.push(count.ln());
                }
            }
        }
    }
    pearson(&xs, &ys)
}

/// Correlation between a decision heatmap and the rate surface over the
/// same window, pairing cells element-wise.
pub fn rate_heatmap_correlation(
    heatmap: &Heatmap,
    surface: &RateSurface,
    policy: ZeroCountPolicy,
) -> Result<f64, AnalyticsError> {
    if heatmap.radius() != surface.radius() {
        return Err(AnalyticsError::DimensionMismatch);
    }
    rate_log_correlation(
        surface
            .values()
            .iter()
            .zip(heatmap.counts())
            .map(|(&r, &c)| (f64::from(r), c as f64)),
        policy,
    )
}

/// PSNR in dB between two equally sized 8-bit planes; identical planes
/// return the infinity sentinel.
pub fn psnr(a: &LumaFrame, b: &LumaFrame) -> Result<f64, AnalyticsError> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(AnalyticsError::DimensionMismatch);
    }
    let sse: u64 = a
        .samples()
        .iter()
        .zip(b.samples())
        .map(|(&p, &q)| {
            let d = u64::from(p.abs_diff(q));
            d * d
        })
        .sum();
    Ok(psnr_from_sse(sse, a.samples().len() as u64))
}

/// PSNR from a pooled sum of squared errors.
pub fn psnr_from_sse(sse: u64, samples: u64) -> f64 {
    if sse == 0 {
        return f64::INFINITY;
    }
    let mse = sse as f64 / samples as f64;
    10.0 * (255.0 * 255.0 / mse).log10()
}

/// One rate/quality measurement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RdPoint {
    pub bitrate: f64,
    pub psnr: f64,
}

/// A rate-distortion curve of at least four points, sorted by bitrate.
#[derive(Clone, Debug, PartialEq)]
pub struct RdCurve {
    points: Vec<RdPoint>,
}

impl RdCurve {
    pub fn new(mut points: Vec<RdPoint>) -> Result<Self, AnalyticsError> {
        if points.len() < 4 {
            return Err(AnalyticsError::BadCurve("need at least 4 points"));
        }
        if points.iter().any(|p| !p.bitrate.is_finite() || !p.psnr.is_finite() || p.bitrate <= 0.0) {
            return Err(AnalyticsError::BadCurve("points must have finite quality and positive bitrate"));
        }
        points.sort_by(|a, b| a.bitrate.partial_cmp(&b.bitrate).unwrap());
        if points.windows(2).any(|w| w[0].bitrate >= w[1].bitrate) {
            return Err(AnalyticsError::BadCurve("bitrates must be strictly increasing"));
        }
        Ok(RdCurve { points })
    }

    pub fn points(&self) -> &[RdPoint] {
        &self.points
    }

    fn quality_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for p in &self.points {
            lo = lo.min(p.psnr);
            hi = hi.max(p.psnr);
        }
        (lo, hi)
    }

    /// `(quality, log10(bitrate))` sorted by quality, strictly increasing.
    fn log_rate_over_quality(&self) -> Result<(Vec<f64>, Vec<f64>), AnalyticsError> {
        let mut pts: Vec<(f64, f64)> =
            self.points.iter().map(|p| (p.psnr, p.bitrate.log10())).collect();
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        if pts.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(AnalyticsError::DegenerateFit("duplicate quality values"));
        }
        Ok(pts.into_iter().unzip())
    }
}

/// Which interpolation backs the average-log-rate integral.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BdVariant {
    /// Single least-squares cubic over all points (the classic method).
    CubicFit,
    /// Piecewise cubic Hermite with monotone slopes.
    PiecewiseCubic,
}

impl BdVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            BdVariant::CubicFit => "cubic",
            BdVariant::PiecewiseCubic => "pchip",
        }
    }
}

/// Average bitrate difference of `test` against `anchor` in percent, at
/// equal quality: fit log10(bitrate) over quality for both curves,
/// integrate across the overlapping quality interval, and convert the mean
/// log gap back to a ratio.
pub fn bd_rate(anchor: &RdCurve, test: &RdCurve, variant: BdVariant) -> Result<f64, AnalyticsError> {
    let (a_lo, a_hi) = anchor.quality_range();
    let (t_lo, t_hi) = test.quality_range();
    let lo = a_lo.max(t_lo);
    let hi = a_hi.min(t_hi);
    if hi <= lo {
        return Err(AnalyticsError::NonOverlappingCurves);
    }
    let int_anchor = integrate_log_rate(anchor, lo, hi, variant)?;
    let int_test = integrate_log_rate(test, lo, hi, variant)?;
    let avg_diff = (int_test - int_anchor) / (hi - lo);
    Ok((10f64.powf(avg_diff) - 1.0) * 100.0)
}

fn integrate_log_rate(
    curve: &RdCurve,
    lo: f64,
    hi: f64,
    variant: BdVariant,
) -> Result<f64, AnalyticsError> {
    let (qs, ls) = curve.log_rate_over_quality()?;
    match variant {
        BdVariant::CubicFit => {
            // Center the abscissa before fitting; the normal equations of a
            // raw cubic in PSNR are needlessly ill-conditioned.
            let shift = qs.iter().sum::<f64>() / qs.len() as f64;
            let shifted: Vec<f64> = qs.iter().map(|q| q - shift).collect();
            let coeffs = fit_cubic(&shifted, &ls)?;
            Ok(poly3_integral(&coeffs, lo - shift, hi - shift))
        }
        BdVariant::PiecewiseCubic => {
            let slopes = pchip_slopes(&qs, &ls);
            Ok(pchip_integral(&qs, &ls, &slopes, lo, hi))
        }
    }
}

/// Least-squares cubic via the 4x4 normal equations.
fn fit_cubic(xs: &[f64], ys: &[f64]) -> Result<[f64; 4], AnalyticsError> {
    let mut ata = [[0.0f64; 4]; 4];
    let mut atb = [0.0f64; 4];
    for (&x, &y) in xs.iter().zip(ys) {
        let powers = [1.0, x, x * x, x * x * x];
        for i in 0..4 {
            for j in 0..4 {
                ata[i][j] += powers[i] * powers[j];
            }
            atb[i] += powers[i] * y;
        }
    }
    solve4(ata, atb).ok_or(AnalyticsError::DegenerateFit("singular normal equations"))
}

fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    for col in 0..4 {
        let pivot = (col..4).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..4 {
            let f = a[row][col] / a[col][col];
            let pivot_row = a[col];
            for (entry, pivot) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *entry -= f * pivot;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0f64; 4];
    for row in (0..4).rev() {
        let mut acc = b[row];
        for k in row + 1..4 {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

fn poly3_integral(c: &[f64; 4], lo: f64, hi: f64) -> f64 {
    let eval = |x: f64| c[0] * x + c[1] * x * x / 2.0 + c[2] * x * x * x / 3.0 + c[3] * x * x * x * x / 4.0;
    eval(hi) - eval(lo)
}

/// Fritsch-Carlson monotone slopes for piecewise cubic Hermite
/// interpolation.
fn pchip_slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    debug_assert!(n >= 2);
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = ys.windows(2).zip(&h).map(|(w, &hi)| (w[1] - w[0]) / hi).collect();
    let mut m = vec![0.0f64; n];

    m[0] = endpoint_slope(h[0], h.get(1).copied().unwrap_or(h[0]), delta[0], delta.get(1).copied().unwrap_or(delta[0]));
    m[n - 1] = endpoint_slope(
        h[n - 2],
        if n >= 3 { h[n - 3] } else { h[n - 2] },
        delta[n - 2],
        if n >= 3 { delta[n - 3] } else { delta[n - 2] },
    );
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] <= 0.0 {
            m[i] = 0.0;
        } else {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            m[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    m
}

fn endpoint_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m * d0 <= 0.0 {
        0.0
    } else if d0 * d1 < 0.0 && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}

/// Integral of the Hermite interpolant over `[lo, hi]`, which must lie
/// inside the knot span.
fn pchip_integral(xs: &[f64], ys: &[f64], m: &[f64], lo: f64, hi: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..xs.len() - 1 {
        let (x0, x1) = (xs[i], xs[i + 1]);
        let a = lo.max(x0);
        let b = hi.min(x1);
        if b <= a {
            continue;
        }
        let h = x1 - x0;
        let delta = (ys[i + 1] - ys[i]) / h;
        // Segment as y(t) = y0 + m0 t + c2 t^2 + c3 t^3 with t = x - x0.
        let c2 = (3.0 * delta - 2.0 * m[i] - m[i + 1]) / h;
        let c3 = (m[i] + m[i + 1] - 2.0 * delta) / (h * h);
        let eval = |x: f64| {
            let t = x - x0;
            ys[i] * t + m[i] * t * t / 2.0 + c2 * t * t * t / 3.0 + c3 * t * t * t * t / 4.0
        };
        total += eval(b) - eval(a);
    }
    total
}
