//! Search patterns over integer-pel candidate windows: exhaustive Full
//! Search, the four-step TZ flow (start selection, expanding first-search
//! diamonds, conditional raster, iterative refinement), the octagonal-axis
//! raster variant, and the rate-budget elimination decorator that any of
//! them can be wrapped in.
//!
//! Every candidate a pattern emits goes through one admission gate before
//! its distortion is computed: inside the window, not yet visited in this
//! search, and within the rate budget. Rejected candidates never touch
//! reference samples and are seen by the pattern's control flow as not
//! improving the incumbent.

use crate::frame::{Block, BlockGeometry, LumaFrame};
use crate::motion::{candidate_sad, Cost, CostModel, MotionVector};
use crate::rate::RateThreshold;

#[derive(thiserror::Error, Debug, PartialEq, Eq)]
pub enum SearchError {
    #[error("no candidate was admitted by the rate threshold")]
    NoAdmittedCandidates,
    #[error("block geometry does not fit the frames")]
    InvalidGeometry,
}

/// Inclusive bounds on candidate motion vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MvRect {
    pub min_x: i32,
    pub max_x: i32,
    pub min_y: i32,
    pub max_y: i32,
}

impl MvRect {
    pub fn contains(&self, mv: MotionVector) -> bool {
        mv.x >= self.min_x && mv.x <= self.max_x && mv.y >= self.min_y && mv.y <= self.max_y
    }

    pub fn is_empty(&self) -> bool {
        self.min_x > self.max_x || self.min_y > self.max_y
    }

    pub fn clamp(&self, mv: MotionVector) -> MotionVector {
        MotionVector::new(mv.x.clamp(self.min_x, self.max_x), mv.y.clamp(self.min_y, self.max_y))
    }

    fn intersect(&self, other: &MvRect) -> MvRect {
        MvRect {
            min_x: self.min_x.max(other.min_x),
            max_x: self.max_x.min(other.max_x),
            min_y: self.min_y.max(other.min_y),
            max_y: self.max_y.min(other.max_y),
        }
    }

    fn width(&self) -> usize {
        (self.max_x - self.min_x + 1) as usize
    }

    fn height(&self) -> usize {
        (self.max_y - self.min_y + 1) as usize
    }
}

/// Candidate window: a Chebyshev ball of the given range around the center
/// (normally the predictor), optionally clipped so sampled blocks stay
/// inside the reference frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchWindow {
    center: MotionVector,
    range: u32,
    rect: MvRect,
}

impl SearchWindow {
    pub fn new(center: MotionVector, range: u32) -> Self {
        let r = range as i32;
        SearchWindow {
            center,
            range,
            rect: MvRect {
                min_x: center.x - r,
                max_x: center.x + r,
                min_y: center.y - r,
                max_y: center.y + r,
            },
        }
    }

    /// Restrict candidates to displacements that keep the block inside the
    /// reference frame.
    pub fn clipped_to_reference(mut self, geom: BlockGeometry, ref_width: u32, ref_height: u32) -> Self {
        let valid = MvRect {
            min_x: -(geom.origin_x as i32),
            max_x: ref_width as i32 - geom.width as i32 - geom.origin_x as i32,
            min_y: -(geom.origin_y as i32),
            max_y: ref_height as i32 - geom.height as i32 - geom.origin_y as i32,
        };
        self.rect = self.rect.intersect(&valid);
        self
    }

    pub fn center(&self) -> MotionVector {
        self.center
    }

    pub fn range(&self) -> u32 {
        self.range
    }

    pub fn rect(&self) -> MvRect {
        self.rect
    }

    pub fn contains(&self, mv: MotionVector) -> bool {
        self.rect.contains(mv)
    }

    /// All window candidates in scan order (rows top to bottom, then left
    /// to right).
    pub fn scan(&self) -> impl Iterator<Item = MotionVector> + '_ {
        let rect = self.rect;
        (rect.min_y..=rect.max_y)
            .flat_map(move |y| (rect.min_x..=rect.max_x).map(move |x| MotionVector::new(x, y)))
    }
}

/// One motion search problem instance.
#[derive(Clone)]
pub struct SearchContext<'a> {
    pub original: Block,
    pub geometry: BlockGeometry,
    pub reference: &'a LumaFrame,
    pub window: SearchWindow,
    pub cost_model: CostModel<'a>,
    pub threshold: RateThreshold,
}

impl<'a> SearchContext<'a> {
    pub fn new(
        original: Block,
        geometry: BlockGeometry,
        reference: &'a LumaFrame,
        window: SearchWindow,
        cost_model: CostModel<'a>,
        threshold: RateThreshold,
    ) -> Result<Self, SearchError> {
        if original.width() != geometry.width
            || original.height() != geometry.height
            || !geometry.fits_in(reference.width(), reference.height())
        {
            return Err(SearchError::InvalidGeometry);
        }
        Ok(SearchContext { original, geometry, reference, window, cost_model, threshold })
    }

    pub fn with_threshold(&self, threshold: RateThreshold) -> SearchContext<'a> {
        let mut ctx = self.clone();
        ctx.threshold = threshold;
        ctx
    }
}

/// Outcome of one search: the winning vector with its cost, plus the
/// distortion-evaluation and rate-skip counters that feed the complexity
/// accounting.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchResult {
    pub best_mv: MotionVector,
    pub best_cost: Cost,
    pub evaluated: u64,
    pub skipped_by_rate: u64,
}

/// Diamond layer shape: the full 8-point layer (axis points at the layer
/// distance, diagonals at half distance) or the 4-point axis-only variant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiamondKind {
    EightPoint,
    FourPoint,
}

/// TZ flow tuning knobs.
#[derive(Clone, Debug)]
pub struct TzsConfig {
    /// Stride of the semi-exhaustive raster scan.
    pub raster_step: u32,
    /// Raster runs when the first-search best lies further than this from
    /// the start point.
    pub raster_trigger_distance: u32,
    /// Upper bound on refinement rounds; each round recenters on the
    /// incumbent and stops early at a fixed point.
    pub max_refinement_rounds: u32,
    /// Start candidates tried alongside the predictor, already resolved to
    /// motion vectors (typically the zero MV and neighbor MVs).
    pub extra_start_candidates: Vec<MotionVector>,
    pub diamond: DiamondKind,
}

impl Default for TzsConfig {
    fn default() -> Self {
        TzsConfig {
            raster_step: 5,
            raster_trigger_distance: 5,
            max_refinement_rounds: 32,
            extra_start_candidates: vec![MotionVector::ZERO],
            diamond: DiamondKind::EightPoint,
        }
    }
}

/// Per-candidate hook for instrumented runs; counters and traces built on
/// this stay out of the hot path unless requested.
pub trait SearchObserver {
    fn on_evaluated(&mut self, mv: MotionVector, cost: &Cost) {
        let _ = (mv, cost);
    }

    fn on_skipped_by_rate(&mut self, mv: MotionVector, rate_bits: u32) {
        let _ = (mv, rate_bits);
    }
}

pub struct NoopObserver;

impl SearchObserver for NoopObserver {}

/// Records every emitted candidate in order.
#[derive(Default)]
pub struct CandidateTrace {
    pub events: Vec<TraceEvent>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceEvent {
    Evaluated { mv: MotionVector, cost: Cost },
    SkippedByRate { mv: MotionVector, rate_bits: u32 },
}

impl SearchObserver for CandidateTrace {
    fn on_evaluated(&mut self, mv: MotionVector, cost: &Cost) {
        self.events.push(TraceEvent::Evaluated { mv, cost: *cost });
    }

    fn on_skipped_by_rate(&mut self, mv: MotionVector, rate_bits: u32) {
        self.events.push(TraceEvent::SkippedByRate { mv, rate_bits });
    }
}

/// Tie order among equal totals: lower rate, then smaller |y|, then smaller
/// |x|, then whichever came first in the candidate sequence.
fn beats(mv: MotionVector, cost: &Cost, best_mv: MotionVector, best_cost: &Cost) -> bool {
    (cost.total_x256(), cost.rate_bits, mv.y.abs(), mv.x.abs())
        < (best_cost.total_x256(), best_cost.rate_bits, best_mv.y.abs(), best_mv.x.abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Probe {
    Outside,
    Revisit,
    SkippedByRate,
    Evaluated { improved: bool },
}

struct Evaluator<'e, 'a> {
    ctx: &'e SearchContext<'a>,
    visited: Vec<bool>,
    evaluated: u64,
    skipped_by_rate: u64,
    best: Option<(MotionVector, Cost)>,
    observer: &'e mut dyn SearchObserver,
}

impl<'e, 'a> Evaluator<'e, 'a> {
    fn new(ctx: &'e SearchContext<'a>, observer: &'e mut dyn SearchObserver) -> Self {
        let rect = ctx.window.rect();
        let cells = if rect.is_empty() { 0 } else { rect.width() * rect.height() };
        Evaluator {
            ctx,
            visited: vec![false; cells],
            evaluated: 0,
            skipped_by_rate: 0,
            best: None,
            observer,
        }
    }

    fn probe(&mut self, mv: MotionVector) -> Probe {
        let rect = self.ctx.window.rect();
        if rect.is_empty() || !rect.contains(mv) {
            return Probe::Outside;
        }
        let idx = (mv.y - rect.min_y) as usize * rect.width() + (mv.x - rect.min_x) as usize;
        if self.visited[idx] {
            return Probe::Revisit;
        }
        self.visited[idx] = true;

        let rate_bits = self.ctx.cost_model.rate_bits(mv);
        if !self.ctx.threshold.admits(rate_bits) {
            self.skipped_by_rate += 1;
            self.observer.on_skipped_by_rate(mv, rate_bits);
            return Probe::SkippedByRate;
        }

        let distortion = candidate_sad(&self.ctx.original, self.ctx.reference, self.ctx.geometry, mv);
        let cost = self.ctx.cost_model.cost_from_parts(distortion, rate_bits);
        self.evaluated += 1;
        self.observer.on_evaluated(mv, &cost);

        let improved = match &self.best {
            None => true,
            Some((bmv, bcost)) => beats(mv, &cost, *bmv, bcost),
        };
        if improved {
            self.best = Some((mv, cost));
        }
        Probe::Evaluated { improved }
    }

    fn best_mv(&self) -> Option<MotionVector> {
        self.best.map(|(mv, _)| mv)
    }

    fn finish(self) -> Result<SearchResult, SearchError> {
        match self.best {
            Some((best_mv, best_cost)) => Ok(SearchResult {
                best_mv,
                best_cost,
                evaluated: self.evaluated,
                skipped_by_rate: self.skipped_by_rate,
            }),
            None => Err(SearchError::NoAdmittedCandidates),
        }
    }
}

/// The 8-point (or 4-point) diamond layer around `center` at the given
/// distance, window-clipped. Diagonal points sit at half distance rounded
/// toward zero, so distance 1 degenerates to the 4-point cross.
pub fn diamond_points(
    center: MotionVector,
    distance: u32,
    window: &SearchWindow,
    kind: DiamondKind,
) -> Vec<MotionVector> {
    debug_assert!(distance >= 1);
    let d = distance as i32;
    let h = d / 2;
    let mut points = vec![
        center.offset(0, -d),
        center.offset(-d, 0),
        center.offset(d, 0),
        center.offset(0, d),
    ];
    if kind == DiamondKind::EightPoint && h >= 1 {
        points.extend([
            center.offset(-h, -h),
            center.offset(h, -h),
            center.offset(-h, h),
            center.offset(h, h),
        ]);
    }
    points.retain(|p| window.contains(*p));
    points
}

/// Raster lattice at the given stride, anchored on the window center so the
/// center itself is always part of the lattice.
pub fn raster_points(window: &SearchWindow, step: u32) -> Vec<MotionVector> {
    lattice_points(window, step, |_, _| true)
}

/// Raster lattice restricted to the union of the two axes through the
/// window center (at full range) and a central octagon: the Chebyshev ball
/// cut by `|dx| + |dy| <= 1.5 * range`.
pub fn octagonal_points(window: &SearchWindow, step: u32) -> Vec<MotionVector> {
    let budget = 3 * i64::from(window.range());
    lattice_points(window, step, move |dx, dy| {
        dx == 0 || dy == 0 || 2 * (i64::from(dx.abs()) + i64::from(dy.abs())) <= budget
    })
}

fn lattice_points(
    window: &SearchWindow,
    step: u32,
    keep: impl Fn(i32, i32) -> bool,
) -> Vec<MotionVector> {
    let step = step.max(1) as i32;
    let k = window.range() as i32 / step;
    let center = window.center();
    let mut points = Vec::new();
    for j in -k..=k {
        for i in -k..=k {
            let (dx, dy) = (i * step, j * step);
            if !keep(dx, dy) {
                continue;
            }
            let p = center.offset(dx, dy);
            if window.contains(p) {
                points.push(p);
            }
        }
    }
    points
}

fn diamond_distances(range: u32) -> impl Iterator<Item = u32> {
    std::iter::successors(Some(1u32), |d| d.checked_mul(2)).take_while(move |d| *d <= range)
}

/// Exhaustive scan of every in-window, rate-admitted candidate. With an
/// unbounded threshold this is the exact cost argmin over the window, which
/// is what makes it the reference the fast patterns are measured against.
pub fn full_search(ctx: &SearchContext<'_>) -> Result<SearchResult, SearchError> {
    full_search_traced(ctx, &mut NoopObserver)
}

pub fn full_search_traced(
    ctx: &SearchContext<'_>,
    observer: &mut dyn SearchObserver,
) -> Result<SearchResult, SearchError> {
    let mut ev = Evaluator::new(ctx, observer);
    for mv in ctx.window.scan() {
        ev.probe(mv);
    }
    ev.finish()
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum RasterKind {
    Full,
    OctagonalAxis,
}

fn tz_engine(
    ctx: &SearchContext<'_>,
    cfg: &TzsConfig,
    raster: RasterKind,
    observer: &mut dyn SearchObserver,
) -> Result<SearchResult, SearchError> {
    let window = ctx.window;
    let range = window.range();
    let mut ev = Evaluator::new(ctx, observer);
    if window.rect().is_empty() {
        return ev.finish();
    }

    // Start selection: the predictor (window center) plus the configured
    // extra candidates, clamped into the window.
    ev.probe(window.rect().clamp(window.center()));
    for &start in &cfg.extra_start_candidates {
        ev.probe(window.rect().clamp(start));
    }
    let start = ev.best_mv().unwrap_or(window.center());

    // First search: expanding diamonds at power-of-two distances around the
    // start. Remember how far from the start the incumbent was found.
    let mut best_distance = 0u32;
    for dist in diamond_distances(range) {
        for p in diamond_points(start, dist, &window, cfg.diamond) {
            if ev.probe(p) == (Probe::Evaluated { improved: true }) {
                best_distance = dist;
            }
        }
    }

    // Raster: only when the first search landed far from its start.
    if best_distance > cfg.raster_trigger_distance {
        let points = match raster {
            RasterKind::Full => raster_points(&window, cfg.raster_step),
            RasterKind::OctagonalAxis => octagonal_points(&window, cfg.raster_step),
        };
        for p in points {
            ev.probe(p);
        }
    }

    // Refinement: expanding diamonds around the incumbent, recentering
    // every round, until a fixed point or the round budget.
    let mut rounds = 0;
    while rounds < cfg.max_refinement_rounds {
        let Some(center) = ev.best_mv() else { break };
        let mut improved_any = false;
        for dist in diamond_distances(range) {
            for p in diamond_points(center, dist, &window, cfg.diamond) {
                if ev.probe(p) == (Probe::Evaluated { improved: true }) {
                    improved_any = true;
                }
            }
        }
        rounds += 1;
        if !improved_any {
            break;
        }
    }

    ev.finish()
}

/// Four-step TZ search: start selection, first-search diamonds, conditional
/// raster, iterative refinement.
pub fn tzs_search(ctx: &SearchContext<'_>, cfg: &TzsConfig) -> Result<SearchResult, SearchError> {
    tzs_search_traced(ctx, cfg, &mut NoopObserver)
}

pub fn tzs_search_traced(
    ctx: &SearchContext<'_>,
    cfg: &TzsConfig,
    observer: &mut dyn SearchObserver,
) -> Result<SearchResult, SearchError> {
    tz_engine(ctx, cfg, RasterKind::Full, observer)
}

/// TZ flow with the raster step restricted to the octagonal-axis candidate
/// set; also usable standalone as a comparison pattern.
pub fn octagonal_axis_raster(
    ctx: &SearchContext<'_>,
    cfg: &TzsConfig,
) -> Result<SearchResult, SearchError> {
    octagonal_axis_raster_traced(ctx, cfg, &mut NoopObserver)
}

pub fn octagonal_axis_raster_traced(
    ctx: &SearchContext<'_>,
    cfg: &TzsConfig,
    observer: &mut dyn SearchObserver,
) -> Result<SearchResult, SearchError> {
    tz_engine(ctx, cfg, RasterKind::OctagonalAxis, observer)
}

/// A search pattern that can be run as-is or wrapped by the elimination
/// decorator.
pub trait SearchPattern {
    fn search_traced(
        &self,
        ctx: &SearchContext<'_>,
        observer: &mut dyn SearchObserver,
    ) -> Result<SearchResult, SearchError>;

    fn search(&self, ctx: &SearchContext<'_>) -> Result<SearchResult, SearchError> {
        self.search_traced(ctx, &mut NoopObserver)
    }
}

pub struct FullSearch;

impl SearchPattern for FullSearch {
    fn search_traced(
        &self,
        ctx: &SearchContext<'_>,
        observer: &mut dyn SearchObserver,
    ) -> Result<SearchResult, SearchError> {
        full_search_traced(ctx, observer)
    }
}

pub struct TzSearch(pub TzsConfig);

impl SearchPattern for TzSearch {
    fn search_traced(
        &self,
        ctx: &SearchContext<'_>,
        observer: &mut dyn SearchObserver,
    ) -> Result<SearchResult, SearchError> {
        tzs_search_traced(ctx, &self.0, observer)
    }
}

pub struct OctagonalSearch(pub TzsConfig);

impl SearchPattern for OctagonalSearch {
    fn search_traced(
        &self,
        ctx: &SearchContext<'_>,
        observer: &mut dyn SearchObserver,
    ) -> Result<SearchResult, SearchError> {
        octagonal_axis_raster_traced(ctx, &self.0, observer)
    }
}

/// Rate-based elimination decorator: the inner pattern runs unchanged, but
/// candidates over the budget are skipped before any distortion work. With
/// an unbounded threshold the decorated run is bit-identical to the inner
/// one.
pub struct RateEliminated<P> {
    inner: P,
    threshold: RateThreshold,
}

pub fn with_rate_elimination<P: SearchPattern>(inner: P, threshold: RateThreshold) -> RateEliminated<P> {
    RateEliminated { inner, threshold }
}

impl<P: SearchPattern> SearchPattern for RateEliminated<P> {
    fn search_traced(
        &self,
        ctx: &SearchContext<'_>,
        observer: &mut dyn SearchObserver,
    ) -> Result<SearchResult, SearchError> {
        self.inner.search_traced(&ctx.with_threshold(self.threshold), observer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{extract_block, LumaFrame};
    use crate::rate::{mvd_rate, RateTable};
    use proptest::prelude::*;

    fn noise_frame(w: u32, h: u32, index: u32, seed: u64) -> LumaFrame {
        let mut state = seed | 1;
        LumaFrame::from_fn(w, h, index, move |_, _| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 24) as u8
        })
    }

    fn textured_frame(w: u32, h: u32, index: u32, seed: u64) -> LumaFrame {
        let noise = noise_frame(w, h, index, seed);
        // Smooth gradient plus coarse noise so SAD landscapes have a
        // well-defined minimum.
        LumaFrame::from_fn(w, h, index, |x, y| {
            let g = (x * 2 + y) % 200;
            (g as u16 / 2 + u16::from(noise.sample(x / 4 * 4, y / 4 * 4)) / 2) as u8
        })
    }

    struct Fixture {
        current: LumaFrame,
        reference: LumaFrame,
        table: RateTable,
    }

    impl Fixture {
        fn static_scene(size: u32) -> Self {
            let reference = textured_frame(size, size, 0, 99);
            let current = LumaFrame::from_fn(size, size, 1, |x, y| reference.sample(x, y));
            Fixture { current, reference, table: RateTable::for_search_range(64) }
        }

        fn translated(size: u32, dx: i32, dy: i32) -> Self {
            let reference = textured_frame(size, size, 0, 7);
            let current = LumaFrame::from_fn(size, size, 1, |x, y| {
                reference.sample_clamped(i64::from(x) + i64::from(dx), i64::from(y) + i64::from(dy))
            });
            Fixture { current, reference, table: RateTable::for_search_range(64) }
        }

        fn context(
            &self,
            geom: BlockGeometry,
            mvp: MotionVector,
            range: u32,
            lambda_x256: u64,
            threshold: RateThreshold,
        ) -> SearchContext<'_> {
            let original = extract_block(&self.current, geom).unwrap();
            let window = SearchWindow::new(mvp, range).clipped_to_reference(
                geom,
                self.reference.width(),
                self.reference.height(),
            );
            let cost_model = CostModel::with_lambda_x256(&self.table, mvp, lambda_x256);
            SearchContext::new(original, geom, &self.reference, window, cost_model, threshold).unwrap()
        }
    }

    #[test]
    fn diamond_distance_one_is_the_cross() {
        let window = SearchWindow::new(MotionVector::ZERO, 8);
        let pts = diamond_points(MotionVector::ZERO, 1, &window, DiamondKind::EightPoint);
        assert_eq!(
            pts,
            vec![
                MotionVector::new(0, -1),
                MotionVector::new(-1, 0),
                MotionVector::new(1, 0),
                MotionVector::new(0, 1),
            ]
        );
    }

    #[test]
    fn diamond_distance_four_has_eight_points() {
        let window = SearchWindow::new(MotionVector::ZERO, 8);
        let pts = diamond_points(MotionVector::ZERO, 4, &window, DiamondKind::EightPoint);
        assert_eq!(pts.len(), 8);
        assert!(pts.contains(&MotionVector::new(4, 0)));
        assert!(pts.contains(&MotionVector::new(-2, 2)));
        let four = diamond_points(MotionVector::ZERO, 4, &window, DiamondKind::FourPoint);
        assert_eq!(four.len(), 4);
    }

    #[test]
    fn diamond_outside_window_is_empty() {
        let window = SearchWindow::new(MotionVector::ZERO, 2);
        assert!(diamond_points(MotionVector::new(50, 50), 1, &window, DiamondKind::EightPoint).is_empty());
    }

    #[test]
    fn raster_examples() {
        let window = SearchWindow::new(MotionVector::new(3, -2), 10);
        assert_eq!(raster_points(&window, 5).len(), 25);
        assert_eq!(raster_points(&window, 1).len(), 21 * 21);
        let only_center = raster_points(&window, 21);
        assert_eq!(only_center, vec![window.center()]);
    }

    #[test]
    fn octagonal_is_a_strict_subset_of_raster_with_center() {
        let window = SearchWindow::new(MotionVector::ZERO, 64);
        let raster = raster_points(&window, 5);
        let oct = octagonal_points(&window, 5);
        assert!(oct.len() < raster.len());
        assert!(oct.iter().all(|p| raster.contains(p)));
        assert!(oct.contains(&MotionVector::ZERO));
        // Corner lattice points violate the octagon cut.
        assert!(!oct.contains(&MotionVector::new(60, 60)));
        // Axis points run the full range.
        assert!(oct.contains(&MotionVector::new(60, 0)));
    }

    #[test]
    fn full_search_static_scene_picks_the_predictor() {
        let fx = Fixture::static_scene(48);
        let geom = BlockGeometry::new(16, 16, 16, 16);
        let ctx = fx.context(geom, MotionVector::ZERO, 8, 1024, RateThreshold::Unbounded);
        let result = full_search(&ctx).unwrap();
        assert_eq!(result.best_mv, MotionVector::ZERO);
        assert_eq!(result.best_cost.distortion, 0);
        assert_eq!(result.evaluated, 17 * 17);
        assert_eq!(result.skipped_by_rate, 0);
    }

    #[test]
    fn full_search_recovers_pure_translation() {
        let fx = Fixture::translated(64, 3, 0);
        let geom = BlockGeometry::new(24, 24, 16, 16);
        let ctx = fx.context(geom, MotionVector::ZERO, 8, 0, RateThreshold::Unbounded);
        let result = full_search(&ctx).unwrap();
        assert_eq!(result.best_mv, MotionVector::new(3, 0));
        assert_eq!(result.best_cost.distortion, 0);
    }

    #[test]
    fn full_search_budget_four_evaluates_the_cross_only() {
        let fx = Fixture::static_scene(64);
        let geom = BlockGeometry::new(24, 24, 16, 16);
        let ctx = fx.context(geom, MotionVector::ZERO, 8, 1024, RateThreshold::Bits(4));
        let result = full_search(&ctx).unwrap();
        assert_eq!(result.evaluated, 5);
        assert_eq!(result.skipped_by_rate, 17 * 17 - 5);
        assert_eq!(result.best_mv, MotionVector::ZERO);
    }

    #[test]
    fn full_search_with_impossible_budget_errors() {
        let fx = Fixture::static_scene(32);
        let geom = BlockGeometry::new(8, 8, 16, 16);
        let ctx = fx.context(geom, MotionVector::ZERO, 4, 1024, RateThreshold::Bits(1));
        assert_eq!(full_search(&ctx), Err(SearchError::NoAdmittedCandidates));
    }

    #[test]
    fn tzs_finds_translation_with_far_fewer_probes() {
        let fx = Fixture::translated(96, 4, -3);
        let geom = BlockGeometry::new(40, 40, 16, 16);
        let ctx = fx.context(geom, MotionVector::ZERO, 16, 0, RateThreshold::Unbounded);
        let result = tzs_search(&ctx, &TzsConfig::default()).unwrap();
        assert_eq!(result.best_mv, MotionVector::new(4, -3));
        assert_eq!(result.best_cost.distortion, 0);
        let window_area = 33 * 33;
        assert!(result.evaluated < window_area / 4, "evaluated {} of {window_area}", result.evaluated);
    }

    #[test]
    fn tzs_threshold_at_window_max_rate_matches_unbounded() {
        let fx = Fixture::translated(64, 2, 1);
        let geom = BlockGeometry::new(24, 24, 8, 8);
        let max_rate = ctx_max_rate(8);
        let unbounded = tzs_search(
            &fx.context(geom, MotionVector::ZERO, 8, 512, RateThreshold::Unbounded),
            &TzsConfig::default(),
        )
        .unwrap();
        let budgeted = tzs_search(
            &fx.context(geom, MotionVector::ZERO, 8, 512, RateThreshold::Bits(max_rate)),
            &TzsConfig::default(),
        )
        .unwrap();
        assert_eq!(unbounded, budgeted);
    }

    fn ctx_max_rate(range: i32) -> u32 {
        let mut max = 0;
        for dy in -range..=range {
            for dx in -range..=range {
                max = max.max(mvd_rate(crate::motion::Mvd::new(dx, dy)));
            }
        }
        max
    }

    #[test]
    fn tzs_budget_four_stays_in_the_cross() {
        let fx = Fixture::translated(96, 6, 0);
        let geom = BlockGeometry::new(40, 40, 16, 16);
        let ctx = fx.context(geom, MotionVector::ZERO, 16, 1024, RateThreshold::Bits(4));
        let mut trace = CandidateTrace::default();
        let result = tzs_search_traced(&ctx, &TzsConfig::default(), &mut trace).unwrap();
        assert!(result.evaluated <= 5);
        assert!(result.skipped_by_rate > 0);
        for event in &trace.events {
            if let TraceEvent::Evaluated { mv, .. } = event {
                let mvd = *mv - MotionVector::ZERO;
                assert!(mvd_rate(mvd) <= 4, "evaluated {mv} outside the budget");
            }
        }
    }

    #[test]
    fn decorator_with_unbounded_threshold_is_identity() {
        let fx = Fixture::translated(64, -2, 2);
        let geom = BlockGeometry::new(24, 24, 16, 16);
        // Give the context a bounded threshold; the decorator overrides it.
        let ctx = fx.context(geom, MotionVector::ZERO, 8, 1024, RateThreshold::Bits(4));
        let plain = tzs_search(&ctx.with_threshold(RateThreshold::Unbounded), &TzsConfig::default()).unwrap();
        let decorated = with_rate_elimination(TzSearch(TzsConfig::default()), RateThreshold::Unbounded)
            .search(&ctx)
            .unwrap();
        assert_eq!(plain, decorated);

        let plain_fs = full_search(&ctx.with_threshold(RateThreshold::Unbounded)).unwrap();
        let decorated_fs = with_rate_elimination(FullSearch, RateThreshold::Unbounded).search(&ctx).unwrap();
        assert_eq!(plain_fs, decorated_fs);
    }

    #[test]
    fn decorated_full_search_counters_conserve_the_candidate_set() {
        let fx = Fixture::translated(64, 1, -1);
        let geom = BlockGeometry::new(24, 24, 16, 16);
        for t in [2, 4, 8, 12, 20] {
            let ctx = fx.context(geom, MotionVector::ZERO, 6, 768, RateThreshold::Bits(t));
            let undecorated = full_search(&ctx.with_threshold(RateThreshold::Unbounded)).unwrap();
            let decorated = full_search(&ctx).unwrap();
            assert_eq!(
                decorated.evaluated + decorated.skipped_by_rate,
                undecorated.evaluated,
                "conservation failed at t={t}"
            );
        }
    }

    #[test]
    fn octagonal_search_recovers_translation() {
        let fx = Fixture::translated(96, 5, 2);
        let geom = BlockGeometry::new(40, 40, 16, 16);
        let ctx = fx.context(geom, MotionVector::ZERO, 16, 0, RateThreshold::Unbounded);
        let result = octagonal_axis_raster(&ctx, &TzsConfig::default()).unwrap();
        assert_eq!(result.best_mv, MotionVector::new(5, 2));
    }

    #[test]
    fn window_clips_to_reference_bounds() {
        let window = SearchWindow::new(MotionVector::ZERO, 8)
            .clipped_to_reference(BlockGeometry::new(0, 0, 4, 4), 16, 16);
        let rect = window.rect();
        assert_eq!((rect.min_x, rect.min_y), (0, 0));
        assert_eq!((rect.max_x, rect.max_y), (8, 8));
        assert!(!window.contains(MotionVector::new(-1, 0)));
    }

    #[test]
    fn search_context_rejects_bad_geometry() {
        let fx = Fixture::static_scene(16);
        let geom = BlockGeometry::new(12, 12, 8, 8);
        let original = Block::from_samples(8, 8, vec![0; 64]);
        let window = SearchWindow::new(MotionVector::ZERO, 4);
        let model = CostModel::with_lambda_x256(&fx.table, MotionVector::ZERO, 0);
        assert!(matches!(
            SearchContext::new(original, geom, &fx.reference, window, model, RateThreshold::Unbounded),
            Err(SearchError::InvalidGeometry)
        ));
    }

    proptest! {
        #[test]
        fn diamond_layers_stay_within_l1_bound(
            cx in -16i32..=16,
            cy in -16i32..=16,
            distance in 1u32..=32,
        ) {
            let window = SearchWindow::new(MotionVector::ZERO, 64);
            let center = MotionVector::new(cx, cy);
            for p in diamond_points(center, distance, &window, DiamondKind::EightPoint) {
                let l1 = (p.x - cx).abs() + (p.y - cy).abs();
                prop_assert!(l1 as u32 <= 2 * distance);
                prop_assert!(l1 > 0);
            }
        }

        #[test]
        fn pruning_is_monotone_in_the_threshold(
            t1 in 2u32..20,
            extra in 0u32..12,
            seed in any::<u64>(),
        ) {
            let reference = noise_frame(32, 32, 0, seed);
            let current = noise_frame(32, 32, 1, seed.wrapping_add(17));
            let table = RateTable::for_search_range(8);
            let geom = BlockGeometry::new(8, 8, 16, 16);
            let original = extract_block(&current, geom).unwrap();
            let window = SearchWindow::new(MotionVector::ZERO, 6)
                .clipped_to_reference(geom, 32, 32);
            let model = CostModel::with_lambda_x256(&table, MotionVector::ZERO, 512);
            let run = |t: RateThreshold| {
                let ctx = SearchContext::new(
                    original.clone(), geom, &reference, window, model, t,
                ).unwrap();
                full_search(&ctx).unwrap()
            };
            let narrow = run(RateThreshold::Bits(t1));
            let wide = run(RateThreshold::Bits(t1 + extra));
            prop_assert!(narrow.evaluated <= wide.evaluated);
            prop_assert!(narrow.best_cost.total_x256() >= wide.best_cost.total_x256());
        }

        #[test]
        fn unbounded_full_search_is_optimal_among_patterns(seed in any::<u64>()) {
            let reference = noise_frame(48, 48, 0, seed);
            let current = noise_frame(48, 48, 1, seed.wrapping_add(0x1234));
            let table = RateTable::for_search_range(8);
            let geom = BlockGeometry::new(16, 16, 16, 16);
            let original = extract_block(&current, geom).unwrap();
            let window = SearchWindow::new(MotionVector::ZERO, 8)
                .clipped_to_reference(geom, 48, 48);
            let model = CostModel::with_lambda_x256(&table, MotionVector::ZERO, 900);
            let ctx = SearchContext::new(
                original, geom, &reference, window, model, RateThreshold::Unbounded,
            ).unwrap();
            let cfg = TzsConfig::default();
            let exhaustive = full_search(&ctx).unwrap().best_cost.total_x256();
            let tz = tzs_search(&ctx, &cfg).unwrap().best_cost.total_x256();
            let oct = octagonal_axis_raster(&ctx, &cfg).unwrap().best_cost.total_x256();
            prop_assert!(exhaustive <= tz);
            prop_assert!(exhaustive <= oct);
        }

        #[test]
        fn searches_are_deterministic(seed in any::<u64>()) {
            let reference = noise_frame(48, 48, 0, seed);
            let current = noise_frame(48, 48, 1, seed ^ 0xabcdef);
            let table = RateTable::for_search_range(8);
            let geom = BlockGeometry::new(16, 16, 16, 16);
            let original = extract_block(&current, geom).unwrap();
            let window = SearchWindow::new(MotionVector::new(1, -1), 8)
                .clipped_to_reference(geom, 48, 48);
            let model = CostModel::with_lambda_x256(&table, MotionVector::new(1, -1), 640);
            let ctx = SearchContext::new(
                original, geom, &reference, window, model, RateThreshold::Bits(10),
            ).unwrap();
            let cfg = TzsConfig::default();
            prop_assert_eq!(tzs_search(&ctx, &cfg).unwrap(), tzs_search(&ctx, &cfg).unwrap());
            prop_assert_eq!(full_search(&ctx).unwrap(), full_search(&ctx).unwrap());
        }
    }
}
