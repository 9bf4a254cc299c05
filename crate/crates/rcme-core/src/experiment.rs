//! Frame-pair experiment driver: fixed-grid block partitioning, predictor
//! derivation in coding order, per-block searches and deterministic result
//! merging.
//!
//! Every (frame pair, qp, block size) combination is an independent work
//! unit; units run in parallel on the ambient rayon pool and are merged in
//! a fixed order, so results do not depend on the thread count.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::analytics::{Heatmap, SearchStats};
use crate::frame::{extract_block, BlockGeometry, LumaFrame};
use crate::motion::{candidate_sse, predict_mv, CostModel, MotionError, MotionVector};
use crate::rate::{RateTable, RateThreshold};
use crate::search::{
    full_search, octagonal_axis_raster, tzs_search, DiamondKind, SearchContext, SearchError,
    SearchResult, SearchWindow, TzsConfig,
};

#[derive(thiserror::Error, Debug, PartialEq, Eq)]
pub enum ExperimentError {
    #[error("need >= 2 frames, got {0}")]
    NotEnoughFrames(usize),
    #[error("frame {index} is {got_width}x{got_height}, expected {width}x{height}")]
    MixedFrameSizes {
        index: u32,
        got_width: u32,
        got_height: u32,
        width: u32,
        height: u32,
    },
    #[error(transparent)]
    Motion(#[from] MotionError),
    #[error(transparent)]
    Search(#[from] SearchError),
}

/// Which search pattern the harness runs per block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PatternKind {
    Full,
    Tzs,
    OctagonalAxis,
}

impl PatternKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PatternKind::Full => "full",
            PatternKind::Tzs => "tzs",
            PatternKind::OctagonalAxis => "octagonal",
        }
    }
}

impl fmt::Display for PatternKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PatternKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(PatternKind::Full),
            "tzs" => Ok(PatternKind::Tzs),
            "octagonal" => Ok(PatternKind::OctagonalAxis),
            other => Err(format!("unknown pattern {other:?}: expected full, tzs or octagonal")),
        }
    }
}

/// Which neighbor-derived start candidates the TZ flow receives on top of
/// the predictor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StartSources {
    pub zero: bool,
    pub left: bool,
    pub above: bool,
}

impl Default for StartSources {
    fn default() -> Self {
        StartSources { zero: true, left: true, above: true }
    }
}

/// Everything that defines one experiment run over a clip.
#[derive(Clone, Debug)]
pub struct RunParams {
    pub pattern: PatternKind,
    pub threshold: RateThreshold,
    pub qps: Vec<u8>,
    pub block_sizes: Vec<(u32, u32)>,
    pub range: u32,
    pub raster_step: u32,
    pub raster_trigger_distance: u32,
    pub max_refinement_rounds: u32,
    pub starts: StartSources,
    pub diamond: DiamondKind,
}

impl RunParams {
    pub fn new(pattern: PatternKind, threshold: RateThreshold) -> Self {
        RunParams {
            pattern,
            threshold,
            qps: vec![22, 27, 32, 37],
            block_sizes: vec![(16, 16)],
            range: 64,
            raster_step: 5,
            raster_trigger_distance: 5,
            max_refinement_rounds: 32,
            starts: StartSources::default(),
            diamond: DiamondKind::EightPoint,
        }
    }
}

/// Accumulated counters of one (qp, block size) slice of a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct UnitTotals {
    pub blocks: u64,
    pub evaluated: u64,
    pub skipped_by_rate: u64,
    pub cost_x256: u64,
    pub distortion: u64,
    pub rate_bits: u64,
    pub sse: u64,
    pub pixels: u64,
}

impl UnitTotals {
    fn absorb(&mut self, other: &UnitTotals) {
        self.blocks += other.blocks;
        self.evaluated += other.evaluated;
        self.skipped_by_rate += other.skipped_by_rate;
        self.cost_x256 += other.cost_x256;
        self.distortion += other.distortion;
        self.rate_bits += other.rate_bits;
        self.sse += other.sse;
        self.pixels += other.pixels;
    }
}

/// Merged outcome of a clip run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClipRun {
    pub frame_pairs: u32,
    /// Totals keyed by (qp, block size), in deterministic order.
    pub per_unit: BTreeMap<(u8, (u32, u32)), UnitTotals>,
    /// Selected-MVD occurrences pooled over the whole run.
    pub heatmap: Heatmap,
    /// Distortion-evaluation counters pooled per block size.
    pub stats: SearchStats,
}

impl ClipRun {
    pub fn totals(&self) -> UnitTotals {
        let mut acc = UnitTotals::default();
        for totals in self.per_unit.values() {
            acc.absorb(totals);
        }
        acc
    }

    pub fn totals_for_qp(&self, qp: u8) -> UnitTotals {
        let mut acc = UnitTotals::default();
        for ((unit_qp, _), totals) in &self.per_unit {
            if *unit_qp == qp {
                acc.absorb(totals);
            }
        }
        acc
    }
}

/// Fixed partition grid of full blocks in raster order; trailing partial
/// rows/columns are not covered.
pub fn partition_grid(
    frame_width: u32,
    frame_height: u32,
    block_width: u32,
    block_height: u32,
) -> Vec<BlockGeometry> {
    let cols = frame_width / block_width;
    let rows = frame_height / block_height;
    let mut out = Vec::with_capacity((cols * rows) as usize);
    for r in 0..rows {
        for c in 0..cols {
            out.push(BlockGeometry::new(c * block_width, r * block_height, block_width, block_height));
        }
    }
    out
}

fn clamp_to_valid(mv: MotionVector, geom: BlockGeometry, ref_width: u32, ref_height: u32) -> MotionVector {
    MotionVector::new(
        mv.x.clamp(
            -(geom.origin_x as i32),
            ref_width as i32 - geom.width as i32 - geom.origin_x as i32,
        ),
        mv.y.clamp(
            -(geom.origin_y as i32),
            ref_height as i32 - geom.height as i32 - geom.origin_y as i32,
        ),
    )
}

struct UnitOutcome {
    qp: u8,
    block: (u32, u32),
    totals: UnitTotals,
    heatmap: Heatmap,
}

fn run_unit(
    current: &LumaFrame,
    reference: &LumaFrame,
    qp: u8,
    block: (u32, u32),
    params: &RunParams,
    table: &RateTable,
) -> Result<UnitOutcome, ExperimentError> {
    let (bw, bh) = block;
    let lambda = crate::motion::lambda_from_qp(qp)?;
    let geoms = partition_grid(current.width(), current.height(), bw, bh);
    let cols = (current.width() / bw) as usize;

    let mut totals = UnitTotals::default();
    let mut heatmap = Heatmap::new(params.range);
    let mut prev_row: Vec<MotionVector> = Vec::new();
    let mut cur_row: Vec<MotionVector> = Vec::with_capacity(cols);

    for (idx, geom) in geoms.iter().enumerate() {
        let col = idx % cols;
        if col == 0 && idx > 0 {
            std::mem::swap(&mut prev_row, &mut cur_row);
            cur_row.clear();
        }
        let left = (col > 0).then(|| cur_row[col - 1]);
        let above = prev_row.get(col).copied();
        let above_right = if col + 1 < cols { prev_row.get(col + 1).copied() } else { None };

        let mvp_raw = predict_mv(&[left, above, above_right]);
        let mvp = clamp_to_valid(mvp_raw, *geom, reference.width(), reference.height());

        let original = extract_block(current, *geom).expect("partition grid stays inside the frame");
        let window = SearchWindow::new(mvp, params.range)
            .clipped_to_reference(*geom, reference.width(), reference.height());
        let cost_model = CostModel::new(table, mvp, lambda);
        let ctx = SearchContext::new(original, *geom, reference, window, cost_model, params.threshold)?;

        let cfg = TzsConfig {
            raster_step: params.raster_step,
            raster_trigger_distance: params.raster_trigger_distance,
            max_refinement_rounds: params.max_refinement_rounds,
            extra_start_candidates: start_candidates(&params.starts, left, above),
            diamond: params.diamond,
        };
        let result: SearchResult = match params.pattern {
            PatternKind::Full => full_search(&ctx)?,
            PatternKind::Tzs => tzs_search(&ctx, &cfg)?,
            PatternKind::OctagonalAxis => octagonal_axis_raster(&ctx, &cfg)?,
        };

        totals.blocks += 1;
        totals.evaluated += result.evaluated;
        totals.skipped_by_rate += result.skipped_by_rate;
        totals.cost_x256 += result.best_cost.total_x256();
        totals.distortion += result.best_cost.distortion;
        totals.rate_bits += u64::from(result.best_cost.rate_bits);
        totals.sse += candidate_sse(&ctx.original, reference, *geom, result.best_mv);
        totals.pixels += geom.area();
        heatmap.record(result.best_mv - mvp);
        cur_row.push(result.best_mv);
    }

    Ok(UnitOutcome { qp, block, totals, heatmap })
}

fn start_candidates(
    sources: &StartSources,
    left: Option<MotionVector>,
    above: Option<MotionVector>,
) -> Vec<MotionVector> {
    let mut starts = Vec::with_capacity(3);
    if sources.zero {
        starts.push(MotionVector::ZERO);
    }
    if sources.left {
        if let Some(mv) = left {
            starts.push(mv);
        }
    }
    if sources.above {
        if let Some(mv) = above {
            starts.push(mv);
        }
    }
    starts
}

/// Run the configured pattern over every consecutive frame pair of a clip
/// (previous frame as the sole reference).
pub fn run_clip(frames: &[LumaFrame], params: &RunParams) -> Result<ClipRun, ExperimentError> {
    if frames.len() < 2 {
        return Err(ExperimentError::NotEnoughFrames(frames.len()));
    }
    let (w, h) = (frames[0].width(), frames[0].height());
    for f in frames {
        if f.width() != w || f.height() != h {
            return Err(ExperimentError::MixedFrameSizes {
                index: f.frame_index(),
                got_width: f.width(),
                got_height: f.height(),
                width: w,
                height: h,
            });
        }
    }

    let table = RateTable::for_search_range(params.range);
    let mut units = Vec::new();
    for pair in 0..frames.len() - 1 {
        for &qp in &params.qps {
            for &block in &params.block_sizes {
                units.push((pair, qp, block));
            }
        }
    }

    let outcomes: Result<Vec<UnitOutcome>, ExperimentError> = units
        .par_iter()
        .map(|&(pair, qp, block)| {
            run_unit(&frames[pair + 1], &frames[pair], qp, block, params, &table)
        })
        .collect();
    let outcomes = outcomes?;

    let mut per_unit: BTreeMap<(u8, (u32, u32)), UnitTotals> = BTreeMap::new();
    let mut heatmap = Heatmap::new(params.range);
    let mut stats = SearchStats::new();
    for outcome in &outcomes {
        per_unit
            .entry((outcome.qp, outcome.block))
            .or_default()
            .absorb(&outcome.totals);
        heatmap.merge(&outcome.heatmap);
        stats.record(outcome.block.0, outcome.block.1, outcome.totals.evaluated);
    }

    Ok(ClipRun {
        frame_pairs: (frames.len() - 1) as u32,
        per_unit,
        heatmap,
        stats,
    })
}
