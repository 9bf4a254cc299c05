//! Report assembly: per-sequence aggregation of a clip run into CSV rows
//! and JSON documents. Everything here is derived from integer counters in
//! a fixed order, so re-running a config reproduces the bytes exactly;
//! wall-clock metadata goes to a separate sidecar file.

use std::collections::BTreeMap;

use serde::Serialize;

use rcme_core::analytics::{
    complexity, psnr_from_sse, rate_heatmap_correlation, ZeroCountPolicy,
};
use rcme_core::experiment::{ClipRun, UnitTotals};
use rcme_core::motion::lambda_from_qp;
use rcme_core::rate::{rate_surface, RateSurface};

use crate::config::ExperimentConfig;

pub struct SequenceOutcome {
    pub name: String,
    pub run: ClipRun,
}

#[derive(Serialize)]
pub struct RunReportJson {
    pub config: BTreeMap<String, String>,
    /// Zero-count cells enter the log-domain correlation as ln(count+1).
    pub zero_cell_policy: String,
    pub sequences: Vec<SequenceJson>,
}

#[derive(Serialize)]
pub struct SequenceJson {
    pub name: String,
    pub frame_pairs: u32,
    pub block_searches: u64,
    pub evaluated: u64,
    pub skipped_by_rate: u64,
    pub complexity: u64,
    pub total_cost: f64,
    pub total_distortion: u64,
    pub total_rate_bits: u64,
    pub bitrate_proxy: u64,
    /// None means a lossless prediction (infinite PSNR).
    pub pred_psnr_db: Option<f64>,
    pub pearson: Option<f64>,
    pub pearson_nonzero_cells: Option<f64>,
    pub per_qp: Vec<QpJson>,
}

#[derive(Serialize)]
pub struct QpJson {
    pub qp: u8,
    pub lambda: f64,
    pub complexity: u64,
    pub total_cost: f64,
    pub bitrate_proxy: u64,
    pub pred_psnr_db: Option<f64>,
    pub sizes: Vec<SizeJson>,
}

#[derive(Serialize)]
pub struct SizeJson {
    pub width: u32,
    pub height: u32,
    pub block_searches: u64,
    pub evaluated: u64,
    pub skipped_by_rate: u64,
    pub complexity: u64,
    pub total_cost: f64,
    pub total_distortion: u64,
    pub total_rate_bits: u64,
    pub bitrate_proxy: u64,
    pub sse: u64,
    pub pixels: u64,
    pub pred_psnr_db: Option<f64>,
}

#[derive(Serialize)]
pub struct RunMeta {
    pub created_unix: u64,
    pub tool: String,
    pub version: String,
    pub command: Vec<String>,
    pub threads: usize,
}

fn finite_or_none(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else if x.is_infinite() {
        "inf".to_string()
    } else {
        format!("{x:.6}")
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    match x {
        // None stands for a lossless prediction in PSNR columns.
        None => "inf".to_string(),
        Some(v) => fmt_float(v),
    }
}

fn fmt_opt_empty(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

pub fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn unit_complexity(size: (u32, u32), totals: &UnitTotals) -> u64 {
    totals.evaluated * u64::from(size.0) * u64::from(size.1)
}

fn cost_of(totals: &UnitTotals) -> f64 {
    totals.cost_x256 as f64 / 256.0
}

fn proxy_of(totals: &UnitTotals) -> u64 {
    totals.rate_bits + totals.distortion
}

fn psnr_of(totals: &UnitTotals) -> Option<f64> {
    finite_or_none(psnr_from_sse(totals.sse, totals.pixels))
}

pub fn sequence_json(cfg: &ExperimentConfig, outcome: &SequenceOutcome) -> SequenceJson {
    let run = &outcome.run;
    let totals = run.totals();
    let surface: RateSurface = rate_surface(cfg.range);
    let pearson =
        rate_heatmap_correlation(&run.heatmap, &surface, ZeroCountPolicy::AddOne).ok();
    let pearson_nonzero =
        rate_heatmap_correlation(&run.heatmap, &surface, ZeroCountPolicy::Exclude).ok();

    let mut per_qp = Vec::new();
    for &qp in &cfg.qps {
        let qp_totals = run.totals_for_qp(qp);
        let lambda = lambda_from_qp(qp).expect("config validated qp range");
        let lambda = (lambda * 256.0).round() / 256.0;
        let mut sizes = Vec::new();
        for (&(unit_qp, size), unit) in &run.per_unit {
            if unit_qp != qp {
                continue;
            }
            sizes.push(SizeJson {
                width: size.0,
                height: size.1,
                block_searches: unit.blocks,
                evaluated: unit.evaluated,
                skipped_by_rate: unit.skipped_by_rate,
                complexity: unit_complexity(size, unit),
                total_cost: cost_of(unit),
                total_distortion: unit.distortion,
                total_rate_bits: unit.rate_bits,
                bitrate_proxy: proxy_of(unit),
                sse: unit.sse,
                pixels: unit.pixels,
                pred_psnr_db: psnr_of(unit),
            });
        }
        per_qp.push(QpJson {
            qp,
            lambda,
            complexity: sizes.iter().map(|s| s.complexity).sum(),
            total_cost: cost_of(&qp_totals),
            bitrate_proxy: proxy_of(&qp_totals),
            pred_psnr_db: psnr_of(&qp_totals),
            sizes,
        });
    }

    SequenceJson {
        name: outcome.name.clone(),
        frame_pairs: run.frame_pairs,
        block_searches: totals.blocks,
        evaluated: totals.evaluated,
        skipped_by_rate: totals.skipped_by_rate,
        complexity: complexity(&run.stats),
        total_cost: cost_of(&totals),
        total_distortion: totals.distortion,
        total_rate_bits: totals.rate_bits,
        bitrate_proxy: proxy_of(&totals),
        pred_psnr_db: psnr_of(&totals),
        pearson,
        pearson_nonzero_cells: pearson_nonzero,
        per_qp,
    }
}

pub const REPORT_CSV_HEADER: &str = "sequence,pattern,threshold,frame_pairs,block_searches,\
evaluated,skipped_by_rate,complexity,total_cost,total_distortion,total_rate_bits,\
bitrate_proxy,pred_psnr_db,pearson";

pub fn report_csv(cfg: &ExperimentConfig, sequences: &[SequenceJson]) -> String {
    let mut out = String::from(REPORT_CSV_HEADER);
    out.push('\n');
    for seq in sequences {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            csv_field(&seq.name),
            cfg.pattern,
            cfg.threshold,
            seq.frame_pairs,
            seq.block_searches,
            seq.evaluated,
            seq.skipped_by_rate,
            seq.complexity,
            fmt_float(seq.total_cost),
            seq.total_distortion,
            seq.total_rate_bits,
            seq.bitrate_proxy,
            fmt_opt(seq.pred_psnr_db),
            fmt_opt_empty(seq.pearson),
        ));
    }
    out
}

pub const DETAIL_CSV_HEADER: &str = "sequence,qp,lambda,block_w,block_h,block_searches,\
evaluated,skipped_by_rate,complexity,total_cost,total_distortion,total_rate_bits,\
bitrate_proxy,sse,pixels,pred_psnr_db";

pub fn detail_csv(sequences: &[SequenceJson]) -> String {
    let mut out = String::from(DETAIL_CSV_HEADER);
    out.push('\n');
    for seq in sequences {
        for qp in &seq.per_qp {
            for size in &qp.sizes {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                    csv_field(&seq.name),
                    qp.qp,
                    fmt_float(qp.lambda),
                    size.width,
                    size.height,
                    size.block_searches,
                    size.evaluated,
                    size.skipped_by_rate,
                    size.complexity,
                    fmt_float(size.total_cost),
                    size.total_distortion,
                    size.total_rate_bits,
                    size.bitrate_proxy,
                    size.sse,
                    size.pixels,
                    fmt_opt(size.pred_psnr_db),
                ));
            }
        }
    }
    out
}

#[derive(Serialize)]
pub struct CompareRowJson {
    pub sequence: String,
    pub complexity_a: u64,
    pub complexity_b: u64,
    pub delta_c_pct: Option<f64>,
    pub total_cost_a: f64,
    pub total_cost_b: f64,
    pub cost_delta_pct: Option<f64>,
    pub bd_rate_pct: Option<f64>,
    pub bd_rate_note: Option<String>,
}

#[derive(Serialize)]
pub struct CompareReportJson {
    pub config_a: BTreeMap<String, String>,
    pub config_b: BTreeMap<String, String>,
    pub bd_variant: String,
    pub sequences: Vec<CompareRowJson>,
    pub overall: CompareRowJson,
}

pub const COMPARE_CSV_HEADER: &str = "sequence,complexity_a,complexity_b,delta_c_pct,\
total_cost_a,total_cost_b,cost_delta_pct,bd_rate_pct";

pub fn compare_csv(rows: &[CompareRowJson], overall: &CompareRowJson) -> String {
    let mut out = String::from(COMPARE_CSV_HEADER);
    out.push('\n');
    for row in rows.iter().chain(std::iter::once(overall)) {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            csv_field(&row.sequence),
            row.complexity_a,
            row.complexity_b,
            fmt_opt_empty(row.delta_c_pct),
            fmt_float(row.total_cost_a),
            fmt_float(row.total_cost_b),
            fmt_opt_empty(row.cost_delta_pct),
            fmt_opt_empty(row.bd_rate_pct),
        ));
    }
    out
}

#[derive(Serialize)]
pub struct HeatmapReportJson {
    pub config: BTreeMap<String, String>,
    pub radius: u32,
    pub total_decisions: u64,
    pub overflow: u64,
    pub zero_cell_policy: String,
    pub pearson: Option<f64>,
    pub pearson_nonzero_cells: Option<f64>,
}

#[derive(Serialize)]
pub struct ContourJson {
    pub threshold: u32,
    pub admitted_cells: u64,
}

#[derive(Serialize)]
pub struct SurfaceReportJson {
    pub radius: u32,
    pub min_rate: u32,
    pub max_rate: u32,
    pub contours: Vec<ContourJson>,
}
