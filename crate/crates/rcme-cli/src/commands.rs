//! The four harness commands: run, compare, surface, heatmap.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use rcme_core::analytics::{
    bd_rate, complexity, complexity_reduction, psnr_from_sse, rate_heatmap_correlation, Heatmap,
    RdCurve, RdPoint, ZeroCountPolicy,
};
use rcme_core::experiment::{run_clip, ExperimentError};
use rcme_core::frame::{LumaFrame, RawYuvReader, Y4mReader};
use rcme_core::rate::rate_surface;

use crate::config::ExperimentConfig;
use crate::report::{
    compare_csv, detail_csv, report_csv, sequence_json, CompareReportJson, CompareRowJson,
    ContourJson, HeatmapReportJson, RunMeta, RunReportJson, SequenceOutcome, SurfaceReportJson,
};
use crate::AppError;

fn io_err(msg: impl Into<String>) -> AppError {
    AppError::Io(msg.into())
}

fn load_frames(
    path: &Path,
    raw: Option<(u32, u32)>,
    limit: Option<u64>,
) -> Result<Vec<LumaFrame>, AppError> {
    let file =
        File::open(path).map_err(|e| io_err(format!("cannot open {}: {e}", path.display())))?;
    let reader = BufReader::new(file);
    let decode = |frames: &mut dyn Iterator<Item = Result<LumaFrame, rcme_core::FrameError>>| {
        let mut out = Vec::new();
        for frame in frames {
            let frame = frame.map_err(|e| io_err(format!("{}: {e}", path.display())))?;
            out.push(frame);
            if let Some(limit) = limit {
                if out.len() as u64 >= limit {
                    break;
                }
            }
        }
        Ok::<_, AppError>(out)
    };
    let frames = match raw {
        Some((w, h)) => decode(&mut RawYuvReader::new(reader, w, h))?,
        None => {
            let mut y4m = Y4mReader::new(reader).map_err(|e| {
                io_err(format!(
                    "{}: {e} (raw input needs --raw-width/--raw-height)",
                    path.display()
                ))
            })?;
            decode(&mut y4m)?
        }
    };
    if frames.len() < 2 {
        return Err(io_err(format!(
            "{}: decoded {} frame(s); need >= 2 frames",
            path.display(),
            frames.len()
        )));
    }
    Ok(frames)
}

fn sequence_name(path: &Path, taken: &[String]) -> String {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    if !taken.contains(&stem) {
        return stem;
    }
    let mut n = 2;
    loop {
        let candidate = format!("{stem}-{n}");
        if !taken.contains(&candidate) {
            return candidate;
        }
        n += 1;
    }
}

fn build_pool(threads: usize) -> Result<rayon::ThreadPool, AppError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| io_err(format!("cannot build thread pool: {e}")))
}

fn execute(cfg: &ExperimentConfig, threads: usize) -> Result<Vec<SequenceOutcome>, AppError> {
    let pool = build_pool(threads)?;
    let params = cfg.run_params();
    let mut outcomes = Vec::new();
    let mut names = Vec::new();
    for input in &cfg.inputs {
        let frames = load_frames(input, cfg.raw, cfg.frames)?;
        let run = pool
            .install(|| run_clip(&frames, &params))
            .map_err(|e: ExperimentError| io_err(format!("{}: {e}", input.display())))?;
        let name = sequence_name(input, &names);
        names.push(name.clone());
        outcomes.push(SequenceOutcome { name, run });
    }
    Ok(outcomes)
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), AppError> {
    std::fs::write(path, contents)
        .map_err(|e| io_err(format!("cannot write {}: {e}", path.display())))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), AppError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| io_err(format!("cannot serialize {}: {e}", path.display())))?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

fn write_meta(out: &Path, argv: &[String], threads: usize) -> Result<(), AppError> {
    let created_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let meta = RunMeta {
        created_unix,
        tool: "rcme".to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: argv.to_vec(),
        threads,
    };
    write_json(&out.join("run_meta.json"), &meta)
}

fn prepare_out(out: &Path) -> Result<(), AppError> {
    std::fs::create_dir_all(out)
        .map_err(|e| io_err(format!("cannot create {}: {e}", out.display())))
}

pub fn cmd_run(
    cfg: &ExperimentConfig,
    threads: usize,
    out: &Path,
    argv: &[String],
) -> Result<(), AppError> {
    prepare_out(out)?;
    let outcomes = execute(cfg, threads)?;
    let sequences: Vec<_> = outcomes.iter().map(|o| sequence_json(cfg, o)).collect();

    write_file(&out.join("report.csv"), report_csv(cfg, &sequences).as_bytes())?;
    write_file(&out.join("detail.csv"), detail_csv(&sequences).as_bytes())?;
    let json = RunReportJson {
        config: cfg.to_flat(),
        zero_cell_policy: ZeroCountPolicy::AddOne.as_str().to_string(),
        sequences,
    };
    write_json(&out.join("report.json"), &json)?;
    write_file(&out.join("effective.cfg"), cfg.to_effective_file().as_bytes())?;
    write_meta(out, argv, threads)
}

fn rd_curve_for(outcome: &SequenceOutcome, qps: &[u8]) -> Result<RdCurve, String> {
    let mut points = Vec::new();
    for &qp in qps {
        let totals = outcome.run.totals_for_qp(qp);
        let psnr = psnr_from_sse(totals.sse, totals.pixels);
        points.push(RdPoint {
            bitrate: (totals.rate_bits + totals.distortion) as f64,
            psnr,
        });
    }
    RdCurve::new(points).map_err(|e| e.to_string())
}

pub fn cmd_compare(
    config_a: &Path,
    config_b: &Path,
    threads: usize,
    out: &Path,
    argv: &[String],
) -> Result<(), AppError> {
    let cfg_a = ExperimentConfig::resolve_file(config_a)?;
    let cfg_b = ExperimentConfig::resolve_file(config_b)?;
    if cfg_a.inputs != cfg_b.inputs || cfg_a.raw != cfg_b.raw || cfg_a.frames != cfg_b.frames {
        return Err(AppError::Config(
            "compare requires both configs to name identical inputs (same input list, \
             raw geometry and frame limit)"
                .to_string(),
        ));
    }
    prepare_out(out)?;

    let outcomes_a = execute(&cfg_a, threads)?;
    let outcomes_b = execute(&cfg_b, threads)?;

    let mut rows = Vec::new();
    for (a, b) in outcomes_a.iter().zip(&outcomes_b) {
        let c_a = complexity(&a.run.stats);
        let c_b = complexity(&b.run.stats);
        let cost_a = a.run.totals().cost_x256 as f64 / 256.0;
        let cost_b = b.run.totals().cost_x256 as f64 / 256.0;
        let (bd, note) = match (rd_curve_for(a, &cfg_a.qps), rd_curve_for(b, &cfg_b.qps)) {
            (Ok(curve_a), Ok(curve_b)) => match bd_rate(&curve_a, &curve_b, cfg_a.bd_variant) {
                Ok(v) => (Some(v), None),
                Err(e) => (None, Some(e.to_string())),
            },
            (Err(e), _) | (_, Err(e)) => (None, Some(e)),
        };
        rows.push(CompareRowJson {
            sequence: a.name.clone(),
            complexity_a: c_a,
            complexity_b: c_b,
            delta_c_pct: complexity_reduction(c_a, c_b).ok(),
            total_cost_a: cost_a,
            total_cost_b: cost_b,
            cost_delta_pct: (cost_a != 0.0).then(|| (cost_b - cost_a) / cost_a * 100.0),
            bd_rate_pct: bd,
            bd_rate_note: note,
        });
    }

    let c_a: u64 = rows.iter().map(|r| r.complexity_a).sum();
    let c_b: u64 = rows.iter().map(|r| r.complexity_b).sum();
    let cost_a: f64 = rows.iter().map(|r| r.total_cost_a).sum();
    let cost_b: f64 = rows.iter().map(|r| r.total_cost_b).sum();
    let bd_values: Vec<f64> = rows.iter().filter_map(|r| r.bd_rate_pct).collect();
    let overall = CompareRowJson {
        sequence: "overall".to_string(),
        complexity_a: c_a,
        complexity_b: c_b,
        delta_c_pct: complexity_reduction(c_a, c_b).ok(),
        total_cost_a: cost_a,
        total_cost_b: cost_b,
        cost_delta_pct: (cost_a != 0.0).then(|| (cost_b - cost_a) / cost_a * 100.0),
        bd_rate_pct: (!bd_values.is_empty())
            .then(|| bd_values.iter().sum::<f64>() / bd_values.len() as f64),
        bd_rate_note: None,
    };

    write_file(&out.join("comparison.csv"), compare_csv(&rows, &overall).as_bytes())?;
    let json = CompareReportJson {
        config_a: cfg_a.to_flat(),
        config_b: cfg_b.to_flat(),
        bd_variant: cfg_a.bd_variant.as_str().to_string(),
        sequences: rows,
        overall,
    };
    write_json(&out.join("comparison.json"), &json)?;
    write_file(&out.join("effective_a.cfg"), cfg_a.to_effective_file().as_bytes())?;
    write_file(&out.join("effective_b.cfg"), cfg_b.to_effective_file().as_bytes())?;
    write_meta(out, argv, threads)
}

pub fn cmd_surface(
    radius: u32,
    contours: &[u32],
    out: &Path,
    argv: &[String],
) -> Result<(), AppError> {
    prepare_out(out)?;
    let surface = rate_surface(radius);

    let mut csv = BufWriter::new(
        File::create(out.join("surface.csv"))
            .map_err(|e| io_err(format!("cannot write surface.csv: {e}")))?,
    );
    surface.write_csv(&mut csv).map_err(|e| io_err(format!("surface.csv: {e}")))?;
    csv.flush().map_err(|e| io_err(format!("surface.csv: {e}")))?;

    let mut pgm = Vec::new();
    surface.write_pgm(&mut pgm).map_err(|e| io_err(format!("surface.pgm: {e}")))?;
    write_file(&out.join("surface.pgm"), &pgm)?;

    let side = surface.side();
    let mut contour_stats = Vec::new();
    for &t in contours {
        let mask: Vec<u8> = surface.values().iter().map(|&v| u8::from(v <= t)).collect();
        let mut mask_csv = String::new();
        for row in mask.chunks(side) {
            let cells: Vec<String> = row.iter().map(u8::to_string).collect();
            mask_csv.push_str(&cells.join(","));
            mask_csv.push('\n');
        }
        write_file(&out.join(format!("mask_t{t}.csv")), mask_csv.as_bytes())?;

        let mut mask_pgm = Vec::new();
        let bytes: Vec<u8> = mask.iter().map(|&m| m * 255).collect();
        write_pgm_raw(&mut mask_pgm, side, &format!("rate region mask, t={t}, radius {radius}"), &bytes)?;
        write_file(&out.join(format!("mask_t{t}.pgm")), &mask_pgm)?;

        contour_stats.push(ContourJson {
            threshold: t,
            admitted_cells: mask.iter().map(|&m| u64::from(m)).sum(),
        });
    }

    let json = SurfaceReportJson {
        radius,
        min_rate: surface.values().iter().copied().min().unwrap_or(0),
        max_rate: surface.values().iter().copied().max().unwrap_or(0),
        contours: contour_stats,
    };
    write_json(&out.join("surface.json"), &json)?;
    write_meta(out, argv, 1)
}

fn write_pgm_raw(
    out: &mut Vec<u8>,
    side: usize,
    comment: &str,
    bytes: &[u8],
) -> Result<(), AppError> {
    use std::io::Write as _;
    write!(out, "P5\n# {comment}\n{side} {side}\n255\n")
        .map_err(|e| io_err(format!("pgm: {e}")))?;
    out.extend_from_slice(bytes);
    Ok(())
}

pub fn cmd_heatmap(
    cfg: &ExperimentConfig,
    threads: usize,
    out: &Path,
    argv: &[String],
) -> Result<(), AppError> {
    prepare_out(out)?;
    let outcomes = execute(cfg, threads)?;

    let mut heatmap = Heatmap::new(cfg.range);
    for outcome in &outcomes {
        heatmap.merge(&outcome.run.heatmap);
    }

    let mut csv = Vec::new();
    heatmap.write_csv(&mut csv).map_err(|e| io_err(format!("heatmap.csv: {e}")))?;
    write_file(&out.join("heatmap.csv"), &csv)?;
    let mut pgm = Vec::new();
    heatmap.write_pgm(&mut pgm).map_err(|e| io_err(format!("heatmap.pgm: {e}")))?;
    write_file(&out.join("heatmap.pgm"), &pgm)?;

    let surface = rate_surface(cfg.range);
    let json = HeatmapReportJson {
        config: cfg.to_flat(),
        radius: heatmap.radius(),
        total_decisions: heatmap.total_recorded(),
        overflow: heatmap.overflow(),
        zero_cell_policy: ZeroCountPolicy::AddOne.as_str().to_string(),
        pearson: rate_heatmap_correlation(&heatmap, &surface, ZeroCountPolicy::AddOne).ok(),
        pearson_nonzero_cells: rate_heatmap_correlation(&heatmap, &surface, ZeroCountPolicy::Exclude)
            .ok(),
    };
    write_json(&out.join("heatmap.json"), &json)?;
    write_file(&out.join("effective.cfg"), cfg.to_effective_file().as_bytes())?;
    write_meta(out, argv, threads)
}