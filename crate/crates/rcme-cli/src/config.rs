//! Experiment configuration: flat key=value files, CLI flag overrides
//! (flags win), validation, and the effective-config echo that makes every
//! report reproducible.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rcme_core::analytics::BdVariant;
use rcme_core::experiment::{PatternKind, RunParams, StartSources};
use rcme_core::rate::RateThreshold;
use rcme_core::search::DiamondKind;

use crate::AppError;

const ALLOWED_BLOCK_DIMS: &[u32] = &[8, 16, 32, 64, 128];

/// Flag-shaped inputs shared by `run` and `heatmap`; every field is
/// optional so the file/flag precedence stays visible in one place.
#[derive(Clone, Default, clap::Args)]
pub struct RunFlags {
    /// Input clip(s); Y4M unless --raw-width/--raw-height are given.
    #[arg(long = "input")]
    pub inputs: Vec<PathBuf>,
    /// Flat key=value config file; explicit flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Luma width of headerless raw 4:2:0 input.
    #[arg(long)]
    pub raw_width: Option<u32>,
    /// Luma height of headerless raw 4:2:0 input.
    #[arg(long)]
    pub raw_height: Option<u32>,
    /// Search pattern: full, tzs or octagonal.
    #[arg(long)]
    pub pattern: Option<String>,
    /// Candidate rate budget in bits, or "unbounded".
    #[arg(long)]
    pub threshold: Option<String>,
    /// Comma-separated QP list.
    #[arg(long, value_delimiter = ',')]
    pub qp: Option<Vec<String>>,
    /// Comma-separated block sizes (WxH or a single square dimension).
    #[arg(long = "block-sizes", value_delimiter = ',')]
    pub block_sizes: Option<Vec<String>>,
    /// Search range in pels (window half-width).
    #[arg(long)]
    pub range: Option<u32>,
    /// Max frames to read per input ("all" or a count >= 2).
    #[arg(long)]
    pub frames: Option<String>,
    #[arg(long)]
    pub tzs_raster_step: Option<u32>,
    #[arg(long)]
    pub tzs_raster_trigger: Option<u32>,
    #[arg(long)]
    pub tzs_max_refinement_rounds: Option<u32>,
    /// TZ start candidates beyond the predictor: "zero,left,above" or "none".
    #[arg(long)]
    pub tzs_starts: Option<String>,
    /// Diamond layer shape: 8 or 4 points.
    #[arg(long)]
    pub tzs_diamond: Option<String>,
    /// BD-rate interpolation: cubic or pchip.
    #[arg(long)]
    pub bd_variant: Option<String>,
}

/// A fully resolved, validated experiment configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub inputs: Vec<PathBuf>,
    pub raw: Option<(u32, u32)>,
    pub pattern: PatternKind,
    pub threshold: RateThreshold,
    pub qps: Vec<u8>,
    pub block_sizes: Vec<(u32, u32)>,
    pub range: u32,
    pub frames: Option<u64>,
    pub raster_step: u32,
    pub raster_trigger: u32,
    pub max_refinement_rounds: u32,
    pub starts: StartSources,
    pub diamond: DiamondKind,
    pub bd_variant: BdVariant,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            inputs: Vec::new(),
            raw: None,
            pattern: PatternKind::Tzs,
            threshold: RateThreshold::Unbounded,
            qps: vec![22, 27, 32, 37],
            block_sizes: vec![(16, 16)],
            range: 64,
            frames: None,
            raster_step: 5,
            raster_trigger: 5,
            max_refinement_rounds: 32,
            starts: StartSources::default(),
            diamond: DiamondKind::EightPoint,
            bd_variant: BdVariant::CubicFit,
        }
    }
}

fn config_err(msg: impl Into<String>) -> AppError {
    AppError::Config(msg.into())
}

pub fn parse_config_file(path: &Path) -> Result<BTreeMap<String, String>, AppError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::Io(format!("cannot read config {}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(config_err(format!(
                "{}:{}: expected key=value, got {line:?}",
                path.display(),
                lineno + 1
            )));
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn parse_qp(s: &str) -> Result<u8, AppError> {
    let qp: u8 = s
        .trim()
        .parse()
        .map_err(|_| config_err(format!("bad qp {s:?}: expected an integer in 0..=51")))?;
    if qp > 51 {
        return Err(config_err(format!("qp {qp} out of range 0..=51")));
    }
    Ok(qp)
}

fn parse_block_size(s: &str) -> Result<(u32, u32), AppError> {
    let s = s.trim();
    let (w, h) = match s.split_once(['x', 'X']) {
        Some((w, h)) => (w, h),
        None => (s, s),
    };
    let parse_dim = |d: &str| -> Result<u32, AppError> {
        let dim: u32 = d
            .parse()
            .map_err(|_| config_err(format!("bad block size {s:?}: expected WxH")))?;
        if !ALLOWED_BLOCK_DIMS.contains(&dim) {
            return Err(config_err(format!(
                "block dimension {dim} not allowed; pick from {ALLOWED_BLOCK_DIMS:?}"
            )));
        }
        Ok(dim)
    };
    Ok((parse_dim(w)?, parse_dim(h)?))
}

fn parse_frames(s: &str) -> Result<Option<u64>, AppError> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(None);
    }
    s.parse::<u64>()
        .map(Some)
        .map_err(|_| config_err(format!("bad frame limit {s:?}: expected a count or \"all\"")))
}

fn parse_starts(s: &str) -> Result<StartSources, AppError> {
    let mut sources = StartSources { zero: false, left: false, above: false };
    if s.trim().eq_ignore_ascii_case("none") {
        return Ok(sources);
    }
    for item in s.split(',') {
        match item.trim() {
            "zero" => sources.zero = true,
            "left" => sources.left = true,
            "above" => sources.above = true,
            other => {
                return Err(config_err(format!(
                    "bad start candidate {other:?}: expected zero, left, above or none"
                )))
            }
        }
    }
    Ok(sources)
}

fn parse_diamond(s: &str) -> Result<DiamondKind, AppError> {
    match s.trim() {
        "8" => Ok(DiamondKind::EightPoint),
        "4" => Ok(DiamondKind::FourPoint),
        other => Err(config_err(format!("bad diamond {other:?}: expected 8 or 4"))),
    }
}

fn parse_bd_variant(s: &str) -> Result<BdVariant, AppError> {
    match s.trim() {
        "cubic" => Ok(BdVariant::CubicFit),
        "pchip" => Ok(BdVariant::PiecewiseCubic),
        other => Err(config_err(format!("bad bd variant {other:?}: expected cubic or pchip"))),
    }
}

fn starts_to_string(s: &StartSources) -> String {
    let mut parts = Vec::new();
    if s.zero {
        parts.push("zero");
    }
    if s.left {
        parts.push("left");
    }
    if s.above {
        parts.push("above");
    }
    if parts.is_empty() {
        "none".to_string()
    } else {
        parts.join(",")
    }
}

impl ExperimentConfig {
    /// Defaults, then the config file, then explicit flags.
    pub fn resolve(flags: &RunFlags) -> Result<Self, AppError> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &flags.config {
            let map = parse_config_file(path)?;
            cfg.apply_file(&map)?;
        }
        cfg.apply_flags(flags)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Resolve from a config file alone (used by `compare`).
    pub fn resolve_file(path: &Path) -> Result<Self, AppError> {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_file(&parse_config_file(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply_file(&mut self, map: &BTreeMap<String, String>) -> Result<(), AppError> {
        for (key, value) in map {
            match key.as_str() {
                "input" => {
                    self.inputs = value.split(',').map(|p| PathBuf::from(p.trim())).collect()
                }
                "raw_width" => {
                    let w = value
                        .parse()
                        .map_err(|_| config_err(format!("bad raw_width {value:?}")))?;
                    self.raw = Some((w, self.raw.map_or(0, |(_, h)| h)));
                }
                "raw_height" => {
                    let h = value
                        .parse()
                        .map_err(|_| config_err(format!("bad raw_height {value:?}")))?;
                    self.raw = Some((self.raw.map_or(0, |(w, _)| w), h));
                }
                "pattern" => self.pattern = value.parse().map_err(config_err)?,
                "threshold" => self.threshold = value.parse().map_err(config_err)?,
                "qp" => {
                    self.qps = value.split(',').map(parse_qp).collect::<Result<_, _>>()?;
                }
                "block_sizes" => {
                    self.block_sizes =
                        value.split(',').map(parse_block_size).collect::<Result<_, _>>()?;
                }
                "range" => {
                    self.range =
                        value.parse().map_err(|_| config_err(format!("bad range {value:?}")))?
                }
                "frames" => self.frames = parse_frames(value)?,
                "tzs_raster_step" => {
                    self.raster_step = value
                        .parse()
                        .map_err(|_| config_err(format!("bad tzs_raster_step {value:?}")))?
                }
                "tzs_raster_trigger" => {
                    self.raster_trigger = value
                        .parse()
                        .map_err(|_| config_err(format!("bad tzs_raster_trigger {value:?}")))?
                }
                "tzs_max_refinement_rounds" => {
                    self.max_refinement_rounds = value.parse().map_err(|_| {
                        config_err(format!("bad tzs_max_refinement_rounds {value:?}"))
                    })?
                }
                "tzs_starts" => self.starts = parse_starts(value)?,
                "tzs_diamond" => self.diamond = parse_diamond(value)?,
                "bd_variant" => self.bd_variant = parse_bd_variant(value)?,
                other => {
                    return Err(config_err(format!(
                        "unknown config key {other:?} (known keys: input, raw_width, raw_height, \
                         pattern, threshold, qp, block_sizes, range, frames, tzs_raster_step, \
                         tzs_raster_trigger, tzs_max_refinement_rounds, tzs_starts, tzs_diamond, \
                         bd_variant)"
                    )))
                }
            }
        }
        Ok(())
    }

    fn apply_flags(&mut self, flags: &RunFlags) -> Result<(), AppError> {
        if !flags.inputs.is_empty() {
            self.inputs = flags.inputs.clone();
        }
        match (flags.raw_width, flags.raw_height) {
            (Some(w), Some(h)) => self.raw = Some((w, h)),
            (None, None) => {}
            (Some(w), None) => self.raw = Some((w, self.raw.map_or(0, |(_, h)| h))),
            (None, Some(h)) => self.raw = Some((self.raw.map_or(0, |(w, _)| w), h)),
        }
        if let Some(p) = &flags.pattern {
            self.pattern = p.parse().map_err(config_err)?;
        }
        if let Some(t) = &flags.threshold {
            self.threshold = t.parse().map_err(config_err)?;
        }
        if let Some(qps) = &flags.qp {
            self.qps = qps.iter().map(|s| parse_qp(s)).collect::<Result<_, _>>()?;
        }
        if let Some(sizes) = &flags.block_sizes {
            self.block_sizes =
                sizes.iter().map(|s| parse_block_size(s)).collect::<Result<_, _>>()?;
        }
        if let Some(r) = flags.range {
            self.range = r;
        }
        if let Some(f) = &flags.frames {
            self.frames = parse_frames(f)?;
        }
        if let Some(v) = flags.tzs_raster_step {
            self.raster_step = v;
        }
        if let Some(v) = flags.tzs_raster_trigger {
            self.raster_trigger = v;
        }
        if let Some(v) = flags.tzs_max_refinement_rounds {
            self.max_refinement_rounds = v;
        }
        if let Some(s) = &flags.tzs_starts {
            self.starts = parse_starts(s)?;
        }
        if let Some(d) = &flags.tzs_diamond {
            self.diamond = parse_diamond(d)?;
        }
        if let Some(v) = &flags.bd_variant {
            self.bd_variant = parse_bd_variant(v)?;
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), AppError> {
        if self.inputs.is_empty() {
            return Err(config_err("no input given: pass --input or an input= config line"));
        }
        if let Some((w, h)) = self.raw {
            if w == 0 || h == 0 {
                return Err(config_err(
                    "raw input needs both --raw-width and --raw-height (positive)",
                ));
            }
        }
        if self.qps.is_empty() {
            return Err(config_err("qp list must not be empty"));
        }
        if self.block_sizes.is_empty() {
            return Err(config_err("block size list must not be empty"));
        }
        if let RateThreshold::Bits(t) = self.threshold {
            if t < 2 {
                return Err(config_err(format!(
                    "threshold {t} admits nothing: the minimum MVD rate is 2 bits; \
                     use a threshold >= 2 or \"unbounded\""
                )));
            }
        }
        if let Some(frames) = self.frames {
            if frames < 2 {
                return Err(config_err(format!(
                    "frame limit {frames}: need >= 2 frames to form a reference/current pair"
                )));
            }
        }
        if self.range < 1 {
            return Err(config_err("search range must be >= 1"));
        }
        if self.raster_step < 1 {
            return Err(config_err("tzs_raster_step must be >= 1"));
        }
        Ok(())
    }

    pub fn run_params(&self) -> RunParams {
        let mut params = RunParams::new(self.pattern, self.threshold);
        params.qps = self.qps.clone();
        params.block_sizes = self.block_sizes.clone();
        params.range = self.range;
        params.raster_step = self.raster_step;
        params.raster_trigger_distance = self.raster_trigger;
        params.max_refinement_rounds = self.max_refinement_rounds;
        params.starts = self.starts;
        params.diamond = self.diamond;
        params
    }

    /// Experiment-semantic keys only; execution details (threads, output
    /// paths) live in the sidecar metadata instead.
    pub fn to_flat(&self) -> BTreeMap<String, String> {
        let mut map = BTreeMap::new();
        map.insert(
            "input".to_string(),
            self.inputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(","),
        );
        if let Some((w, h)) = self.raw {
            map.insert("raw_width".to_string(), w.to_string());
            map.insert("raw_height".to_string(), h.to_string());
        }
        map.insert("pattern".to_string(), self.pattern.to_string());
        map.insert("threshold".to_string(), self.threshold.to_string());
        map.insert(
            "qp".to_string(),
            self.qps.iter().map(u8::to_string).collect::<Vec<_>>().join(","),
        );
        map.insert(
            "block_sizes".to_string(),
            self.block_sizes
                .iter()
                .map(|(w, h)| format!("{w}x{h}"))
                .collect::<Vec<_>>()
                .join(","),
        );
        map.insert("range".to_string(), self.range.to_string());
        map.insert(
            "frames".to_string(),
            self.frames.map_or("all".to_string(), |f| f.to_string()),
        );
        map.insert("tzs_raster_step".to_string(), self.raster_step.to_string());
        map.insert("tzs_raster_trigger".to_string(), self.raster_trigger.to_string());
        map.insert(
            "tzs_max_refinement_rounds".to_string(),
            self.max_refinement_rounds.to_string(),
        );
        map.insert("tzs_starts".to_string(), starts_to_string(&self.starts));
        map.insert(
            "tzs_diamond".to_string(),
            match self.diamond {
                DiamondKind::EightPoint => "8",
                DiamondKind::FourPoint => "4",
            }
            .to_string(),
        );
        map.insert("bd_variant".to_string(), self.bd_variant.as_str().to_string());
        map
    }

    pub fn to_effective_file(&self) -> String {
        let mut out = String::new();
        for (key, value) in self.to_flat() {
            let _ = writeln!(out, "{key}={value}");
        }
        out
    }
}
