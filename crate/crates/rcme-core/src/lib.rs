//! Block-matching integer motion estimation with rate-constrained
//! candidate elimination.
//!
//! The crate bundles the pieces of a reproducible IME benchmark:
//!
//! - [`rate`]: signed exp-Golomb MVD rate model, lookup table, admission
//!   threshold and rate surfaces;
//! - [`frame`]: Y4M / raw 4:2:0 luma ingestion and block sampling;
//! - [`motion`]: SAD, the Lagrangian cost model and MV prediction;
//! - [`search`]: Full Search, the TZ four-step flow, the octagonal-axis
//!   raster and the rate-elimination decorator;
//! - [`analytics`]: complexity accounting, decision heatmaps, PSNR and
//!   BD-rate;
//! - [`experiment`]: the deterministic frame-pair experiment driver.
//!
//! Searches are pure integer arithmetic end to end: identical inputs give
//! bit-identical results on every platform and thread count.

pub mod analytics;
pub mod experiment;
pub mod frame;
mod gridio;
pub mod motion;
pub mod rate;
pub mod search;

pub use frame::{Block, BlockGeometry, FrameError, LumaFrame, RawYuvReader, Y4mReader};
pub use motion::{Cost, CostModel, MotionVector, Mvd};
pub use rate::{golomb_signed_length, mvd_rate, rate_surface, RateSurface, RateTable, RateThreshold};
pub use search::{
    full_search, octagonal_axis_raster, tzs_search, with_rate_elimination, SearchContext,
    SearchError, SearchResult, SearchWindow, TzsConfig,
};
