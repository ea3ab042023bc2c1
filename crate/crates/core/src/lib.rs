//! Scattering-based analysis of pulse-like signals.
//!
//! A positive signal `y` is read as the well `−χy` of the Schrödinger operator
//! `−d²/dt² − χy`. Its bound states give a decomposition of `y` into solitons,
//! `y ≈ (4/χ) Σ κₙ ψₙ²`, and the bound-state speeds `κₙ` give invariants and
//! beat-to-beat indices for arterial pressure recordings.
//!
//! - [`spectral`]: discretized operator and its negative spectrum
//! - [`transform`]: reconstruction, fast/slow split, choice of `χ`, exact soliton wells
//! - [`invariants`]: Riesz means, invariants and their semiclassical limits
//! - [`pipeline`]: beat segmentation, per-beat indices, lagged pairings
//! - [`stats`]: regression, Wilcoxon signed-rank test, mean ± SEM
//! - [`io`]: CSV ingestion and emission, run configuration

pub mod error;
pub mod invariants;
pub mod io;
pub mod pipeline;
pub mod signal;
pub mod spectral;
pub mod stats;
pub mod transform;

pub use error::{ErrorKind, Result, SbsaError};
pub use invariants::{invariant_set, riesz_mean, semiclassical_reference, InvariantSet};
pub use io::{load_signal, read_beat_table, write_beat_table, BeatRow, ColumnSpec, RunConfig};
pub use pipeline::{
    analyze_beat, analyze_recording, brs_pairs, segment_beats, BeatConfig, BeatRecord, BeatWindow,
    BrsPair, Predictor, SegmentationConfig,
};
pub use signal::{Grid, Signal};
pub use spectral::{
    count_negative_eigenvalues, decompose, discretize_operator, negative_spectrum,
    SpectralDecomposition, TridiagonalOperator,
};
pub use stats::{
    linear_regression, significance_stars, summarize, wilcoxon_signed_rank, PairedTestResult,
    RegressionResult, SummaryStat,
};
pub use transform::{
    reconstruct, select_chi, soliton_component, split_phases, synthesize_reflectionless, ChiMode,
    ChiSelectionConfig, PhaseSplit, SbsaResult,
};
