//! Command-line harness for tolerance-guided insertion: TOML configuration,
//! artifact formats, SVG plots and the experiment presets (`C1.1` … `P2.2`,
//! `ae-circle`, `ae-polygon`, `study-2x1`) with hash-checked dependencies.

// Range checks are written `!(x > 0.0)` so that NaN fails them too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod formats;
pub mod manifest;
pub mod plot;
pub mod workpieces;

pub use config::{Config, ConfigFile};
pub use error::{Error, Result};
pub use experiments::{Runner, PRESETS};
