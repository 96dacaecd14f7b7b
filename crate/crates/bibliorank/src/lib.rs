//! Institution-level research performance analytics.
//!
//! `bibliorank` computes three per-(university, field) performance scores —
//! staff-scaled h index, staff-scaled g index, and fractional scientific
//! strength (field-normalized citations weighted by byline credit, per unit
//! of research staff) — and compares the university rankings the three
//! indicators induce: rank correlations with significance, quartile shifts,
//! national-median crossovers, and top-quartile overlap.
//!
//! The crate is organized around a file pipeline:
//!
//! 1. [`corpus`] parses and validates publication/roster data,
//! 2. [`credit`] assigns byline credit shares,
//! 3. [`indicators`] computes h, g, and FSS scores per institution-field,
//! 4. [`rankings`] compares the induced ranking lists,
//! 5. [`synth`] generates seeded synthetic corpora at configurable scale,
//! 6. [`pipeline`] wires the stages into the `bibliorank` CLI commands.
//!
//! See the `examples/` directory for one runnable example per capability.

pub mod config;
pub mod corpus;
pub mod credit;
pub mod error;
pub mod indicators;
pub mod pipeline;
pub mod rankings;
pub mod report;
pub mod synth;

pub use config::RunConfig;
pub use corpus::{Corpus, ParseMode, ParseOutcome};
pub use error::{Error, Result};
