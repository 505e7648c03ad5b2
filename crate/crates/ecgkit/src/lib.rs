//! ECG representation toolkit.
//!
//! This crate turns raw twelve-lead ECG records into the inputs a
//! language-model training pipeline consumes, and scores the text such a
//! model produces. The stages compose as:
//!
//! ```text
//!   raw record (C x L, fs)
//!        |  preprocess: notch -> bandpass -> highpass -> wavelet denoise
//!        |              -> resample to 250 Hz -> 5 s segments
//!        v
//!   segments ----------------------+-----------------------+
//!        |                         |                        |
//!   normalize [0,1]           render PNG              stack 3 x C x L
//!        |                    (image input)            (signal input)
//!        v
//!   quantize to symbols -> byte-pair encode -> token ids
//!        |
//!        v
//!   assemble chat sequences (templates, padding, label masks)
//!        |
//!        v
//!   evaluate generations (BLEU-4, ROUGE-L, METEOR, accuracy)
//!        -> paired significance tests, win counts, radar scaling
//! ```
//!
//! Robustness studies perturb segments with seeded Gaussian noise and
//! baseline wander before representation building ([`perturb`]).
//!
//! All operations are deterministic: fixed inputs (and, where applicable,
//! fixed seeds) produce byte-identical outputs regardless of thread count.

pub mod assemble;
pub mod error;
pub mod eval;
pub mod filter;
pub mod io;
pub mod perturb;
pub mod preprocess;
pub mod record;
pub mod render;
pub mod resample;
pub mod symbolic;
pub mod wavelet;

pub use error::{Error, Result};
pub use record::{reorder_leads, EcgRecord, Lead, CANONICAL_LEADS};
