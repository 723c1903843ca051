//! Multi-affiliated authorship toolkit: record ingestion, authorship
//! classification, share statistics and negative binomial citation
//! regression.

pub mod classify;
pub mod ingest;
pub mod nbrm;
pub mod reference;
pub mod report;
pub mod shares;
pub mod synth;
