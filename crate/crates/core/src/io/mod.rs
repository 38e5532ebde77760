//! Dataset ingestion, file formats and report emitters.

pub mod files;
pub mod ingest;
pub mod report;
