pub mod affiliation;
pub mod analytics;
pub mod dataset;
pub mod fixture;
pub mod ingest;
pub mod llm;
pub mod methodology;
pub mod normalize;
pub mod pipeline;
pub mod resolve;
pub mod util;
