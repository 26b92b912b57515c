//! Knowledge-graph verbalization pipeline: align triples to page text,
//! group them by relation co-occurrence, serialize groups for a generator,
//! filter generated sentences and package them as retrieval documents.

pub mod aligner;
pub mod filter;
pub mod grouper;
pub mod ingest;
pub mod matchers;
pub mod model;
pub mod report;
pub mod serializer;
