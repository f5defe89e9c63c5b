//! Multilingual entity importance ranking.
//!
//! Entities from a knowledge base are scored from link-graph features
//! (pagerank, link counts, in/out ratio, category count), triple-store
//! features (subject/object counts and their type counts) and an external
//! social score. Features are log-max normalized, combined linearly with
//! weights fitted against 1–5 importance labels, and the resulting scores
//! produce one ranked list per language.
//!
//! Modules follow the data flow: [`ingest`] → [`linkgraph`] / [`kbfeatures`]
//! → [`model`] → [`rankeval`], orchestrated by [`pipeline`].

pub mod ingest;
pub mod kbfeatures;
pub mod linkgraph;
pub mod model;
pub mod pipeline;
pub mod rankeval;
pub mod tsv;
