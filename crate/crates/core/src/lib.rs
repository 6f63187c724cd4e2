pub mod config;
pub mod corpus_gen;
pub mod graph;
pub mod lang;
pub mod par;
pub mod pipeline;
pub mod scan;
pub mod search;
pub mod sim;
