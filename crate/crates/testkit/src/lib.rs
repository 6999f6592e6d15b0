//! Fixtures, brute-force oracles and random program generators for tests.
//!
//! The oracles only read program structure; they do not call the search,
//! model or heuristic code they are used to check.

pub mod fixtures;
pub mod gen;
pub mod oracle;
