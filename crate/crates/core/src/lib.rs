//! Bridging-based ranking engine and desk-scale simulator.
//!
//! The crate implements a pipeline from raw agree/disagree/pass votes to
//! ranked feeds and polarization measurements:
//!
//! - [`vote`]: the sparse people × items vote table.
//! - [`relation`]: formal relation models built from votes: PCA opinion
//!   space, k-means clustering with silhouette model selection, co-vote
//!   agreement graphs, and per-group aggregate tallies.
//! - [`signals`]: per-item bridging signals (diverse approval, group-aware
//!   consensus, matrix-factorization intercepts, response bimodality,
//!   exposure diversity) plus cross-divide credibility scores.
//! - [`ranking`]: the allocation process: score candidates with a weighted
//!   value model and realize the top-k slots as a feed.
//! - [`metrics`]: relation metrics (modularity, E-I index, random walk
//!   controversy, balance, motif prevalence) and their time deltas.
//! - [`sim`]: a seeded agent-based harness comparing ranking policies'
//!   effects on those metrics over time.
//!
//! Everything is deterministic given explicit seeds. Data-parallel loops run
//! through [`exec`], which produces identical results on the sequential and
//! rayon backends.

pub mod error;
pub mod exec;
pub mod fixtures;
pub mod ids;
pub mod io;
pub mod metrics;
pub mod ranking;
pub mod relation;
pub mod seeds;
pub mod signals;
pub mod sim;
pub mod vote;

pub use error::{Error, Result};
pub use exec::Backend;
pub use ids::{GroupId, ItemId, PersonId};
pub use vote::{InteractionEvent, Vote, VoteMatrix, VoteValue};
