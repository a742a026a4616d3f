//! Relation models: formal representations of relationships in a population,
//! built from vote data. Space-based (PCA projection), graph-based (co-vote
//! agreement), aggregate (per-group tallies), and clustering over the space
//! model.

pub mod aggregate;
pub mod graph;
pub mod kmeans;
pub mod pca;

pub use aggregate::{aggregate, AggregateModel, GroupCounts, ItemAggregate};
pub use graph::{vote_similarity_graph, EdgeSign, GraphEdge, GraphModel};
pub use kmeans::{cluster_people, ClusterOptions, Clustering};
pub use pca::{pca_project, SpaceModel};
