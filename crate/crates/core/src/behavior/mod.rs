//! Behavior space: the hand-crafted metric baseline, learned embeddings from
//! an external encoder, and the distance between behaviors.

mod endpoint;
mod metrics;
pub mod protocol;
mod vector;

pub use endpoint::{
    learned_embed, stack_shape, EmbedError, EmbeddingClient, EndpointSpec, SessionPool, DEFAULT_TIMEOUT, MAX_DIM,
};
pub use metrics::{
    centroid, handcrafted_embed, scatter_series, snapshot_stats, window_start, HandcraftedMetrics, SnapshotStats,
};
pub use protocol::StackShape;
pub use vector::{behavior_distance, l2, Backend, BehaviorVector, DistanceError};
