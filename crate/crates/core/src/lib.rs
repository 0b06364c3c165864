pub mod extract;
pub mod pytok;
pub mod style;
pub mod clean;
pub mod bpe;
pub mod noise;
pub mod multimode;
pub mod corpus;
pub mod metrics;
pub mod embed;
pub mod pipeline;
