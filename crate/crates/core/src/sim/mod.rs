//! Synthetic radar world and scan generation.

mod radar;
mod scenario;
mod world;

pub use radar::{ground_truth, sample_shift, simulate_scan, GroundTruth, ObjectTruth, SimParams};
pub use scenario::{ScanRecord, Scenario, BUNDLED};
pub use world::{DynamicBox, PointTarget, Segment, Waypoint, WorldModel};
