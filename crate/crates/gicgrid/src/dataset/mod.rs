//! Scenario generation, labeling, splitting, and dataset persistence.

mod scenario;

pub use scenario::{generate, GmdScenario, SCALE_HI, SCALE_LO};
