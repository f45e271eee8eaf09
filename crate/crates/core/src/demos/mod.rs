//! Expert production and demonstration files.
//!
//! Experts are PPO policies trained on the task reward. Demonstrations are
//! stored as raw frames for learners plus a ground-truth state section that
//! only analysis code opens.

mod expert;
mod format;

pub use expert::{record_demos, train_expert, ExpertCheckpoint, ExpertConfig};
pub use format::{load_demos, read_demos, DemoFile, DemoMode, DemoTrajectory, DemoView, MAGIC, VERSION};
