//! Train classical collaborative-filtering recommenders on explicit ratings and
//! audit their top-N lists for popularity-bias amplification and miscalibration
//! across user cohorts.

pub mod analysis;
pub mod dataset;
pub mod hash;
pub mod metrics;
pub mod pipeline;
pub mod recommenders;
pub mod rng;
