//! Verification experiments: moment checks, identities, continuity in H and
//! extension decay, plus CSV writers for their tables.

pub mod continuity;
pub mod identities;
pub mod moments;
pub mod report;

pub use continuity::{cauchy_decay_study, continuity_study, ContinuityCurve, DecayFit, DEFAULT_HURSTS};
pub use identities::{nonconvergence_demo, shiryaev_identity_check, NonconvergenceReport, NonconvergenceRow, ShiryaevReport};
pub use moments::{verify_dr_moments, verify_fbm_law, DrMomentsReport, FbmLawReport, MomentCheck};
