//! Reference storage and band-escalating authentication.
//!
//! A candidate is compared with a stored reference at a small band count
//! first. While the result stays within `margin` of the precision threshold
//! the comparison is repeated with more bands, following the schedule.

mod auth;
mod store;

pub use auth::{
    authenticate, authenticate_images, decide, default_schedule, evaluate_at, validate_schedule,
    AuthConfig, AuthVerdict, Decision, Iteration,
};
pub use store::{ReferenceEntry, ReferenceInfo, ReferenceStore, INDEX_FILE, WHITE_COLUMN};
