//! Online scheduling mechanisms with anonymous menus, their baselines, and
//! the adversaries that stress them.
//!
//! The library implements three prompt mechanisms for minimizing the sum of
//! weighted completion times: a dynamic interval menu for unit-weight jobs
//! ([`dynamic`]), priced unit time slots for unit-length weighted jobs
//! ([`pricing`]), and a replicated static division with interval prices for
//! weights bounded by a known constant ([`bounded`]). A plain static
//! first-fit division ([`static_menu`]) and the classic preemptive and
//! offline schedulers ([`baselines`]) serve as yardsticks, and [`adversary`]
//! generates the instances that pin the lower bounds. [`verify`] bundles the
//! structural property suites the harness and the tests share.

pub mod adversary;
pub mod baselines;
pub mod bounded;
pub mod dynamic;
pub mod gen;
pub mod model;
pub mod pricing;
pub mod report;
pub mod sequences;
pub mod static_menu;
pub mod verify;

pub use model::{Job, JobStream, OnlineMechanism, Schedule};
pub use sequences::Interval;
