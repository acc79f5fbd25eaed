//! Explicit bounds for FCFS GI/GI/n queues, with simulators that check them.
//!
//! Bounds are evaluated in log space ([`xnum`]) and checked against
//! event-driven queue simulation ([`qsim`]), the bounding supremum process
//! ([`csim`]) and closed-form oracles. [`harness`] produces deterministic
//! verification reports from these runs.

pub mod bounds;
pub mod csim;
pub mod dists;
pub mod harness;
mod quad;
pub mod qsim;
pub mod xnum;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/log-space.md")]
    mod log_space {}
    #[doc = include_str!("../../../book/src/distributions.md")]
    mod distributions {}
    #[doc = include_str!("../../../book/src/bounds.md")]
    mod bounds {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/supremum.md")]
    mod supremum {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
