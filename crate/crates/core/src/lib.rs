//! Multi-round meeting coordination with language-model agents.
//!
//! [`protocol::run_session`] runs one meeting; [`harness::run_experiment`]
//! runs a grid of them and [`reporting::Report`] summarizes the results.
//! Every model call goes through [`backend::Backend`].

pub mod backend;
pub mod coordination;
pub mod dialogue;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod protocol;
pub mod reporting;
pub mod schedule;
pub mod sim;
