//! Swarm behavior discovery.
//!
//! Simulates swarms of unicycle robots driven by a four-gene reactive
//! controller, summarises each episode as a behavior vector, and searches the
//! controller space with novelty-driven evolution followed by k-medoids
//! selection of representative behaviors.

pub mod binio;
pub mod sim;
pub mod capture;
pub mod behavior;
pub mod discovery;
pub mod evaluation;
