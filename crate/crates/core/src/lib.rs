//! Multirotor swarm simulation with a learned, permutation-invariant model
//! of inter-vehicle downwash and an integral tracking controller that uses
//! the learned force as feed-forward.

pub mod config;
pub mod controller;
pub mod harness;
pub mod net;
pub mod sim;
pub mod trainer;
