//! Runtime side of GameArena: model gateway, session store, retrospective
//! replay runner, scripted simulation, HTTP service and the shared game
//! driver. The pure logic lives in `gamearena-core`.

pub mod config;
pub mod driver;
pub mod fixtures;
pub mod gateway;
pub mod replay;
pub mod report;
pub mod service;
pub mod sim;
pub mod store;

pub use gamearena_core as core;
