//! Library surface of the batch driver, exposed so integration tests can
//! call commands in-process.

pub mod commands;
pub mod config;
pub mod io;
pub mod suite;
