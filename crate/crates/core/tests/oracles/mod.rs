//! Independent reference computations shared by several test targets.
#![allow(dead_code)]

pub mod allocation;
pub mod backoff;
pub mod chain;
