#![allow(dead_code)]

pub mod belief;
pub mod engine;
pub mod epistemic;
pub mod planner;
pub mod textio;
