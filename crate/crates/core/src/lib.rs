//! Solver toolkit for the home healthcare scheduling and routing problem
//! with vehicle sharing: caregiver crews share vehicles and may be dropped
//! off at a patient while the vehicle serves others, minimizing the total
//! caregiver flow time plus a penalty per unvisited patient.

pub mod alns;
pub mod analysis;
pub mod error;
pub mod feasibility;
pub mod instance;
pub mod instancegen;
pub mod io;
pub mod milp;
pub mod oracle;
pub mod solution;
pub mod testutil;
pub mod timeline;
pub mod uba;

pub use error::{Error, Result};
pub use instance::{Instance, Node};
pub use solution::Solution;
pub use timeline::{evaluate, objective, Objective, Timeline};
