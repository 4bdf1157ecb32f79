//! Constraint checking for structurally sound solutions.
//!
//! Structural defects (broken routes, dangling drops) are [`Error`]s raised
//! by the evaluator. Everything else is a [`Violation`]: a feasible solution
//! is one with an empty violation list.

use std::collections::BTreeSet;

use crate::error::Result;
use crate::instance::{Instance, Node};
use crate::solution::Solution;
use crate::timeline::{evaluate, Timeline};

/// Tolerance for the working-time comparison, absorbing float noise.
pub const WTIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Patient neither assigned nor listed unvisited.
    Uncovered { patient: Node },
    /// Serving caregiver lacks the demanded skill.
    Unqualified { patient: Node, caregiver: usize },
    /// Crew size differs from the vehicle capacity.
    CrewSize { vehicle: usize, size: usize },
    /// Caregiver rides more than one vehicle (or none).
    CrewMembership { caregiver: usize },
    /// Caregiver flow time exceeds the working-time limit.
    CaregiverOvertime { caregiver: usize, flow: f64 },
    /// Vehicle returns after the working-time limit.
    VehicleOvertime { vehicle: usize, end: f64 },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Uncovered { patient } => {
                write!(f, "patient {patient} neither served nor marked unvisited")
            }
            Violation::Unqualified { patient, caregiver } => {
                write!(f, "caregiver {caregiver} not qualified for patient {patient}")
            }
            Violation::CrewSize { vehicle, size } => {
                write!(f, "vehicle {vehicle} has crew of {size}")
            }
            Violation::CrewMembership { caregiver } => {
                write!(f, "caregiver {caregiver} is not in exactly one crew")
            }
            Violation::CaregiverOvertime { caregiver, flow } => {
                write!(f, "caregiver {caregiver} flow time {flow} over the limit")
            }
            Violation::VehicleOvertime { vehicle, end } => {
                write!(f, "vehicle {vehicle} returns at {end}, over the limit")
            }
        }
    }
}

/// Evaluate and collect all constraint violations. An `Err` means the
/// solution could not even be simulated.
pub fn check_feasibility(sol: &Solution, inst: &Instance) -> Result<Vec<Violation>> {
    let tl = evaluate(sol, inst)?;
    Ok(violations(sol, inst, &tl))
}

/// Violations given an already computed timeline.
pub fn violations(sol: &Solution, inst: &Instance, tl: &Timeline) -> Vec<Violation> {
    let mut out = Vec::new();

    for p in 1..=inst.n {
        if !sol.assignments.contains_key(&p) && !sol.unvisited.contains(&p) {
            out.push(Violation::Uncovered { patient: p });
        }
    }
    for (&p, &(l, _)) in &sol.assignments {
        if !inst.qualified(l, p) {
            out.push(Violation::Unqualified {
                patient: p,
                caregiver: l,
            });
        }
    }

    let mut seen: BTreeSet<usize> = BTreeSet::new();
    let mut doubled = false;
    for (k, crew) in sol.crews.iter().enumerate() {
        if crew.len() != inst.capacity {
            out.push(Violation::CrewSize {
                vehicle: k,
                size: crew.len(),
            });
        }
        for &l in crew {
            if !seen.insert(l) {
                doubled = true;
                out.push(Violation::CrewMembership { caregiver: l });
            }
        }
    }
    if !doubled {
        for l in 0..inst.num_caregivers() {
            if !seen.contains(&l) {
                out.push(Violation::CrewMembership { caregiver: l });
            }
        }
    }

    for l in 0..inst.num_caregivers() {
        let flow = tl.flow_time(inst, l);
        if flow > inst.wtime + WTIME_EPS {
            out.push(Violation::CaregiverOvertime { caregiver: l, flow });
        }
    }
    for k in 0..inst.num_vehicles {
        let end = tl.vehicle_end(inst, k);
        if end > inst.wtime + WTIME_EPS {
            out.push(Violation::VehicleOvertime { vehicle: k, end });
        }
    }
    out
}

/// Convenience wrapper: true iff evaluable with no violations.
pub fn is_feasible(sol: &Solution, inst: &Instance) -> bool {
    matches!(check_feasibility(sol, inst), Ok(v) if v.is_empty())
}
