//! The exact timeline evaluator: forward event simulation of a solution.
//!
//! Earliest-start semantics: nobody idles voluntarily, so every timing
//! inequality of the scheduling model holds with equality at the simulated
//! schedule. All heuristics score against this single evaluator.

use crate::error::{Error, Result};
use crate::instance::{Instance, Node};
use crate::solution::Solution;

/// Arrival / departure / waiting minutes of every vehicle and caregiver at
/// every node it visits (`None` where it never goes).
#[derive(Debug, Clone, PartialEq)]
pub struct Timeline {
    /// `vehicle_*[k][node]`
    pub vehicle_arrival: Vec<Vec<Option<f64>>>,
    pub vehicle_departure: Vec<Vec<Option<f64>>>,
    pub vehicle_wait: Vec<Vec<Option<f64>>>,
    /// `caregiver_*[l][node]`
    pub caregiver_arrival: Vec<Vec<Option<f64>>>,
    pub caregiver_departure: Vec<Vec<Option<f64>>>,
    pub caregiver_wait: Vec<Vec<Option<f64>>>,
    /// Arcs traversed by each caregiver, in travel order.
    pub caregiver_arcs: Vec<Vec<(Node, Node)>>,
}

impl Timeline {
    /// A caregiver's total flow time: arrival back at the HHC.
    pub fn flow_time(&self, inst: &Instance, caregiver: usize) -> f64 {
        self.caregiver_arrival[caregiver][inst.end_node()].unwrap_or(0.0)
    }

    pub fn vehicle_end(&self, inst: &Instance, vehicle: usize) -> f64 {
        self.vehicle_arrival[vehicle][inst.end_node()].unwrap_or(0.0)
    }

    pub fn total_flow(&self, inst: &Instance) -> f64 {
        (0..self.caregiver_arrival.len())
            .map(|l| self.flow_time(inst, l))
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective {
    /// Sum over caregivers of their flow times.
    pub flow: f64,
    /// `|unvisited| * unv`.
    pub penalty: f64,
    pub total: f64,
}

impl Objective {
    fn new(flow: f64, penalty: f64) -> Objective {
        Objective {
            flow,
            penalty,
            total: flow + penalty,
        }
    }
}

/// Structural checks shared by the evaluator and the feasibility checker:
/// route endpoints, node uniqueness, assignment/drop/dummy consistency.
pub(crate) fn check_structure(sol: &Solution, inst: &Instance) -> Result<()> {
    let end = inst.end_node();
    let mut seen = vec![false; end + 1];
    for (k, route) in sol.routes.iter().enumerate() {
        if route.len() < 2 || route[0] != 0 || *route.last().unwrap() != end {
            return Err(Error::BadRouteEndpoints { vehicle: k });
        }
        let mut pos = vec![usize::MAX; end + 1];
        for (idx, &v) in route[1..route.len() - 1].iter().enumerate() {
            if v == 0 || v >= end {
                return Err(Error::UnknownNode(v));
            }
            if seen[v] {
                return Err(Error::DuplicateNode { node: v });
            }
            seen[v] = true;
            pos[v] = idx;
        }
        for &v in &route[1..route.len() - 1] {
            if inst.is_patient(v) {
                match sol.assignments.get(&v) {
                    None => return Err(Error::UnassignedPatient { patient: v }),
                    Some(&(l, kk)) => {
                        if kk != k || !sol.crews[k].contains(&l) {
                            return Err(Error::ServerNotAboard {
                                patient: v,
                                caregiver: l,
                            });
                        }
                    }
                }
                if sol.unvisited.contains(&v) {
                    return Err(Error::RoutedAndUnvisited { patient: v });
                }
            } else {
                let p = inst.patient_of(v);
                if pos[p] == usize::MAX || pos[p] > pos[v] {
                    return Err(Error::DummyBeforePatient { patient: p });
                }
                if sol.drop_at(p).map(|(_, dk)| dk) != Some(k) {
                    return Err(Error::DummyWithoutDrop {
                        patient: p,
                        vehicle: k,
                    });
                }
            }
        }
    }
    for &(p, l, k) in &sol.drops {
        if sol.assignments.get(&p) != Some(&(l, k)) {
            return Err(Error::InconsistentDrop {
                patient: p,
                caregiver: l,
                vehicle: k,
            });
        }
        if !seen[inst.dummy_of(p)] {
            return Err(Error::DropWithoutDummy {
                patient: p,
                caregiver: l,
            });
        }
    }
    for (&p, &(_, k)) in &sol.assignments {
        if !seen[p] {
            // assigned but not routed anywhere
            let _ = k;
            return Err(Error::UnassignedPatient { patient: p });
        }
    }
    Ok(())
}

/// Forward-simulate all routes, producing the complete timeline.
pub fn evaluate(sol: &Solution, inst: &Instance) -> Result<Timeline> {
    check_structure(sol, inst)?;
    let end = inst.end_node();
    let nl = inst.num_caregivers();
    let nk = inst.num_vehicles;
    let mut tl = Timeline {
        vehicle_arrival: vec![vec![None; end + 1]; nk],
        vehicle_departure: vec![vec![None; end + 1]; nk],
        vehicle_wait: vec![vec![None; end + 1]; nk],
        caregiver_arrival: vec![vec![None; end + 1]; nl],
        caregiver_departure: vec![vec![None; end + 1]; nl],
        caregiver_wait: vec![vec![None; end + 1]; nl],
        caregiver_arcs: vec![Vec::new(); nl],
    };

    for (k, route) in sol.routes.iter().enumerate() {
        let mut aboard: Vec<usize> = sol.crews[k].clone();
        // dropped caregiver -> (patient, service completion time)
        let mut pending: Vec<(usize, Node, f64)> = Vec::new();

        tl.vehicle_arrival[k][0] = Some(0.0);
        tl.vehicle_departure[k][0] = Some(0.0);
        tl.vehicle_wait[k][0] = Some(0.0);
        for &l in &aboard {
            tl.caregiver_arrival[l][0] = Some(0.0);
            tl.caregiver_departure[l][0] = Some(0.0);
            tl.caregiver_wait[l][0] = Some(0.0);
        }

        let mut prev = 0;
        let mut dv_prev = 0.0;
        for &v in &route[1..] {
            let arr = dv_prev + inst.travel(prev, v);
            tl.vehicle_arrival[k][v] = Some(arr);
            for &l in &aboard {
                tl.caregiver_arrival[l][v] = Some(arr);
                tl.caregiver_arcs[l].push((prev, v));
            }

            let dv;
            if inst.is_patient(v) {
                let (server, _) = sol.assignments[&v];
                if !aboard.contains(&server) {
                    return Err(Error::ServerNotAboard {
                        patient: v,
                        caregiver: server,
                    });
                }
                if sol.drops.contains(&(v, server, k)) {
                    // drop-off: the vehicle moves on immediately
                    dv = arr;
                    tl.vehicle_wait[k][v] = Some(0.0);
                    aboard.retain(|&l| l != server);
                    pending.push((server, v, arr + inst.service_of(v)));
                    tl.caregiver_wait[server][v] = Some(0.0);
                    tl.caregiver_departure[server][v] = Some(arr);
                } else {
                    // everyone waits for the full service
                    let p = inst.service_of(v);
                    dv = arr + p;
                    tl.vehicle_wait[k][v] = Some(p);
                    for &l in &aboard {
                        tl.caregiver_wait[l][v] = Some(if l == server { 0.0 } else { p });
                    }
                }
            } else if inst.is_dummy(v) {
                let patient = inst.patient_of(v);
                let idx = pending
                    .iter()
                    .position(|&(_, p, _)| p == patient)
                    .ok_or(Error::DummyBeforePatient { patient })?;
                let (l, _, completion) = pending.remove(idx);
                let wait = (completion - arr).max(0.0);
                dv = arr + wait;
                tl.vehicle_wait[k][v] = Some(wait);
                for &a in &aboard {
                    tl.caregiver_wait[a][v] = Some(0.0);
                }
                tl.caregiver_arrival[l][v] = Some(completion);
                tl.caregiver_wait[l][v] = Some((arr - completion).max(0.0));
                aboard.push(l);
            } else {
                // return depot
                if let Some(&(l, _, _)) = pending.first() {
                    return Err(Error::DropWithoutDummy {
                        patient: pending[0].1,
                        caregiver: l,
                    });
                }
                dv = arr;
                tl.vehicle_wait[k][v] = Some(0.0);
                for &l in &aboard {
                    tl.caregiver_wait[l][v] = Some(0.0);
                }
            }
            tl.vehicle_departure[k][v] = Some(dv);
            for &l in &aboard {
                tl.caregiver_departure[l][v] = Some(dv);
            }
            prev = v;
            dv_prev = dv;
        }
    }
    Ok(tl)
}

/// Duration of a route given a drop predicate, letting callers price
/// hypothetical routes without building a solution.
pub fn duration_of(inst: &Instance, route: &[Node], is_dropped: &dyn Fn(Node) -> bool) -> f64 {
    let mut clock = 0.0;
    let mut prev = 0;
    // (patient, completion) of currently dropped caregivers
    let mut pending: Vec<(Node, f64)> = Vec::new();
    for &v in &route[1..] {
        clock += inst.travel(prev, v);
        if inst.is_patient(v) {
            if is_dropped(v) {
                pending.push((v, clock + inst.service_of(v)));
            } else {
                clock += inst.service_of(v);
            }
        } else if inst.is_dummy(v) {
            let patient = inst.patient_of(v);
            if let Some(idx) = pending.iter().position(|&(p, _)| p == patient) {
                let (_, completion) = pending.remove(idx);
                clock = clock.max(completion);
            }
        }
        prev = v;
    }
    clock
}

/// Duration of one route under the same semantics as [`evaluate`], without
/// materializing a timeline. Assumes the solution is structurally sound.
pub fn route_duration(sol: &Solution, inst: &Instance, vehicle: usize) -> f64 {
    let drops = sol.drop_table(inst);
    duration_of(inst, &sol.routes[vehicle], &|p| drops[p].is_some())
}

/// The total objective, computed from per-route durations. Every caregiver
/// of a vehicle returns to the HHC with it, so the total flow time is
/// `sum_k c * duration_k`.
pub fn objective(sol: &Solution, inst: &Instance) -> Result<Objective> {
    check_structure(sol, inst)?;
    let flow: f64 = (0..inst.num_vehicles)
        .map(|k| sol.crews[k].len() as f64 * route_duration(sol, inst, k))
        .sum();
    Ok(Objective::new(flow, sol.unvisited.len() as f64 * inst.unv))
}

/// Fast objective for search loops: no structural re-validation.
pub(crate) fn objective_unchecked(sol: &Solution, inst: &Instance) -> f64 {
    let drops = sol.drop_table(inst);
    (0..inst.num_vehicles)
        .map(|k| {
            sol.crews[k].len() as f64
                * duration_of(inst, &sol.routes[k], &|p| drops[p].is_some())
        })
        .sum::<f64>()
        + sol.unvisited.len() as f64 * inst.unv
}
