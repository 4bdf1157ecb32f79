//! Drop local search: turn wait-in-vehicle visits into drop-offs whenever
//! running the service in parallel with the route shortens it.
//!
//! Candidates are ranked by a closed-form gain estimate; since the estimate
//! ignores downstream ripple effects, every application is confirmed by an
//! exact route re-simulation and reverted (and skipped for the rest of the
//! pass) when the duration does not strictly decrease.

use crate::instance::{Instance, Node};
use crate::solution::Solution;

/// Arrival and departure clock at every position of one route under the
/// current drop set (`dropped[p]` indexed by patient id).
fn route_times(
    inst: &Instance,
    route: &[Node],
    dropped: &[bool],
    arr: &mut Vec<f64>,
    dep: &mut Vec<f64>,
) {
    arr.clear();
    dep.clear();
    let mut clock = 0.0;
    let mut prev = 0;
    let mut pending: Vec<(Node, f64)> = Vec::new();
    arr.push(0.0);
    dep.push(0.0);
    for &v in &route[1..] {
        clock += inst.travel(prev, v);
        arr.push(clock);
        if inst.is_patient(v) {
            if dropped[v] {
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
        dep.push(clock);
        prev = v;
    }
}

/// Route duration under the given server / drop tables, or None when the
/// assigned server of some visit is away at that moment or the clock
/// reaches `cutoff` (the clock never decreases, so the final duration
/// could not beat it).
fn simulate_route(
    inst: &Instance,
    route: &[Node],
    crew: &[usize],
    server_of: &[usize],
    dropped: &[bool],
    cutoff: f64,
) -> Option<f64> {
    let mut aboard: Vec<usize> = crew.to_vec();
    let mut clock = 0.0;
    let mut prev = 0;
    let mut pending: Vec<(Node, usize, f64)> = Vec::new();
    for &v in &route[1..] {
        clock += inst.travel(prev, v);
        if clock >= cutoff {
            return None;
        }
        if inst.is_patient(v) {
            let server = server_of[v];
            if server == usize::MAX || !aboard.contains(&server) {
                return None;
            }
            if dropped[v] {
                aboard.retain(|&l| l != server);
                pending.push((v, server, clock + inst.service_of(v)));
            } else {
                clock += inst.service_of(v);
            }
        } else if inst.is_dummy(v) {
            let patient = inst.patient_of(v);
            let idx = pending.iter().position(|&(p, _, _)| p == patient)?;
            let (_, l, completion) = pending.remove(idx);
            clock = clock.max(completion);
            aboard.push(l);
        }
        prev = v;
    }
    pending.is_empty().then_some(clock)
}

/// A server dropped at position `pi` with pick-up after position `g` is
/// away for that whole window, so any visit of its own inside the window
/// dooms the simulation; this rejects such trials without paying for one.
fn server_free(
    inst: &Instance,
    route: &[Node],
    server_of: &[usize],
    pi: usize,
    g: usize,
    s: usize,
) -> bool {
    route[pi + 1..=g]
        .iter()
        .all(|&v| !inst.is_patient(v) || server_of[v] != s)
}

/// Exhaust all strictly improving drop conversions on every route. Returns
/// the number of applied conversions.
///
/// Candidates `(pi, g)` drop the patient at position `pi` and pick the
/// server up between positions `g` and `g + 1`; the estimated saving swaps
/// the in-line service and old arc for a detour to the dummy plus a
/// possible wait for the service to finish. The estimate ignores downstream
/// ripple effects, so every application is confirmed by an exact route
/// re-simulation and reverted (and skipped for the rest of the pass) when
/// the duration does not strictly decrease.
pub fn dp_local_search(sol: &mut Solution, inst: &Instance) -> usize {
    let mut applied = 0;
    // indexed views of the assignment and drop maps, kept in sync manually
    let mut server_of = vec![usize::MAX; inst.n + 1];
    for (&p, &(l, _)) in &sol.assignments {
        server_of[p] = l;
    }
    let mut dropped = vec![false; inst.n + 1];
    for &(p, _, _) in &sol.drops {
        dropped[p] = true;
    }
    let mut arr: Vec<f64> = Vec::new();
    let mut dep: Vec<f64> = Vec::new();
    let mut ranked: Vec<(f64, usize, usize)> = Vec::new();
    let mut blacklist: Vec<(usize, usize)> = Vec::new();
    for k in 0..sol.routes.len() {
        blacklist.clear();
        loop {
            route_times(inst, &sol.routes[k], &dropped, &mut arr, &mut dep);
            let base = *dep.last().unwrap();
            let len = sol.routes[k].len();
            ranked.clear();
            for pi in 1..len - 1 {
                let v = sol.routes[k][pi];
                if !inst.is_patient(v) || dropped[v] {
                    continue;
                }
                let p = inst.service_of(v);
                // the dummy shares the patient's location, so the leg from
                // the pick-up gap to it starts at 0 and then follows the
                // route; the replaced arc is implicit in the clocks
                let mut to_dummy = 0.0;
                for g in pi..len - 1 {
                    let d_next = inst.travel(v, sol.routes[k][g + 1]);
                    let arc = arr[g + 1] - dep[g];
                    let wait = (arr[pi] + p - (dep[g] + to_dummy)).max(0.0);
                    let est = (arc + p) - (to_dummy + wait + d_next);
                    if est > 1e-9 && !blacklist.contains(&(pi, g)) {
                        ranked.push((est, pi, g));
                    }
                    to_dummy = d_next;
                }
            }
            // best estimate first, positional tie-break keeps runs replayable
            ranked.sort_by(|a, b| {
                b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2))
            });
            let mut moved = false;
            'candidates: for &(_, pi, g) in &ranked {
                let i = sol.routes[k][pi];
                // any qualified crew member may take over the visit; the
                // current server goes first to keep assignments stable
                let current = server_of[i];
                sol.routes[k].insert(g + 1, inst.dummy_of(i));
                dropped[i] = true;
                let others = sol.crews[k]
                    .iter()
                    .copied()
                    .filter(|&l| l != current && inst.qualified(l, i));
                for server in std::iter::once(current).chain(others) {
                    if !server_free(inst, &sol.routes[k], &server_of, pi, g, server) {
                        continue;
                    }
                    server_of[i] = server;
                    let sim = simulate_route(
                        inst,
                        &sol.routes[k],
                        &sol.crews[k],
                        &server_of,
                        &dropped,
                        base - 1e-9,
                    );
                    if matches!(sim, Some(d) if d < base - 1e-9) {
                        sol.assignments.insert(i, (server, k));
                        sol.drops.insert((i, server, k));
                        applied += 1;
                        moved = true;
                        break 'candidates;
                    }
                }
                dropped[i] = false;
                server_of[i] = current;
                sol.routes[k].remove(g + 1);
                blacklist.push((pi, g));
            }
            if !moved {
                break;
            }
            // positions shifted, stale entries are merely re-tested
            blacklist.clear();
        }
    }
    applied
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::two_patient_fixture;
    use crate::timeline::objective;
    use std::collections::{BTreeMap, BTreeSet};

    fn flat_solution(inst: &Instance) -> Solution {
        Solution {
            routes: vec![vec![0, 1, 2, inst.end_node()]],
            crews: vec![vec![0, 1]],
            assignments: BTreeMap::from([(1, (0, 0)), (2, (1, 0))]),
            drops: BTreeSet::new(),
            unvisited: BTreeSet::new(),
        }
    }

    #[test]
    fn finds_the_parallel_service_drop() {
        // serving patient 1 in parallel while the vehicle handles patient 2
        // cuts the route from 12 + sqrt(58) to 20 minutes
        let inst = two_patient_fixture();
        let mut sol = flat_solution(&inst);
        let before = objective(&sol, &inst).unwrap().total;
        let moves = dp_local_search(&mut sol, &inst);
        let after = objective(&sol, &inst).unwrap().total;
        assert_eq!(moves, 1);
        assert!(sol.drops.contains(&(1, 0, 0)));
        assert!(after < before);
        assert!((after - 40.0).abs() < 1e-9);
    }

    #[test]
    fn zero_service_leaves_the_solution_alone() {
        let mut inst = two_patient_fixture();
        inst.service = vec![0.0, 0.0];
        let mut sol = flat_solution(&inst);
        let snapshot = sol.clone();
        assert_eq!(dp_local_search(&mut sol, &inst), 0);
        assert_eq!(sol, snapshot);
    }

    #[test]
    fn never_increases_the_objective() {
        // a spread of service times and detours; whatever it does, the
        // exact confirmation gate forbids any regression
        for swap in [false, true] {
            let mut inst = two_patient_fixture();
            if swap {
                inst.service = vec![2.0, 50.0];
            }
            let mut sol = flat_solution(&inst);
            let before = objective(&sol, &inst).unwrap().total;
            dp_local_search(&mut sol, &inst);
            let after = objective(&sol, &inst).unwrap().total;
            assert!(after <= before + 1e-9);
        }
    }
}
