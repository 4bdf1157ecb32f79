//! Exact reference solvers.
//!
//! `held_karp` solves the plain travelling-salesman cycle by bitmask dynamic
//! programming. `exact_solve` finds the true optimum of tiny scheduling
//! instances by exhausting crew partitions, patient assignments, route
//! orders and drop decisions. Both exist to pin down ground truth for the
//! heuristics, so they favour clarity over speed and refuse large inputs.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::instance::{Instance, Node};
use crate::solution::Solution;

/// Largest node count (locations including the depot) accepted by
/// [`held_karp`]: 2^(n-1) * n state table.
pub const HELD_KARP_CAP: usize = 18;
/// Largest patient count accepted by [`exact_solve`].
pub const EXACT_PATIENT_CAP: usize = 6;
/// Largest caregiver pool accepted by [`exact_solve`].
pub const EXACT_CAREGIVER_CAP: usize = 6;

/// Minimum-cost Hamiltonian cycle over a symmetric distance matrix,
/// starting and ending at node 0. Returns the cost and the visiting order
/// (without the closing 0).
pub fn held_karp(dist: &[Vec<f64>]) -> Result<(f64, Vec<usize>)> {
    let n = dist.len();
    if n > HELD_KARP_CAP {
        return Err(Error::OverCap(n, HELD_KARP_CAP));
    }
    if n <= 1 {
        return Ok((0.0, vec![0]));
    }
    let m = n - 1; // cities 1..n mapped to bits 0..m
    let full = (1usize << m) - 1;
    // dp[mask][last]: cheapest path 0 -> ... -> last+1 visiting exactly mask
    let mut dp = vec![vec![f64::INFINITY; m]; full + 1];
    let mut parent = vec![vec![usize::MAX; m]; full + 1];
    for last in 0..m {
        dp[1 << last][last] = dist[0][last + 1];
    }
    for mask in 1..=full {
        for last in 0..m {
            if mask & (1 << last) == 0 || dp[mask][last].is_infinite() {
                continue;
            }
            let base = dp[mask][last];
            for next in 0..m {
                if mask & (1 << next) != 0 {
                    continue;
                }
                let cand = base + dist[last + 1][next + 1];
                let cell = &mut dp[mask | (1 << next)][next];
                if cand < *cell {
                    *cell = cand;
                    parent[mask | (1 << next)][next] = last;
                }
            }
        }
    }
    let (mut last, mut best) = (0, f64::INFINITY);
    for l in 0..m {
        let total = dp[full][l] + dist[l + 1][0];
        if total < best {
            best = total;
            last = l;
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut mask = full;
    while last != usize::MAX {
        order.push(last + 1);
        let p = parent[mask][last];
        mask &= !(1 << last);
        last = p;
    }
    order.push(0);
    order.reverse();
    Ok((best, order))
}

/// Exact optimum of an instance, with or without the drop-off policy.
pub struct OracleResult {
    pub objective: f64,
    pub solution: Solution,
}

/// Crew partitions of `0..num` into unordered groups of `size`, canonical
/// order (groups sorted, sorted by first member).
fn crew_partitions(num: usize, size: usize) -> Vec<Vec<Vec<usize>>> {
    fn rec(remaining: &mut Vec<usize>, size: usize, acc: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if remaining.is_empty() {
            out.push(acc.clone());
            return;
        }
        let head = remaining[0];
        let rest: Vec<usize> = remaining[1..].to_vec();
        // choose size-1 partners for the smallest remaining caregiver
        let mut combo = vec![0usize; size - 1];
        fn choose(
            rest: &[usize],
            start: usize,
            combo: &mut Vec<usize>,
            depth: usize,
            head: usize,
            size: usize,
            acc: &mut Vec<Vec<usize>>,
            out: &mut Vec<Vec<Vec<usize>>>,
        ) {
            if depth == combo.len() {
                let mut group = vec![head];
                group.extend(combo.iter().map(|&i| rest[i]));
                let mut next: Vec<usize> = rest
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| !combo.contains(i))
                    .map(|(_, &l)| l)
                    .collect();
                acc.push(group);
                rec(&mut next, size, acc, out);
                acc.pop();
                return;
            }
            for i in start..rest.len() {
                combo[depth] = i;
                choose(rest, i + 1, combo, depth + 1, head, size, acc, out);
            }
        }
        choose(&rest, 0, &mut combo, 0, head, size, acc, out);
    }
    let mut out = Vec::new();
    rec(&mut (0..num).collect(), size, &mut Vec::new(), &mut out);
    out
}

/// One vehicle's workload: (patient, serving caregiver) pairs.
type Tasks = Vec<(Node, usize)>;

/// Best route (duration, node list, dropped patients) for one vehicle's
/// tasks, by exhaustive sequencing with drop/no-drop branching.
fn best_route(inst: &Instance, tasks: &Tasks, allow_drops: bool) -> (f64, Vec<Node>, Vec<Node>) {
    struct Search<'a> {
        inst: &'a Instance,
        tasks: &'a Tasks,
        allow_drops: bool,
        best: f64,
        best_route: Vec<Node>,
        best_drops: Vec<Node>,
        route: Vec<Node>,
        drops: Vec<Node>,
    }
    impl Search<'_> {
        // pending: (task index, service completion time)
        fn rec(&mut self, visited: u32, pending: &mut Vec<(usize, f64)>, clock: f64, pos: Node) {
            if clock >= self.best {
                return;
            }
            if visited == (1u32 << self.tasks.len()) - 1 && pending.is_empty() {
                let total = clock + self.inst.travel(pos, self.inst.end_node());
                if total < self.best {
                    self.best = total;
                    self.best_route = self.route.clone();
                    self.best_route.push(self.inst.end_node());
                    self.best_drops = self.drops.clone();
                }
                return;
            }
            for (i, &(p, server)) in self.tasks.iter().enumerate() {
                if visited & (1 << i) != 0 || pending.iter().any(|&(j, _)| self.tasks[j].1 == server) {
                    continue;
                }
                let arr = clock + self.inst.travel(pos, p);
                let svc = self.inst.service_of(p);
                self.route.push(p);
                self.rec(visited | (1 << i), pending, arr + svc, p);
                if self.allow_drops {
                    self.drops.push(p);
                    pending.push((i, arr + svc));
                    self.rec(visited | (1 << i), pending, arr, p);
                    pending.pop();
                    self.drops.pop();
                }
                self.route.pop();
            }
            for j in 0..pending.len() {
                let (i, completion) = pending[j];
                let dummy = self.inst.dummy_of(self.tasks[i].0);
                let arr = clock + self.inst.travel(pos, dummy);
                self.route.push(dummy);
                let (removed, _) = (pending.remove(j), ());
                self.rec(visited, pending, arr.max(completion), dummy);
                pending.insert(j, removed);
                self.route.pop();
            }
        }
    }
    let mut s = Search {
        inst,
        tasks,
        allow_drops,
        best: f64::INFINITY,
        best_route: Vec::new(),
        best_drops: Vec::new(),
        route: vec![0],
        drops: Vec::new(),
    };
    let mut pending = Vec::new();
    s.rec(0, &mut pending, 0.0, 0);
    (s.best, s.best_route, s.best_drops)
}

/// Exhaustive optimum over crews, assignments, orders and drops. Set
/// `allow_drops = false` for the variant where crews always travel together.
pub fn exact_solve(inst: &Instance, allow_drops: bool) -> Result<OracleResult> {
    if inst.n > EXACT_PATIENT_CAP {
        return Err(Error::OverCap(inst.n, EXACT_PATIENT_CAP));
    }
    if inst.num_caregivers() > EXACT_CAREGIVER_CAP {
        return Err(Error::OverCap(inst.num_caregivers(), EXACT_CAREGIVER_CAP));
    }

    let mut cache: BTreeMap<Tasks, (f64, Vec<Node>, Vec<Node>)> = BTreeMap::new();
    let mut best: Option<OracleResult> = None;

    for crews in crew_partitions(inst.num_caregivers(), inst.capacity) {
        // choice per patient: None (unvisited) or (vehicle, qualified crew member)
        let choices: Vec<Vec<Option<(usize, usize)>>> = (1..=inst.n)
            .map(|p| {
                let mut opts = vec![None];
                for (k, crew) in crews.iter().enumerate() {
                    for &l in crew {
                        if inst.qualified(l, p) {
                            opts.push(Some((k, l)));
                        }
                    }
                }
                opts
            })
            .collect();

        let mut pick = vec![0usize; inst.n];
        loop {
            let mut tasks: Vec<Tasks> = vec![Vec::new(); crews.len()];
            let mut unvisited = 0usize;
            for p in 1..=inst.n {
                match choices[p - 1][pick[p - 1]] {
                    None => unvisited += 1,
                    Some((k, l)) => tasks[k].push((p, l)),
                }
            }
            let mut total = unvisited as f64 * inst.unv;
            for t in &tasks {
                let (cost, _, _) = cache
                    .entry(t.clone())
                    .or_insert_with(|| best_route(inst, t, allow_drops));
                total += inst.capacity as f64 * *cost;
            }
            if best.as_ref().map_or(true, |b| total < b.objective) {
                let mut sol = Solution::empty(inst, crews.clone());
                for (k, t) in tasks.iter().enumerate() {
                    let (_, route, drops) = &cache[t];
                    sol.routes[k] = route.clone();
                    for &(p, l) in t {
                        sol.assignments.insert(p, (l, k));
                        sol.unvisited.remove(&p);
                    }
                    for &p in drops {
                        let l = sol.assignments[&p].0;
                        sol.drops.insert((p, l, k));
                    }
                }
                best = Some(OracleResult {
                    objective: total,
                    solution: sol,
                });
            }

            // odometer over the choice vectors
            let mut i = 0;
            loop {
                if i == inst.n {
                    break;
                }
                pick[i] += 1;
                if pick[i] < choices[i].len() {
                    break;
                }
                pick[i] = 0;
                i += 1;
            }
            if i == inst.n {
                break;
            }
        }
    }
    Ok(best.expect("at least the all-unvisited solution exists"))
}
