//! Constructive upper-bound heuristic: a four-stage, drop-free pipeline.
//!
//! 1. qualified k-means clustering of patients onto caregivers,
//! 2. grouping caregiver clusters onto vehicles by proximity,
//! 3. exact TSP per vehicle with overflow of costliest patients to later
//!    vehicles when the working-time limit binds,
//! 4. best-improvement inter-route relocation plus greedy repair of the
//!    unvisited list.
//!
//! The result never uses drop-offs, so it upper-bounds the shared-vehicle
//! optimum and seeds the upper-bound rows of the MILP emitter.

use std::collections::{BTreeMap, BTreeSet};

use crate::instance::{Instance, Node};
use crate::oracle::{held_karp, HELD_KARP_CAP};
use crate::solution::Solution;
use crate::timeline::{objective, route_duration};

/// Patient sets per caregiver with their centroids.
#[derive(Debug, Clone, PartialEq)]
pub struct CaregiverClusters {
    pub members: Vec<Vec<Node>>,
    pub centroids: Vec<(f64, f64)>,
}

/// Caregiver clusters grouped onto vehicles, later carrying routes.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleClusters {
    /// Caregiver ids per vehicle, in assignment order.
    pub crews: Vec<Vec<usize>>,
    /// Patients per vehicle with their serving caregiver.
    pub tasks: Vec<Vec<(Node, usize)>>,
    pub centroids: Vec<(f64, f64)>,
    /// Patient visiting order per vehicle (filled by stage 3).
    pub routes: Vec<Vec<Node>>,
    pub unvisited: Vec<Node>,
    /// True if any tour was too large for the exact TSP and the
    /// nearest-neighbor + 2-opt fallback was used.
    pub tsp_fallback: bool,
}

const KMEANS_CAP: usize = 100;

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

fn centroid(inst: &Instance, members: &[Node], fallback: (f64, f64)) -> (f64, f64) {
    if members.is_empty() {
        return fallback;
    }
    let (mut x, mut y) = (0.0, 0.0);
    for &i in members {
        x += inst.coords[i].0;
        y += inst.coords[i].1;
    }
    (x / members.len() as f64, y / members.len() as f64)
}

/// Stage 1: cluster patients onto qualified caregivers, k-means style, then
/// rebalance workloads against the cap `total service / |L| + max service`.
pub fn stage1_cluster(inst: &Instance) -> CaregiverClusters {
    let nl = inst.num_caregivers();
    let hhc = inst.coords[0];
    let mut members: Vec<Vec<Node>> = vec![Vec::new(); nl];
    let mut centroids = vec![hhc; nl];
    let mut assigned: BTreeMap<Node, usize> = BTreeMap::new();

    // seed each cluster with the farthest unclaimed treatable patient
    for l in 0..nl {
        let mut best: Option<(f64, Node)> = None;
        for p in 1..=inst.n {
            if assigned.contains_key(&p) || !inst.qualified(l, p) {
                continue;
            }
            let d = dist(inst.coords[p], hhc);
            if best.map_or(true, |(bd, _)| d > bd) {
                best = Some((d, p));
            }
        }
        if let Some((_, p)) = best {
            members[l].push(p);
            centroids[l] = inst.coords[p];
            assigned.insert(p, l);
        }
    }
    // feed empty clusters from donors with spare patients: take the
    // treatable patient farthest from its donor centroid
    for l in 0..nl {
        if !members[l].is_empty() {
            continue;
        }
        let mut best: Option<(f64, Node, usize)> = None;
        for donor in 0..nl {
            if members[donor].len() < 2 {
                continue;
            }
            for &p in &members[donor] {
                if !inst.qualified(l, p) {
                    continue;
                }
                let d = dist(inst.coords[p], centroids[donor]);
                if best.map_or(true, |(bd, _, _)| d > bd) {
                    best = Some((d, p, donor));
                }
            }
        }
        if let Some((_, p, donor)) = best {
            members[donor].retain(|&q| q != p);
            centroids[donor] = centroid(inst, &members[donor], hhc);
            members[l].push(p);
            centroids[l] = inst.coords[p];
            assigned.insert(p, l);
        }
    }

    // qualified k-means: move every patient to the nearest treatable
    // centroid until a full pass changes nothing
    for _ in 0..KMEANS_CAP {
        let mut moved = false;
        for p in 1..=inst.n {
            let mut best: Option<(f64, usize)> = None;
            for l in 0..nl {
                if !inst.qualified(l, p) {
                    continue;
                }
                let d = dist(inst.coords[p], centroids[l]);
                if best.map_or(true, |(bd, _)| d < bd) {
                    best = Some((d, l));
                }
            }
            let Some((_, target)) = best else { continue };
            if assigned.get(&p) == Some(&target) {
                continue;
            }
            if let Some(&old) = assigned.get(&p) {
                members[old].retain(|&q| q != p);
                centroids[old] = centroid(inst, &members[old], hhc);
            }
            members[target].push(p);
            centroids[target] = centroid(inst, &members[target], hhc);
            assigned.insert(p, target);
            moved = true;
        }
        if !moved {
            break;
        }
    }

    // rebalance: strip the farthest patients off overloaded clusters, then
    // re-place them where the cap still holds, forcing leftovers
    let cap = inst.total_service() / nl as f64
        + inst.service.iter().cloned().fold(0.0, f64::max);
    let load = |members: &Vec<Node>| -> f64 { members.iter().map(|&p| inst.service_of(p)).sum() };
    let mut candidates: Vec<Node> = Vec::new();
    for l in 0..nl {
        while load(&members[l]) > cap && members[l].len() > 1 {
            let &far = members[l]
                .iter()
                .max_by(|&&a, &&b| {
                    dist(inst.coords[a], centroids[l])
                        .partial_cmp(&dist(inst.coords[b], centroids[l]))
                        .unwrap()
                })
                .unwrap();
            members[l].retain(|&q| q != far);
            centroids[l] = centroid(inst, &members[l], hhc);
            candidates.push(far);
        }
    }
    let place = |p: Node, members: &[Vec<Node>], centroids: &[(f64, f64)], respect_cap: bool| -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        for l in 0..nl {
            if !inst.qualified(l, p) {
                continue;
            }
            if respect_cap && load(&members[l].to_vec()) + inst.service_of(p) > cap {
                continue;
            }
            let d = dist(inst.coords[p], centroids[l]);
            if best.map_or(true, |(bd, _)| d < bd) {
                best = Some((d, l));
            }
        }
        best.map(|(_, l)| l)
    };
    let mut leftovers = Vec::new();
    for p in candidates {
        match place(p, &members, &centroids, true) {
            Some(l) => {
                members[l].push(p);
                centroids[l] = centroid(inst, &members[l], hhc);
            }
            None => leftovers.push(p),
        }
    }
    for p in leftovers {
        if let Some(l) = place(p, &members, &centroids, false) {
            members[l].push(p);
            centroids[l] = centroid(inst, &members[l], hhc);
        }
    }
    for m in &mut members {
        m.sort_unstable();
    }
    CaregiverClusters { members, centroids }
}

/// Stage 2: seed vehicles with mutually distant clusters, then join every
/// remaining cluster to its nearest non-full vehicle.
pub fn stage2_vehicles(clusters: &CaregiverClusters, inst: &Instance) -> VehicleClusters {
    let nk = inst.num_vehicles;
    let hhc = inst.coords[0];
    let mut remaining: BTreeSet<usize> = (0..inst.num_caregivers()).collect();
    let mut crews: Vec<Vec<usize>> = vec![Vec::new(); nk];
    let mut centroids = vec![hhc; nk];

    // first seed: cluster farthest from the HHC
    let &first = remaining
        .iter()
        .max_by(|&&a, &&b| {
            dist(clusters.centroids[a], hhc)
                .partial_cmp(&dist(clusters.centroids[b], hhc))
                .unwrap()
        })
        .unwrap();
    crews[0].push(first);
    centroids[0] = clusters.centroids[first];
    remaining.remove(&first);

    // each next vehicle: cluster farthest from all seeded centroids
    for k in 1..nk {
        let &far = remaining
            .iter()
            .max_by(|&&a, &&b| {
                let da = (0..k).map(|j| dist(clusters.centroids[a], centroids[j])).fold(f64::INFINITY, f64::min);
                let db = (0..k).map(|j| dist(clusters.centroids[b], centroids[j])).fold(f64::INFINITY, f64::min);
                da.partial_cmp(&db).unwrap()
            })
            .unwrap();
        crews[k].push(far);
        centroids[k] = clusters.centroids[far];
        remaining.remove(&far);
    }

    // nearest fill, closest (cluster, vehicle) pair first
    while !remaining.is_empty() {
        let mut best: Option<(f64, usize, usize)> = None;
        for &l in &remaining {
            for k in 0..nk {
                if crews[k].len() >= inst.capacity {
                    continue;
                }
                let d = dist(clusters.centroids[l], centroids[k]);
                if best.map_or(true, |(bd, _, _)| d < bd) {
                    best = Some((d, l, k));
                }
            }
        }
        let (_, l, k) = best.expect("capacity c * |K| fits all clusters");
        crews[k].push(l);
        remaining.remove(&l);
        let all: Vec<Node> = crews[k].iter().flat_map(|&c| clusters.members[c].iter().copied()).collect();
        centroids[k] = centroid(inst, &all, hhc);
    }

    let tasks = crews
        .iter()
        .map(|crew| {
            let mut t: Vec<(Node, usize)> = crew
                .iter()
                .flat_map(|&l| clusters.members[l].iter().map(move |&p| (p, l)))
                .collect();
            t.sort_unstable();
            t
        })
        .collect();
    VehicleClusters {
        crews,
        tasks,
        centroids,
        routes: vec![Vec::new(); nk],
        unvisited: Vec::new(),
        tsp_fallback: false,
    }
}

/// Nearest-neighbor tour plus 2-opt, for clusters beyond the exact cap.
fn fallback_tour(dist: &[Vec<f64>]) -> (f64, Vec<usize>) {
    let n = dist.len();
    let mut order = vec![0];
    let mut left: BTreeSet<usize> = (1..n).collect();
    while !left.is_empty() {
        let last = *order.last().unwrap();
        let &next = left
            .iter()
            .min_by(|&&a, &&b| dist[last][a].partial_cmp(&dist[last][b]).unwrap())
            .unwrap();
        order.push(next);
        left.remove(&next);
    }
    let cost = |o: &[usize]| -> f64 {
        o.windows(2).map(|w| dist[w[0]][w[1]]).sum::<f64>() + dist[*o.last().unwrap()][o[0]]
    };
    let mut improved = true;
    while improved {
        improved = false;
        for a in 1..n - 1 {
            for b in a + 1..n {
                let before = cost(&order);
                order[a..=b].reverse();
                if cost(&order) + 1e-12 < before {
                    improved = true;
                } else {
                    order[a..=b].reverse();
                }
            }
        }
    }
    (cost(&order), order)
}

/// Savings-style removal cost of the patient at `pos` in a tour: the detour
/// it causes plus its service time.
fn removal_cost(inst: &Instance, route: &[Node], pos: usize) -> f64 {
    let prev = route[pos - 1];
    let next = route[pos + 1];
    let p = route[pos];
    inst.travel(prev, p) + inst.travel(p, next) - inst.travel(prev, next) + inst.service_of(p)
}

/// Stage 3: route every vehicle exactly; overflow the costliest patients to
/// the next qualifying vehicle while the working-time limit is exceeded.
pub fn stage3_routes(mut vc: VehicleClusters, inst: &Instance) -> VehicleClusters {
    let nk = inst.num_vehicles;
    for k in 0..nk {
        loop {
            let patients: Vec<Node> = vc.tasks[k].iter().map(|&(p, _)| p).collect();
            let route = if patients.is_empty() {
                vec![0, inst.end_node()]
            } else {
                let mut locs = vec![0];
                locs.extend(&patients);
                let matrix: Vec<Vec<f64>> = locs
                    .iter()
                    .map(|&a| locs.iter().map(|&b| inst.travel(a, b)).collect())
                    .collect();
                let (_, order) = if locs.len() <= HELD_KARP_CAP {
                    held_karp(&matrix).unwrap()
                } else {
                    vc.tsp_fallback = true;
                    fallback_tour(&matrix)
                };
                let mut r: Vec<Node> = order.iter().map(|&i| locs[i]).collect();
                r.push(inst.end_node());
                r
            };
            let duration: f64 = route.windows(2).map(|w| inst.travel(w[0], w[1])).sum::<f64>()
                + patients.iter().map(|&p| inst.service_of(p)).sum::<f64>();
            if duration <= inst.wtime || patients.is_empty() {
                vc.routes[k] = route;
                break;
            }
            // drop the costliest patient and push it down the line
            let pos = (1..route.len() - 1)
                .max_by(|&a, &b| {
                    removal_cost(inst, &route, a)
                        .partial_cmp(&removal_cost(inst, &route, b))
                        .unwrap()
                })
                .unwrap();
            let victim = route[pos];
            let idx = vc.tasks[k].iter().position(|&(p, _)| p == victim).unwrap();
            vc.tasks[k].remove(idx);
            let target = (k + 1..nk).find(|&k2| {
                vc.crews[k2].iter().any(|&l| inst.qualified(l, victim))
            });
            match target {
                Some(k2) => {
                    let l = pick_server(inst, &vc.crews[k2], victim).unwrap();
                    vc.tasks[k2].push((victim, l));
                    vc.tasks[k2].sort_unstable();
                }
                None => vc.unvisited.push(victim),
            }
        }
    }
    vc
}

/// Materialize the staged state as a core solution.
fn to_solution(vc: &VehicleClusters, inst: &Instance) -> Solution {
    let mut sol = Solution::empty(inst, vc.crews.clone());
    for k in 0..inst.num_vehicles {
        sol.routes[k] = vc.routes[k].clone();
        for &(p, l) in &vc.tasks[k] {
            sol.assignments.insert(p, (l, k));
            sol.unvisited.remove(&p);
        }
    }
    sol
}

/// Travel saved by removing the node at `pos` (service excluded: it moves
/// with the patient, and crews have equal size, so it cancels in the total).
fn travel_saving(inst: &Instance, route: &[Node], pos: usize) -> f64 {
    let (prev, p, next) = (route[pos - 1], route[pos], route[pos + 1]);
    inst.travel(prev, p) + inst.travel(p, next) - inst.travel(prev, next)
}

fn insertion_cost(inst: &Instance, route: &[Node], gap: usize, p: Node) -> f64 {
    let (a, b) = (route[gap - 1], route[gap]);
    inst.travel(a, p) + inst.travel(p, b) - inst.travel(a, b)
}

/// Cheapest qualified caregiver for a patient within a crew, lowest index
/// on ties.
fn pick_server(inst: &Instance, crew: &[usize], p: Node) -> Option<usize> {
    crew.iter().copied().filter(|&l| inst.qualified(l, p)).min()
}

/// Stage 4: apply the best positive inter-route relocation until none is
/// left, then greedily insert unvisited patients where time remains.
pub fn stage4_relocate_and_repair(vc: &VehicleClusters, inst: &Instance) -> Solution {
    let mut sol = to_solution(vc, inst);
    let nk = inst.num_vehicles;

    loop {
        let durations: Vec<f64> = (0..nk).map(|k| route_duration(&sol, inst, k)).collect();
        let mut best: Option<(f64, Node, usize, usize, usize)> = None;
        for k1 in 0..nk {
            for pos in 1..sol.routes[k1].len() - 1 {
                let p = sol.routes[k1][pos];
                let saving = travel_saving(inst, &sol.routes[k1], pos);
                for k2 in 0..nk {
                    if k2 == k1 || pick_server(inst, &sol.crews[k2], p).is_none() {
                        continue;
                    }
                    for gap in 1..sol.routes[k2].len() {
                        let cost = insertion_cost(inst, &sol.routes[k2], gap, p);
                        let delta = saving - cost;
                        if delta <= 1e-9 {
                            continue;
                        }
                        if durations[k2] + cost + inst.service_of(p) > inst.wtime {
                            continue;
                        }
                        if best.map_or(true, |(bd, ..)| delta > bd) {
                            best = Some((delta, p, pos, k2, gap));
                        }
                    }
                }
            }
        }
        let Some((_, p, _, k2, gap)) = best else { break };
        let k1 = sol.assignments[&p].1;
        sol.routes[k1].retain(|&v| v != p);
        sol.routes[k2].insert(gap, p);
        let l = pick_server(inst, &sol.crews[k2], p).unwrap();
        sol.assignments.insert(p, (l, k2));
    }

    // repair: cheapest feasible insertion first, until nothing fits
    loop {
        let durations: Vec<f64> = (0..nk).map(|k| route_duration(&sol, inst, k)).collect();
        let mut best: Option<(f64, Node, usize, usize)> = None;
        for &p in &sol.unvisited {
            for k in 0..nk {
                if pick_server(inst, &sol.crews[k], p).is_none() {
                    continue;
                }
                for gap in 1..sol.routes[k].len() {
                    let cost = insertion_cost(inst, &sol.routes[k], gap, p);
                    if durations[k] + cost + inst.service_of(p) > inst.wtime {
                        continue;
                    }
                    if best.map_or(true, |(bc, ..)| cost < bc) {
                        best = Some((cost, p, k, gap));
                    }
                }
            }
        }
        let Some((_, p, k, gap)) = best else { break };
        sol.routes[k].insert(gap, p);
        let l = pick_server(inst, &sol.crews[k], p).unwrap();
        sol.assignments.insert(p, (l, k));
        sol.unvisited.remove(&p);
    }
    sol
}

pub struct UbaResult {
    pub solution: Solution,
    /// Objective of the solution, usable as a MILP upper bound.
    pub mu: f64,
    pub tsp_fallback: bool,
}

/// Post-pass for the shared-vehicle variant: convert wait-in-vehicle visits
/// into drop-offs wherever that strictly shortens a route. Returns the
/// number of conversions.
pub fn apply_dp_postpass(sol: &mut Solution, inst: &Instance) -> usize {
    let moves = crate::alns::dp_local_search(sol, inst);
    objective(sol, inst).expect("post-pass keeps the solution sound");
    moves
}

/// The full pipeline.
pub fn uba_solve(inst: &Instance) -> UbaResult {
    let clusters = stage1_cluster(inst);
    let vc = stage2_vehicles(&clusters, inst);
    let vc = stage3_routes(vc, inst);
    let solution = stage4_relocate_and_repair(&vc, inst);
    let mu = objective(&solution, inst).expect("constructed solution is sound").total;
    UbaResult {
        solution,
        mu,
        tsp_fallback: vc.tsp_fallback,
    }
}
