//! Construction operators: greedy and regret insertion, with optional
//! noise on the detour cost. All vehicles are priced simultaneously; the
//! working-time limit is ignored here (the repair pass restores it) except
//! when building the initial solution.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::instance::{Instance, Node};
use crate::solution::Solution;
use crate::timeline::duration_of;

#[derive(Clone, Copy)]
pub struct InsertOpts {
    /// 1 = greedy, 2 / 3 = regret depth.
    pub regret: usize,
    /// Noise amplitude as a fraction of the longest arc, 0 disables it.
    pub noise_mu: f64,
    /// Enforce the working-time limit (initial solution and repair only).
    pub respect_wtime: bool,
}

struct Position {
    cost: f64,
    vehicle: usize,
    gap: usize,
    server: usize,
}

/// Caregivers aboard vehicle `k` right after each route position, in id
/// order. Index `i` describes the leg leaving `routes[k][i]`. `drops` is
/// the solution's indexed drop table.
fn aboard_after(
    sol: &Solution,
    inst: &Instance,
    drops: &[Option<(usize, usize)>],
    k: usize,
) -> Vec<Vec<usize>> {
    let route = &sol.routes[k];
    let mut aboard = sol.crews[k].clone();
    aboard.sort_unstable();
    let mut out = Vec::with_capacity(route.len());
    out.push(aboard.clone());
    for &v in &route[1..] {
        if inst.is_patient(v) {
            if let Some((l, kk)) = drops[v] {
                if kk == k {
                    aboard.retain(|&m| m != l);
                }
            }
        } else if inst.is_dummy(v) {
            if let Some((l, kk)) = drops[inst.patient_of(v)] {
                if kk == k {
                    aboard.push(l);
                    aboard.sort_unstable();
                }
            }
        }
        out.push(aboard.clone());
    }
    out
}

/// All qualification-feasible insertion points of a patient, priced by the
/// detour. `noise_scale` is `t_max * mu`; a fresh `eps in [-1, 1]` is drawn
/// per position. `aboard` holds the per-vehicle output of [`aboard_after`].
fn positions(
    sol: &Solution,
    inst: &Instance,
    drops: &[Option<(usize, usize)>],
    aboard: &[Vec<Vec<usize>>],
    p: Node,
    opts: InsertOpts,
    noise_scale: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<Position> {
    let mut out = Vec::new();
    let mut candidate: Vec<Node> = Vec::new();
    for k in 0..sol.routes.len() {
        let route = &sol.routes[k];
        for gap in 1..route.len() {
            let server = aboard[k][gap - 1]
                .iter()
                .copied()
                .filter(|&l| inst.qualified(l, p))
                .min();
            let Some(server) = server else { continue };
            let (a, b) = (route[gap - 1], route[gap]);
            let detour = inst.travel(a, p) + inst.travel(p, b) - inst.travel(a, b);
            if opts.respect_wtime {
                // exact re-simulation: drops downstream may absorb detours
                candidate.clear();
                candidate.extend_from_slice(&route[..gap]);
                candidate.push(p);
                candidate.extend_from_slice(&route[gap..]);
                let new_duration =
                    duration_of(inst, &candidate, &|q| q != p && drops[q].is_some());
                if new_duration > inst.wtime + 1e-9 {
                    continue;
                }
            }
            let noise = if noise_scale > 0.0 {
                noise_scale * rng.gen_range(-1.0..=1.0)
            } else {
                0.0
            };
            out.push(Position {
                cost: detour + noise,
                vehicle: k,
                gap,
                server,
            });
        }
    }
    out
}

/// Insert as many banked patients as possible; the rest stay in the bank.
/// Each step commits the globally best patient-position pair: least cost
/// for greedy, largest regret (gap to the next-best positions) otherwise.
pub fn insert(
    sol: &mut Solution,
    inst: &Instance,
    bank: &mut Vec<Node>,
    opts: InsertOpts,
    rng: &mut ChaCha8Rng,
) {
    let noise_scale = if opts.noise_mu > 0.0 {
        inst.max_travel() * opts.noise_mu
    } else {
        0.0
    };
    // drops never change during insertion, aboard sets only on the vehicle
    // a commit touches
    let drops = sol.drop_table(inst);
    let mut aboard: Vec<Vec<Vec<usize>>> = (0..sol.routes.len())
        .map(|k| aboard_after(sol, inst, &drops, k))
        .collect();
    loop {
        // (priority, patient, position): max priority wins, ties on lowest
        // best-cost then lowest patient id
        let mut best: Option<(f64, f64, Node, Position)> = None;
        for &p in bank.iter() {
            let mut pos = positions(sol, inst, &drops, &aboard, p, opts, noise_scale, rng);
            if pos.is_empty() {
                continue;
            }
            pos.sort_by(|a, b| a.cost.partial_cmp(&b.cost).unwrap());
            let priority = match opts.regret {
                0 | 1 => -pos[0].cost,
                k => {
                    if pos.len() < k {
                        f64::INFINITY
                    } else {
                        (1..k).map(|m| pos[m].cost - pos[0].cost).sum()
                    }
                }
            };
            let candidate = pos.swap_remove(0);
            let replace = match best {
                None => true,
                Some((bp, bc, bid, _)) => {
                    priority > bp
                        || (priority == bp && (candidate.cost < bc || (candidate.cost == bc && p < bid)))
                }
            };
            if replace {
                best = Some((priority, candidate.cost, p, candidate));
            }
        }
        let Some((_, _, p, pos)) = best else { break };
        sol.routes[pos.vehicle].insert(pos.gap, p);
        sol.assignments.insert(p, (pos.server, pos.vehicle));
        sol.unvisited.remove(&p);
        bank.retain(|&q| q != p);
        aboard[pos.vehicle] = aboard_after(sol, inst, &drops, pos.vehicle);
    }
}
