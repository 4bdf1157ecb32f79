//! Destruction operators: each takes patients (or drop events) out of the
//! current solution and reports what went into the request banks.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::instance::{Instance, Node};
use crate::solution::Solution;
use crate::timeline::duration_of;

use super::AlnsParams;

/// Remove `q` uniformly chosen served patients.
pub fn remove_random(sol: &mut Solution, inst: &Instance, q: usize, rng: &mut ChaCha8Rng) -> Vec<Node> {
    let mut served: Vec<Node> = sol.served_patients().collect();
    served.shuffle(rng);
    served.truncate(q);
    served.sort_unstable();
    for &p in &served {
        sol.remove_patient(inst, p);
    }
    served
}

/// Objective contribution of a served patient: the flow-time increase its
/// presence causes on its own route (crew-weighted). `drops` is the
/// solution's indexed drop table and `with` its current route duration.
fn removal_gain(
    sol: &Solution,
    inst: &Instance,
    drops: &[Option<(usize, usize)>],
    with: f64,
    p: Node,
) -> f64 {
    let k = sol.vehicle_of(p).expect("served patient");
    let dummy = inst.dummy_of(p);
    let without_route: Vec<Node> = sol.routes[k]
        .iter()
        .copied()
        .filter(|&v| v != p && v != dummy)
        .collect();
    let without = duration_of(inst, &without_route, &|q| q != p && drops[q].is_some());
    sol.crews[k].len() as f64 * (with - without)
}

/// Remove the `q` patients whose removal shrinks the objective the most,
/// gains computed once against the starting solution.
pub fn remove_worst(sol: &mut Solution, inst: &Instance, q: usize) -> Vec<Node> {
    let drops = sol.drop_table(inst);
    let with: Vec<f64> = (0..sol.routes.len())
        .map(|k| duration_of(inst, &sol.routes[k], &|q| drops[q].is_some()))
        .collect();
    let mut scored: Vec<(f64, Node)> = sol
        .served_patients()
        .map(|p| {
            let k = sol.vehicle_of(p).expect("served patient");
            (removal_gain(sol, inst, &drops, with[k], p), p)
        })
        .collect();
    // largest gain first, lowest id on ties
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let removed: Vec<Node> = scored.into_iter().take(q).map(|(_, p)| p).collect();
    for &p in &removed {
        sol.remove_patient(inst, p);
    }
    removed
}

/// Chain removal by similarity: each next victim minimizes
/// `alpha * travel + beta * |service difference|` to the last one.
pub fn remove_shaw(
    sol: &mut Solution,
    inst: &Instance,
    q: usize,
    params: &AlnsParams,
    rng: &mut ChaCha8Rng,
) -> Vec<Node> {
    let served: Vec<Node> = sol.served_patients().collect();
    if served.is_empty() || q == 0 {
        return Vec::new();
    }
    let mut removed = vec![served[rng.gen_range(0..served.len())]];
    sol.remove_patient(inst, removed[0]);
    while removed.len() < q {
        let last = *removed.last().unwrap();
        let next = sol.served_patients().min_by(|&a, &b| {
            let da = params.shaw_alpha * inst.travel(last, a)
                + params.shaw_beta * (inst.service_of(last) - inst.service_of(a)).abs();
            let db = params.shaw_alpha * inst.travel(last, b)
                + params.shaw_beta * (inst.service_of(last) - inst.service_of(b)).abs();
            da.partial_cmp(&db).unwrap().then(a.cmp(&b))
        });
        let Some(next) = next else { break };
        sol.remove_patient(inst, next);
        removed.push(next);
    }
    removed
}

/// Empty one uniformly chosen non-empty route.
pub fn remove_route(sol: &mut Solution, inst: &Instance, rng: &mut ChaCha8Rng) -> Vec<Node> {
    let candidates: Vec<usize> = (0..sol.routes.len())
        .filter(|&k| sol.routes[k].iter().any(|&v| inst.is_patient(v)))
        .collect();
    if candidates.is_empty() {
        return Vec::new();
    }
    let k = candidates[rng.gen_range(0..candidates.len())];
    let patients: Vec<Node> = sol.routes[k]
        .iter()
        .copied()
        .filter(|&v| inst.is_patient(v))
        .collect();
    for &p in &patients {
        sol.remove_patient(inst, p);
    }
    patients
}

/// Convert a random batch of drop-offs back into wait-in-vehicle visits.
/// The batch size is uniform between the configured fractions of the
/// current drop count. Returns the dummies taken out.
pub fn remove_dummy(
    sol: &mut Solution,
    inst: &Instance,
    params: &AlnsParams,
    rng: &mut ChaCha8Rng,
) -> Vec<Node> {
    let dropped = sol.dropped_patients();
    let d = dropped.len();
    if d == 0 {
        return Vec::new();
    }
    let lo = (params.sigma * d as f64).ceil() as usize;
    let hi = ((params.phi_max * d as f64).floor() as usize).max(lo);
    let q = rng.gen_range(lo..=hi).clamp(1, d);
    let mut victims = dropped;
    victims.shuffle(rng);
    victims.truncate(q);
    victims.sort_unstable();
    victims
        .into_iter()
        .map(|p| {
            sol.remove_dummy(inst, p);
            inst.dummy_of(p)
        })
        .collect()
}
