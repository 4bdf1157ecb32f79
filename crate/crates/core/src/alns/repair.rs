//! Working-time repair: strip the most expensive visits from overlong
//! routes, then greedily re-insert them wherever the limit still holds.

use rand_chacha::ChaCha8Rng;

use crate::instance::{Instance, Node};
use crate::solution::Solution;
use crate::timeline::route_duration;

use super::insertion::{insert, InsertOpts};

/// Detour plus service of a routed patient, priced against its immediate
/// route neighbours.
fn visit_cost(sol: &Solution, inst: &Instance, p: Node) -> f64 {
    let k = sol.vehicle_of(p).expect("routed patient");
    let route = &sol.routes[k];
    let idx = route.iter().position(|&v| v == p).unwrap();
    let (prev, next) = (route[idx - 1], route[idx + 1]);
    inst.travel(prev, p) + inst.travel(p, next) - inst.travel(prev, next) + inst.service_of(p)
}

/// Restore the working-time limit on every route. Evicted patients are
/// re-inserted greedily where the limit allows; the rest become unvisited.
pub fn repair(sol: &mut Solution, inst: &Instance, rng: &mut ChaCha8Rng) {
    let mut bank: Vec<Node> = Vec::new();
    for k in 0..sol.routes.len() {
        while route_duration(sol, inst, k) > inst.wtime + 1e-9 {
            let victim = sol.routes[k]
                .iter()
                .copied()
                .filter(|&v| inst.is_patient(v))
                .map(|p| (visit_cost(sol, inst, p), p))
                .max_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(b.1.cmp(&a.1)));
            let Some((_, p)) = victim else { break };
            sol.remove_patient(inst, p);
            bank.push(p);
        }
    }
    if !bank.is_empty() {
        bank.sort_unstable();
        insert(
            sol,
            inst,
            &mut bank,
            InsertOpts { regret: 1, noise_mu: 0.0, respect_wtime: true },
            rng,
        );
        sol.unvisited.extend(bank);
    }
}
