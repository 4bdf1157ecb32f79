//! Crew recomposition guided by a pheromone trail over caregiver pairs:
//! pairs that rode together in good solutions attract each other when the
//! crews are rebuilt.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::instance::{Instance, Node};
use crate::solution::Solution;

/// How a caregiver pair's attractiveness is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Visibility {
    /// Patients treatable by exactly one of the two.
    Unique,
    /// Patients treatable by both.
    Common,
    /// Disable crew recomposition entirely.
    None,
}

/// Symmetric trail matrix over caregiver pairs.
#[derive(Debug, Clone)]
pub struct PheromoneState {
    pub tau: Vec<Vec<f64>>,
}

impl PheromoneState {
    pub fn new(num_caregivers: usize) -> PheromoneState {
        PheromoneState {
            tau: vec![vec![1.0; num_caregivers]; num_caregivers],
        }
    }
}

fn eta(inst: &Instance, a: usize, b: usize, visibility: Visibility) -> f64 {
    (1..=inst.n)
        .filter(|&p| {
            let qa = inst.qualified(a, p);
            let qb = inst.qualified(b, p);
            match visibility {
                Visibility::Unique => qa != qb,
                Visibility::Common => qa && qb,
                Visibility::None => false,
            }
        })
        .count() as f64
}

/// Reinforce the trails of pairs riding together in the incumbent best.
pub fn update_trails(
    state: &mut PheromoneState,
    sol: &Solution,
    inst: &Instance,
    f_best: f64,
    rho: f64,
    visibility: Visibility,
) {
    if visibility == Visibility::None {
        return;
    }
    for crew in &sol.crews {
        for (i, &a) in crew.iter().enumerate() {
            for &b in &crew[i + 1..] {
                let deposit = if f_best > 0.0 {
                    eta(inst, a, b, visibility) / f_best
                } else {
                    0.0
                };
                let t = (1.0 - rho) * state.tau[a][b] + rho * deposit;
                state.tau[a][b] = t;
                state.tau[b][a] = t;
            }
        }
    }
}

/// Rebuild all crews from the trail matrix: each vehicle is seeded with the
/// lowest-index free caregiver and filled by size-2 tournaments on the
/// summed trail towards the crew so far (equal scores break uniformly).
/// Patients whose server left their vehicle are evicted and returned.
pub fn rebuild_crews(
    sol: &mut Solution,
    inst: &Instance,
    state: &PheromoneState,
    rng: &mut ChaCha8Rng,
) -> Vec<Node> {
    let mut free: Vec<usize> = (0..inst.num_caregivers()).collect();
    let mut crews: Vec<Vec<usize>> = Vec::with_capacity(inst.num_vehicles);
    for k in 0..inst.num_vehicles {
        let size = sol.crews[k].len();
        let mut crew = Vec::with_capacity(size);
        if size > 0 && !free.is_empty() {
            crew.push(free.remove(0));
        }
        while crew.len() < size && !free.is_empty() {
            let winner = if free.len() == 1 {
                0
            } else {
                let a = rng.gen_range(0..free.len());
                let mut b = rng.gen_range(0..free.len() - 1);
                if b >= a {
                    b += 1;
                }
                let score = |idx: usize| -> f64 {
                    crew.iter().map(|&m| state.tau[free[idx]][m]).sum()
                };
                let (sa, sb) = (score(a), score(b));
                if sa > sb {
                    a
                } else if sb > sa {
                    b
                } else if rng.gen_bool(0.5) {
                    a
                } else {
                    b
                }
            };
            crew.push(free.remove(winner));
        }
        crew.sort_unstable();
        crews.push(crew);
    }
    sol.crews = crews;

    // evict every patient whose assigned server no longer rides its vehicle
    let evicted: Vec<Node> = sol
        .assignments
        .iter()
        .filter(|&(_, &(l, k))| !sol.crews[k].contains(&l))
        .map(|(&p, _)| p)
        .collect();
    for &p in &evicted {
        sol.remove_patient(inst, p);
    }
    evicted
}
