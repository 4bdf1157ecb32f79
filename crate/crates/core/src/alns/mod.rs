//! Adaptive large neighbourhood search over the two-layer solution space:
//! simulated-annealing acceptance, uniformly drawn destroy / rebuild
//! operators, periodic crew recomposition and a drop local search.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::instance::{Instance, Node};
use crate::milp::VariantKind;
use crate::solution::Solution;
use crate::timeline::objective_unchecked;

pub mod dp;
pub mod insertion;
pub mod removal;
pub mod repair;
pub mod swap;

pub use dp::dp_local_search;
pub use swap::{PheromoneState, Visibility};

use insertion::{insert, InsertOpts};

#[derive(Debug, Clone)]
pub struct AlnsParams {
    /// Minimum number of iterations.
    pub theta: usize,
    /// Extra iterations granted after each new best.
    pub theta_min: usize,
    /// Stagnation period before a restart from the best solution.
    pub omega: usize,
    /// Period of the crew recomposition step.
    pub phi: usize,
    /// Final removal fraction (the schedule shrinks from `xi` to `v_min`).
    pub v_min: f64,
    /// Initial removal fraction.
    pub xi: f64,
    pub shaw_alpha: f64,
    pub shaw_beta: f64,
    /// Lower fraction of current drop-offs removed by the dummy operator.
    pub sigma: f64,
    /// Upper fraction of current drop-offs removed by the dummy operator.
    pub phi_max: f64,
    /// Insertion noise amplitude as a fraction of the longest arc.
    pub noise_mu: f64,
    /// Geometric cooling factor per iteration.
    pub cooling: f64,
    /// Pheromone learning rate.
    pub rho: f64,
    /// Start temperature as a fraction of the initial objective.
    pub t0_factor: f64,
    pub visibility: Visibility,
    pub variant: VariantKind,
    pub seed: u64,
}

impl Default for AlnsParams {
    fn default() -> AlnsParams {
        AlnsParams {
            theta: 25_000,
            theta_min: 2_500,
            omega: 250,
            phi: 100,
            v_min: 0.1,
            xi: 0.5,
            shaw_alpha: 0.3,
            shaw_beta: 0.1,
            sigma: 0.5,
            phi_max: 0.8,
            noise_mu: 0.1,
            cooling: 0.99975,
            rho: 0.95,
            t0_factor: 0.05,
            visibility: Visibility::Unique,
            variant: VariantKind::Vs,
            seed: 0,
        }
    }
}

impl AlnsParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.theta == 0 || self.omega == 0 || self.phi == 0 {
            return Err("iteration periods must be positive".into());
        }
        if !(0.0 < self.v_min && self.v_min <= self.xi && self.xi <= 1.0) {
            return Err("need 0 < v_min <= xi <= 1".into());
        }
        if !(0.0 < self.sigma && self.sigma <= self.phi_max && self.phi_max <= 1.0) {
            return Err("need 0 < sigma <= phi_max <= 1".into());
        }
        if !(0.0 < self.cooling && self.cooling < 1.0) {
            return Err("cooling must lie in (0, 1)".into());
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err("rho must lie in [0, 1]".into());
        }
        Ok(())
    }
}

/// Number of patients to remove at iteration `t`: linear decay from
/// `xi * n` to `v_min * n`, clamped to what is actually served.
pub fn compute_q(params: &AlnsParams, n: usize, served: usize, t: usize) -> usize {
    let n = n as f64;
    let frac = params.xi - (params.xi - params.v_min) * (t.min(params.theta) as f64)
        / params.theta as f64;
    ((n * frac).round() as usize).clamp(1, served.max(1))
}

/// Simulated-annealing acceptance test.
pub fn accept(f_new: f64, f_curr: f64, temperature: f64, rng: &mut ChaCha8Rng) -> bool {
    let delta = f_new - f_curr;
    if delta <= 0.0 {
        return true;
    }
    if temperature <= 0.0 {
        return false;
    }
    rng.gen::<f64>() < (-delta / temperature).exp()
}

/// Random crews plus a deep-regret construction under the working-time
/// limit; whatever cannot be placed is unvisited.
pub fn initial_solution(inst: &Instance, params: &AlnsParams, rng: &mut ChaCha8Rng) -> Solution {
    let mut caregivers: Vec<usize> = (0..inst.num_caregivers()).collect();
    caregivers.shuffle(rng);
    let mut crews: Vec<Vec<usize>> = caregivers
        .chunks(inst.capacity)
        .take(inst.num_vehicles)
        .map(|c| {
            let mut c = c.to_vec();
            c.sort_unstable();
            c
        })
        .collect();
    crews.resize(inst.num_vehicles, Vec::new());
    let mut sol = Solution::empty(inst, crews);
    let mut bank: Vec<Node> = (1..=inst.n).collect();
    insert(
        &mut sol,
        inst,
        &mut bank,
        InsertOpts { regret: 3, noise_mu: params.noise_mu, respect_wtime: true },
        rng,
    );
    sol
}

#[derive(Debug, Clone)]
pub struct RunReport {
    /// The instance the run actually optimised (the search sees a
    /// one-caregiver-per-vehicle view under the standard variant).
    pub instance: Instance,
    pub best: Solution,
    pub objective: f64,
    pub initial_objective: f64,
    pub iterations: usize,
    pub best_iteration: usize,
    pub restarts: usize,
    /// Iteration numbers at which a restart from the best fired.
    pub restart_iterations: Vec<usize>,
    pub dp_moves: usize,
    pub num_drops: usize,
    pub num_unvisited: usize,
    pub cpu_ms: u64,
}

/// One full annealing run. Deterministic for a fixed instance and seed.
pub fn run(inst: &Instance, params: &AlnsParams) -> RunReport {
    params.validate().expect("valid parameters");
    let inst = match params.variant {
        VariantKind::Std => inst.single_caregiver_view(),
        _ => inst.clone(),
    };
    let allow_drops = params.variant == VariantKind::Vs;
    let use_swap = params.variant != VariantKind::Std && params.visibility != Visibility::None;
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let mut curr = initial_solution(&inst, params, &mut rng);
    if allow_drops {
        dp_local_search(&mut curr, &inst);
    }
    let initial_objective = objective_unchecked(&curr, &inst);
    let mut f_curr = initial_objective;
    let mut best = curr.clone();
    let mut f_best = f_curr;
    let mut temperature = params.t0_factor * f_curr.max(1.0);

    let mut trails = PheromoneState::new(inst.num_caregivers());
    let mut t = 0;
    let mut t_best = 0;
    let mut restarts = 0;
    let mut restart_iterations = Vec::new();
    let mut dp_moves = 0;

    loop {
        t += 1;
        let q = compute_q(params, inst.n, curr.num_served().max(1), t);

        let mut bank: Vec<Node>;
        if t > t_best && (t - t_best) % params.omega == 0 {
            // stagnation: restart from the best and diversify at random
            curr = best.clone();
            f_curr = f_best;
            restarts += 1;
            restart_iterations.push(t);
            bank = removal::remove_random(&mut curr, &inst, q, &mut rng);
        } else {
            let ops = if allow_drops && curr.num_drops() > 0 { 5 } else { 4 };
            bank = match rng.gen_range(0..ops) {
                0 => removal::remove_random(&mut curr, &inst, q, &mut rng),
                1 => removal::remove_worst(&mut curr, &inst, q),
                2 => removal::remove_shaw(&mut curr, &inst, q, params, &mut rng),
                3 => removal::remove_route(&mut curr, &inst, &mut rng),
                _ => {
                    removal::remove_dummy(&mut curr, &inst, params, &mut rng);
                    Vec::new()
                }
            };
        }

        if use_swap && t % params.phi == 0 {
            bank.extend(swap::rebuild_crews(&mut curr, &inst, &trails, &mut rng));
        }

        let regret = [1, 2, 3][rng.gen_range(0..3)];
        let noise_mu = if rng.gen_bool(0.5) { params.noise_mu } else { 0.0 };
        insert(
            &mut curr,
            &inst,
            &mut bank,
            InsertOpts { regret, noise_mu, respect_wtime: false },
            &mut rng,
        );
        curr.unvisited.extend(bank);

        if allow_drops {
            dp_moves += dp_local_search(&mut curr, &inst);
        }
        repair::repair(&mut curr, &inst, &mut rng);

        let f_new = objective_unchecked(&curr, &inst);
        if f_new < f_best - 1e-9 {
            best = curr.clone();
            f_best = f_new;
            t_best = t;
            if use_swap {
                swap::update_trails(
                    &mut trails,
                    &best,
                    &inst,
                    f_best,
                    params.rho,
                    params.visibility,
                );
            }
        }
        if accept(f_new, f_curr, temperature, &mut rng) {
            f_curr = f_new;
        } else {
            curr = best.clone();
            f_curr = f_best;
        }
        temperature *= params.cooling;

        if t >= params.theta && t >= t_best + params.theta_min {
            break;
        }
    }

    RunReport {
        objective: f_best,
        initial_objective,
        iterations: t,
        best_iteration: t_best,
        restarts,
        restart_iterations,
        dp_moves,
        num_drops: best.num_drops(),
        num_unvisited: best.unvisited.len(),
        cpu_ms: started.elapsed().as_millis() as u64,
        best,
        instance: inst,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feasibility::is_feasible;
    use crate::instancegen::{generate, generate_grid_instance, ClassSpec, GenConfig};
    use crate::oracle::exact_solve;
    use crate::timeline::objective;

    fn short_params(variant: VariantKind, seed: u64) -> AlnsParams {
        AlnsParams {
            theta: 400,
            theta_min: 50,
            variant,
            seed,
            ..AlnsParams::default()
        }
    }

    #[test]
    fn removal_schedule_decays_linearly() {
        let params = AlnsParams::default();
        assert_eq!(compute_q(&params, 30, 30, 0), 15);
        assert_eq!(compute_q(&params, 30, 30, 12_500), 9);
        assert_eq!(compute_q(&params, 30, 30, 25_000), 3);
        // clamped to what is actually served
        assert_eq!(compute_q(&params, 30, 2, 0), 2);
    }

    #[test]
    fn acceptance_matches_the_boltzmann_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let trials = 200_000;
        let hits = (0..trials)
            .filter(|_| accept(11.0, 10.0, 1.0, &mut rng))
            .count();
        let rate = hits as f64 / trials as f64;
        assert!((rate - (-1.0f64).exp()).abs() < 0.02, "rate {}", rate);
        // improvements always pass, zero temperature rejects any worsening
        assert!(accept(9.0, 10.0, 0.0, &mut rng));
        assert!(!accept(10.1, 10.0, 0.0, &mut rng));
    }

    #[test]
    fn run_is_deterministic_per_seed() {
        let inst = generate_grid_instance(42, ClassSpec { nop: 10, ra: 10, dd: 0 }, 0);
        let a = run(&inst, &short_params(VariantKind::Vs, 5));
        let b = run(&inst, &short_params(VariantKind::Vs, 5));
        assert_eq!(a.objective, b.objective);
        assert_eq!(a.best, b.best);
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn best_solution_is_feasible_and_priced_consistently() {
        for variant in [VariantKind::Vs, VariantKind::M, VariantKind::Std] {
            let inst = generate_grid_instance(7, ClassSpec { nop: 10, ra: 20, dd: 1 }, 1);
            let report = run(&inst, &short_params(variant, 3));
            let obj = objective(&report.best, &report.instance).unwrap();
            assert!((obj.total - report.objective).abs() < 1e-9, "{:?}", variant);
            assert!(is_feasible(&report.best, &report.instance), "{:?}", variant);
            if variant != VariantKind::Vs {
                assert_eq!(report.num_drops, 0, "{:?}", variant);
                assert_eq!(report.dp_moves, 0, "{:?}", variant);
            }
        }
    }

    #[test]
    fn matches_the_exact_optimum_on_a_tiny_instance() {
        let cfg = GenConfig {
            n: 4,
            num_illnesses: 2,
            num_vehicles: 1,
            capacity: 2,
            radius: 10.0,
            mix: vec![0.6, 0.4],
            service_dists: vec![(10.0, 2.5), (20.0, 5.0)],
            wtime: 600.0,
            unv: 1200.0,
        };
        let inst = generate("tiny", 13, &cfg);
        let exact = exact_solve(&inst, true).unwrap();
        let report = run(&inst, &short_params(VariantKind::Vs, 1));
        assert!(
            report.objective <= exact.objective + 1e-6,
            "heuristic {} vs exact {}",
            report.objective,
            exact.objective
        );
    }
}
