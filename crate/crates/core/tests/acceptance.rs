//! The acceptance gate: eleven release criteria, one test each, ordered by
//! number. Every test prints a single PASS line with its measured numbers
//! (visible under `--nocapture`); a failed assert carries the same numbers.
//!
//! Exact criteria (oracle equivalence, dominance, model residuals, TSP,
//! constructed fixtures, formula checks, restart traces) are zero- or
//! float-tolerance. Directional criteria run the annealer on regenerated
//! instance classes and check class-level statistics against pinned bands;
//! their runs are cached and shared across tests.

use std::sync::OnceLock;
use std::time::Instant;

use hhsrp_core::alns::{self, AlnsParams};
use hhsrp_core::analysis::{ber, improvement_pct, rpd, BreakEvenInput};
use hhsrp_core::instancegen::{
    expand_seeds, full_grid, generate, generate_grid_instance, grid_classes, ClassSpec,
    GenConfig, GRID_REPLICATES,
};
use hhsrp_core::milp::{check_residuals, MilpVariant, VariantKind};
use hhsrp_core::oracle::{exact_solve, held_karp};
use hhsrp_core::timeline::{evaluate, objective};
use hhsrp_core::uba::{apply_dp_postpass, uba_solve};
use hhsrp_core::{Instance, Solution};

/// Master seed for every generated instance and seed expansion here.
const MASTER_SEED: u64 = 42;

fn seeds() -> &'static [u64] {
    static SEEDS: OnceLock<Vec<u64>> = OnceLock::new();
    SEEDS.get_or_init(|| expand_seeds(MASTER_SEED, 5))
}

fn params(variant: VariantKind, theta: usize, theta_min: usize, seed: u64) -> AlnsParams {
    AlnsParams {
        theta,
        theta_min,
        variant,
        seed,
        ..AlnsParams::default()
    }
}

#[derive(Clone, Copy)]
struct Stats {
    best: f64,
    mean: f64,
}

/// Best and mean objective over a set of seeds at the given budget.
fn run_stats(inst: &Instance, variant: VariantKind, theta: usize, theta_min: usize, seeds: &[u64]) -> Stats {
    let objs: Vec<f64> = seeds
        .iter()
        .map(|&s| alns::run(inst, &params(variant, theta, theta_min, s)).objective)
        .collect();
    Stats {
        best: objs.iter().copied().fold(f64::INFINITY, f64::min),
        mean: objs.iter().sum::<f64>() / objs.len() as f64,
    }
}

// ---------------------------------------------------------------- shared runs

struct GridCell {
    spec: ClassSpec,
    vs: Stats,
    m: Stats,
    std: Stats,
}

/// All 30-patient classes x replicates, all three fleet modes, 5 seeds at a
/// reduced budget (full-budget statistics for two of the classes live in
/// the pinned cache below).
fn h30_grid() -> &'static Vec<GridCell> {
    static GRID: OnceLock<Vec<GridCell>> = OnceLock::new();
    GRID.get_or_init(|| {
        let mut cells = Vec::new();
        for spec in grid_classes().into_iter().filter(|s| s.nop == 30) {
            for rep in 0..GRID_REPLICATES {
                let inst = generate_grid_instance(MASTER_SEED, spec, rep);
                cells.push(GridCell {
                    spec,
                    vs: run_stats(&inst, VariantKind::Vs, 2000, 200, seeds()),
                    m: run_stats(&inst, VariantKind::M, 2000, 200, seeds()),
                    std: run_stats(&inst, VariantKind::Std, 2000, 200, seeds()),
                });
            }
        }
        cells
    })
}

struct PinnedCell {
    spec: ClassSpec,
    inst: Instance,
    vs: Stats,
    m: Stats,
}

/// Full-budget (25000 iterations, default parameters) runs on the
/// 30-patient/10-minute and 10-patient/40-minute classes, plus the wall
/// time the whole batch took.
fn pinned_runs() -> &'static (Vec<PinnedCell>, f64) {
    static PINNED: OnceLock<(Vec<PinnedCell>, f64)> = OnceLock::new();
    PINNED.get_or_init(|| {
        let started = Instant::now();
        let mut cells = Vec::new();
        for (nop, ra) in [(30, 10), (10, 40)] {
            for dd in 0..3 {
                let spec = ClassSpec { nop, ra, dd };
                for rep in 0..GRID_REPLICATES {
                    let inst = generate_grid_instance(MASTER_SEED, spec, rep);
                    let vs = run_stats(&inst, VariantKind::Vs, 25_000, 2_500, seeds());
                    let m = run_stats(&inst, VariantKind::M, 25_000, 2_500, seeds());
                    cells.push(PinnedCell { spec, inst, vs, m });
                }
            }
        }
        (cells, started.elapsed().as_secs_f64())
    })
}

// ------------------------------------------------------------------- fixtures

/// Hand instance builder: one-hot demand, crews of `capacity` per vehicle.
fn fixture(
    coords: Vec<(f64, f64)>,
    illness: Vec<usize>,
    service: Vec<f64>,
    qual: Vec<Vec<bool>>,
    num_vehicles: usize,
    capacity: usize,
) -> Instance {
    let inst = Instance {
        name: "fixture".into(),
        seed: 0,
        n: illness.len(),
        num_illnesses: qual[0].len(),
        coords,
        illness,
        service,
        qual,
        num_vehicles,
        capacity,
        wtime: 600.0,
        unv: 1200.0,
    };
    inst.validate().unwrap();
    inst
}

fn small_config(n: usize) -> GenConfig {
    GenConfig {
        n,
        num_illnesses: 2,
        num_vehicles: 2,
        capacity: 2,
        radius: 10.0,
        mix: vec![0.7, 0.3],
        service_dists: vec![(10.0, 2.5), (20.0, 5.0)],
        wtime: 600.0,
        unv: 1200.0,
    }
}

// ------------------------------------------------------------------- criteria

#[test]
fn c01_heuristic_matches_the_exact_oracle_on_tiny_instances() {
    let started = Instant::now();
    let mut matches = 0;
    let mut worst_gap = 0.0f64;
    for i in 0..20u64 {
        let n = 3 + (i % 3) as usize; // 3, 4, 5 patients
        let inst = generate(&format!("tiny_{i}"), 100 + i, &small_config(n));
        let exact = exact_solve(&inst, true).unwrap();
        let report = alns::run(&inst, &params(VariantKind::Vs, 5_000, 2_500, 1));
        assert!(
            report.objective >= exact.objective - 1e-6,
            "heuristic {} beat the exhaustive optimum {} on tiny_{i}",
            report.objective,
            exact.objective
        );
        let gap = report.objective - exact.objective;
        worst_gap = worst_gap.max(gap);
        if gap <= 1e-6 {
            matches += 1;
        }
    }
    let secs = started.elapsed().as_secs_f64();
    assert!(matches >= 18, "only {matches}/20 optima matched (worst gap {worst_gap:.4})");
    assert!(secs < 300.0, "oracle comparison took {secs:.0}s, budget is 300s");
    println!(
        "criterion 1: PASS - {matches}/20 exact optima matched in {secs:.1}s (worst gap {worst_gap:.4})"
    );
}

#[test]
fn c02_drop_post_pass_never_worsens_any_grid_solution() {
    let mut improved = 0;
    let mut total_moves = 0;
    let grid = full_grid(MASTER_SEED);
    for inst in &grid {
        let base = uba_solve(inst);
        let before = base.mu;
        let mut sol = base.solution.clone();
        let moves = apply_dp_postpass(&mut sol, inst);
        let after = objective(&sol, inst).unwrap().total;
        assert!(
            after <= before,
            "post-pass raised {} from {before} to {after}",
            inst.name
        );
        if after < before {
            improved += 1;
        }
        total_moves += moves;
    }
    println!(
        "criterion 2: PASS - {} instances, post-pass improved {improved}, {total_moves} conversions, zero regressions",
        grid.len()
    );
}

#[test]
fn c03_fleet_mode_ordering_holds_across_the_thirty_patient_grid() {
    let cells = h30_grid();
    let vs_le_m = cells.iter().filter(|c| c.vs.mean <= c.m.mean + 1e-9).count();
    let std_lt_vs = cells.iter().filter(|c| c.std.mean < c.vs.mean).count();
    let need = (cells.len() * 9).div_ceil(10);
    assert!(
        vs_le_m >= need,
        "shared-with-drops mean beat pooled mean on only {vs_le_m}/{} instances (need {need})",
        cells.len()
    );
    assert_eq!(
        std_lt_vs,
        cells.len(),
        "one-vehicle-per-caregiver mean must stay below shared mean on every instance"
    );
    println!(
        "criterion 3: PASS - vs<=m on {vs_le_m}/{} instances, std<vs on all {}",
        cells.len(),
        cells.len()
    );
}

#[test]
fn c04_drop_policy_savings_match_the_pinned_bands() {
    let (cells, secs) = pinned_runs();
    let mut lines = Vec::new();
    for (nop, ra, lo, hi) in [(30usize, 10u32, 24.8, 44.8), (10, 40, 1.6, 24.4)] {
        for dd in 0..3 {
            let class: Vec<&PinnedCell> = cells
                .iter()
                .filter(|c| c.spec.nop == nop && c.spec.ra == ra && c.spec.dd == dd)
                .collect();
            assert_eq!(class.len(), GRID_REPLICATES);
            let saving = class
                .iter()
                .map(|c| improvement_pct(c.m.best, c.vs.best))
                .sum::<f64>()
                / class.len() as f64;
            assert!(
                (lo..=hi).contains(&saving),
                "class h{nop}_{ra}_{dd}: drop-policy saving {saving:.1}% outside [{lo}, {hi}]"
            );
            lines.push(format!("h{nop}_{ra}_{dd} {saving:.1}%"));
        }
    }
    assert!(*secs < 1800.0, "pinned-budget batch took {secs:.0}s, budget is 1800s");
    println!("criterion 4: PASS - savings {} in {secs:.0}s", lines.join(", "));
}

#[test]
fn c05_annealer_beats_the_constructive_baseline_by_a_quarter() {
    // 30-patient class reuses the pinned full-budget runs; the 50-patient
    // class runs a shorter budget, which only understates the improvement
    let (cells, _) = pinned_runs();
    let h30: Vec<f64> = cells
        .iter()
        .filter(|c| c.spec.nop == 30)
        .map(|c| improvement_pct(uba_solve(&c.inst).mu, c.vs.best))
        .collect();
    let mean30 = h30.iter().sum::<f64>() / h30.len() as f64;

    let mut h50 = Vec::new();
    for dd in 0..3 {
        let spec = ClassSpec { nop: 50, ra: 10, dd };
        for rep in 0..GRID_REPLICATES {
            let inst = generate_grid_instance(MASTER_SEED, spec, rep);
            let base = uba_solve(&inst).mu;
            let stats = run_stats(&inst, VariantKind::Vs, 8_000, 800, &seeds()[..1]);
            h50.push(improvement_pct(base, stats.best));
        }
    }
    let mean50 = h50.iter().sum::<f64>() / h50.len() as f64;
    assert!(mean30 >= 25.0, "30-patient improvement over the baseline is {mean30:.1}% (< 25%)");
    assert!(mean50 >= 25.0, "50-patient improvement over the baseline is {mean50:.1}% (< 25%)");
    println!("criterion 5: PASS - improvement over baseline {mean30:.1}% (30p), {mean50:.1}% (50p)");
}

#[test]
fn c06_model_residuals_vanish_on_random_feasible_solutions() {
    let mut worst = 0.0f64;
    let mut worst_obj_gap = 0.0f64;
    for i in 0..50u64 {
        let kind = [VariantKind::Vs, VariantKind::M, VariantKind::Std][(i % 3) as usize];
        let n = 5 + (i % 4) as usize;
        let mut cfg = small_config(n);
        cfg.num_vehicles = 1;
        if kind == VariantKind::Std {
            // the model prices every vehicle as dispatched, so cap the shift
            // length to force both caregivers (vehicles, in this mode) out
            cfg.wtime = 70.0;
        }
        let inst = generate(&format!("resid_{i}"), 300 + i, &cfg);
        // retry seeds until the incumbent dispatches every vehicle; an idle
        // vehicle is feasible for the evaluator but not a model point
        let report = (0..20)
            .map(|j| alns::run(&inst, &params(kind, 150, 30, i + 1000 * j)))
            .find(|r| {
                r.best
                    .routes
                    .iter()
                    .all(|route| route.iter().any(|&v| r.instance.is_patient(v)))
            })
            .unwrap_or_else(|| panic!("resid_{i}: no run dispatched every vehicle"));
        let variant = match kind {
            VariantKind::Vs => MilpVariant::vs(),
            VariantKind::M => MilpVariant::m(),
            VariantKind::Std => MilpVariant::std(),
        };
        // the report's instance is already the variant's own view
        let vinst = &report.instance;
        let tl = evaluate(&report.best, vinst).unwrap();
        let res = check_residuals(&report.best, &tl, vinst, variant).unwrap();
        let obj = objective(&report.best, vinst).unwrap().total;
        assert!(
            res.max_violation <= 1e-6,
            "resid_{i} ({kind:?}): violation {} at {}",
            res.max_violation,
            res.worst_row
        );
        assert!(
            (res.lp_objective - obj).abs() <= 1e-6,
            "resid_{i} ({kind:?}): model prices {} vs evaluator {obj}",
            res.lp_objective
        );
        worst = worst.max(res.max_violation);
        worst_obj_gap = worst_obj_gap.max((res.lp_objective - obj).abs());
    }
    println!(
        "criterion 6: PASS - 50 solutions, max residual {worst:.2e}, max pricing gap {worst_obj_gap:.2e}"
    );
}

#[test]
fn c07_dynamic_programming_tour_matches_brute_force() {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(MASTER_SEED);
    for case in 0..100 {
        let n = 8 + case % 2;
        let pts: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0)))
            .collect();
        let dist: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (pts[i].0 - pts[j].0).hypot(pts[i].1 - pts[j].1))
                    .collect()
            })
            .collect();
        let (cost, _) = held_karp(&dist).unwrap();
        let brute = brute_force_tour(&dist);
        assert!(
            (cost - brute).abs() <= 1e-9,
            "case {case}: tabulated {cost} vs enumerated {brute}"
        );
    }
    println!("criterion 7: PASS - 100/100 tours match exhaustive enumeration");
}

fn brute_force_tour(dist: &[Vec<f64>]) -> f64 {
    fn rec(rest: &mut Vec<usize>, pos: usize, acc: f64, dist: &[Vec<f64>], best: &mut f64) {
        if rest.is_empty() {
            *best = best.min(acc + dist[pos][0]);
            return;
        }
        for i in 0..rest.len() {
            let c = rest.remove(i);
            rec(rest, c, acc + dist[pos][c], dist, best);
            rest.insert(i, c);
        }
    }
    let mut best = f64::INFINITY;
    rec(&mut (1..dist.len()).collect(), 0, 0.0, dist, &mut best);
    best
}

#[test]
fn c08_fleet_mode_cost_orderings_on_constructed_fixtures() {
    // two caregivers with mirrored workloads at two shared stops; the
    // depot-stop-stop loop has integer edge lengths 5, 5, 6
    let coords = vec![(0.0, 0.0), (3.0, 4.0), (3.0, 4.0), (6.0, 0.0), (6.0, 0.0)];
    let illness = vec![0, 1, 0, 1];
    let qual = vec![vec![true, false], vec![false, true]];

    // instantaneous services: sharing one vehicle costs exactly as much as
    // one vehicle per caregiver, with or without drop-offs
    let inst = fixture(coords.clone(), illness.clone(), vec![0.0; 4], qual.clone(), 1, 2);
    let f_vs = exact_solve(&inst, true).unwrap().objective;
    let f_m = exact_solve(&inst, false).unwrap().objective;
    let f_std = exact_solve(&inst.single_caregiver_view(), false).unwrap().objective;
    assert_eq!(f_vs, 32.0, "shared-with-drops optimum");
    assert_eq!(f_m, 32.0, "shared optimum");
    assert_eq!(f_std, 32.0, "separate-vehicle optimum");

    // diverging service lengths at the shared stops: pooling the crew into
    // one vehicle is now strictly worse than separate vehicles
    let inst = fixture(coords, illness, vec![10.0, 20.0, 10.0, 20.0], qual, 1, 2);
    let f_m = exact_solve(&inst, false).unwrap().objective;
    let f_std = exact_solve(&inst.single_caregiver_view(), false).unwrap().objective;
    assert_eq!(f_std, 92.0);
    assert_eq!(f_m, 152.0);
    assert!(f_std < f_m, "separate vehicles must win strictly: {f_std} vs {f_m}");

    // zone-separated workloads with unique skills: per-vehicle flow of the
    // shared modes stays below the separate-vehicle total
    let inst = fixture(
        vec![(0.0, 0.0), (3.0, 4.0), (6.0, 8.0), (-3.0, 4.0), (-6.0, 8.0)],
        vec![0, 0, 1, 1],
        vec![5.0, 9.0, 6.0, 11.0],
        vec![vec![true, false], vec![false, true]],
        1,
        2,
    );
    let c = inst.capacity as f64;
    let f_vs = exact_solve(&inst, true).unwrap().objective;
    let f_m = exact_solve(&inst, false).unwrap().objective;
    let f_std = exact_solve(&inst.single_caregiver_view(), false).unwrap().objective;
    assert!(f_vs / c <= f_m / c, "drops may only help: {f_vs} vs {f_m}");
    assert!(
        f_m / c < f_std,
        "per-vehicle shared flow {} must undercut the separate total {f_std}",
        f_m / c
    );
    println!(
        "criterion 8: PASS - equality 32=32=32, strict 92<152, chain {:.2}<={:.2}<{f_std:.2}",
        f_vs / c,
        f_m / c
    );
}

#[test]
fn c09_break_even_rate_arithmetic_and_radius_trend() {
    let pinned = ber(BreakEvenInput { f_vs: 240.54, f_std: 174.62, c: 2 })
        .ratio()
        .unwrap();
    assert!(
        (pinned - 1.21).abs() <= 0.05,
        "pinned break-even input gives {pinned:.4}, expected about 1.21"
    );

    // class-mean break-even rate must shrink with the service radius
    let cells = h30_grid();
    let mut means = Vec::new();
    for ra in [10u32, 20, 30, 40] {
        let vals: Vec<f64> = cells
            .iter()
            .filter(|c| c.spec.ra == ra)
            .map(|c| {
                ber(BreakEvenInput { f_vs: c.vs.best, f_std: c.std.best, c: 2 })
                    .ratio()
                    .expect("denominator positive at the heuristic optima")
            })
            .collect();
        means.push((ra, vals.iter().sum::<f64>() / vals.len() as f64));
    }
    let by_ra: Vec<f64> = means.iter().map(|&(_, v)| v).collect();
    assert!(
        by_ra[0] < by_ra[3],
        "break-even mean must rise with radius: {means:?}"
    );
    let min = by_ra.iter().copied().fold(f64::INFINITY, f64::min);
    let max = by_ra.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(by_ra[0], min, "10-minute radius must give the smallest mean: {means:?}");
    assert_eq!(by_ra[3], max, "40-minute radius must give the largest mean: {means:?}");
    println!(
        "criterion 9: PASS - pinned {pinned:.4}, radius means {:?}",
        means
            .iter()
            .map(|&(ra, v)| format!("ra{ra}={v:.2}"))
            .collect::<Vec<_>>()
    );
}

#[test]
fn c10_closed_form_pieces_match_their_formulas() {
    // removal-count schedule endpoints for 30 patients
    let p = AlnsParams::default();
    assert_eq!(alns::compute_q(&p, 30, 30, 0), 15);
    assert_eq!(alns::compute_q(&p, 30, 30, 25_000), 3);

    // geometric cooling
    let t0 = 0.05 * 750.0;
    let mut temp = t0;
    for t in 1..=1500i32 {
        temp *= p.cooling;
        assert!((temp - t0 * p.cooling.powi(t)).abs() <= 1e-9);
    }

    // similarity weight: 0.3 per travel minute, 0.1 per service-minute gap
    let d: f64 = 0.3 * 5.0 + 0.1 * 10.0;
    assert!((d - 2.5).abs() <= 1e-9);
    let inst = fixture(
        vec![(0.0, 0.0), (5.0, 0.0), (5.0, 5.0), (0.0, 5.0)],
        vec![0, 0, 0],
        vec![10.0, 12.0, 40.0],
        vec![vec![true], vec![true]],
        1,
        2,
    );
    for seed in 0..10 {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut sol = Solution::empty(&inst, vec![vec![0, 1]]);
        sol.routes[0] = vec![0, 1, 2, 3, inst.end_node()];
        sol.assignments = (1..=3).map(|q| (q, (0, 0))).collect();
        sol.unvisited.clear();
        let removed = alns::removal::remove_shaw(&mut sol, &inst, 2, &p, &mut rng);
        let start = removed[0];
        let expected = (1..=3)
            .filter(|&q| q != start)
            .min_by(|&a, &b| {
                let da = 0.3 * inst.travel(start, a)
                    + 0.1 * (inst.service_of(start) - inst.service_of(a)).abs();
                let db = 0.3 * inst.travel(start, b)
                    + 0.1 * (inst.service_of(start) - inst.service_of(b)).abs();
                da.partial_cmp(&db).unwrap()
            })
            .unwrap();
        assert_eq!(removed[1], expected, "start {start}");
    }

    // relative deviation from the best-found objective
    assert!((rpd(125.0, 100.0).unwrap() - 25.0).abs() <= 1e-9);
    assert!((rpd(100.0, 100.0).unwrap()).abs() <= 1e-9);
    assert!(rpd(99.0, 100.0).is_err());
    assert!(rpd(50.0, 0.0).is_err());
    println!("criterion 10: PASS - schedule endpoints, cooling, similarity and deviation formulas agree");
}

#[test]
fn c11_restarts_fire_on_schedule_and_termination_is_exact() {
    // a one-patient instance has a single reachable objective, so the best
    // never improves and every stagnation window ends in a restart
    let inst = fixture(
        vec![(0.0, 0.0), (3.0, 4.0)],
        vec![0],
        vec![10.0],
        vec![vec![true], vec![true]],
        1,
        2,
    );
    let report = alns::run(&inst, &params(VariantKind::Vs, 25_000, 2_500, 1));
    assert_eq!(report.best_iteration, 0, "plateau run must never improve");
    assert_eq!(report.iterations, 25_000);
    let expected: Vec<usize> = (1..=100).map(|j| j * 250).collect();
    assert_eq!(report.restart_iterations, expected, "restarts off the 250-step grid");

    // on a live search the stop point is exactly the later of the floor and
    // the last improvement plus the grace period
    let inst = generate_grid_instance(MASTER_SEED, ClassSpec { nop: 10, ra: 10, dd: 0 }, 0);
    let report = alns::run(&inst, &params(VariantKind::Vs, 25_000, 2_500, 2));
    assert_eq!(
        report.iterations,
        25_000usize.max(report.best_iteration + 2_500),
        "terminated at {} with last improvement at {}",
        report.iterations,
        report.best_iteration
    );
    println!(
        "criterion 11: PASS - 100 restarts every 250 stagnant iterations, stop at max(25000, t_best+2500)"
    );
}
