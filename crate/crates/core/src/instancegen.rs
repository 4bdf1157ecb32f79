//! Random benchmark-instance generation.
//!
//! Patients are scattered uniformly on a disc around the HHC whose radius is
//! given in travel minutes. Each patient demands one of three illness types
//! drawn from a class-specific mix, and its service duration comes from a
//! normal distribution tied to the illness, truncated below at one minute.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::instance::Instance;

/// Patient counts of the benchmark grid with their caregiver pool sizes.
pub const GRID_SIZES: [(usize, usize); 4] = [(10, 4), (30, 4), (50, 6), (100, 12)];
/// Disc radii (minutes) of the benchmark grid.
pub const GRID_RADII: [u32; 4] = [10, 20, 30, 40];
/// Illness mixes of the benchmark grid, indexed by the `dd` digit.
pub const GRID_MIXES: [[f64; 3]; 3] = [[0.8, 0.15, 0.05], [0.6, 0.3, 0.1], [0.5, 0.3, 0.2]];
/// Service-duration distribution per illness type: (mean, sd) minutes.
pub const SERVICE_DISTS: [(f64, f64); 3] = [(10.0, 2.5), (20.0, 5.0), (30.0, 7.5)];
/// Replicates per class.
pub const GRID_REPLICATES: usize = 5;

pub const DEFAULT_CAPACITY: usize = 2;
pub const DEFAULT_WTIME: f64 = 600.0;
pub const DEFAULT_UNV: f64 = 2.0 * DEFAULT_WTIME;

/// One cell of the benchmark grid: `h{nop}_{ra}_{dd}` plus a replicate id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassSpec {
    pub nop: usize,
    pub ra: u32,
    /// Index into [`GRID_MIXES`].
    pub dd: usize,
}

impl ClassSpec {
    pub fn name(&self, replicate: usize) -> String {
        format!("h{}_{}_{}_{}", self.nop, self.ra, self.dd, replicate)
    }

    /// Inverse of [`ClassSpec::name`]: `"h30_10_0_2"` -> (spec, 2).
    pub fn parse_name(name: &str) -> Result<(ClassSpec, usize)> {
        let bad = || Error::Parse(format!("bad instance name {name:?}"));
        let rest = name.strip_prefix('h').ok_or_else(bad)?;
        let parts: Vec<&str> = rest.split('_').collect();
        if parts.len() != 4 {
            return Err(bad());
        }
        let nums: Vec<usize> = parts
            .iter()
            .map(|p| p.parse().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let spec = ClassSpec {
            nop: nums[0],
            ra: nums[1] as u32,
            dd: nums[2],
        };
        if !GRID_SIZES.iter().any(|&(n, _)| n == spec.nop)
            || !GRID_RADII.contains(&spec.ra)
            || spec.dd >= GRID_MIXES.len()
        {
            return Err(bad());
        }
        Ok((spec, nums[3]))
    }

    pub fn num_caregivers(&self) -> usize {
        GRID_SIZES
            .iter()
            .find(|&&(n, _)| n == self.nop)
            .expect("grid size")
            .1
    }

    pub fn config(&self) -> GenConfig {
        GenConfig {
            n: self.nop,
            num_illnesses: 3,
            num_vehicles: self.num_caregivers() / DEFAULT_CAPACITY,
            capacity: DEFAULT_CAPACITY,
            radius: self.ra as f64,
            mix: GRID_MIXES[self.dd].to_vec(),
            service_dists: SERVICE_DISTS.to_vec(),
            wtime: DEFAULT_WTIME,
            unv: DEFAULT_UNV,
        }
    }
}

/// All knobs of the generator, so tests can also build tiny instances
/// outside the benchmark grid.
#[derive(Debug, Clone)]
pub struct GenConfig {
    pub n: usize,
    pub num_illnesses: usize,
    pub num_vehicles: usize,
    pub capacity: usize,
    pub radius: f64,
    /// Illness probabilities, summing to 1.
    pub mix: Vec<f64>,
    /// (mean, sd) of the service normal per illness.
    pub service_dists: Vec<(f64, f64)>,
    pub wtime: f64,
    pub unv: f64,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Deterministic per-instance seed from a master seed and grid coordinates.
pub fn derive_seed(master: u64, spec: ClassSpec, replicate: usize) -> u64 {
    let mut state = master;
    let mut out = 0;
    for v in [spec.nop as u64, spec.ra as u64, spec.dd as u64, replicate as u64] {
        state ^= v.wrapping_mul(0xD1B54A32D192ED03);
        out = splitmix64(&mut state);
    }
    out
}

/// Replication seeds derived from one master seed by the same mixing
/// function, so batch runs are reproducible from a single number.
pub fn expand_seeds(master: u64, count: usize) -> Vec<u64> {
    let mut state = master ^ 0xA0761D6478BD642F;
    (0..count).map(|_| splitmix64(&mut state)).collect()
}

/// Standard normal via Box-Muller; one variate per call keeps the stream
/// layout independent of call parity.
fn normal(rng: &mut ChaCha8Rng, mean: f64, sd: f64) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    mean + sd * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn sample_mix(rng: &mut ChaCha8Rng, mix: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (s, &p) in mix.iter().enumerate() {
        acc += p;
        if u < acc {
            return s;
        }
    }
    mix.len() - 1
}

/// Generate an instance. Fully determined by `(name, seed, cfg)`.
pub fn generate(name: &str, seed: u64, cfg: &GenConfig) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coords = vec![(0.0, 0.0)];
    for _ in 0..cfg.n {
        // uniform on the disc: radius scales with sqrt(u)
        let r = cfg.radius * rng.gen::<f64>().sqrt();
        let a = std::f64::consts::TAU * rng.gen::<f64>();
        coords.push((r * a.cos(), r * a.sin()));
    }
    let mut illness = Vec::with_capacity(cfg.n);
    let mut service = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let s = sample_mix(&mut rng, &cfg.mix);
        illness.push(s);
        let (mean, sd) = cfg.service_dists[s];
        let mut p = normal(&mut rng, mean, sd);
        while p < 1.0 {
            p = normal(&mut rng, mean, sd);
        }
        service.push(p);
    }

    let num_caregivers = cfg.capacity * cfg.num_vehicles;
    let mut qual = vec![vec![false; cfg.num_illnesses]; num_caregivers];
    for q in &mut qual {
        let skills = rng.gen_range(1..=2.min(cfg.num_illnesses));
        while q.iter().filter(|&&b| b).count() < skills {
            q[rng.gen_range(0..cfg.num_illnesses)] = true;
        }
    }
    repair_qualifications(&mut qual, &illness, &mut rng);

    let inst = Instance {
        name: name.to_string(),
        seed,
        n: cfg.n,
        num_illnesses: cfg.num_illnesses,
        coords,
        illness,
        service,
        qual,
        num_vehicles: cfg.num_vehicles,
        capacity: cfg.capacity,
        wtime: cfg.wtime,
        unv: cfg.unv,
    };
    inst.validate().expect("generated instance is consistent");
    inst
}

/// Every demanded illness must be treatable by at least two caregivers
/// (one, if the pool is that small), so crews can be formed and single
/// points of failure avoided. Skills are added to the least-skilled
/// unqualified caregivers until that holds.
fn repair_qualifications(qual: &mut [Vec<bool>], illness: &[usize], rng: &mut ChaCha8Rng) {
    let want = 2.min(qual.len());
    let mut demanded: Vec<usize> = illness.to_vec();
    demanded.sort_unstable();
    demanded.dedup();
    for s in demanded {
        while qual.iter().filter(|q| q[s]).count() < want {
            let min_skills = qual
                .iter()
                .filter(|q| !q[s])
                .map(|q| q.iter().filter(|&&b| b).count())
                .min()
                .expect("some caregiver lacks s");
            let candidates: Vec<usize> = (0..qual.len())
                .filter(|&l| !qual[l][s] && qual[l].iter().filter(|&&b| b).count() == min_skills)
                .collect();
            qual[candidates[rng.gen_range(0..candidates.len())]][s] = true;
        }
    }
}

/// Generate an instance of the benchmark grid.
pub fn generate_grid_instance(master_seed: u64, spec: ClassSpec, replicate: usize) -> Instance {
    generate(
        &spec.name(replicate),
        derive_seed(master_seed, spec, replicate),
        &spec.config(),
    )
}

/// All classes of the benchmark grid, in name order of the grid tables.
pub fn grid_classes() -> Vec<ClassSpec> {
    let mut out = Vec::new();
    for &(nop, _) in &GRID_SIZES {
        for &ra in &GRID_RADII {
            for dd in 0..GRID_MIXES.len() {
                out.push(ClassSpec { nop, ra, dd });
            }
        }
    }
    out
}

/// The full benchmark set: every class with all its replicates.
pub fn full_grid(master_seed: u64) -> Vec<Instance> {
    let mut out = Vec::new();
    for spec in grid_classes() {
        for rep in 0..GRID_REPLICATES {
            out.push(generate_grid_instance(master_seed, spec, rep));
        }
    }
    out
}
