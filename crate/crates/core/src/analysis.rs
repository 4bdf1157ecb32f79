//! Post-run analytics: break-even rates between the vehicle-sharing and
//! one-caregiver-per-vehicle settings, patient density, normalized
//! deviations and cross-method comparison tables.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

/// Two-digit circle constant used for patient densities, so reported
/// density figures can be compared digit by digit with prior results.
pub const PI_FLAT: f64 = 3.14;

#[derive(Debug, Clone, Copy)]
pub struct BreakEvenInput {
    /// Best objective with shared vehicles (minutes).
    pub f_vs: f64,
    /// Best objective with one caregiver per vehicle (minutes).
    pub f_std: f64,
    /// Crew capacity of the shared setting.
    pub c: usize,
}

/// Vehicle-to-caregiver cost ratio above which sharing pays off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BreakEven {
    Ratio(f64),
    /// Denominator `f_std - f_vs / c` was nonpositive; no ratio exists.
    /// Guaranteed not to happen for exact optima, possible for heuristics.
    Undefined,
}

impl BreakEven {
    pub fn ratio(self) -> Option<f64> {
        match self {
            BreakEven::Ratio(r) => Some(r),
            BreakEven::Undefined => None,
        }
    }
}

/// Break-even rate `(f_vs - f_std) / (f_std - f_vs / c)`: with vehicle and
/// caregiver unit costs `C_V, C_L`, sharing is cheaper iff `C_V / C_L`
/// exceeds this ratio.
pub fn ber(input: BreakEvenInput) -> BreakEven {
    let denom = input.f_std - input.f_vs / input.c as f64;
    if denom <= 0.0 {
        return BreakEven::Undefined;
    }
    BreakEven::Ratio((input.f_vs - input.f_std) / denom)
}

/// Patients per unit area of the service disc, with the flat circle
/// constant.
pub fn pper_a(nop: usize, ra: f64) -> f64 {
    nop as f64 / (PI_FLAT * ra * ra)
}

/// Relative percentage deviation of `f` from the best-known `f_min`.
pub fn rpd(f: f64, f_min: f64) -> Result<f64> {
    if f_min <= 0.0 || f < f_min - 1e-9 {
        return Err(Error::Parse(format!(
            "rpd needs 0 < f_min <= f, got f = {f}, f_min = {f_min}"
        )));
    }
    Ok((f - f_min) / f_min * 100.0)
}

/// One solver run, as read back from a results CSV.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub instance: String,
    /// Method id, e.g. "uba", "uba+dp", "alns-vs", "alns-m", "alns-std".
    pub method: String,
    pub seed: u64,
    pub objective: f64,
    pub dp_moves: usize,
    pub unvisited: usize,
    pub cpu_ms: u64,
}

/// Best / mean objective of one method on one instance, over its seeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodStats {
    pub best: f64,
    pub mean: f64,
    pub runs: usize,
    pub dp_moves: usize,
    pub cpu_ms: u64,
}

#[derive(Debug, Clone)]
pub struct ComparisonRow {
    pub instance: String,
    pub stats: BTreeMap<String, MethodStats>,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub methods: Vec<String>,
    pub rows: Vec<ComparisonRow>,
}

/// Percentage improvement of `new` over `old`, positive when `new` is
/// smaller: `100 * (old - new) / old`.
pub fn improvement_pct(old: f64, new: f64) -> f64 {
    if old == 0.0 {
        return 0.0;
    }
    100.0 * (old - new) / old
}

/// Group raw run records into a per-instance comparison. Every instance
/// must have been run by every method; orphans are listed in the error.
pub fn compare(records: &[RunRecord]) -> Result<Comparison> {
    let methods: BTreeSet<&str> = records.iter().map(|r| r.method.as_str()).collect();
    let mut grouped: BTreeMap<&str, BTreeMap<&str, Vec<&RunRecord>>> = BTreeMap::new();
    for r in records {
        grouped
            .entry(&r.instance)
            .or_default()
            .entry(&r.method)
            .or_default()
            .push(r);
    }
    let mut orphans = Vec::new();
    for (inst, by_method) in &grouped {
        for &m in &methods {
            if !by_method.contains_key(m) {
                orphans.push(format!("{inst}:{m}"));
            }
        }
    }
    if !orphans.is_empty() {
        return Err(Error::Parse(format!("missing runs: {}", orphans.join(", "))));
    }
    let rows = grouped
        .into_iter()
        .map(|(inst, by_method)| ComparisonRow {
            instance: inst.to_string(),
            stats: by_method
                .into_iter()
                .map(|(m, runs)| {
                    let objs: Vec<f64> = runs.iter().map(|r| r.objective).collect();
                    let best = objs.iter().cloned().fold(f64::INFINITY, f64::min);
                    let mean = objs.iter().sum::<f64>() / objs.len() as f64;
                    (
                        m.to_string(),
                        MethodStats {
                            best,
                            mean,
                            runs: runs.len(),
                            dp_moves: runs.iter().map(|r| r.dp_moves).sum(),
                            cpu_ms: runs.iter().map(|r| r.cpu_ms).sum(),
                        },
                    )
                })
                .collect(),
        })
        .collect();
    Ok(Comparison {
        methods: methods.into_iter().map(str::to_string).collect(),
        rows,
    })
}

impl Comparison {
    /// Mean of per-instance best objectives of one method over a set of
    /// instances whose names start with `class_prefix`.
    pub fn class_mean_best(&self, class_prefix: &str, method: &str) -> Option<f64> {
        let vals: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.instance.starts_with(class_prefix))
            .filter_map(|r| r.stats.get(method).map(|s| s.best))
            .collect();
        if vals.is_empty() {
            return None;
        }
        Some(vals.iter().sum::<f64>() / vals.len() as f64)
    }

    /// Render as CSV: one row per instance, best and mean per method plus
    /// the pairwise improvement columns for known method pairs. Floats use
    /// four decimals. When `ber_capacity` is given and both the shared and
    /// the single-caregiver method are present, a break-even column is
    /// appended ("undefined" where no ratio exists).
    pub fn to_csv(&self, ber_capacity: Option<usize>) -> String {
        let pairs: Vec<(&str, &str, &str)> = [
            ("uba", "uba+dp", "ubadp_vs_uba_pct"),
            ("uba+dp", "alns-vs", "vs_vs_ubadp_pct"),
            ("alns-m", "alns-vs", "vs_vs_m_pct"),
            ("alns-vs", "alns-std", "std_vs_vs_pct"),
        ]
        .into_iter()
        .filter(|(a, b, _)| {
            self.methods.iter().any(|m| m == a) && self.methods.iter().any(|m| m == b)
        })
        .collect();

        let mut header = vec!["instance".to_string()];
        for m in &self.methods {
            header.push(format!("{m}_best"));
            header.push(format!("{m}_mean"));
            header.push(format!("{m}_dp"));
            header.push(format!("{m}_cpu_ms"));
        }
        for &(_, _, name) in &pairs {
            header.push(name.to_string());
        }
        let with_ber = ber_capacity.is_some()
            && self.methods.iter().any(|m| m == "alns-vs")
            && self.methods.iter().any(|m| m == "alns-std");
        if with_ber {
            header.push("ber".to_string());
        }
        let mut out = header.join(",");
        out.push('\n');
        for row in &self.rows {
            let mut cells = vec![row.instance.clone()];
            for m in &self.methods {
                let s = &row.stats[m];
                cells.push(format!("{:.4}", s.best));
                cells.push(format!("{:.4}", s.mean));
                cells.push(s.dp_moves.to_string());
                cells.push(s.cpu_ms.to_string());
            }
            for &(a, b, _) in &pairs {
                cells.push(format!(
                    "{:.4}",
                    improvement_pct(row.stats[a].best, row.stats[b].best)
                ));
            }
            if with_ber {
                let input = BreakEvenInput {
                    f_vs: row.stats["alns-vs"].best,
                    f_std: row.stats["alns-std"].best,
                    c: ber_capacity.unwrap(),
                };
                cells.push(match ber(input) {
                    BreakEven::Ratio(r) => format!("{r:.4}"),
                    BreakEven::Undefined => "undefined".to_string(),
                });
            }
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ber_reproduces_the_published_row() {
        // 240.54 vs 174.62 at c = 2 gives a ratio just above 1.2
        let r = ber(BreakEvenInput { f_vs: 240.54, f_std: 174.62, c: 2 })
            .ratio()
            .unwrap();
        assert!((r - 1.21).abs() < 0.05, "ber {r}");
    }

    #[test]
    fn ber_round_numbers_and_edges() {
        let one = ber(BreakEvenInput { f_vs: 40.0, f_std: 30.0, c: 2 });
        assert_eq!(one, BreakEven::Ratio(1.0));
        let zero = ber(BreakEvenInput { f_vs: 30.0, f_std: 30.0, c: 2 }).ratio().unwrap();
        assert!(zero.abs() < 1e-12);
        // f_std <= f_vs / c makes no break-even point
        let bad = ber(BreakEvenInput { f_vs: 100.0, f_std: 50.0, c: 2 });
        assert_eq!(bad, BreakEven::Undefined);
    }

    #[test]
    fn density_uses_the_flat_pi() {
        assert!((pper_a(100, 20.0) - 100.0 / (3.14 * 400.0)).abs() < 1e-12);
        assert!((pper_a(100, 20.0) - 0.0796).abs() < 1e-4);
        assert!((pper_a(30, 10.0) - 0.0955).abs() < 1e-4);
        assert_eq!(pper_a(0, 10.0), 0.0);
    }

    #[test]
    fn rpd_basics() {
        assert_eq!(rpd(110.0, 100.0).unwrap(), 10.0);
        assert_eq!(rpd(100.0, 100.0).unwrap(), 0.0);
        assert_eq!(rpd(150.0, 100.0).unwrap(), 50.0);
        assert!(rpd(90.0, 100.0).is_err());
        assert!(rpd(90.0, 0.0).is_err());
    }

    fn rec(instance: &str, method: &str, seed: u64, objective: f64) -> RunRecord {
        RunRecord {
            instance: instance.into(),
            method: method.into(),
            seed,
            objective,
            dp_moves: 0,
            unvisited: 0,
            cpu_ms: 1,
        }
    }

    #[test]
    fn comparison_aggregates_and_improvement_columns() {
        let records = vec![
            rec("h10_10_0_0", "alns-m", 0, 100.0),
            rec("h10_10_0_0", "alns-m", 1, 110.0),
            rec("h10_10_0_0", "alns-vs", 0, 75.0),
            rec("h10_10_0_0", "alns-vs", 1, 85.0),
        ];
        let cmp = compare(&records).unwrap();
        let s = &cmp.rows[0].stats;
        assert_eq!(s["alns-m"].best, 100.0);
        assert_eq!(s["alns-m"].mean, 105.0);
        assert_eq!(s["alns-vs"].mean, 80.0);
        assert_eq!(improvement_pct(100.0, 75.0), 25.0);
        assert_eq!(improvement_pct(80.0, 80.0), 0.0);
        let csv = cmp.to_csv(None);
        assert!(csv.contains("vs_vs_m_pct"));
        assert!(csv.lines().nth(1).unwrap().contains("25.0000"));
        // no single-caregiver runs: asking for break-even adds no column
        assert!(!cmp.to_csv(Some(2)).contains("ber"));
    }

    #[test]
    fn missing_method_runs_are_reported_as_orphans() {
        let records = vec![
            rec("a", "alns-vs", 0, 10.0),
            rec("a", "alns-m", 0, 12.0),
            rec("b", "alns-vs", 0, 11.0),
        ];
        let err = compare(&records).unwrap_err().to_string();
        assert!(err.contains("b:alns-m"), "{err}");
    }

    #[test]
    fn improvement_is_antisymmetric_in_sign() {
        let ab = improvement_pct(100.0, 80.0);
        let ba = improvement_pct(80.0, 100.0);
        assert!(ab > 0.0 && ba < 0.0);
        // both measure the same 20-minute gap against their own base
        assert!((ab - 20.0).abs() < 1e-12 && (ba + 25.0).abs() < 1e-12);
    }

    #[test]
    fn ber_is_scale_invariant() {
        for lambda in [0.5, 2.0, 17.0] {
            let base = ber(BreakEvenInput { f_vs: 240.0, f_std: 180.0, c: 2 }).ratio().unwrap();
            let scaled = ber(BreakEvenInput {
                f_vs: 240.0 * lambda,
                f_std: 180.0 * lambda,
                c: 2,
            })
            .ratio()
            .unwrap();
            assert!((base - scaled).abs() < 1e-12);
        }
    }
}
