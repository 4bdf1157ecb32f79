//! Plain-text file formats for instances and solutions.
//!
//! Line-oriented `key = value` records. Floats are written with Rust's
//! shortest round-trip formatting, so save/load is bit-exact.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::solution::Solution;

const INSTANCE_HEADER: &str = "hhsrp-instance v1";
const SOLUTION_HEADER: &str = "hhsrp-solution v1";

pub fn instance_to_string(inst: &Instance) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "format = {INSTANCE_HEADER}");
    let _ = writeln!(s, "name = {}", inst.name);
    let _ = writeln!(s, "seed = {}", inst.seed);
    let _ = writeln!(s, "patients = {}", inst.n);
    let _ = writeln!(s, "illnesses = {}", inst.num_illnesses);
    let _ = writeln!(s, "vehicles = {}", inst.num_vehicles);
    let _ = writeln!(s, "capacity = {}", inst.capacity);
    let _ = writeln!(s, "wtime = {}", inst.wtime);
    let _ = writeln!(s, "unv = {}", inst.unv);
    let _ = writeln!(s, "hhc = {} {}", inst.coords[0].0, inst.coords[0].1);
    for i in 0..inst.n {
        let (x, y) = inst.coords[i + 1];
        let _ = writeln!(
            s,
            "patient = {x} {y} {} {}",
            inst.illness[i], inst.service[i]
        );
    }
    for q in &inst.qual {
        let bits: Vec<&str> = q.iter().map(|&b| if b { "1" } else { "0" }).collect();
        let _ = writeln!(s, "caregiver = {}", bits.join(" "));
    }
    s
}

pub fn solution_to_string(sol: &Solution, instance_name: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "format = {SOLUTION_HEADER}");
    let _ = writeln!(s, "instance = {instance_name}");
    for route in &sol.routes {
        let words: Vec<String> = route.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "route = {}", words.join(" "));
    }
    for crew in &sol.crews {
        let words: Vec<String> = crew.iter().map(|l| l.to_string()).collect();
        let _ = writeln!(s, "crew = {}", words.join(" "));
    }
    for (&p, &(l, k)) in &sol.assignments {
        let _ = writeln!(s, "assign = {p} {l} {k}");
    }
    for &(p, l, k) in &sol.drops {
        let _ = writeln!(s, "drop = {p} {l} {k}");
    }
    let words: Vec<String> = sol.unvisited.iter().map(|p| p.to_string()).collect();
    let _ = writeln!(s, "unvisited = {}", words.join(" "));
    s
}

/// `key = value` lines in order, skipping blanks and `#` comments.
fn records(text: &str) -> Result<Vec<(&str, &str)>> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected `key = value`", ln + 1)))?;
        out.push((key.trim(), value.trim()));
    }
    Ok(out)
}

fn parse<T: std::str::FromStr>(word: &str, what: &str) -> Result<T> {
    word.parse()
        .map_err(|_| Error::Parse(format!("bad {what}: {word:?}")))
}

fn parse_words<T: std::str::FromStr>(value: &str, what: &str) -> Result<Vec<T>> {
    value.split_whitespace().map(|w| parse(w, what)).collect()
}

pub fn instance_from_str(text: &str) -> Result<Instance> {
    let mut name = None;
    let mut seed = None;
    let mut n = None;
    let mut illnesses = None;
    let mut vehicles = None;
    let mut capacity = None;
    let mut wtime = None;
    let mut unv = None;
    let mut coords = Vec::new();
    let mut illness = Vec::new();
    let mut service = Vec::new();
    let mut qual = Vec::new();

    let recs = records(text)?;
    match recs.first() {
        Some(&("format", INSTANCE_HEADER)) => {}
        _ => return Err(Error::Parse(format!("expected `format = {INSTANCE_HEADER}`"))),
    }
    for &(key, value) in &recs[1..] {
        match key {
            "name" => name = Some(value.to_string()),
            "seed" => seed = Some(parse(value, "seed")?),
            "patients" => n = Some(parse(value, "patient count")?),
            "illnesses" => illnesses = Some(parse(value, "illness count")?),
            "vehicles" => vehicles = Some(parse(value, "vehicle count")?),
            "capacity" => capacity = Some(parse(value, "capacity")?),
            "wtime" => wtime = Some(parse(value, "wtime")?),
            "unv" => unv = Some(parse(value, "unv")?),
            "hhc" => {
                let xy: Vec<f64> = parse_words(value, "hhc coordinate")?;
                if xy.len() != 2 {
                    return Err(Error::Parse("hhc needs two coordinates".into()));
                }
                if !coords.is_empty() {
                    return Err(Error::Parse("hhc must precede patients".into()));
                }
                coords.push((xy[0], xy[1]));
            }
            "patient" => {
                let w: Vec<&str> = value.split_whitespace().collect();
                if w.len() != 4 {
                    return Err(Error::Parse(format!("patient record {value:?}")));
                }
                coords.push((parse(w[0], "coordinate")?, parse(w[1], "coordinate")?));
                illness.push(parse(w[2], "illness")?);
                service.push(parse(w[3], "service time")?);
            }
            "caregiver" => {
                let bits: Vec<u8> = parse_words(value, "qualification bit")?;
                qual.push(bits.into_iter().map(|b| b != 0).collect());
            }
            other => return Err(Error::Parse(format!("unknown key {other:?}"))),
        }
    }

    let missing = |what: &str| Error::Parse(format!("missing {what}"));
    let inst = Instance {
        name: name.ok_or_else(|| missing("name"))?,
        seed: seed.ok_or_else(|| missing("seed"))?,
        n: n.ok_or_else(|| missing("patients"))?,
        num_illnesses: illnesses.ok_or_else(|| missing("illnesses"))?,
        coords,
        illness,
        service,
        qual,
        num_vehicles: vehicles.ok_or_else(|| missing("vehicles"))?,
        capacity: capacity.ok_or_else(|| missing("capacity"))?,
        wtime: wtime.ok_or_else(|| missing("wtime"))?,
        unv: unv.ok_or_else(|| missing("unv"))?,
    };
    inst.validate()?;
    Ok(inst)
}

/// Parse a solution file. Returns the solution and the instance name it
/// claims to belong to.
pub fn solution_from_str(text: &str) -> Result<(Solution, String)> {
    let mut instance = None;
    let mut routes = Vec::new();
    let mut crews = Vec::new();
    let mut assignments = BTreeMap::new();
    let mut drops = BTreeSet::new();
    let mut unvisited = BTreeSet::new();

    let recs = records(text)?;
    match recs.first() {
        Some(&("format", SOLUTION_HEADER)) => {}
        _ => return Err(Error::Parse(format!("expected `format = {SOLUTION_HEADER}`"))),
    }
    for &(key, value) in &recs[1..] {
        match key {
            "instance" => instance = Some(value.to_string()),
            "route" => routes.push(parse_words(value, "node id")?),
            "crew" => crews.push(parse_words(value, "caregiver id")?),
            "assign" | "drop" => {
                let w: Vec<usize> = parse_words(value, "id")?;
                if w.len() != 3 {
                    return Err(Error::Parse(format!("{key} record {value:?}")));
                }
                if key == "assign" {
                    assignments.insert(w[0], (w[1], w[2]));
                } else {
                    drops.insert((w[0], w[1], w[2]));
                }
            }
            "unvisited" => unvisited.extend(parse_words::<usize>(value, "patient id")?),
            other => return Err(Error::Parse(format!("unknown key {other:?}"))),
        }
    }
    if routes.len() != crews.len() {
        return Err(Error::Parse("route and crew counts disagree".into()));
    }
    Ok((
        Solution {
            routes,
            crews,
            assignments,
            drops,
            unvisited,
        },
        instance.ok_or_else(|| Error::Parse("missing instance".into()))?,
    ))
}

pub fn save_instance(inst: &Instance, path: &Path) -> Result<()> {
    std::fs::write(path, instance_to_string(inst))
        .map_err(|e| Error::Parse(format!("write {}: {e}", path.display())))
}

pub fn load_instance(path: &Path) -> Result<Instance> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("read {}: {e}", path.display())))?;
    instance_from_str(&text)
}

pub fn save_solution(sol: &Solution, instance_name: &str, path: &Path) -> Result<()> {
    std::fs::write(path, solution_to_string(sol, instance_name))
        .map_err(|e| Error::Parse(format!("write {}: {e}", path.display())))
}

pub fn load_solution(path: &Path) -> Result<(Solution, String)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("read {}: {e}", path.display())))?;
    solution_from_str(&text)
}
