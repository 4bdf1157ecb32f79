//! Mixed-integer model of the scheduling problem over the two-layer graph,
//! emitted in the LP text format, plus a residual checker that substitutes
//! an evaluated schedule into every row.
//!
//! Three variants: the full model with drop-offs (`Vs`), the same crews
//! without drop-offs (`M`, drop variables and the dummy layer pruned), and
//! the conventional one-caregiver-per-vehicle problem (`Std`, additionally
//! capacity 1 with as many vehicles as caregivers).
//!
//! Big-M constants: `M1 = wtime + max_travel` bounds any time difference
//! between nodes (wtime alone is not enough, since an arrival can exceed a
//! departure by a full travel leg); `M2 = total service time` bounds any
//! waiting duration.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::instance::{Instance, Node};
use crate::solution::Solution;
use crate::timeline::Timeline;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariantKind {
    /// Vehicle sharing with the drop-off and pick-up policy.
    Vs,
    /// Vehicle sharing, crews always travel together.
    M,
    /// One caregiver per vehicle.
    Std,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MilpVariant {
    pub kind: VariantKind,
    /// Known feasible objective value, added as two upper-bound rows.
    pub upper_bound: Option<f64>,
}

impl MilpVariant {
    pub fn vs() -> Self {
        MilpVariant { kind: VariantKind::Vs, upper_bound: None }
    }
    pub fn m() -> Self {
        MilpVariant { kind: VariantKind::M, upper_bound: None }
    }
    pub fn std() -> Self {
        MilpVariant { kind: VariantKind::Std, upper_bound: None }
    }
    pub fn with_upper_bound(mut self, mu: f64) -> Self {
        self.upper_bound = Some(mu);
        self
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Sense {
    Le,
    Ge,
    Eq,
}

struct Row {
    name: String,
    terms: Vec<(usize, f64)>,
    sense: Sense,
    rhs: f64,
}

struct Model {
    names: Vec<String>,
    binary: Vec<bool>,
    index: BTreeMap<String, usize>,
    objective: Vec<(usize, f64)>,
    rows: Vec<Row>,
}

impl Model {
    fn new() -> Model {
        Model {
            names: Vec::new(),
            binary: Vec::new(),
            index: BTreeMap::new(),
            objective: Vec::new(),
            rows: Vec::new(),
        }
    }

    fn var(&mut self, name: String, binary: bool) -> usize {
        if let Some(&i) = self.index.get(&name) {
            return i;
        }
        let i = self.names.len();
        self.index.insert(name.clone(), i);
        self.names.push(name);
        self.binary.push(binary);
        i
    }

    fn row(&mut self, name: String, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.rows.push(Row { name, terms, sense, rhs });
    }
}

/// All index sets of one variant, so emission and residual checking agree.
struct Ctx<'a> {
    inst: &'a Instance,
    kind: VariantKind,
    /// Node universe of the variant, in id order.
    nodes: Vec<Node>,
    patients: Vec<Node>,
    dummies: Vec<Node>,
    m1: f64,
    m2: f64,
}

impl<'a> Ctx<'a> {
    fn new(inst: &'a Instance, kind: VariantKind) -> Ctx<'a> {
        let patients: Vec<Node> = (1..=inst.n).collect();
        let dummies: Vec<Node> = if kind == VariantKind::Vs {
            (inst.n + 1..=2 * inst.n).collect()
        } else {
            Vec::new()
        };
        let mut nodes = vec![0];
        nodes.extend(&patients);
        nodes.extend(&dummies);
        nodes.push(inst.end_node());
        Ctx {
            inst,
            kind,
            nodes,
            patients,
            dummies,
            m1: inst.wtime + inst.max_travel(),
            m2: inst.total_service(),
        }
    }

    fn drops_allowed(&self) -> bool {
        self.kind == VariantKind::Vs
    }
}

fn build_model(ctx: &Ctx, upper_bound: Option<f64>) -> Model {
    let inst = ctx.inst;
    let mut m = Model::new();
    let nk = inst.num_vehicles;
    let nl = inst.num_caregivers();
    let ns = inst.num_illnesses;
    let end = inst.end_node();

    let x = |m: &mut Model, i: Node, j: Node, k: usize| m.var(format!("x_{i}_{j}_{k}"), true);
    let z = |m: &mut Model, i: Node, j: Node, k: usize, l: usize| {
        m.var(format!("z_{i}_{j}_{k}_{l}"), true)
    };
    let y = |m: &mut Model, i: Node, k: usize, l: usize| m.var(format!("y_{i}_{k}_{l}"), true);
    let alpha = |m: &mut Model, i: Node, k: usize, l: usize, s: usize| {
        m.var(format!("alpha_{i}_{k}_{l}_{s}"), true)
    };
    let u = |m: &mut Model, i: Node| m.var(format!("u_{i}"), true);
    let psi = |m: &mut Model, i: Node, k: usize, l: usize| m.var(format!("psi_{i}_{k}_{l}"), true);
    let gamma = |m: &mut Model, i: Node, k: usize, l: usize| {
        m.var(format!("gamma_{i}_{k}_{l}"), true)
    };
    let av = |m: &mut Model, i: Node, k: usize| m.var(format!("av_{i}_{k}"), false);
    let dv = |m: &mut Model, i: Node, k: usize| m.var(format!("dv_{i}_{k}"), false);
    let w = |m: &mut Model, i: Node, k: usize| m.var(format!("w_{i}_{k}"), false);
    let ah = |m: &mut Model, i: Node, l: usize| m.var(format!("ah_{i}_{l}"), false);
    let dh = |m: &mut Model, i: Node, l: usize| m.var(format!("dh_{i}_{l}"), false);
    let hw = |m: &mut Model, i: Node, l: usize| m.var(format!("hw_{i}_{l}"), false);

    // objective: total caregiver flow time plus unvisited penalties
    for l in 0..nl {
        let v = ah(&mut m, end, l);
        m.objective.push((v, 1.0));
    }
    for &i in &ctx.patients {
        let v = u(&mut m, i);
        m.objective.push((v, inst.unv));
    }

    // each patient is visited by one vehicle or skipped
    for &j in &ctx.patients {
        let mut t = Vec::new();
        for &i in &ctx.nodes {
            for k in 0..nk {
                t.push((x(&mut m, i, j, k), 1.0));
            }
        }
        t.push((u(&mut m, j), 1.0));
        m.row(format!("visit_{j}"), t, Sense::Eq, 1.0);
    }

    // every vehicle and caregiver leaves the depot toward a patient
    for k in 0..nk {
        let t = ctx.patients.iter().map(|&j| (x(&mut m, 0, j, k), 1.0)).collect();
        m.row(format!("veh_start_{k}"), t, Sense::Eq, 1.0);
    }
    for l in 0..nl {
        let mut t = Vec::new();
        for &j in &ctx.patients {
            for k in 0..nk {
                t.push((z(&mut m, 0, j, k, l), 1.0));
            }
        }
        m.row(format!("cg_start_{l}"), t, Sense::Eq, 1.0);
    }

    // vehicle flow conservation at interior nodes
    for &i in ctx.patients.iter().chain(&ctx.dummies) {
        for k in 0..nk {
            let mut t = Vec::new();
            for &j in &ctx.nodes {
                t.push((x(&mut m, i, j, k), 1.0));
                t.push((x(&mut m, j, i, k), -1.0));
            }
            m.row(format!("veh_flow_{i}_{k}"), t, Sense::Eq, 0.0);
        }
    }

    // a caregiver can only ride arcs its vehicle drives
    for &i in &ctx.nodes {
        for &j in &ctx.nodes {
            for k in 0..nk {
                for l in 0..nl {
                    let t = vec![(z(&mut m, i, j, k, l), 1.0), (x(&mut m, i, j, k), -1.0)];
                    m.row(format!("ride_{i}_{j}_{k}_{l}"), t, Sense::Le, 0.0);
                }
            }
        }
    }

    // a served patient gets exactly one qualified caregiver
    for &i in &ctx.patients {
        for s in 0..ns {
            let mut t = Vec::new();
            for k in 0..nk {
                for l in 0..nl {
                    if inst.qual[l][s] {
                        t.push((alpha(&mut m, i, k, l, s), 1.0));
                    }
                }
            }
            // skipping the visit only relieves the patient's own demand
            if inst.illness_of(i) == s {
                t.push((u(&mut m, i), 1.0));
            }
            let demand = if inst.illness_of(i) == s { 1.0 } else { 0.0 };
            m.row(format!("demand_{i}_{s}"), t, Sense::Eq, demand);
        }
    }

    // serving requires riding into the patient with the assigned vehicle
    for &j in &ctx.patients {
        for k in 0..nk {
            for l in 0..nl {
                let mut t = Vec::new();
                for &i in &ctx.nodes {
                    t.push((z(&mut m, i, j, k, l), 1.0));
                }
                for s in 0..ns {
                    t.push((alpha(&mut m, j, k, l, s), -1.0));
                }
                m.row(format!("serve_ride_{j}_{k}_{l}"), t, Sense::Ge, 0.0);
            }
        }
    }

    if ctx.drops_allowed() {
        for &j in &ctx.patients {
            let jd = inst.dummy_of(j);
            for k in 0..nk {
                // dropping at j requires the vehicle to visit j ...
                for l in 0..nl {
                    let mut t = vec![(y(&mut m, j, k, l), 1.0)];
                    for &i in &ctx.nodes {
                        t.push((x(&mut m, i, j, k), -1.0));
                    }
                    m.row(format!("drop_visit_{j}_{k}_{l}"), t, Sense::Le, 0.0);
                    // ... and to come back to the dummy for the pick-up
                    let mut t = vec![(y(&mut m, j, k, l), -1.0)];
                    for &i in &ctx.nodes {
                        t.push((x(&mut m, i, jd, k), 1.0));
                    }
                    m.row(format!("drop_pickup_{j}_{k}_{l}"), t, Sense::Ge, 0.0);
                }
                // no pick-up visit without a drop
                let mut t = Vec::new();
                for &i in &ctx.nodes {
                    t.push((x(&mut m, i, jd, k), 1.0));
                }
                for l in 0..nl {
                    t.push((y(&mut m, j, k, l), -1.0));
                }
                m.row(format!("pickup_drop_{j}_{k}"), t, Sense::Le, 0.0);
            }
        }
    }

    // a dropped caregiver leaves through the dummy, not the patient node
    for &i in &ctx.patients {
        for l in 0..nl {
            let mut t = Vec::new();
            for &j in &ctx.nodes {
                for k in 0..nk {
                    t.push((z(&mut m, i, j, k, l), 1.0));
                }
            }
            if ctx.drops_allowed() {
                for k in 0..nk {
                    t.push((y(&mut m, i, k, l), 1.0));
                }
            }
            m.row(format!("leave_once_{i}_{l}"), t, Sense::Le, 1.0);
        }
    }

    // caregiver flow conservation: drops act as sinks at patients and
    // sources at their dummies
    for &i in &ctx.patients {
        for k in 0..nk {
            for l in 0..nl {
                let mut t = Vec::new();
                for &j in &ctx.nodes {
                    t.push((z(&mut m, j, i, k, l), 1.0));
                    t.push((z(&mut m, i, j, k, l), -1.0));
                }
                if ctx.drops_allowed() {
                    t.push((y(&mut m, i, k, l), -1.0));
                }
                m.row(format!("cg_flow_{i}_{k}_{l}"), t, Sense::Eq, 0.0);
            }
        }
    }
    for &i in &ctx.dummies {
        let p = inst.patient_of(i);
        for k in 0..nk {
            for l in 0..nl {
                let mut t = Vec::new();
                for &j in &ctx.nodes {
                    t.push((z(&mut m, j, i, k, l), 1.0));
                    t.push((z(&mut m, i, j, k, l), -1.0));
                }
                t.push((y(&mut m, p, k, l), 1.0));
                m.row(format!("cg_flow_dummy_{i}_{k}_{l}"), t, Sense::Eq, 0.0);
            }
        }
    }

    // arrival-time propagation along driven and ridden arcs
    for &i in &ctx.nodes {
        for &j in &ctx.nodes {
            let t_ij = inst.travel(i, j);
            for k in 0..nk {
                let t = vec![
                    (av(&mut m, j, k), 1.0),
                    (dv(&mut m, i, k), -1.0),
                    (x(&mut m, i, j, k), -ctx.m1),
                ];
                m.row(format!("veh_time_{i}_{j}_{k}"), t, Sense::Ge, t_ij - ctx.m1);
                for l in 0..nl {
                    let t = vec![
                        (ah(&mut m, j, l), 1.0),
                        (dh(&mut m, i, l), -1.0),
                        (z(&mut m, i, j, k, l), -ctx.m1),
                    ];
                    m.row(format!("cg_time_{i}_{j}_{k}_{l}"), t, Sense::Ge, t_ij - ctx.m1);
                }
            }
        }
    }

    // vehicle waits the full service when it keeps the serving caregiver
    for &i in &ctx.patients {
        let p = inst.service_of(i);
        for k in 0..nk {
            let mut t = vec![(w(&mut m, i, k), 1.0)];
            for l in 0..nl {
                t.push((gamma(&mut m, i, k, l), -p));
            }
            if ctx.drops_allowed() {
                let id = inst.dummy_of(i);
                for &j in &ctx.nodes {
                    t.push((x(&mut m, j, id, k), ctx.m2));
                }
            }
            m.row(format!("veh_wait_{i}_{k}"), t, Sense::Ge, 0.0);
        }
    }

    // vehicle waits at a pick-up until service completion
    for &i in &ctx.dummies {
        let p = inst.patient_of(i);
        let svc = inst.service_of(p);
        for k in 0..nk {
            let mut t = vec![
                (w(&mut m, i, k), 1.0),
                (av(&mut m, p, k), -1.0),
                (av(&mut m, i, k), 1.0),
            ];
            for l in 0..nl {
                for s in 0..ns {
                    t.push((alpha(&mut m, p, k, l, s), -svc));
                }
            }
            for &j in &ctx.nodes {
                t.push((x(&mut m, j, i, k), -ctx.m1));
            }
            m.row(format!("veh_wait_pickup_{i}_{k}"), t, Sense::Ge, -ctx.m1);
        }
    }

    // a riding caregiver waits out co-served full services
    for &i in &ctx.patients {
        let p = inst.service_of(i);
        for l in 0..nl {
            let mut t = vec![(hw(&mut m, i, l), 1.0)];
            for k in 0..nk {
                for l2 in 0..nl {
                    if l2 != l {
                        t.push((gamma(&mut m, i, k, l2), -p));
                    }
                }
                t.push((psi(&mut m, i, k, l), -ctx.m2));
            }
            m.row(format!("cg_wait_{i}_{l}"), t, Sense::Ge, -ctx.m2);
        }
    }

    // a dropped caregiver waits at the dummy for a late vehicle
    for &i in &ctx.dummies {
        let p = inst.patient_of(i);
        let svc = inst.service_of(p);
        for k in 0..nk {
            for l in 0..nl {
                let mut t = vec![
                    (hw(&mut m, i, l), 1.0),
                    (av(&mut m, i, k), -1.0),
                    (av(&mut m, p, k), 1.0),
                    (y(&mut m, p, k, l), -ctx.m1),
                ];
                for l2 in 0..nl {
                    for s in 0..ns {
                        t.push((alpha(&mut m, p, k, l2, s), svc));
                    }
                }
                m.row(format!("cg_wait_pickup_{i}_{k}_{l}"), t, Sense::Ge, -ctx.m1);
            }
        }
    }

    // departures include waiting
    for &i in &ctx.nodes {
        for k in 0..nk {
            let t = vec![
                (dv(&mut m, i, k), 1.0),
                (av(&mut m, i, k), -1.0),
                (w(&mut m, i, k), -1.0),
            ];
            m.row(format!("veh_depart_{i}_{k}"), t, Sense::Ge, 0.0);
        }
        for l in 0..nl {
            let t = vec![
                (dh(&mut m, i, l), 1.0),
                (ah(&mut m, i, l), -1.0),
                (hw(&mut m, i, l), -1.0),
            ];
            m.row(format!("cg_depart_{i}_{l}"), t, Sense::Ge, 0.0);
        }
    }

    // a caregiver riding into / out of a node shares the vehicle's times
    for &i in &ctx.nodes {
        for k in 0..nk {
            for l in 0..nl {
                let mut t_in = vec![(av(&mut m, i, k), 1.0), (ah(&mut m, i, l), -1.0)];
                for &j in &ctx.nodes {
                    t_in.push((z(&mut m, j, i, k, l), -ctx.m1));
                }
                m.row(format!("sync_arr_lo_{i}_{k}_{l}"), t_in.clone(), Sense::Ge, -ctx.m1);
                for term in &mut t_in {
                    if term.1 == -ctx.m1 {
                        term.1 = ctx.m1;
                    }
                }
                m.row(format!("sync_arr_hi_{i}_{k}_{l}"), t_in, Sense::Le, ctx.m1);

                let mut t_out = vec![(dv(&mut m, i, k), 1.0), (dh(&mut m, i, l), -1.0)];
                for &j in &ctx.nodes {
                    t_out.push((z(&mut m, i, j, k, l), -ctx.m1));
                }
                m.row(format!("sync_dep_lo_{i}_{k}_{l}"), t_out.clone(), Sense::Ge, -ctx.m1);
                for term in &mut t_out {
                    if term.1 == -ctx.m1 {
                        term.1 = ctx.m1;
                    }
                }
                m.row(format!("sync_dep_hi_{i}_{k}_{l}"), t_out, Sense::Le, ctx.m1);
            }
        }
    }

    // definitions: psi = rode in and stayed aboard; gamma = served in place
    for &i in &ctx.patients {
        for k in 0..nk {
            for l in 0..nl {
                let mut t = vec![(psi(&mut m, i, k, l), 1.0)];
                for &j in &ctx.nodes {
                    t.push((z(&mut m, j, i, k, l), -1.0));
                }
                if ctx.drops_allowed() {
                    t.push((y(&mut m, i, k, l), 1.0));
                }
                m.row(format!("def_psi_{i}_{k}_{l}"), t, Sense::Eq, 0.0);

                let mut t = vec![(gamma(&mut m, i, k, l), 1.0)];
                for s in 0..ns {
                    t.push((alpha(&mut m, i, k, l, s), -1.0));
                }
                if ctx.drops_allowed() {
                    t.push((y(&mut m, i, k, l), 1.0));
                }
                m.row(format!("def_gamma_{i}_{k}_{l}"), t, Sense::Eq, 0.0);
            }
        }
    }

    // crew size, and working-time limits for caregivers and vehicles
    for k in 0..nk {
        let mut t = Vec::new();
        for &j in &ctx.patients {
            for l in 0..nl {
                t.push((z(&mut m, 0, j, k, l), 1.0));
            }
        }
        m.row(format!("crew_{k}"), t, Sense::Eq, inst.capacity as f64);
    }
    for l in 0..nl {
        let t = vec![(ah(&mut m, end, l), 1.0)];
        m.row(format!("cg_limit_{l}"), t, Sense::Le, inst.wtime);
    }
    for k in 0..nk {
        let t = vec![(av(&mut m, end, k), 1.0)];
        m.row(format!("veh_limit_{k}"), t, Sense::Le, inst.wtime);
    }

    if let Some(mu) = upper_bound {
        let mut t_veh = Vec::new();
        for k in 0..nk {
            t_veh.push((av(&mut m, end, k), 1.0));
        }
        let mut t_cg = Vec::new();
        for l in 0..nl {
            t_cg.push((ah(&mut m, end, l), 1.0));
        }
        for &i in &ctx.patients {
            t_veh.push((u(&mut m, i), inst.unv));
            t_cg.push((u(&mut m, i), inst.unv));
        }
        m.row("bound_vehicles".into(), t_veh, Sense::Le, mu);
        m.row("bound_caregivers".into(), t_cg, Sense::Le, mu);
    }

    m
}

fn write_terms(out: &mut String, terms: &[(usize, f64)], names: &[String]) {
    let mut first = true;
    for &(v, c) in terms {
        if c == 0.0 {
            continue;
        }
        if first {
            if c < 0.0 {
                out.push_str("- ");
            }
        } else if c < 0.0 {
            out.push_str(" - ");
        } else {
            out.push_str(" + ");
        }
        first = false;
        let a = c.abs();
        if a != 1.0 {
            let _ = write!(out, "{a} ");
        }
        out.push_str(&names[v]);
    }
    if first {
        out.push('0');
    }
}

fn render_lp(m: &Model, header: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "\\ {header}");
    s.push_str("Minimize\n obj: ");
    write_terms(&mut s, &m.objective, &m.names);
    s.push_str("\nSubject To\n");
    for row in &m.rows {
        let _ = write!(s, " {}: ", row.name);
        write_terms(&mut s, &row.terms, &m.names);
        let op = match row.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        let _ = writeln!(s, " {op} {}", row.rhs);
    }
    s.push_str("Bounds\n");
    for (i, name) in m.names.iter().enumerate() {
        if !m.binary[i] {
            let _ = writeln!(s, " {name} >= 0");
        }
    }
    s.push_str("Binaries\n");
    for (i, name) in m.names.iter().enumerate() {
        if m.binary[i] {
            let _ = writeln!(s, " {name}");
        }
    }
    s.push_str("End\n");
    s
}

/// The instance a variant's model is built on: `Std` re-interprets the
/// caregiver pool as one-person crews in their own vehicles.
pub fn variant_instance(inst: &Instance, kind: VariantKind) -> Instance {
    match kind {
        VariantKind::Std => inst.single_caregiver_view(),
        _ => inst.clone(),
    }
}

/// Emit the complete model as an LP-format document.
pub fn emit_lp(inst: &Instance, variant: MilpVariant) -> Result<String> {
    inst.validate()?;
    let vinst = variant_instance(inst, variant.kind);
    let ctx = Ctx::new(&vinst, variant.kind);
    let m = build_model(&ctx, variant.upper_bound);
    let tag = match variant.kind {
        VariantKind::Vs => "VS",
        VariantKind::M => "M",
        VariantKind::Std => "STD",
    };
    Ok(render_lp(
        &m,
        &format!("instance {} variant {tag} n {} vehicles {}", vinst.name, vinst.n, vinst.num_vehicles),
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    /// Largest constraint violation over all rows.
    pub max_violation: f64,
    /// Row achieving it (meaningful when the violation is positive).
    pub worst_row: String,
    /// Objective expression evaluated at the substituted point.
    pub lp_objective: f64,
}

/// Substitute an evaluated schedule into every row of the variant's model.
/// For `M`/`Std` the solution must be drop-free, and for `Std` the instance
/// passed in must already be the single-caregiver view the solution lives on.
pub fn check_residuals(
    sol: &Solution,
    tl: &Timeline,
    inst: &Instance,
    variant: MilpVariant,
) -> Result<ResidualReport> {
    if variant.kind != VariantKind::Vs && !sol.drops.is_empty() {
        return Err(Error::Parse(
            "drop-free variant given a solution with drop-offs".into(),
        ));
    }
    let ctx = Ctx::new(inst, variant.kind);
    let m = build_model(&ctx, variant.upper_bound);

    let mut vals = vec![0.0; m.names.len()];
    let set = |name: String, v: f64, vals: &mut Vec<f64>| {
        if let Some(&i) = m.index.get(&name) {
            vals[i] = v;
        }
    };

    for (k, route) in sol.routes.iter().enumerate() {
        for pair in route.windows(2) {
            set(format!("x_{}_{}_{k}", pair[0], pair[1]), 1.0, &mut vals);
        }
    }
    for l in 0..inst.num_caregivers() {
        let k = sol
            .crews
            .iter()
            .position(|crew| crew.contains(&l))
            .ok_or_else(|| Error::Parse(format!("caregiver {l} rides no vehicle")))?;
        for &(a, b) in &tl.caregiver_arcs[l] {
            set(format!("z_{a}_{b}_{k}_{l}"), 1.0, &mut vals);
        }
    }
    for &(p, l, k) in &sol.drops {
        set(format!("y_{p}_{k}_{l}"), 1.0, &mut vals);
    }
    for (&p, &(l, k)) in &sol.assignments {
        let s = inst.illness_of(p);
        set(format!("alpha_{p}_{k}_{l}_{s}"), 1.0, &mut vals);
        let dropped = sol.drops.contains(&(p, l, k));
        set(format!("gamma_{p}_{k}_{l}"), if dropped { 0.0 } else { 1.0 }, &mut vals);
    }
    for &p in &sol.unvisited {
        set(format!("u_{p}"), 1.0, &mut vals);
    }
    // psi: rode into the patient and stayed aboard
    for &i in &ctx.patients {
        for l in 0..inst.num_caregivers() {
            if let Some(k) = sol.crews.iter().position(|crew| crew.contains(&l)) {
                let rode_in = tl.caregiver_arcs[l].iter().any(|&(_, b)| b == i);
                let dropped = sol.drops.contains(&(i, l, k));
                if rode_in && !dropped {
                    set(format!("psi_{i}_{k}_{l}"), 1.0, &mut vals);
                }
            }
        }
    }
    for &i in &ctx.nodes {
        for k in 0..inst.num_vehicles {
            if let Some(t) = tl.vehicle_arrival[k][i] {
                set(format!("av_{i}_{k}"), t, &mut vals);
            }
            if let Some(t) = tl.vehicle_departure[k][i] {
                set(format!("dv_{i}_{k}"), t, &mut vals);
            }
            if let Some(t) = tl.vehicle_wait[k][i] {
                set(format!("w_{i}_{k}"), t, &mut vals);
            }
        }
        for l in 0..inst.num_caregivers() {
            if let Some(t) = tl.caregiver_arrival[l][i] {
                set(format!("ah_{i}_{l}"), t, &mut vals);
            }
            if let Some(t) = tl.caregiver_departure[l][i] {
                set(format!("dh_{i}_{l}"), t, &mut vals);
            }
            if let Some(t) = tl.caregiver_wait[l][i] {
                set(format!("hw_{i}_{l}"), t, &mut vals);
            }
        }
    }

    let mut max_violation: f64 = 0.0;
    let mut worst_row = String::new();
    for row in &m.rows {
        let lhs: f64 = row.terms.iter().map(|&(v, c)| c * vals[v]).sum();
        let viol = match row.sense {
            Sense::Le => lhs - row.rhs,
            Sense::Ge => row.rhs - lhs,
            Sense::Eq => (lhs - row.rhs).abs(),
        };
        if viol > max_violation {
            max_violation = viol;
            worst_row = row.name.clone();
        }
    }
    let lp_objective = m.objective.iter().map(|&(v, c)| c * vals[v]).sum();
    Ok(ResidualReport {
        max_violation,
        worst_row,
        lp_objective,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{drop_fixture, two_patient_fixture};
    use crate::timeline::{evaluate, objective};

    fn count_rows(lp: &str, prefix: &str) -> usize {
        lp.lines()
            .filter(|l| l.trim_start().starts_with(prefix) && l.contains(':'))
            .count()
    }

    #[test]
    fn row_counts_match_the_index_sets() {
        let inst = two_patient_fixture();
        let lp = emit_lp(&inst, MilpVariant::vs()).unwrap();
        let (n, nk, nl, ns) = (inst.n, inst.num_vehicles, inst.num_caregivers(), inst.num_illnesses);
        let nv = 2 * n + 2;
        assert_eq!(count_rows(&lp, "visit_"), n);
        assert_eq!(count_rows(&lp, "veh_start_"), nk);
        assert_eq!(count_rows(&lp, "cg_start_"), nl);
        assert_eq!(count_rows(&lp, "veh_flow_"), 2 * n * nk);
        assert_eq!(count_rows(&lp, "ride_"), nv * nv * nk * nl);
        assert_eq!(count_rows(&lp, "demand_"), n * ns);
        assert_eq!(count_rows(&lp, "serve_ride_"), n * nk * nl);
        assert_eq!(count_rows(&lp, "drop_visit_"), n * nk * nl);
        assert_eq!(count_rows(&lp, "drop_pickup_"), n * nk * nl);
        assert_eq!(count_rows(&lp, "pickup_drop_"), n * nk);
        assert_eq!(count_rows(&lp, "leave_once_"), n * nl);
        assert_eq!(count_rows(&lp, "cg_flow_"), n * nk * nl + n * nk * nl);
        assert_eq!(count_rows(&lp, "veh_time_"), nv * nv * nk);
        assert_eq!(count_rows(&lp, "cg_time_"), nv * nv * nk * nl);
        assert_eq!(count_rows(&lp, "veh_wait_"), n * nk + n * nk);
        assert_eq!(count_rows(&lp, "cg_wait_"), n * nl + n * nk * nl);
        assert_eq!(count_rows(&lp, "veh_depart_"), nv * nk);
        assert_eq!(count_rows(&lp, "cg_depart_"), nv * nl);
        assert_eq!(count_rows(&lp, "sync_arr_lo_"), nv * nk * nl);
        assert_eq!(count_rows(&lp, "sync_arr_hi_"), nv * nk * nl);
        assert_eq!(count_rows(&lp, "sync_dep_lo_"), nv * nk * nl);
        assert_eq!(count_rows(&lp, "sync_dep_hi_"), nv * nk * nl);
        assert_eq!(count_rows(&lp, "def_psi_"), n * nk * nl);
        assert_eq!(count_rows(&lp, "def_gamma_"), n * nk * nl);
        assert_eq!(count_rows(&lp, "crew_"), nk);
        assert_eq!(count_rows(&lp, "cg_limit_"), nl);
        assert_eq!(count_rows(&lp, "veh_limit_"), nk);
    }

    #[test]
    fn reduced_variants_have_no_drop_machinery() {
        let inst = two_patient_fixture();
        for variant in [MilpVariant::m(), MilpVariant::std()] {
            let lp = emit_lp(&inst, variant).unwrap();
            assert!(!lp.contains("y_"), "drop variables leaked");
            let dummy = inst.dummy_of(1).to_string();
            assert!(!lp.contains(&format!("x_{dummy}_")), "dummy nodes leaked");
        }
        // one vehicle per caregiver under the conventional variant
        let lp = emit_lp(&inst, MilpVariant::std()).unwrap();
        assert_eq!(count_rows(&lp, "crew_"), inst.num_caregivers());
        assert!(lp.contains("crew_0: z_0_1_0_0 + z_0_1_0_1 + z_0_2_0_0 + z_0_2_0_1 = 1"));
    }

    #[test]
    fn upper_bound_adds_exactly_two_rows() {
        let inst = two_patient_fixture();
        let plain = emit_lp(&inst, MilpVariant::vs()).unwrap();
        let bounded = emit_lp(&inst, MilpVariant::vs().with_upper_bound(500.0)).unwrap();
        assert_eq!(count_rows(&plain, "bound_"), 0);
        assert_eq!(count_rows(&bounded, "bound_"), 2);
        assert!(bounded.contains("bound_caregivers"));
        assert!(bounded.contains("<= 500"));
    }

    #[test]
    fn emission_is_deterministic() {
        let inst = two_patient_fixture();
        let a = emit_lp(&inst, MilpVariant::vs()).unwrap();
        let b = emit_lp(&inst, MilpVariant::vs()).unwrap();
        assert_eq!(a, b);
        assert!(!a.contains('\r'));
    }

    #[test]
    fn feasible_drop_schedule_has_zero_residual()  {
        let (inst, sol) = drop_fixture();
        let tl = evaluate(&sol, &inst).unwrap();
        let rep = check_residuals(&sol, &tl, &inst, MilpVariant::vs()).unwrap();
        assert!(rep.max_violation <= 1e-6, "worst row {}", rep.worst_row);
        let obj = objective(&sol, &inst).unwrap();
        assert!((rep.lp_objective - obj.total).abs() <= 1e-6);
    }

    #[test]
    fn corrupted_arrival_is_caught() {
        let (inst, sol) = drop_fixture();
        let mut tl = evaluate(&sol, &inst).unwrap();
        // pull the vehicle's arrival at patient 2 one minute early
        tl.vehicle_arrival[0][2] = tl.vehicle_arrival[0][2].map(|t| t - 1.0);
        let rep = check_residuals(&sol, &tl, &inst, MilpVariant::vs()).unwrap();
        assert!(rep.max_violation >= 0.99, "violation {}", rep.max_violation);
        assert!(
            rep.worst_row.starts_with("veh_time_") || rep.worst_row.starts_with("sync_arr"),
            "unexpected worst row {}",
            rep.worst_row
        );
    }

    #[test]
    fn drop_free_variant_rejects_drop_solutions() {
        let (inst, sol) = drop_fixture();
        let tl = evaluate(&sol, &inst).unwrap();
        assert!(check_residuals(&sol, &tl, &inst, MilpVariant::m()).is_err());
    }
}
