//! The two-layer solution representation.

use std::collections::{BTreeMap, BTreeSet};

use crate::instance::{Instance, Node};

/// A candidate schedule: one node sequence per vehicle over the two-layer
/// node set, fixed crews, per-patient caregiver assignment and the drop-off
/// events realised by dummy-node visits.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Solution {
    /// Per-vehicle node list, always starting with 0 and ending with `2n+1`.
    pub routes: Vec<Vec<Node>>,
    /// Caregivers riding each vehicle.
    pub crews: Vec<Vec<usize>>,
    /// patient -> (caregiver, vehicle)
    pub assignments: BTreeMap<Node, (usize, usize)>,
    /// (patient, caregiver, vehicle) drop-off events.
    pub drops: BTreeSet<(Node, usize, usize)>,
    pub unvisited: BTreeSet<Node>,
}

impl Solution {
    /// All-unvisited solution with the given crews and empty routes.
    pub fn empty(inst: &Instance, crews: Vec<Vec<usize>>) -> Solution {
        Solution {
            routes: vec![vec![0, inst.end_node()]; inst.num_vehicles],
            crews,
            assignments: BTreeMap::new(),
            drops: BTreeSet::new(),
            unvisited: (1..=inst.n).collect(),
        }
    }

    pub fn vehicle_of(&self, patient: Node) -> Option<usize> {
        self.assignments.get(&patient).map(|&(_, k)| k)
    }

    pub fn served_patients(&self) -> impl Iterator<Item = Node> + '_ {
        self.assignments.keys().copied()
    }

    pub fn num_served(&self) -> usize {
        self.assignments.len()
    }

    pub fn num_drops(&self) -> usize {
        self.drops.len()
    }

    pub fn drop_at(&self, patient: Node) -> Option<(usize, usize)> {
        let &(_, l, k) = self.drops.range((patient, 0, 0)..(patient + 1, 0, 0)).next()?;
        Some((l, k))
    }

    /// Indexed view of the drop events: `table[p]` is the dropped server and
    /// its vehicle, or None. Hot loops use this instead of [`Self::drop_at`].
    pub fn drop_table(&self, inst: &Instance) -> Vec<Option<(usize, usize)>> {
        let mut table = vec![None; inst.n + 1];
        for &(p, l, k) in &self.drops {
            table[p] = Some((l, k));
        }
        table
    }

    /// Remove a patient (and its dummy / drop event, if any) from the
    /// solution entirely. Returns false if the patient was not served.
    pub fn remove_patient(&mut self, inst: &Instance, patient: Node) -> bool {
        let Some((_, k)) = self.assignments.remove(&patient) else {
            return false;
        };
        let dummy = inst.dummy_of(patient);
        self.routes[k].retain(|&v| v != patient && v != dummy);
        self.drops.retain(|&(p, _, _)| p != patient);
        true
    }

    /// Convert a drop-off back into a wait-in-vehicle visit: the dummy node
    /// leaves the route and the drop event is discarded.
    pub fn remove_dummy(&mut self, inst: &Instance, patient: Node) -> bool {
        let Some((l, k)) = self.drop_at(patient) else {
            return false;
        };
        let dummy = inst.dummy_of(patient);
        self.routes[k].retain(|&v| v != dummy);
        self.drops.remove(&(patient, l, k));
        true
    }

    /// Dummy nodes currently present, as their patient ids.
    pub fn dropped_patients(&self) -> Vec<Node> {
        self.drops.iter().map(|&(p, _, _)| p).collect()
    }
}
