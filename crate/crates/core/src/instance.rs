//! Problem data: patients, caregivers, vehicles and the travel-time metric.
//!
//! Node numbering follows the two-layer scheme: node 0 is the HHC start
//! depot, nodes `1..=n` are patients, `n+1..=2n` are the patients' dummy
//! (pick-up) nodes, and `2n + 1` is the HHC return depot. A dummy node
//! shares its patient's coordinates, so travel between a patient and its
//! own dummy is free.

use crate::error::{Error, Result};

pub type Node = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    /// Instance class name plus replicate, e.g. "h30_10_0_2", or a free-form
    /// label for hand-built fixtures.
    pub name: String,
    /// Generator seed; zero for hand-built instances.
    pub seed: u64,
    /// Number of patients.
    pub n: usize,
    /// Number of illness types.
    pub num_illnesses: usize,
    /// `coords[0]` is the HHC, `coords[i]` patient i, in the minutes-plane.
    pub coords: Vec<(f64, f64)>,
    /// Demanded illness per patient (index `patient - 1`); one-hot demand.
    pub illness: Vec<usize>,
    /// Service duration per patient in minutes (index `patient - 1`).
    pub service: Vec<f64>,
    /// `qual[l][s]`: caregiver l can treat illness s.
    pub qual: Vec<Vec<bool>>,
    pub num_vehicles: usize,
    /// Caregivers per vehicle (crew size).
    pub capacity: usize,
    /// Maximum daily working minutes for caregivers and vehicles.
    pub wtime: f64,
    /// Penalty per unvisited patient.
    pub unv: f64,
}

impl Instance {
    pub fn num_caregivers(&self) -> usize {
        self.qual.len()
    }

    /// The return-depot node id, `2n + 1`.
    pub fn end_node(&self) -> Node {
        2 * self.n + 1
    }

    pub fn is_patient(&self, node: Node) -> bool {
        (1..=self.n).contains(&node)
    }

    pub fn is_dummy(&self, node: Node) -> bool {
        node > self.n && node <= 2 * self.n
    }

    pub fn dummy_of(&self, patient: Node) -> Node {
        debug_assert!(self.is_patient(patient));
        patient + self.n
    }

    pub fn patient_of(&self, dummy: Node) -> Node {
        debug_assert!(self.is_dummy(dummy));
        dummy - self.n
    }

    pub fn service_of(&self, patient: Node) -> f64 {
        self.service[patient - 1]
    }

    pub fn illness_of(&self, patient: Node) -> usize {
        self.illness[patient - 1]
    }

    pub fn qualified(&self, caregiver: usize, patient: Node) -> bool {
        self.qual[caregiver][self.illness_of(patient)]
    }

    /// Physical location index of a node (dummies map onto their patient,
    /// both depots onto the HHC).
    fn location(&self, node: Node) -> Result<usize> {
        if node == 0 || node == self.end_node() {
            Ok(0)
        } else if self.is_patient(node) {
            Ok(node)
        } else if self.is_dummy(node) {
            Ok(self.patient_of(node))
        } else {
            Err(Error::UnknownNode(node))
        }
    }

    /// Euclidean travel time in minutes between two nodes. Branch-light for
    /// the search loops; see [`Instance::try_travel`] for the checked form.
    pub fn travel(&self, a: Node, b: Node) -> f64 {
        let (ax, ay) = self.coords[self.loc(a)];
        let (bx, by) = self.coords[self.loc(b)];
        ((ax - bx).powi(2) + (ay - by).powi(2)).sqrt()
    }

    #[inline]
    fn loc(&self, node: Node) -> usize {
        debug_assert!(node <= self.end_node(), "node {node} out of range");
        if node == 0 || node > 2 * self.n {
            0
        } else if node <= self.n {
            node
        } else {
            node - self.n
        }
    }

    pub fn try_travel(&self, a: Node, b: Node) -> Result<f64> {
        let (ax, ay) = self.coords[self.location(a)?];
        let (bx, by) = self.coords[self.location(b)?];
        Ok(((ax - bx).powi(2) + (ay - by).powi(2)).sqrt())
    }

    /// Largest travel time between any two locations (used as a big-M part
    /// and as the insertion-noise scale).
    pub fn max_travel(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.coords.len() {
            for j in (i + 1)..self.coords.len() {
                let (ax, ay) = self.coords[i];
                let (bx, by) = self.coords[j];
                m = m.max(((ax - bx).powi(2) + (ay - by).powi(2)).sqrt());
            }
        }
        m
    }

    pub fn total_service(&self) -> f64 {
        self.service.iter().sum()
    }

    /// Basic data invariants: one-hot demand, caregiver pool divisible into
    /// full crews, every demanded illness treatable by someone.
    pub fn validate(&self) -> Result<()> {
        if self.coords.len() != self.n + 1
            || self.illness.len() != self.n
            || self.service.len() != self.n
        {
            return Err(Error::Parse("field lengths disagree with n".into()));
        }
        if self.num_caregivers() != self.capacity * self.num_vehicles {
            return Err(Error::Parse(format!(
                "expected |L| = c * |K|, got {} caregivers for {} vehicles of capacity {}",
                self.num_caregivers(),
                self.num_vehicles,
                self.capacity
            )));
        }
        for (i, &s) in self.illness.iter().enumerate() {
            if s >= self.num_illnesses {
                return Err(Error::Parse(format!("patient {} has illness {s}", i + 1)));
            }
            if !self.qual.iter().any(|q| q[s]) {
                return Err(Error::Parse(format!(
                    "illness {s} demanded by patient {} is treatable by no caregiver",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    /// View of the same patients with one caregiver per vehicle, used by the
    /// conventional (no-sharing) problem variant.
    pub fn single_caregiver_view(&self) -> Instance {
        let mut inst = self.clone();
        inst.capacity = 1;
        inst.num_vehicles = self.num_caregivers();
        inst
    }
}

#[cfg(test)]
mod tests {
    use crate::testutil::two_patient_fixture;

    #[test]
    fn travel_is_euclidean_and_symmetric() {
        let inst = two_patient_fixture();
        // HHC at origin, patient 1 at (3, 4).
        assert_eq!(inst.travel(0, 1), 5.0);
        assert_eq!(inst.travel(1, 0), 5.0);
        // dummy shares the patient location
        assert_eq!(inst.travel(1, inst.dummy_of(1)), 0.0);
        assert_eq!(inst.travel(2, 2), 0.0);
        // both depots are the HHC
        assert_eq!(inst.travel(0, inst.end_node()), 0.0);
    }

    #[test]
    fn unknown_node_is_an_error() {
        let inst = two_patient_fixture();
        assert!(inst.try_travel(0, 99).is_err());
    }
}
