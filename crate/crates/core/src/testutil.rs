//! Hand-built fixtures shared by unit, property and acceptance tests.

use std::collections::{BTreeMap, BTreeSet};

use crate::instance::Instance;
use crate::solution::Solution;

/// Two patients, one vehicle, crew {0, 1}, both caregivers fully qualified.
/// HHC at the origin, patient 1 at (3, 4) with a 10 minute service, patient
/// 2 at (3, 7) with a 4 minute service.
pub fn two_patient_fixture() -> Instance {
    let inst = Instance {
        name: "fixture-two-patients".into(),
        seed: 0,
        n: 2,
        num_illnesses: 1,
        coords: vec![(0.0, 0.0), (3.0, 4.0), (3.0, 7.0)],
        illness: vec![0, 0],
        service: vec![10.0, 4.0],
        qual: vec![vec![true], vec![true]],
        num_vehicles: 1,
        capacity: 2,
        wtime: 600.0,
        unv: 1200.0,
    };
    inst.validate().expect("fixture is consistent");
    inst
}

/// A schedule on [`two_patient_fixture`] where caregiver 0 is dropped at
/// patient 1 while caregiver 1 serves patient 2, and the vehicle swings back
/// for the pick-up. The pick-up happens exactly at service completion.
pub fn drop_fixture() -> (Instance, Solution) {
    let inst = two_patient_fixture();
    let dummy = inst.dummy_of(1);
    let sol = Solution {
        routes: vec![vec![0, 1, 2, dummy, inst.end_node()]],
        crews: vec![vec![0, 1]],
        assignments: BTreeMap::from([(1, (0, 0)), (2, (1, 0))]),
        drops: BTreeSet::from([(1, 0, 0)]),
        unvisited: BTreeSet::new(),
    };
    (inst, sol)
}
