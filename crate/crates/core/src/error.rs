use thiserror::Error;

/// Structural problems that make a solution impossible to evaluate.
///
/// Constraint *violations* (unqualified caregiver, wTime overrun, ...) are
/// data reported by the feasibility checker, not errors. These variants are
/// reserved for solutions whose two-layer structure is internally broken.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown node id {0}")]
    UnknownNode(usize),

    #[error("route of vehicle {vehicle} must start at 0 and end at the return depot")]
    BadRouteEndpoints { vehicle: usize },

    #[error("node {node} appears more than once across routes")]
    DuplicateNode { node: usize },

    #[error("dummy of patient {patient} visited before the patient itself")]
    DummyBeforePatient { patient: usize },

    #[error("dummy of patient {patient} present in route {vehicle} without a drop event")]
    DummyWithoutDrop { patient: usize, vehicle: usize },

    #[error("caregiver {caregiver} dropped at patient {patient} but its dummy never visited")]
    DropWithoutDummy { patient: usize, caregiver: usize },

    #[error("patient {patient} is routed but has no caregiver assignment")]
    UnassignedPatient { patient: usize },

    #[error("patient {patient} assigned to caregiver {caregiver} who is not aboard at that point")]
    ServerNotAboard { patient: usize, caregiver: usize },

    #[error("drop event ({patient}, {caregiver}, {vehicle}) does not match the patient assignment")]
    InconsistentDrop {
        patient: usize,
        caregiver: usize,
        vehicle: usize,
    },

    #[error("patient {patient} both routed and listed unvisited")]
    RoutedAndUnvisited { patient: usize },

    #[error("{0} nodes exceed the exact-solver cap of {1}")]
    OverCap(usize, usize),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
