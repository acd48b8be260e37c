//! Bundled example systems.

use crate::dsl::parse_system;
use crate::model::SystemSpec;

pub const MODELS: &[(&str, &str)] = &[
    ("commit", include_str!("../../../models/commit.mps")),
    ("commit_orphan", include_str!("../../../models/commit_orphan.mps")),
    ("decid_ex", include_str!("../../../models/decid_ex.mps")),
    ("elevator", include_str!("../../../models/elevator.mps")),
    ("elevator_dashed", include_str!("../../../models/elevator_dashed.mps")),
    ("mutual_wait", include_str!("../../../models/mutual_wait.mps")),
    ("orphan", include_str!("../../../models/orphan.mps")),
    (
        "producer_consumer",
        include_str!("../../../models/producer_consumer.mps"),
    ),
    ("replication", include_str!("../../../models/replication.mps")),
    (
        "shadowed_reception",
        include_str!("../../../models/shadowed_reception.mps"),
    ),
    (
        "unspecified_reception",
        include_str!("../../../models/unspecified_reception.mps"),
    ),
];

/// Parse a bundled model by name.
pub fn model(name: &str) -> Option<SystemSpec> {
    MODELS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| parse_system(text).expect("bundled model parses"))
}
