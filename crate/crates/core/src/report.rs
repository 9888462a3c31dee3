//! Versioned JSON envelopes for reports.

use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Wraps a report so its JSON carries `"schema": 1` next to the report's
/// own fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versioned<T> {
    pub schema: u32,
    #[serde(flatten)]
    pub body: T,
}

impl<T> Versioned<T> {
    pub fn new(body: T) -> Self {
        Versioned {
            schema: SCHEMA_VERSION,
            body,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::damage::{JdiParams, JdiReport};

    #[test]
    fn flattened_fields() {
        let report = JdiReport {
            damage_area: 375.0,
            denominator: 37_500.0,
            jdi: 1.0,
            params: JdiParams::default(),
            damaged_face_count: 1,
        };
        let v = serde_json::to_value(Versioned::new(report)).unwrap();
        assert_eq!(v["schema"], 1);
        assert_eq!(v["jdi"], 1.0);
        assert_eq!(v["params"]["d_max"], 25.0);
        assert_eq!(v["damaged_face_count"], 1);
        let back: Versioned<JdiReport> = serde_json::from_value(v).unwrap();
        assert_eq!(back.body, report);
    }
}
