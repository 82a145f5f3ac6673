use serde::{Deserialize, Serialize};

use super::{Feature, RegressError};
use crate::sparse::CsrMatrix;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureAggregation {
    /// Arithmetic mean; keeps rows summing to one.
    #[default]
    Mean,
    Sum,
}

/// Combines each named group of tables into one regressor.
pub fn aggregate_features(
    groups: &[(&str, Vec<&Feature>)],
    mode: FeatureAggregation,
) -> Result<Vec<Feature>, RegressError> {
    groups
        .iter()
        .map(|(name, members)| {
            let first = members.first().ok_or_else(|| RegressError::EmptyGroup(name.to_string()))?;
            let shape = first.table.shape();
            let mut acc: CsrMatrix = first.table.clone();
            for m in &members[1..] {
                if m.table.shape() != shape {
                    return Err(RegressError::ShapeMismatch {
                        name: m.name.clone(),
                        expected: shape,
                        found: m.table.shape(),
                    });
                }
                acc = acc.add(&m.table);
            }
            if mode == FeatureAggregation::Mean && members.len() > 1 {
                acc = acc.scaled(1.0 / members.len() as f64);
            }
            Ok(Feature::new(*name, acc))
        })
        .collect()
}
