use std::collections::BTreeMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::task::{Predictions, Task};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    Median,
    MajorityVote,
}

impl Aggregation {
    pub fn for_task(task: Task) -> Self {
        match task {
            Task::Regression => Aggregation::Median,
            Task::Classification { .. } => Aggregation::MajorityVote,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Aggregation::Median => "median",
            Aggregation::MajorityVote => "majority_vote",
        }
    }
}

/// Per-row median; an even member count averages the central pair.
pub fn median_aggregate(members: &[Vec<f64>]) -> Vec<f64> {
    let Some(first) = members.first() else {
        return Vec::new();
    };
    let mut column = Vec::with_capacity(members.len());
    (0..first.len())
        .map(|r| {
            column.clear();
            column.extend(members.iter().map(|m| m[r]));
            column.sort_by(f64::total_cmp);
            let mid = column.len() / 2;
            if column.len() % 2 == 1 {
                column[mid]
            } else {
                (column[mid - 1] + column[mid]) / 2.0
            }
        })
        .collect()
}

/// Per-row modal label. Among tied labels, the one predicted by the member
/// with the lowest validation loss wins (earlier member on equal loss).
pub fn majority_vote(members: &[Vec<usize>], validation_scores: &[f64]) -> Vec<usize> {
    let Some(first) = members.first() else {
        return Vec::new();
    };
    let mut by_skill: Vec<usize> = (0..members.len()).collect();
    by_skill.sort_by(|&a, &b| {
        let sa = validation_scores.get(a).copied().unwrap_or(f64::INFINITY);
        let sb = validation_scores.get(b).copied().unwrap_or(f64::INFINITY);
        sa.total_cmp(&sb).then(a.cmp(&b))
    });
    (0..first.len())
        .map(|r| {
            let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
            for m in members {
                *counts.entry(m[r]).or_default() += 1;
            }
            let top = counts.values().copied().max().unwrap_or(0);
            by_skill
                .iter()
                .map(|&m| members[m][r])
                .find(|label| counts[label] == top)
                .expect("some member holds a modal label")
        })
        .collect()
}

/// Aggregates member predictions. Class probabilities are member averages;
/// labels come from the vote.
pub fn aggregate(aggregation: Aggregation, members: &[Predictions], validation_scores: &[f64]) -> Result<Predictions> {
    if members.is_empty() {
        return Err(Error::Predict("ensemble has no members".into()));
    }
    match aggregation {
        Aggregation::Median => {
            let values = members
                .iter()
                .map(|p| p.continuous().map(<[f64]>::to_vec))
                .collect::<Result<Vec<_>>>()?;
            Ok(Predictions::Continuous(median_aggregate(&values)))
        }
        Aggregation::MajorityVote => {
            let mut labels = Vec::with_capacity(members.len());
            let mut mean: Option<Array2<f64>> = None;
            for p in members {
                match p {
                    Predictions::Classes {
                        labels: l,
                        probabilities,
                    } => {
                        labels.push(l.clone());
                        match &mut mean {
                            Some(m) => *m += probabilities,
                            None => mean = Some(probabilities.clone()),
                        }
                    }
                    Predictions::Continuous(_) => {
                        return Err(Error::Predict("majority vote needs class predictions".into()))
                    }
                }
            }
            let probabilities = mean.expect("non-empty") / members.len() as f64;
            Ok(Predictions::Classes {
                labels: majority_vote(&labels, validation_scores),
                probabilities,
            })
        }
    }
}
