//! Company-disjoint train/validation/test split.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::table::DataTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partition {
    Train,
    Validation,
    Test,
}

impl Partition {
    pub const ALL: [Partition; 3] = [Partition::Train, Partition::Validation, Partition::Test];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Partition::Train => "train",
            Partition::Validation => "validation",
            Partition::Test => "test",
        }
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Partition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Partition::Train),
            "validation" | "val" => Ok(Partition::Validation),
            "test" => Ok(Partition::Test),
            other => Err(Error::Config(format!("unknown partition `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitAssignment {
    /// One entry per table row.
    pub partitions: Vec<Partition>,
    pub ratios: [f64; 3],
}

pub const DEFAULT_RATIOS: [f64; 3] = [0.6, 0.2, 0.2];

/// Assigns every company, with all of its rows, to one partition.
///
/// Companies are taken in sorted order, shuffled by `seed`, then each goes
/// to the partition whose row deficit `ratio * n_rows - assigned_rows` is
/// largest (ties to the earlier partition).
pub fn grouped_split(table: &DataTable, ratios: [f64; 3], seed: u64) -> Result<SplitAssignment> {
    let sum: f64 = ratios.iter().sum();
    if ratios.iter().any(|r| r.is_nan() || *r < 0.0) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Split(format!(
            "ratios {ratios:?} must be non-negative and sum to 1"
        )));
    }
    let counts = table.company_row_counts();
    if counts.len() < 3 {
        return Err(Error::Split(format!(
            "need at least 3 companies, found {}",
            counts.len()
        )));
    }

    let mut companies: Vec<(&str, usize)> = counts.into_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    companies.shuffle(&mut rng);

    let n_rows = table.len() as f64;
    let mut assigned = [0usize; 3];
    let mut company_partition: BTreeMap<&str, Partition> = BTreeMap::new();
    for (company, n) in companies {
        let mut best = 0;
        let mut best_deficit = f64::NEG_INFINITY;
        for (p, ratio) in ratios.iter().enumerate() {
            let deficit = ratio * n_rows - assigned[p] as f64;
            if deficit > best_deficit {
                best = p;
                best_deficit = deficit;
            }
        }
        assigned[best] += n;
        company_partition.insert(company, Partition::ALL[best]);
    }

    let partitions = table
        .rows()
        .iter()
        .map(|r| company_partition[r.company.as_str()])
        .collect();
    Ok(SplitAssignment { partitions, ratios })
}

impl SplitAssignment {
    pub fn indices(&self, partition: Partition) -> Vec<usize> {
        self.partitions
            .iter()
            .enumerate()
            .filter(|(_, p)| **p == partition)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn sizes(&self) -> [usize; 3] {
        let mut sizes = [0; 3];
        for p in &self.partitions {
            sizes[p.index()] += 1;
        }
        sizes
    }

    pub fn fractions(&self) -> [f64; 3] {
        let n = self.partitions.len().max(1) as f64;
        self.sizes().map(|s| s as f64 / n)
    }

    /// `(train, validation, test)` sub-tables.
    pub fn apply(&self, table: &DataTable) -> Result<(DataTable, DataTable, DataTable)> {
        if self.partitions.len() != table.len() {
            return Err(Error::Split(format!(
                "assignment covers {} rows, table has {}",
                self.partitions.len(),
                table.len()
            )));
        }
        Ok((
            table.select(&self.indices(Partition::Train)),
            table.select(&self.indices(Partition::Validation)),
            table.select(&self.indices(Partition::Test)),
        ))
    }

    /// CSV with columns `company_id,year,partition`, one line per row.
    pub fn write_csv<W: Write>(&self, table: &DataTable, output: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(output);
        w.write_record(["company_id", "year", "partition"])?;
        for (row, p) in table.rows().iter().zip(&self.partitions) {
            w.write_record([row.company.as_str(), &row.year.to_string(), p.as_str()])?;
        }
        w.flush().map_err(|e| Error::io("<split writer>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, table: &DataTable, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(table, std::io::BufWriter::new(file))
    }

    pub fn load_csv(path: impl AsRef<Path>, table: &DataTable) -> Result<SplitAssignment> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(file), table)
    }

    /// Reads a split file and aligns it with `table` by `(company, year)`.
    pub fn read_csv<R: Read>(input: R, table: &DataTable) -> Result<SplitAssignment> {
        let mut r = csv::Reader::from_reader(input);
        let mut by_key: BTreeMap<(String, i32), Partition> = BTreeMap::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let company = rec.get(0).unwrap_or("").to_string();
            let year = rec.get(1).unwrap_or("").parse::<i32>().map_err(|e| Error::Parse {
                row: i + 1,
                column: "year".into(),
                message: e.to_string(),
            })?;
            let part: Partition = rec.get(2).unwrap_or("").parse()?;
            by_key.insert((company, year), part);
        }
        let partitions = table
            .rows()
            .iter()
            .map(|row| {
                by_key
                    .get(&(row.company.clone(), row.year))
                    .copied()
                    .ok_or_else(|| Error::Split(format!("no split entry for ({}, {})", row.company, row.year)))
            })
            .collect::<Result<Vec<_>>>()?;
        let n = partitions.len().max(1) as f64;
        let mut sizes = [0usize; 3];
        for p in &partitions {
            sizes[p.index()] += 1;
        }
        Ok(SplitAssignment {
            partitions,
            ratios: sizes.map(|s| s as f64 / n),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::schema::{FeatureKind, FeatureSchema, TargetSpec};
    use crate::data::table::{Row, TargetValue, Value};

    fn table(companies: &[(&str, usize)]) -> DataTable {
        let schema = FeatureSchema::new(
            vec![("x".into(), FeatureKind::Numerical)],
            vec![("esg".into(), TargetSpec::score())],
        )
        .unwrap();
        let rows = companies
            .iter()
            .flat_map(|(c, n)| {
                (0..*n).map(move |y| Row {
                    company: c.to_string(),
                    year: 2002 + y as i32,
                    features: vec![Value::Num(y as f64)],
                    targets: vec![TargetValue::Num(50.0)],
                })
            })
            .collect();
        DataTable::new(schema, rows).unwrap()
    }

    #[test]
    fn ten_singletons_split_six_two_two() {
        let names: Vec<String> = (0..10).map(|i| format!("C{i}")).collect();
        let spec: Vec<(&str, usize)> = names.iter().map(|n| (n.as_str(), 1)).collect();
        let t = table(&spec);
        for seed in 0..20 {
            let s = grouped_split(&t, DEFAULT_RATIOS, seed).unwrap();
            assert_eq!(s.sizes(), [6, 2, 2]);
        }
    }

    #[test]
    fn company_rows_stay_together() {
        let t = table(&[("A", 18), ("B", 3), ("C", 4), ("D", 2), ("E", 5)]);
        let s = grouped_split(&t, DEFAULT_RATIOS, 7).unwrap();
        let a: Vec<Partition> = t
            .rows()
            .iter()
            .zip(&s.partitions)
            .filter(|(r, _)| r.company == "A")
            .map(|(_, p)| *p)
            .collect();
        assert_eq!(a.len(), 18);
        assert!(a.iter().all(|p| *p == a[0]));
    }

    #[test]
    fn deterministic_in_seed() {
        let t = table(&[("A", 3), ("B", 3), ("C", 4), ("D", 2), ("E", 5), ("F", 1)]);
        assert_eq!(
            grouped_split(&t, DEFAULT_RATIOS, 3).unwrap(),
            grouped_split(&t, DEFAULT_RATIOS, 3).unwrap()
        );
    }

    #[test]
    fn fewer_than_three_companies_fails() {
        let t = table(&[("A", 3), ("B", 3)]);
        assert!(matches!(grouped_split(&t, DEFAULT_RATIOS, 0), Err(Error::Split(_))));
    }

    #[test]
    fn csv_round_trip() {
        let t = table(&[("A", 3), ("B", 3), ("C", 4), ("D", 2)]);
        let s = grouped_split(&t, DEFAULT_RATIOS, 1).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&t, &mut buf).unwrap();
        let back = SplitAssignment::read_csv(buf.as_slice(), &t).unwrap();
        assert_eq!(back.partitions, s.partitions);
    }
}
