use std::sync::Arc;

use super::{Record, Schema};
use crate::error::{AuditError, Result};

/// String-valued table with a header row, before any schema is applied.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// An ordered multiset of records under a shared schema.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    schema: Arc<Schema>,
    rows: Vec<Record>,
}

impl Dataset {
    pub fn new(schema: Arc<Schema>, rows: Vec<Record>) -> Result<Self> {
        for r in &rows {
            schema.validate_record(r)?;
        }
        Ok(Dataset { schema, rows })
    }

    pub fn empty(schema: Arc<Schema>) -> Self {
        Dataset {
            schema,
            rows: Vec::new(),
        }
    }

    /// Crate-internal constructor for rows already known to be valid.
    pub(crate) fn from_valid(schema: Arc<Schema>, rows: Vec<Record>) -> Self {
        debug_assert!(rows.iter().all(|r| schema.validate_record(r).is_ok()));
        Dataset { schema, rows }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn schema_arc(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn rows(&self) -> &[Record] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, record: Record) -> Result<()> {
        self.schema.validate_record(&record)?;
        self.rows.push(record);
        Ok(())
    }

    pub fn multiplicity(&self, record: &Record) -> usize {
        self.rows.iter().filter(|r| *r == record).count()
    }

    /// Remove the first occurrence of `record`; returns whether one was found.
    pub fn remove_one(&mut self, record: &Record) -> bool {
        match self.rows.iter().position(|r| r == record) {
            Some(i) => {
                self.rows.remove(i);
                true
            }
            None => false,
        }
    }

    /// Exact contingency counts over `attrs`, row-major.
    pub fn joint_counts(&self, attrs: &[usize]) -> Vec<f64> {
        let mut counts = vec![0.0; self.schema.joint_size(attrs)];
        for r in &self.rows {
            counts[self.schema.joint_index(attrs, r)] += 1.0;
        }
        counts
    }

    /// Per-category frequency (count) of one attribute.
    pub fn value_counts(&self, attribute: usize) -> Vec<usize> {
        let mut c = vec![0; self.schema.domain_size(attribute)];
        for r in &self.rows {
            c[r.get(attribute)] += 1;
        }
        c
    }

    pub fn to_raw(&self) -> RawTable {
        RawTable {
            header: self
                .schema
                .attributes()
                .iter()
                .map(|a| a.name.clone())
                .collect(),
            rows: self
                .rows
                .iter()
                .map(|r| {
                    r.values()
                        .iter()
                        .enumerate()
                        .map(|(a, &v)| self.schema.category(a, v).to_owned())
                        .collect()
                })
                .collect(),
        }
    }

    /// Encode a raw table under `schema`. Columns are matched by name.
    pub fn from_raw(table: &RawTable, schema: Arc<Schema>) -> Result<Self> {
        let cols: Vec<usize> = schema
            .attributes()
            .iter()
            .map(|a| {
                table.header.iter().position(|h| *h == a.name).ok_or_else(|| {
                    AuditError::Schema(format!("table has no column `{}`", a.name))
                })
            })
            .collect::<Result<_>>()?;
        let mut rows = Vec::with_capacity(table.rows.len());
        for (i, raw) in table.rows.iter().enumerate() {
            if raw.len() != table.header.len() {
                return Err(AuditError::Argument(format!(
                    "row {i} has {} fields, header has {}",
                    raw.len(),
                    table.header.len()
                )));
            }
            let values = cols
                .iter()
                .enumerate()
                .map(|(a, &j)| {
                    schema.category_index(a, &raw[j]).ok_or_else(|| {
                        AuditError::Schema(format!(
                            "row {i}: value `{}` not in the domain of `{}`",
                            raw[j],
                            schema.attributes()[a].name
                        ))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(Record::new(values));
        }
        Ok(Dataset { schema, rows })
    }

    /// Re-express every row under another schema with the same attribute
    /// names, matching categories by string.
    pub fn reencode(&self, schema: Arc<Schema>) -> Result<Self> {
        Dataset::from_raw(&self.to_raw(), schema)
    }

    /// Keep only the first `n` attributes.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        let schema = Arc::new(self.schema.truncate(n)?);
        let rows = self.rows.iter().map(|r| r.truncated(n)).collect();
        Ok(Dataset { schema, rows })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds() -> Dataset {
        let s = Arc::new(Schema::with_sizes(&[2, 3]).unwrap());
        Dataset::new(
            s,
            vec![
                Record::new(vec![0, 1]),
                Record::new(vec![1, 2]),
                Record::new(vec![0, 1]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn counts_and_multiplicity() {
        let d = ds();
        assert_eq!(d.joint_counts(&[0]), vec![2.0, 1.0]);
        assert_eq!(d.joint_counts(&[0, 1]), vec![0.0, 2.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(d.multiplicity(&Record::new(vec![0, 1])), 2);
        assert_eq!(d.value_counts(1), vec![0, 2, 1]);
    }

    #[test]
    fn raw_round_trip() {
        let d = ds();
        let back = Dataset::from_raw(&d.to_raw(), d.schema_arc().clone()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn rejects_invalid_rows() {
        let s = Arc::new(Schema::with_sizes(&[2]).unwrap());
        assert!(Dataset::new(s.clone(), vec![Record::new(vec![2])]).is_err());
        let mut d = Dataset::empty(s);
        assert!(d.push(Record::new(vec![0, 0])).is_err());
    }
}
