use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use super::RawTable;
use crate::error::{AuditError, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub categories: Vec<String>,
}

/// Ordered attributes with their categorical domains.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "SchemaRepr", into = "SchemaRepr")]
pub struct Schema {
    attributes: Vec<Attribute>,
    offsets: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct SchemaRepr {
    attributes: Vec<Attribute>,
}

impl TryFrom<SchemaRepr> for Schema {
    type Error = AuditError;
    fn try_from(r: SchemaRepr) -> Result<Self> {
        Schema::new(r.attributes)
    }
}

impl From<Schema> for SchemaRepr {
    fn from(s: Schema) -> Self {
        SchemaRepr {
            attributes: s.attributes,
        }
    }
}

impl Schema {
    pub fn new(attributes: Vec<Attribute>) -> Result<Self> {
        if attributes.is_empty() {
            return Err(AuditError::Schema("schema has no attributes".into()));
        }
        let mut names = HashSet::new();
        for a in &attributes {
            if !names.insert(a.name.as_str()) {
                return Err(AuditError::Schema(format!(
                    "duplicate attribute name `{}`",
                    a.name
                )));
            }
            if a.categories.is_empty() {
                return Err(AuditError::Schema(format!(
                    "attribute `{}` has no categories",
                    a.name
                )));
            }
            let mut seen = HashSet::new();
            for c in &a.categories {
                if !seen.insert(c.as_str()) {
                    return Err(AuditError::Schema(format!(
                        "attribute `{}` lists category `{c}` twice",
                        a.name
                    )));
                }
            }
        }
        let mut offsets = Vec::with_capacity(attributes.len());
        let mut acc = 0;
        for a in &attributes {
            offsets.push(acc);
            acc += a.categories.len();
        }
        Ok(Schema {
            attributes,
            offsets,
        })
    }

    /// Convenience constructor: attribute `i` is named `a{i}` and has
    /// categories `"0"..sizes[i]`.
    pub fn with_sizes(sizes: &[usize]) -> Result<Self> {
        Schema::new(
            sizes
                .iter()
                .enumerate()
                .map(|(i, &k)| Attribute {
                    name: format!("a{i}"),
                    categories: (0..k).map(|c| c.to_string()).collect(),
                })
                .collect(),
        )
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn domain_size(&self, attribute: usize) -> usize {
        self.attributes[attribute].categories.len()
    }

    pub fn domain_sizes(&self) -> Vec<usize> {
        self.attributes.iter().map(|a| a.categories.len()).collect()
    }

    /// Total length of a one-hot encoded record.
    pub fn one_hot_dim(&self) -> usize {
        self.attributes.iter().map(|a| a.categories.len()).sum()
    }

    /// Start of attribute `a`'s block in the one-hot encoding.
    pub fn offset(&self, attribute: usize) -> usize {
        self.offsets[attribute]
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    pub fn category_index(&self, attribute: usize, value: &str) -> Option<usize> {
        self.attributes[attribute]
            .categories
            .iter()
            .position(|c| c == value)
    }

    pub fn category(&self, attribute: usize, index: usize) -> &str {
        &self.attributes[attribute].categories[index]
    }

    /// Schema restricted to the first `n` attributes.
    pub fn truncate(&self, n: usize) -> Result<Schema> {
        if n == 0 || n > self.len() {
            return Err(AuditError::Argument(format!(
                "cannot truncate a {}-attribute schema to {n}",
                self.len()
            )));
        }
        Schema::new(self.attributes[..n].to_vec())
    }

    /// Same attribute names in the same order and every category of `self`
    /// present in `other`.
    pub fn is_subschema_of(&self, other: &Schema) -> bool {
        self.len() == other.len()
            && self.attributes.iter().zip(&other.attributes).all(|(a, b)| {
                a.name == b.name && a.categories.iter().all(|c| b.categories.contains(c))
            })
    }

    pub fn validate_record(&self, record: &Record) -> Result<()> {
        if record.len() != self.len() {
            return Err(AuditError::Argument(format!(
                "record has {} values, schema has {} attributes",
                record.len(),
                self.len()
            )));
        }
        for (a, &v) in record.values().iter().enumerate() {
            if v >= self.domain_size(a) {
                return Err(AuditError::Encoding {
                    attribute: self.attributes[a].name.clone(),
                    index: v,
                });
            }
        }
        Ok(())
    }

    /// Number of joint configurations of `attrs` (row-major, first attribute
    /// slowest).
    pub fn joint_size(&self, attrs: &[usize]) -> usize {
        attrs.iter().map(|&a| self.domain_size(a)).product()
    }

    /// Row-major index of `record` restricted to `attrs`.
    pub fn joint_index(&self, attrs: &[usize], record: &Record) -> usize {
        attrs.iter().fold(0, |acc, &a| {
            acc * self.domain_size(a) + record.values()[a]
        })
    }

    /// Translate a record expressed in `self` into `other` by category
    /// string. Attributes whose value is absent from `other` map to `None`.
    pub fn translate(&self, record: &Record, other: &Schema) -> Vec<Option<usize>> {
        record
            .values()
            .iter()
            .enumerate()
            .map(|(a, &v)| {
                let name = &self.attributes[a].name;
                let oa = if other.attributes.get(a).is_some_and(|x| &x.name == name) {
                    Some(a)
                } else {
                    other.attribute_index(name)
                };
                oa.and_then(|oa| other.category_index(oa, self.category(a, v)))
            })
            .collect()
    }
}

/// One categorical row: a category index per schema attribute.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Record(Vec<usize>);

impl Record {
    pub fn new(values: Vec<usize>) -> Self {
        Record(values)
    }

    pub fn values(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, attribute: usize) -> usize {
        self.0[attribute]
    }

    pub fn truncated(&self, n: usize) -> Record {
        Record(self.0[..n].to_vec())
    }
}

impl From<Vec<usize>> for Record {
    fn from(v: Vec<usize>) -> Self {
        Record(v)
    }
}

pub fn encode_one_hot(record: &Record, schema: &Schema) -> Result<Vec<f64>> {
    schema.validate_record(record)?;
    let mut out = vec![0.0; schema.one_hot_dim()];
    for (a, &v) in record.values().iter().enumerate() {
        out[schema.offset(a) + v] = 1.0;
    }
    Ok(out)
}

/// Derive a schema from the values observed in a raw table. Categories are
/// the sorted set of distinct values in each column.
///
/// This is exactly the data-dependent preprocessing that leaks membership of
/// records carrying rare values; it exists to plant that bug.
pub fn infer_metadata(table: &RawTable) -> Result<Schema> {
    if table.rows.is_empty() {
        return Err(AuditError::Empty(
            "cannot infer metadata from a table with no rows".into(),
        ));
    }
    let attributes = table
        .header
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let observed: BTreeSet<&str> = table.rows.iter().map(|r| r[j].as_str()).collect();
            Attribute {
                name: name.clone(),
                categories: observed.into_iter().map(str::to_owned).collect(),
            }
        })
        .collect();
    Schema::new(attributes)
}
