//! CSV datasets (header row of attribute names) and JSON schemas.

use std::fs::File;
use std::path::Path;
use std::sync::Arc;

use super::{Dataset, RawTable, Schema};
use crate::error::{AuditError, Result};

pub fn read_raw_table(path: &Path) -> Result<RawTable> {
    let file = File::open(path).map_err(|e| AuditError::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let header = rdr.headers()?.iter().map(str::to_owned).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        rows.push(rec?.iter().map(str::to_owned).collect());
    }
    Ok(RawTable { header, rows })
}

pub fn write_raw_table(table: &RawTable, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| AuditError::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(&table.header)?;
    for r in &table.rows {
        w.write_record(r)?;
    }
    w.flush().map_err(|e| AuditError::io(path, e))?;
    Ok(())
}

pub fn read_schema(path: &Path) -> Result<Schema> {
    let file = File::open(path).map_err(|e| AuditError::io(path, e))?;
    Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
}

pub fn write_schema(schema: &Schema, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| AuditError::io(path, e))?;
    serde_json::to_writer_pretty(file, schema)?;
    Ok(())
}

pub fn read_dataset(path: &Path, schema: Arc<Schema>) -> Result<Dataset> {
    Dataset::from_raw(&read_raw_table(path)?, schema)
}

pub fn write_dataset(d: &Dataset, path: &Path) -> Result<()> {
    write_raw_table(&d.to_raw(), path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Attribute, Record};

    #[test]
    fn csv_and_json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let schema = Arc::new(
            Schema::new(vec![
                Attribute {
                    name: "colour".into(),
                    categories: vec!["red".into(), "blue".into()],
                },
                Attribute {
                    name: "size".into(),
                    categories: vec!["s".into(), "m".into(), "l".into()],
                },
            ])
            .unwrap(),
        );
        let d = Dataset::new(
            schema.clone(),
            vec![Record::new(vec![1, 2]), Record::new(vec![0, 0])],
        )
        .unwrap();
        let sp = dir.path().join("schema.json");
        let dp = dir.path().join("data.csv");
        write_schema(&schema, &sp).unwrap();
        write_dataset(&d, &dp).unwrap();
        let text = std::fs::read_to_string(&dp).unwrap();
        assert_eq!(text, "colour,size\nblue,l\nred,s\n");
        let s2 = Arc::new(read_schema(&sp).unwrap());
        assert_eq!(*s2, *schema);
        assert_eq!(read_dataset(&dp, s2).unwrap().rows(), d.rows());
    }
}
