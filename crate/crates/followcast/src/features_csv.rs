//! Feature matrix interchange: header = schema column names + `label`, one
//! row per profile, labels as 0/1. Values use the shortest representation
//! that parses back to the same `f64`.

use std::io::{Read, Write};

use followcast_core::router::GroupData;
use followcast_core::{FeatureSchema, Matrix};

use crate::error::{Error, Result};

pub const LABEL_COLUMN: &str = "label";

pub fn write_features<W: Write>(w: W, data: &GroupData) -> Result<()> {
    let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    let mut header: Vec<&str> = data.schema.feature_names.iter().map(String::as_str).collect();
    header.push(LABEL_COLUMN);
    let werr = |e: csv::Error| Error::format("feature csv", e.to_string());
    out.write_record(&header).map_err(werr)?;
    for (row, &y) in data.x.iter_rows().zip(&data.y) {
        let mut fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        fields.push(if y { "1" } else { "0" }.into());
        out.write_record(&fields).map_err(werr)?;
    }
    out.flush().map_err(|e| Error::format("feature csv", e.to_string()))
}

/// Reads a matrix written by [`write_features`], checking the header
/// against `schema`.
pub fn read_features<R: Read>(r: R, schema: &FeatureSchema, source_name: &str) -> Result<(Matrix, Vec<bool>)> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(r);
    let header = rdr.headers().map_err(|e| Error::format(source_name, e.to_string()))?.clone();
    let want: Vec<&str> = schema
        .feature_names
        .iter()
        .map(String::as_str)
        .chain([LABEL_COLUMN])
        .collect();
    if header.iter().collect::<Vec<_>>() != want {
        return Err(Error::line(source_name, 1, format!("header does not match the {} schema", schema.group.slug())));
    }
    let p = schema.len();
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::format(source_name, e.to_string()))?;
        let line = rec.position().map_or(0, |pos| pos.line());
        for (j, field) in rec.iter().take(p).enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::line(source_name, line, format!("column {}: {field:?} is not a number", want[j])))?;
            values.push(v);
        }
        labels.push(match &rec[p] {
            "1" => true,
            "0" => false,
            other => return Err(Error::line(source_name, line, format!("label {other:?} is not 0 or 1"))),
        });
    }
    let x = Matrix::from_vec(labels.len(), p, values)?;
    Ok((x, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use followcast_core::Group;

    #[test]
    fn round_trip_is_exact() {
        let schema = FeatureSchema::for_group(Group::CustomContent);
        let p = schema.len();
        let vals: Vec<f64> = (0..3 * p).map(|i| (i as f64).sqrt() * 1e-3 - 0.1).collect();
        let data = GroupData {
            group: Group::CustomContent,
            schema: schema.clone(),
            user_ids: vec![1, 2, 3],
            x: Matrix::from_vec(3, p, vals).unwrap(),
            y: vec![true, false, true],
        };
        let mut buf = Vec::new();
        write_features(&mut buf, &data).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("age_in_days,inactivity_in_days,"));
        assert!(text.lines().next().unwrap().ends_with(",has_utc_offset,label"));
        let (x, y) = read_features(&buf[..], &schema, "f").unwrap();
        assert_eq!(x, data.x);
        assert_eq!(y, data.y);
        let other = FeatureSchema::for_group(Group::ContainsWords);
        assert!(read_features(&buf[..], &other, "f").is_err());
    }
}
