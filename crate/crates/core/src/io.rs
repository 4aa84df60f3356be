//! CSV ingestion and output.
//!
//! Interval vectors use one row per observation:
//! `id,label,f1_l,f1_u,...,fK_l,fK_u`. Interval curves use the long layout
//! `id,label,channel,t,lower,upper` with rows grouped by id, channels in
//! increasing order and `t` increasing within a channel. The label column is
//! optional in both layouts. Missing values are errors.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::interval::{Channel, IntervalCurve, IntervalVector, LabeledDataset, Observation};

/// Parsed file contents before labels are validated against a class count.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub ids: Vec<String>,
    pub observations: Vec<Observation>,
    pub labels: Option<Vec<usize>>,
}

impl Table {
    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// Labeled dataset with `n_classes`, or the largest label when `None`.
    pub fn into_labeled(self, n_classes: Option<usize>) -> Result<LabeledDataset> {
        let labels = self
            .labels
            .ok_or_else(|| Error::InvalidDataset("file has no label column".into()))?;
        let q = n_classes.unwrap_or_else(|| labels.iter().copied().max().unwrap_or(0));
        LabeledDataset::new(self.ids, self.observations, labels, q)
    }
}

fn schema(row: usize, column: &str, message: impl Into<String>) -> Error {
    Error::Schema {
        row,
        column: column.to_string(),
        message: message.into(),
    }
}

fn field<'a>(record: &'a csv::StringRecord, idx: usize, row: usize, column: &str) -> Result<&'a str> {
    match record.get(idx).map(str::trim) {
        Some("") | None => Err(schema(row, column, "missing value")),
        Some(v) => Ok(v),
    }
}

fn number(record: &csv::StringRecord, idx: usize, row: usize, column: &str) -> Result<f64> {
    let text = field(record, idx, row, column)?;
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(schema(row, column, format!("not a finite number: {text:?}"))),
    }
}

fn label(record: &csv::StringRecord, idx: usize, row: usize) -> Result<usize> {
    let text = field(record, idx, row, "label")?;
    match text.parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v),
        _ => Err(schema(row, "label", format!("labels are integers >= 1, got {text:?}"))),
    }
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(input)
}

fn header_names(r: &mut csv::Reader<impl Read>) -> Result<Vec<String>> {
    Ok(r.headers()?.iter().map(|h| h.trim().to_string()).collect())
}

/// Line number of a record, counting the header as line 1.
fn line_of(record: &csv::StringRecord) -> usize {
    record.position().map_or(0, |p| p.line() as usize)
}

fn is_curve_header(names: &[String]) -> bool {
    names.iter().any(|n| n == "channel") && names.iter().any(|n| n == "t")
}

pub fn read_ivd<R: Read>(input: R) -> Result<Table> {
    let mut r = reader(input);
    let names = header_names(&mut r)?;
    if names.first().map(String::as_str) != Some("id") {
        return Err(schema(1, names.first().map_or("", |s| s), "first column must be \"id\""));
    }
    let has_label = names.get(1).map(String::as_str) == Some("label");
    let first = if has_label { 2 } else { 1 };
    let bound_cols = &names[first..];
    if bound_cols.is_empty() || bound_cols.len() % 2 != 0 {
        return Err(schema(
            1,
            "header",
            format!("expected lower/upper column pairs, found {} bound columns", bound_cols.len()),
        ));
    }
    let mut ids = Vec::new();
    let mut observations = Vec::new();
    let mut labels = Vec::new();
    for record in r.records() {
        let record = record?;
        let row = line_of(&record);
        if record.len() != names.len() {
            return Err(schema(
                row,
                "*",
                format!("expected {} fields, found {}", names.len(), record.len()),
            ));
        }
        ids.push(field(&record, 0, row, "id")?.to_string());
        if has_label {
            labels.push(label(&record, 1, row)?);
        }
        let mut bounds = Vec::with_capacity(bound_cols.len() / 2);
        for k in 0..bound_cols.len() / 2 {
            let (li, ui) = (first + 2 * k, first + 2 * k + 1);
            let lo = number(&record, li, row, &names[li])?;
            let hi = number(&record, ui, row, &names[ui])?;
            if lo > hi {
                return Err(schema(row, &names[li], format!("lower bound {lo} exceeds upper bound {hi}")));
            }
            bounds.push((lo, hi));
        }
        observations.push(IntervalVector::from_bounds(&bounds)?.into());
    }
    if observations.is_empty() {
        return Err(Error::InvalidDataset("no data rows".into()));
    }
    Ok(Table {
        ids,
        observations,
        labels: has_label.then_some(labels),
    })
}

struct CurveBuilder {
    id: String,
    label: Option<usize>,
    channels: Vec<(i64, Vec<f64>, Channel)>,
}

impl CurveBuilder {
    fn finish(self, row: usize) -> Result<(String, Option<usize>, Observation)> {
        let grid = self.channels[0].1.clone();
        if self.channels.iter().any(|c| c.1 != grid) {
            return Err(schema(row, "t", format!("channels of {:?} use different grids", self.id)));
        }
        let channels = self.channels.into_iter().map(|c| c.2).collect();
        let curve = IntervalCurve::new(grid, channels)?;
        Ok((self.id, self.label, curve.into()))
    }
}

pub fn read_ivf<R: Read>(input: R) -> Result<Table> {
    let mut r = reader(input);
    let names = header_names(&mut r)?;
    let with_label = ["id", "label", "channel", "t", "lower", "upper"];
    let has_label = names == with_label;
    if !has_label && names != ["id", "channel", "t", "lower", "upper"] {
        return Err(schema(1, "header", format!("expected columns {}", with_label.join(","))));
    }
    let col = |name: &str| names.iter().position(|n| n == name).unwrap();
    let (c_id, c_ch, c_t, c_lo, c_hi) = (col("id"), col("channel"), col("t"), col("lower"), col("upper"));
    let mut done: Vec<(String, Option<usize>, Observation)> = Vec::new();
    let mut current: Option<CurveBuilder> = None;
    let mut last_row = 1;
    for record in r.records() {
        let record = record?;
        let row = line_of(&record);
        last_row = row;
        if record.len() != names.len() {
            return Err(schema(
                row,
                "*",
                format!("expected {} fields, found {}", names.len(), record.len()),
            ));
        }
        let id = field(&record, c_id, row, "id")?;
        let lab = if has_label { Some(label(&record, 1, row)?) } else { None };
        let ch_text = field(&record, c_ch, row, "channel")?;
        let ch: i64 = ch_text
            .parse()
            .map_err(|_| schema(row, "channel", format!("channel must be an integer, got {ch_text:?}")))?;
        let t = number(&record, c_t, row, "t")?;
        let lo = number(&record, c_lo, row, "lower")?;
        let hi = number(&record, c_hi, row, "upper")?;
        if lo > hi {
            return Err(schema(row, "lower", format!("lower bound {lo} exceeds upper bound {hi}")));
        }
        if current.as_ref().is_some_and(|c| c.id != id) {
            let finished = current.take().unwrap();
            if done.iter().any(|d| d.0 == id) {
                return Err(schema(row, "id", format!("rows of {id:?} are not contiguous")));
            }
            done.push(finished.finish(row)?);
        }
        let builder = current.get_or_insert_with(|| CurveBuilder {
            id: id.to_string(),
            label: lab,
            channels: Vec::new(),
        });
        if builder.label != lab {
            return Err(schema(row, "label", format!("label changes within {id:?}")));
        }
        match builder.channels.last_mut() {
            Some((c, grid, channel)) if *c == ch => {
                if grid.last().is_some_and(|&prev| prev >= t) {
                    return Err(schema(row, "t", format!("t must increase within a channel, got {t}")));
                }
                grid.push(t);
                channel.lower.push(lo);
                channel.upper.push(hi);
            }
            Some((c, _, _)) if *c > ch => {
                return Err(schema(row, "channel", format!("channels of {id:?} are not in increasing order")));
            }
            _ => builder.channels.push((
                ch,
                vec![t],
                Channel {
                    lower: vec![lo],
                    upper: vec![hi],
                },
            )),
        }
    }
    match current {
        Some(c) => done.push(c.finish(last_row)?),
        None => return Err(Error::InvalidDataset("no data rows".into())),
    }
    let mut ids = Vec::with_capacity(done.len());
    let mut observations = Vec::with_capacity(done.len());
    let mut labels = Vec::with_capacity(done.len());
    for (id, lab, obs) in done {
        ids.push(id);
        observations.push(obs);
        labels.extend(lab);
    }
    Ok(Table {
        ids,
        observations,
        labels: has_label.then_some(labels),
    })
}

/// Reads either layout, chosen from the header.
pub fn read_table<R: Read>(mut input: R) -> Result<Table> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let mut r = reader(text.as_bytes());
    let names = header_names(&mut r)?;
    if is_curve_header(&names) {
        read_ivf(text.as_bytes())
    } else {
        read_ivd(text.as_bytes())
    }
}

pub fn read_table_path(path: &Path) -> Result<Table> {
    read_table(File::open(path)?)
}

pub fn write_ivd<W: Write>(data: &LabeledDataset, out: W) -> Result<()> {
    let k = match data.observations()[0].as_vector() {
        Some(v) => v.len(),
        None => return Err(Error::InvalidDataset("interval curves use the long layout".into())),
    };
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["id".to_string(), "label".to_string()];
    for j in 1..=k {
        header.push(format!("f{j}_l"));
        header.push(format!("f{j}_u"));
    }
    w.write_record(&header)?;
    for ((id, obs), y) in data.ids().iter().zip(data.observations()).zip(data.labels()) {
        let v = obs.as_vector().expect("homogeneous dataset");
        let mut record = vec![id.clone(), y.to_string()];
        for x in v.iter() {
            record.push(x.lower().to_string());
            record.push(x.upper().to_string());
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_ivf<W: Write>(data: &LabeledDataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "label", "channel", "t", "lower", "upper"])?;
    for ((id, obs), y) in data.ids().iter().zip(data.observations()).zip(data.labels()) {
        let c = obs
            .as_curve()
            .ok_or_else(|| Error::InvalidDataset("interval vectors use the wide layout".into()))?;
        for (v, ch) in c.channels().iter().enumerate() {
            for (i, t) in c.grid().iter().enumerate() {
                w.write_record([
                    id.clone(),
                    y.to_string(),
                    (v + 1).to_string(),
                    t.to_string(),
                    ch.lower[i].to_string(),
                    ch.upper[i].to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// `id,predicted_label` and, when given, one `p{q}` column per class.
pub fn write_predictions<W: Write>(
    ids: &[String],
    predicted: &[usize],
    probabilities: Option<&[Vec<f64>]>,
    out: W,
) -> Result<()> {
    if ids.len() != predicted.len() || probabilities.is_some_and(|p| p.len() != ids.len()) {
        return Err(Error::ShapeMismatch("prediction columns differ in length".into()));
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["id".to_string(), "predicted_label".to_string()];
    if let Some(p) = probabilities {
        header.extend((1..=p.first().map_or(0, Vec::len)).map(|q| format!("p{q}")));
    }
    w.write_record(&header)?;
    for (i, id) in ids.iter().enumerate() {
        let mut record = vec![id.clone(), predicted[i].to_string()];
        if let Some(p) = probabilities {
            record.extend(p[i].iter().map(f64::to_string));
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}
