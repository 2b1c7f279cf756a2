//! World logs as delimiter-separated values.
//!
//! The header names every schema feature exactly once, in any order. Each
//! following row is an event; `null` marks an unspecified value and set
//! members are separated by `|`. The delimiter is a comma unless the header
//! line contains a tab and no comma.

use std::collections::HashMap;

use super::ParseError;
use crate::model::{Event, EventError, FeatureSchema, Value, World};

fn delimiter(text: &str) -> u8 {
    let header = text.lines().next().unwrap_or("");
    if header.contains('\t') && !header.contains(',') {
        b'\t'
    } else {
        b','
    }
}

pub fn parse_world(text: &str, schema: &FeatureSchema) -> Result<World, ParseError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(delimiter(text))
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| ParseError::HeaderMismatch(e.to_string()))?,
        None => return Err(ParseError::HeaderMismatch("missing header row".into())),
    };
    let columns = header_mapping(&header, schema)?;

    let mut world = World::new();
    for (i, record) in records.enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| ParseError::UnparsableValue {
            row,
            column: String::new(),
            message: e.to_string(),
        })?;
        if record.len() == 1 && record.get(0).is_some_and(|f| f.trim().is_empty()) {
            continue;
        }
        if record.len() != columns.len() {
            return Err(ParseError::ArityMismatch { row, expected: columns.len(), found: record.len() });
        }
        let mut values = vec![Value::Null; schema.len()];
        for (field, &feature) in record.iter().zip(&columns) {
            let decl = schema.feature(feature).expect("mapped from schema");
            if field.trim() == "null" {
                continue;
            }
            values[feature] = decl.datatype.parse_literal(field).map_err(|message| ParseError::UnparsableValue {
                row,
                column: decl.name.clone(),
                message,
            })?;
        }
        let event = Event::new(schema, values).map_err(|e| event_error(e, row, schema))?;
        world.insert(schema, event).map_err(|e| event_error(e, row, schema))?;
    }
    Ok(world)
}

fn header_mapping(header: &csv::StringRecord, schema: &FeatureSchema) -> Result<Vec<usize>, ParseError> {
    let mut seen: HashMap<usize, &str> = HashMap::new();
    let mut columns = Vec::with_capacity(header.len());
    for name in header.iter().map(str::trim) {
        let index = schema
            .index_of(name)
            .ok_or_else(|| ParseError::HeaderMismatch(format!("column `{name}` is not a schema feature")))?;
        if seen.insert(index, name).is_some() {
            return Err(ParseError::HeaderMismatch(format!("column `{name}` appears twice")));
        }
        columns.push(index);
    }
    if let Some(missing) = schema.features().iter().find(|f| !seen.contains_key(&f.id)) {
        return Err(ParseError::HeaderMismatch(format!("no column for feature `{}`", missing.name)));
    }
    Ok(columns)
}

fn event_error(e: EventError, row: usize, schema: &FeatureSchema) -> ParseError {
    let column = match &e {
        EventError::MissingTimestamp => schema.feature(0).map(|f| f.name.clone()),
        EventError::MissingAction => schema.feature(1).map(|f| f.name.clone()),
        EventError::KindMismatch { feature, .. } => schema.feature(*feature).map(|f| f.name.clone()),
        EventError::Arity { .. } => None,
    };
    ParseError::UnparsableValue { row, column: column.unwrap_or_default(), message: e.to_string() }
}

/// Renders a world with columns in schema order.
pub fn write_world(world: &World, schema: &FeatureSchema) -> String {
    let mut writer = csv::WriterBuilder::new().from_writer(Vec::new());
    writer
        .write_record(schema.features().iter().map(|f| f.name.as_str()))
        .expect("in-memory write");
    for event in world {
        writer
            .write_record(event.values().iter().map(Value::to_string))
            .expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 input")
}
