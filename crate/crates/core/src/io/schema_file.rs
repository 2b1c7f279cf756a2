//! Schema documents.
//!
//! ```json
//! {"format": "odrl-schema/1",
//!  "features": [
//!    {"id": 0, "name": "Datetime", "datatype": "timestamp", "component": "rho"},
//!    {"id": 1, "name": "Action", "datatype": "identifier", "component": "self"},
//!    {"id": 4, "name": "Print.Resolution", "datatype": "numeric", "component": "Action"}]}
//! ```
//!
//! `component` is `rho`, `self`, or the name or index of a core feature.

use serde::{Deserialize, Serialize};

use super::ParseError;
use crate::model::{ClassSource, Component, Datatype, FeatureDecl, FeatureSchema};

pub const SCHEMA_FORMAT: &str = "odrl-schema/1";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemaDoc {
    format: String,
    features: Vec<FeatureDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FeatureDoc {
    id: usize,
    name: String,
    datatype: Datatype,
    component: ComponentDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    classes: Option<ClassesDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    odrl_term: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum ComponentDoc {
    Index(usize),
    Name(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "lowercase")]
enum ClassesDoc {
    Static(Vec<String>),
    Companion(ComponentDoc),
}

fn resolve(doc: &ComponentDoc, own: usize, features: &[FeatureDoc]) -> Result<usize, ParseError> {
    match doc {
        ComponentDoc::Index(k) => Ok(*k),
        ComponentDoc::Name(name) if name == "self" => Ok(own),
        ComponentDoc::Name(name) => features
            .iter()
            .find(|f| &f.name == name)
            .map(|f| f.id)
            .ok_or_else(|| ParseError::Format(format!("feature {own} refers to unknown feature `{name}`"))),
    }
}

pub fn parse_schema(text: &str) -> Result<FeatureSchema, ParseError> {
    let raw: serde_json::Value = serde_json::from_str(text)?;
    let obj = super::json::as_object(&raw, "schema document")?;
    super::json::check_format(obj, SCHEMA_FORMAT, "schema document")?;
    let doc: SchemaDoc = serde_json::from_value(raw).map_err(|e| ParseError::Format(format!("schema document: {e}")))?;
    let mut decls = Vec::with_capacity(doc.features.len());
    for f in &doc.features {
        let component = match &f.component {
            ComponentDoc::Name(name) if name == "rho" => Component::Rho,
            other => Component::Feature(resolve(other, f.id, &doc.features)?),
        };
        let mut decl = FeatureDecl::new(f.id, f.name.clone(), f.datatype, component);
        match &f.classes {
            Some(ClassesDoc::Static(classes)) => {
                decl = decl.with_classes(ClassSource::Static(classes.iter().cloned().collect()));
            }
            Some(ClassesDoc::Companion(c)) => {
                decl = decl.with_classes(ClassSource::Companion(resolve(c, f.id, &doc.features)?));
            }
            None => {}
        }
        if let Some(term) = &f.odrl_term {
            decl = decl.with_odrl_term(term.clone());
        }
        decls.push(decl);
    }
    Ok(FeatureSchema::new(decls)?)
}

pub fn write_schema(schema: &FeatureSchema) -> String {
    let features = schema
        .features()
        .iter()
        .map(|f| FeatureDoc {
            id: f.id,
            name: f.name.clone(),
            datatype: f.datatype,
            component: match f.component {
                Component::Rho => ComponentDoc::Name("rho".into()),
                Component::Feature(k) if k == f.id => ComponentDoc::Name("self".into()),
                Component::Feature(k) => ComponentDoc::Index(k),
            },
            classes: f.classes.as_ref().map(|c| match c {
                ClassSource::Static(s) => ClassesDoc::Static(s.iter().cloned().collect()),
                ClassSource::Companion(j) => ClassesDoc::Companion(ComponentDoc::Index(*j)),
            }),
            odrl_term: f.odrl_term.clone(),
        })
        .collect();
    let doc = SchemaDoc { format: SCHEMA_FORMAT.to_string(), features };
    serde_json::to_string_pretty(&doc).expect("schema serialises")
}
