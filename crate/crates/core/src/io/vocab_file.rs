//! Action vocabulary documents: `{"format": "odrl-vocab/1", "included_in": [["Display", "Play"]]}`.

use serde::{Deserialize, Serialize};

use super::ParseError;
use crate::model::ActionVocabulary;

pub const VOCAB_FORMAT: &str = "odrl-vocab/1";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VocabDoc {
    format: String,
    included_in: Vec<(String, String)>,
}

pub fn parse_vocabulary(text: &str) -> Result<ActionVocabulary, ParseError> {
    let raw: serde_json::Value = serde_json::from_str(text)?;
    let obj = super::json::as_object(&raw, "vocabulary document")?;
    super::json::check_format(obj, VOCAB_FORMAT, "vocabulary document")?;
    let doc: VocabDoc =
        serde_json::from_value(raw).map_err(|e| ParseError::Format(format!("vocabulary document: {e}")))?;
    Ok(ActionVocabulary::new(doc.included_in)?)
}

pub fn write_vocabulary(vocab: &ActionVocabulary) -> String {
    let doc = VocabDoc {
        format: VOCAB_FORMAT.to_string(),
        included_in: vocab.edges().map(|(c, p)| (c.to_string(), p.to_string())).collect(),
    };
    serde_json::to_string_pretty(&doc).expect("vocabulary serialises")
}
