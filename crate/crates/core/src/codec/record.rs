use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vocab::{TokenId, Vocabulary};

pub const METHOD_ACF: &str = "acf";
pub const METHOD_BASELINE: &str = "baseline";

/// Stego-text interchange record. This plus the shared config is all an
/// ACF decoder needs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StegoRecord {
    pub session_id: String,
    #[serde(default = "default_method")]
    pub method: String,
    pub tokens: Vec<TokenId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_strings: Option<Vec<String>>,
    pub block_boundaries: Vec<usize>,
}

fn default_method() -> String {
    METHOD_ACF.to_owned()
}

impl StegoRecord {
    pub fn new(
        session_id: &[u8],
        tokens: Vec<TokenId>,
        block_boundaries: Vec<usize>,
        vocab: Option<&Vocabulary>,
    ) -> Self {
        let token_strings = vocab.map(|v| {
            tokens
                .iter()
                .map(|&t| v.token_str(t).unwrap_or("<unk>").to_owned())
                .collect()
        });
        StegoRecord {
            session_id: String::from_utf8_lossy(session_id).into_owned(),
            method: default_method(),
            tokens,
            token_strings,
            block_boundaries,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("record serializes");
        s.push('\n');
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("stego record: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_shape() {
        let v = Vocabulary::synthetic(4);
        let r = StegoRecord::new(b"s1", vec![TokenId(3), TokenId(1)], vec![2], Some(&v));
        let json = r.to_json();
        assert!(json.contains("\"session_id\": \"s1\""));
        assert!(json.contains("\"t3\""));
        assert_eq!(StegoRecord::parse(&json).unwrap(), r);
        let bare =
            StegoRecord::parse(r#"{"session_id":"x","tokens":[],"block_boundaries":[]}"#).unwrap();
        assert_eq!(bare.method, "acf");
    }
}
