//! Line-delimited predictions: `{"image_id", "model", "topk": [{"label", "score"}]}`.
//!
//! Two more line shapes are accepted: `{"header": {...}}` metadata lines and
//! `{"image_id", "model", "error"}` markers for images a model could not score.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::EvalError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelScore {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub image_id: String,
    #[serde(rename = "model")]
    pub model_name: String,
    pub topk: Vec<LabelScore>,
}

impl PredictionRecord {
    pub fn top1(&self) -> &str {
        &self.topk[0].label
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoringFailure {
    pub image_id: String,
    pub model_name: String,
    pub error: String,
}

#[derive(Debug, Clone, Default)]
pub struct PredictionSet {
    pub records: Vec<PredictionRecord>,
    pub failures: Vec<ScoringFailure>,
    pub headers: Vec<Value>,
}

impl PredictionSet {
    pub fn models(&self) -> Vec<String> {
        let mut models: Vec<String> = self
            .records
            .iter()
            .map(|r| r.model_name.clone())
            .chain(self.failures.iter().map(|f| f.model_name.clone()))
            .collect();
        models.sort();
        models.dedup();
        models
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, EvalError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| EvalError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, source_name: &str) -> Result<Self, EvalError> {
        let mut set = PredictionSet::default();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let schema = |message: String| EvalError::Schema {
                source_name: source_name.to_string(),
                line: i + 1,
                message,
            };
            let value: Value = serde_json::from_str(line).map_err(|e| schema(e.to_string()))?;
            let Value::Object(obj) = value else {
                return Err(schema("expected a JSON object".into()));
            };
            if let Some(header) = obj.get("header") {
                set.headers.push(header.clone());
                continue;
            }
            let text_field = |key: &str| -> Result<String, EvalError> {
                match obj.get(key) {
                    Some(Value::String(s)) if !s.is_empty() => Ok(s.clone()),
                    _ => Err(schema(format!("missing string field {key:?}"))),
                }
            };
            let image_id = text_field("image_id")?;
            let model_name = text_field("model")?;
            if let Some(error) = obj.get("error") {
                set.failures.push(ScoringFailure {
                    image_id,
                    model_name,
                    error: error.as_str().map_or_else(|| error.to_string(), str::to_string),
                });
                continue;
            }
            let Some(Value::Array(entries)) = obj.get("topk") else {
                return Err(schema("missing array field \"topk\"".into()));
            };
            if entries.is_empty() {
                return Err(schema("topk is empty".into()));
            }
            let mut topk = Vec::with_capacity(entries.len());
            for entry in entries {
                let label = match entry.get("label") {
                    Some(Value::String(s)) if !s.trim().is_empty() => s.trim().to_string(),
                    Some(Value::Number(n)) if n.is_u64() => n.to_string(),
                    _ => return Err(schema("topk entry without a label".into())),
                };
                let score = match entry.get("score") {
                    None | Some(Value::Null) => None,
                    Some(Value::Number(n)) => n.as_f64(),
                    Some(_) => return Err(schema("score is not a number".into())),
                };
                topk.push(LabelScore { label, score });
            }
            let scores: Vec<f64> = topk.iter().filter_map(|l| l.score).collect();
            if scores.windows(2).any(|w| w[1] > w[0]) {
                return Err(schema("topk scores are not in non-increasing order".into()));
            }
            set.records.push(PredictionRecord {
                image_id,
                model_name,
                topk,
            });
        }
        Ok(set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_line_shapes() {
        let text = r#"{"header": {"model": "resnet50", "recipe": "torchvision-v2"}}
{"image_id": "a", "model": "resnet50", "topk": [{"label": "n02123045", "score": 0.9}, {"label": "tiger cat", "score": 0.05}]}
{"image_id": "b", "model": "resnet50", "topk": [{"label": 281}]}

{"image_id": "c", "model": "resnet50", "error": "cannot decode image"}
"#;
        let set = PredictionSet::parse(text, "p").unwrap();
        assert_eq!(set.headers.len(), 1);
        assert_eq!(set.records.len(), 2);
        assert_eq!(set.records[0].top1(), "n02123045");
        assert_eq!(set.records[1].top1(), "281");
        assert_eq!(set.failures[0].error, "cannot decode image");
        assert_eq!(set.models(), ["resnet50"]);
    }

    #[test]
    fn schema_violations_name_the_line() {
        for (bad, line) in [
            (r#"{"image_id": "a", "model": "m", "topk": []}"#, 1),
            ("\n{\"model\": \"m\", \"topk\": [{\"label\": \"x\"}]}", 2),
            (r#"{"image_id": "a", "model": "m", "topk": [{"label": "x", "score": 0.1}, {"label": "y", "score": 0.5}]}"#, 1),
            ("[1, 2]", 1),
            ("not json", 1),
        ] {
            match PredictionSet::parse(bad, "p") {
                Err(EvalError::Schema { line: l, .. }) => assert_eq!(l, line, "{bad}"),
                other => panic!("{bad}: {other:?}"),
            }
        }
    }
}
