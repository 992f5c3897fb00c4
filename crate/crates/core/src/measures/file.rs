//! JSON model files.
//!
//! ```json
//! { "id": "M1", "alphabet_size": 2, "variant": "markov",
//!   "transition": [[0.7, 0.3], [0.2, 0.8]], "initial": [0.4, 0.6] }
//! ```
//!
//! Variants: `iid` (`p`), `markov` (`transition`, `initial`),
//! `hidden_markov` (`hidden_states`, `transition`, `initial`, `emission`),
//! `mixture` (`weight`, `components`: exactly two nested models).
//! Unknown keys are rejected. `schema_version`, when present, must be 1.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{ProcessModel, Source};
use crate::error::{Error, Result};

pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Iid,
    Markov,
    HiddenMarkov,
    Mixture,
}

/// On-disk form of a [`ProcessModel`]. Which parameter keys are required
/// depends on `variant`; keys belonging to another variant are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub alphabet_size: usize,
    pub variant: Variant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden_states: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emission: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<Vec<ModelDoc>>,
}

fn required<T>(field: Option<T>, name: &str, variant: Variant) -> Result<T> {
    field.ok_or_else(|| Error::InvalidModel(format!("variant {variant:?} requires `{name}`")))
}

impl ModelDoc {
    fn empty(model: &ProcessModel, variant: Variant) -> Self {
        Self {
            schema_version: None,
            id: Some(model.id().to_owned()),
            alphabet_size: model.alphabet().size(),
            variant,
            p: None,
            hidden_states: None,
            transition: None,
            initial: None,
            emission: None,
            weight: None,
            components: None,
        }
    }

    fn stray_keys(&self) -> Vec<&'static str> {
        let allowed: &[&str] = match self.variant {
            Variant::Iid => &["p"],
            Variant::Markov => &["transition", "initial"],
            Variant::HiddenMarkov => &["hidden_states", "transition", "initial", "emission"],
            Variant::Mixture => &["weight", "components"],
        };
        [
            ("p", self.p.is_some()),
            ("hidden_states", self.hidden_states.is_some()),
            ("transition", self.transition.is_some()),
            ("initial", self.initial.is_some()),
            ("emission", self.emission.is_some()),
            ("weight", self.weight.is_some()),
            ("components", self.components.is_some()),
        ]
        .into_iter()
        .filter(|(k, present)| *present && !allowed.contains(k))
        .map(|(k, _)| k)
        .collect()
    }

    pub fn into_model(self) -> Result<ProcessModel> {
        if let Some(v) = self.schema_version {
            if v != MODEL_SCHEMA_VERSION {
                return Err(Error::InvalidModel(format!("unsupported schema_version {v}")));
            }
        }
        let stray = self.stray_keys();
        if !stray.is_empty() {
            return Err(Error::InvalidModel(format!(
                "keys {stray:?} do not apply to variant {:?}",
                self.variant
            )));
        }
        let variant = self.variant;
        let model = match variant {
            Variant::Iid => ProcessModel::iid(required(self.p, "p", variant)?)?,
            Variant::Markov => ProcessModel::markov(
                required(self.transition, "transition", variant)?,
                required(self.initial, "initial", variant)?,
            )?,
            Variant::HiddenMarkov => {
                let states = required(self.hidden_states, "hidden_states", variant)?;
                let transition = required(self.transition, "transition", variant)?;
                if transition.len() != states {
                    return Err(Error::InvalidModel(format!(
                        "hidden_states = {states} but transition has {} rows",
                        transition.len()
                    )));
                }
                ProcessModel::hidden_markov(
                    transition,
                    required(self.initial, "initial", variant)?,
                    required(self.emission, "emission", variant)?,
                )?
            }
            Variant::Mixture => {
                let weight = required(self.weight, "weight", variant)?;
                let components = required(self.components, "components", variant)?;
                let [a, b]: [ModelDoc; 2] = components.try_into().map_err(|v: Vec<_>| {
                    Error::InvalidModel(format!("mixture needs 2 components, got {}", v.len()))
                })?;
                ProcessModel::mixture(weight, a.into_model()?, b.into_model()?)?
            }
        };
        if self.alphabet_size != model.alphabet().size() {
            return Err(Error::InvalidModel(format!(
                "alphabet_size = {} but parameters imply {}",
                self.alphabet_size,
                model.alphabet().size()
            )));
        }
        Ok(match self.id {
            Some(id) => model.with_id(id),
            None => model,
        })
    }

    pub fn from_model(model: &ProcessModel) -> Self {
        match model.source() {
            Source::Iid(m) => Self {
                p: Some(m.p.clone()),
                ..Self::empty(model, Variant::Iid)
            },
            Source::Markov(m) => Self {
                transition: Some(m.transition.to_rows()),
                initial: Some(m.initial.clone()),
                ..Self::empty(model, Variant::Markov)
            },
            Source::HiddenMarkov(h) => Self {
                hidden_states: Some(h.hidden_states()),
                transition: Some(h.transition.to_rows()),
                initial: Some(h.initial.clone()),
                emission: Some(h.emission.to_rows()),
                ..Self::empty(model, Variant::HiddenMarkov)
            },
            Source::Mixture(m) => Self {
                weight: Some(m.weight),
                components: Some(m.components.iter().map(ModelDoc::from_model).collect()),
                ..Self::empty(model, Variant::Mixture)
            },
        }
    }
}

/// Parses a model document; `origin` labels error messages.
pub fn parse_model(text: &str, origin: &Path) -> Result<ProcessModel> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: ModelDoc = serde_path_to_error::deserialize(de).map_err(|e| {
        let inner = e.inner();
        Error::ModelFile {
            path: origin.to_owned(),
            message: format!(
                "at `{}` (line {}, column {}): {}",
                e.path(),
                inner.line(),
                inner.column(),
                inner
            ),
        }
    })?;
    doc.into_model().map_err(|e| Error::ModelFile {
        path: origin.to_owned(),
        message: e.to_string(),
    })
}

pub fn load_model(path: &Path) -> Result<ProcessModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::ModelFile {
        path: path.to_owned(),
        message: e.to_string(),
    })?;
    parse_model(&text, path)
}

pub fn model_to_json(model: &ProcessModel) -> String {
    serde_json::to_string_pretty(&ModelDoc::from_model(model)).expect("model serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::reference;

    #[test]
    fn reference_models_round_trip() {
        for m in [
            reference::m1(),
            reference::h1(),
            reference::iid_uniform_binary(),
            reference::mixture_m1_uniform(),
        ] {
            let back = parse_model(&model_to_json(&m), Path::new("mem")).unwrap();
            assert_eq!(back, m);
        }
    }

    #[test]
    fn unknown_key_rejected_with_location() {
        let text = r#"{
  "variant": "iid",
  "alphabet_size": 2,
  "p": [0.5, 0.5],
  "colour": "red"
}"#;
        let err = parse_model(text, Path::new("m.json")).unwrap_err().to_string();
        assert!(err.contains("m.json"), "{err}");
        assert!(err.contains("colour"), "{err}");
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn nested_error_reports_json_path() {
        let text = r#"{"variant": "mixture", "alphabet_size": 2, "weight": 0.5,
  "components": [
    {"variant": "iid", "alphabet_size": 2, "p": [0.5, 0.5]},
    {"variant": "markov", "alphabet_size": 2, "transition": "oops", "initial": [0.5, 0.5]}
  ]}"#;
        let err = parse_model(text, Path::new("m.json")).unwrap_err().to_string();
        assert!(err.contains("components[1].transition"), "{err}");
        assert!(err.contains("line 4"), "{err}");
    }

    #[test]
    fn keys_of_other_variants_rejected() {
        let text = r#"{"variant": "iid", "alphabet_size": 2, "p": [0.5, 0.5], "weight": 0.5}"#;
        let err = parse_model(text, Path::new("m.json")).unwrap_err().to_string();
        assert!(err.contains("weight"), "{err}");
    }

    #[test]
    fn declared_alphabet_must_match() {
        let text = r#"{"variant": "iid", "alphabet_size": 3, "p": [0.5, 0.5]}"#;
        assert!(parse_model(text, Path::new("m.json")).is_err());
    }
}
