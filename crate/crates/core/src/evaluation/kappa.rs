use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};

/// One rater's binary support labels over a shared candidate list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationSet {
    pub rater_id: String,
    #[serde(deserialize_with = "binary_labels")]
    pub labels: Vec<bool>,
}

impl AnnotationSet {
    pub fn new(rater_id: impl Into<String>, labels: Vec<bool>) -> Self {
        AnnotationSet { rater_id: rater_id.into(), labels }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::corpus(path.display().to_string(), e.to_string()))
    }
}

/// Accepts `true`/`false` or `0`/`1`.
fn binary_labels<'de, D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Vec<bool>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Label {
        Bool(bool),
        Int(u8),
    }
    Vec::<Label>::deserialize(deserializer)?
        .into_iter()
        .map(|l| match l {
            Label::Bool(b) => Ok(b),
            Label::Int(0) => Ok(false),
            Label::Int(1) => Ok(true),
            Label::Int(n) => Err(serde::de::Error::custom(format!("label {n} is not binary"))),
        })
        .collect()
}

/// Cohen's kappa for two binary raters: `(p_o - p_e) / (1 - p_e)`.
pub fn cohen_kappa(a: &AnnotationSet, b: &AnnotationSet) -> Result<f64> {
    let n = a.labels.len();
    if n != b.labels.len() {
        return Err(Error::InvalidArgument(format!(
            "raters {} and {} labelled {} and {} candidates",
            a.rater_id,
            b.rater_id,
            n,
            b.labels.len()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("no labels to compare".into()));
    }
    let agree = a.labels.iter().zip(&b.labels).filter(|(x, y)| x == y).count();
    let a_pos = a.labels.iter().filter(|&&x| x).count();
    let b_pos = b.labels.iter().filter(|&&x| x).count();
    // Expected agreement in units of 1/n^2, kept integral to detect p_e = 1 exactly.
    let expected = a_pos * b_pos + (n - a_pos) * (n - b_pos);
    if expected == n * n {
        return if agree == n { Ok(1.0) } else { Err(Error::UndefinedKappa) };
    }
    let n = n as f64;
    let p_o = agree as f64 / n;
    let p_e = expected as f64 / (n * n);
    Ok((p_o - p_e) / (1.0 - p_e))
}
