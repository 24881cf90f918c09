//! Report schemas shared by the engines and the CLI.
//!
//! JSON reports all carry `{rule_type, n, N, checks: [{name, pass, ...}]}`
//! plus the tool version and the resolved run configuration; CSV tables carry
//! the same metadata as leading `#` comment lines so a fixed-seed rerun is
//! byte-identical.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{json, Value};

use crate::dynamics::GeneratorSlice;
use crate::pairalg::IdentityReport;
use crate::rules::RuleType;
use crate::word::{word_string, WordSpace};

/// One named check with optional numeric discrepancy and failure witness.
#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub discrepancy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_word: Option<String>,
}

impl CheckRecord {
    pub fn new(name: impl Into<String>, pass: bool) -> Self {
        CheckRecord {
            name: name.into(),
            pass,
            discrepancy: None,
            witness_word: None,
        }
    }

    pub fn with_discrepancy(mut self, d: f64) -> Self {
        self.discrepancy = Some(d);
        self
    }
}

/// Combined verification report: identity suite plus scattering checks.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub rule_type: RuleType,
    pub n: usize,
    #[serde(rename = "N")]
    pub species: usize,
    pub seed: u64,
    pub checks: Vec<CheckRecord>,
}

impl VerificationReport {
    pub fn from_identities(report: &IdentityReport, seed: u64) -> Self {
        VerificationReport {
            rule_type: report.rule_type,
            n: report.n,
            species: report.species,
            seed,
            checks: report
                .checks
                .iter()
                .map(|c| CheckRecord {
                    name: c.name.clone(),
                    pass: c.pass,
                    discrepancy: None,
                    witness_word: c.witness_word.clone(),
                })
                .collect(),
        }
    }

    pub fn push(&mut self, record: CheckRecord) {
        self.checks.push(record);
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Wrap a payload with the tool version and the resolved configuration.
pub fn wrap_report(payload: Value, config: &BTreeMap<String, String>) -> Value {
    json!({
        "version": crate::version(),
        "config": config,
        "report": payload,
    })
}

/// Render a float for CSV: shortest round-trip form, deterministic.
pub fn render_float(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v}")
    }
}

/// One row of the shared probability CSV schema.
#[derive(Debug, Clone, Default)]
pub struct ProbabilityRow {
    pub positions: Vec<i64>,
    pub word: Vec<u8>,
    pub p_bethe: Option<f64>,
    pub p_series: Option<f64>,
    pub p_mc: Option<f64>,
    pub abs_diff: Option<f64>,
    pub imag_residual: Option<f64>,
    pub conv_delta: Option<f64>,
}

/// Render the shared CSV: `x_1..x_n, word, p_bethe, p_series, p_mc,
/// abs_diff, imag_residual, conv_delta`, with metadata comment lines.
pub fn probability_csv(
    n: usize,
    rows: &[ProbabilityRow],
    config: &BTreeMap<String, String>,
) -> String {
    let mut out = String::new();
    out.push_str(&format!("# version={}\n", crate::version()));
    for (key, value) in config {
        out.push_str(&format!("# {key}={value}\n"));
    }
    for i in 1..=n {
        out.push_str(&format!("x_{i},"));
    }
    out.push_str("word,p_bethe,p_series,p_mc,abs_diff,imag_residual,conv_delta\n");
    let cell = |v: Option<f64>| v.map(render_float).unwrap_or_default();
    for row in rows {
        for p in &row.positions {
            out.push_str(&format!("{p},"));
        }
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            word_string(&row.word),
            cell(row.p_bethe),
            cell(row.p_series),
            cell(row.p_mc),
            cell(row.abs_diff),
            cell(row.imag_residual),
            cell(row.conv_delta),
        ));
    }
    out
}

/// Generator slice as JSON nested arrays with word-index labels.
pub fn generator_slice_json(slice: &GeneratorSlice) -> Value {
    let n = slice.source.len();
    let space = WordSpace::new(n, slice.species).expect("slice dimensions are validated");
    let labels: Vec<String> = (0..space.dim()).map(|i| word_string(&space.word(i))).collect();
    let targets: BTreeMap<String, Value> = slice
        .rates
        .iter()
        .map(|(target, matrix)| {
            let key = target
                .iter()
                .map(|p| p.to_string())
                .collect::<Vec<_>>()
                .join(",");
            let rows: Vec<Vec<u64>> = (0..matrix.dim)
                .map(|r| (0..matrix.dim).map(|c| matrix.get(r, c)).collect())
                .collect();
            (key, json!(rows))
        })
        .collect();
    json!({
        "rule_type": slice.rule,
        "n": n,
        "N": slice.species,
        "source": slice.source,
        "word_labels": labels,
        "targets": targets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_is_deterministic_and_carries_metadata() {
        let rows = vec![ProbabilityRow {
            positions: vec![0, 1],
            word: vec![2, 1],
            p_bethe: Some(0.25),
            p_series: Some(0.25),
            abs_diff: Some(0.0),
            ..Default::default()
        }];
        let mut config = BTreeMap::new();
        config.insert("seed".to_string(), "7".to_string());
        let a = probability_csv(2, &rows, &config);
        let b = probability_csv(2, &rows, &config);
        assert_eq!(a, b);
        assert!(a.starts_with(&format!("# version={}\n# seed=7\n", crate::version())));
        assert!(a.contains("x_1,x_2,word,"));
        assert!(a.contains("0,1,21,0.25,0.25,,0,,"));
    }

    #[test]
    fn generator_json_labels_words() {
        let slice =
            crate::dynamics::extract_generator(&[0, 1], 2, RuleType::DropPush).unwrap();
        let value = generator_slice_json(&slice);
        assert_eq!(value["word_labels"], json!(["11", "12", "21", "22"]));
        assert_eq!(value["targets"]["1,2"][2][1], json!(1));
    }
}
