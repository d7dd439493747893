use crate::error::CliError;
use serde::Deserialize;
use std::path::Path;

/// One trial as supplied by the user, before validation.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialInputRecord {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub endpoint: Option<String>,
    pub scale: String,
    pub point: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    #[serde(default)]
    pub ci_level: Option<f64>,
    pub mcid_benefit: f64,
    #[serde(default)]
    pub mcid_harm: Option<f64>,
    #[serde(default)]
    pub rope_lower: Option<f64>,
    #[serde(default)]
    pub rope_upper: Option<f64>,
    #[serde(default)]
    pub cer: Option<f64>,
    #[serde(default)]
    pub direction: Option<String>,
}

pub const FIELDS: &[&str] = &[
    "id",
    "name",
    "endpoint",
    "scale",
    "point",
    "ci_lower",
    "ci_upper",
    "ci_level",
    "mcid_benefit",
    "mcid_harm",
    "rope_lower",
    "rope_upper",
    "cer",
    "direction",
];

const REQUIRED: &[&str] = &[
    "id",
    "name",
    "scale",
    "point",
    "ci_lower",
    "ci_upper",
    "mcid_benefit",
];

/// Where a record came from, for diagnostics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Position {
    JsonIndex(usize),
    CsvLine(u64),
}

impl std::fmt::Display for Position {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Position::JsonIndex(i) => write!(f, "record {}", i + 1),
            Position::CsvLine(l) => write!(f, "line {l}"),
        }
    }
}

pub fn load(path: &Path) -> Result<Vec<(Position, TrialInputRecord)>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let is_csv = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        parse_csv(&text)
    } else {
        parse_json(&text)
    }
}

pub fn parse_json(text: &str) -> Result<Vec<(Position, TrialInputRecord)>, CliError> {
    let records: Vec<TrialInputRecord> = serde_json::from_str(text).map_err(|e| {
        CliError::Input(format!(
            "JSON input, line {} column {}: {e}",
            e.line(),
            e.column()
        ))
    })?;
    Ok(records
        .into_iter()
        .enumerate()
        .map(|(i, r)| (Position::JsonIndex(i), r))
        .collect())
}

pub fn parse_csv(text: &str) -> Result<Vec<(Position, TrialInputRecord)>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| CliError::Input(format!("CSV header: {e}")))?
        .clone();
    for (col, h) in headers.iter().enumerate() {
        if !FIELDS.contains(&h) {
            return Err(CliError::Input(format!(
                "CSV line 1, column {}: unknown field `{h}`",
                col + 1
            )));
        }
    }
    for required in REQUIRED {
        if !headers.iter().any(|h| h == *required) {
            return Err(CliError::Input(format!(
                "CSV line 1: missing required column `{required}`"
            )));
        }
    }
    let mut out = Vec::new();
    for row in reader.deserialize::<TrialInputRecord>() {
        let record = row.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            CliError::Input(format!("CSV line {line}: {e}"))
        })?;
        // Header is line 1; data rows follow in order.
        let line = out.len() as u64 + 2;
        out.push((Position::CsvLine(line), record));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_json_agree() {
        let json = r#"[{"id":"a","name":"A","scale":"HR","point":0.8,"ci_lower":0.7,"ci_upper":0.9,"mcid_benefit":0.85,"cer":0.2}]"#;
        let csv = "id,name,scale,point,ci_lower,ci_upper,mcid_benefit,mcid_harm,cer\na,A,HR,0.8,0.7,0.9,0.85,,0.2\n";
        let j = parse_json(json).unwrap();
        let c = parse_csv(csv).unwrap();
        assert_eq!(j[0].1, c[0].1);
        assert_eq!(c[0].0, Position::CsvLine(2));
    }

    #[test]
    fn unknown_fields_rejected_with_position() {
        let json = "[\n{\"id\":\"a\",\"name\":\"A\",\"scale\":\"HR\",\"point\":0.8,\"ci_lower\":0.7,\"ci_upper\":0.9,\"mcid_benefit\":0.85,\"colour\":1}]";
        let err = parse_json(json).unwrap_err().to_string();
        assert!(err.contains("line 2") && err.contains("colour"), "{err}");

        let csv = "id,name,scale,point,ci_lower,ci_upper,mcid_benefit,colour\n";
        let err = parse_csv(csv).unwrap_err().to_string();
        assert!(err.contains("column 8") && err.contains("colour"), "{err}");
    }

    #[test]
    fn missing_column_and_bad_number() {
        let err = parse_csv("id,name,scale\n").unwrap_err().to_string();
        assert!(err.contains("point"));
        let csv = "id,name,scale,point,ci_lower,ci_upper,mcid_benefit\na,A,HR,x,0.7,0.9,0.85\n";
        let err = parse_csv(csv).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn quoted_csv_fields() {
        let csv = "id,name,scale,point,ci_lower,ci_upper,mcid_benefit\n\"a\",\"Trial, phase 3\",RR,0.8,0.7,0.9,0.85\n";
        assert_eq!(parse_csv(csv).unwrap()[0].1.name, "Trial, phase 3");
    }
}
