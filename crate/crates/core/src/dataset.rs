//! UCR-style dataset parsing and z-normalization.
//!
//! Input files carry one series per line: a class label followed by the
//! values, separated by commas, tabs, or whitespace. Labels are remapped to
//! dense integers `0..c` in order of first appearance so downstream scatter
//! computations can index classes directly.

use thiserror::Error;

/// Variance threshold below which a series is treated as constant.
const CONSTANT_EPS: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("input contains no series")]
    EmptyInput,
    #[error("line {line}: no values after the label")]
    EmptyRow { line: usize },
    #[error("line {line}, column {column}: expected a number, found {token:?}")]
    NonNumeric { line: usize, column: usize, token: String },
    #[error("line {line}, column {column}: value is not finite")]
    NonFinite { line: usize, column: usize },
    #[error("line {line}: row has {found} values but previous rows have {expected}")]
    InconsistentRowLength { line: usize, expected: usize, found: usize },
}

/// Field separator of a UCR-style file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Delimiter {
    Comma,
    Tab,
    Whitespace,
}

/// One parsed line: the dense class label and the raw values.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSeries {
    pub label: usize,
    pub values: Vec<f64>,
}

/// A z-normalized series with its dataset index and optional class label.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub id: usize,
    pub label: Option<usize>,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A collection of equal-length series.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub series: Vec<TimeSeries>,
    pub num_classes: usize,
    pub series_length: usize,
}

impl Dataset {
    /// Number of series.
    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    /// Z-normalize raw series and assign ids by position.
    pub fn from_raw(raw: &[RawSeries]) -> Result<Self, ParseError> {
        if raw.is_empty() {
            return Err(ParseError::EmptyInput);
        }
        let series_length = raw[0].values.len();
        let num_classes = raw.iter().map(|r| r.label + 1).max().unwrap_or(0);
        let series = raw
            .iter()
            .enumerate()
            .map(|(id, r)| TimeSeries { id, label: Some(r.label), values: znormalize(&r.values) })
            .collect();
        Ok(Self { series, num_classes, series_length })
    }

    /// Parse and z-normalize a UCR-style file in one step.
    pub fn parse(text: &str, delimiter: Delimiter) -> Result<Self, ParseError> {
        Self::from_raw(&parse_ucr(text, delimiter)?)
    }

    /// Ground-truth labels of all series, or `None` if any series is unlabeled.
    pub fn labels(&self) -> Option<Vec<usize>> {
        self.series.iter().map(|s| s.label).collect()
    }
}

/// Parse a UCR-style file: one series per line, label first.
///
/// Labels are remapped to contiguous integers in order of first appearance.
/// All rows must have the same number of values.
pub fn parse_ucr(text: &str, delimiter: Delimiter) -> Result<Vec<RawSeries>, ParseError> {
    let mut out: Vec<RawSeries> = Vec::new();
    let mut label_ids: Vec<i64> = Vec::new();
    let mut expected_len: Option<usize> = None;

    for (line_idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = line_idx + 1;
        let tokens: Vec<&str> = match delimiter {
            Delimiter::Comma => line.split(',').map(str::trim).collect(),
            Delimiter::Tab => line.split('\t').map(str::trim).collect(),
            Delimiter::Whitespace => line.split_whitespace().collect(),
        };

        let raw_label = parse_integer_label(tokens[0], line_no, 1)?;
        let label = match label_ids.iter().position(|&l| l == raw_label) {
            Some(idx) => idx,
            None => {
                label_ids.push(raw_label);
                label_ids.len() - 1
            }
        };

        let mut values = Vec::with_capacity(tokens.len() - 1);
        for (i, token) in tokens.iter().enumerate().skip(1) {
            let column = i + 1;
            let value: f64 = token
                .parse()
                .map_err(|_| ParseError::NonNumeric { line: line_no, column, token: (*token).to_string() })?;
            if !value.is_finite() {
                return Err(ParseError::NonFinite { line: line_no, column });
            }
            values.push(value);
        }
        if values.is_empty() {
            return Err(ParseError::EmptyRow { line: line_no });
        }
        match expected_len {
            None => expected_len = Some(values.len()),
            Some(expected) if expected != values.len() => {
                return Err(ParseError::InconsistentRowLength {
                    line: line_no,
                    expected,
                    found: values.len(),
                });
            }
            Some(_) => {}
        }
        out.push(RawSeries { label, values });
    }

    if out.is_empty() {
        return Err(ParseError::EmptyInput);
    }
    Ok(out)
}

/// UCR labels are integers but often serialized as floats ("1.0000000e+00").
fn parse_integer_label(token: &str, line: usize, column: usize) -> Result<i64, ParseError> {
    let err = || ParseError::NonNumeric { line, column, token: token.to_string() };
    let value: f64 = token.parse().map_err(|_| err())?;
    if !value.is_finite() || (value - value.round()).abs() > 1e-9 {
        return Err(err());
    }
    Ok(value.round() as i64)
}

/// Guess the delimiter from the first nonempty line.
///
/// Commas win over tabs, tabs over generic whitespace; defaults to
/// whitespace when neither appears.
pub fn detect_delimiter(text: &str) -> Delimiter {
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    if first.contains(',') {
        Delimiter::Comma
    } else if first.contains('\t') {
        Delimiter::Tab
    } else {
        Delimiter::Whitespace
    }
}

/// Z-normalize to zero mean and unit population standard deviation.
///
/// A constant series (population std below 1e-12) maps to all zeros instead
/// of erroring, so degenerate rows keep flowing through the pipeline.
pub fn znormalize(values: &[f64]) -> Vec<f64> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = variance.sqrt();
    if std < CONSTANT_EPS {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| (v - mean) / std).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn popstd(values: &[f64]) -> f64 {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
    }

    #[test]
    fn parses_two_series_and_remaps_labels() {
        let rows = parse_ucr("1,0.0,1.0\n2,1.0,0.0", Delimiter::Comma).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].label, 0);
        assert_eq!(rows[1].label, 1);
        assert_eq!(rows[0].values, vec![0.0, 1.0]);
    }

    #[test]
    fn label_remap_follows_first_appearance() {
        let rows = parse_ucr("5,1.0\n-1,2.0\n5,3.0", Delimiter::Comma).unwrap();
        assert_eq!(rows.iter().map(|r| r.label).collect::<Vec<_>>(), vec![0, 1, 0]);
    }

    #[test]
    fn accepts_float_formatted_labels() {
        let rows = parse_ucr("1.0000000e+00 0.5 0.7", Delimiter::Whitespace).unwrap();
        assert_eq!(rows[0].label, 0);
    }

    #[test]
    fn rejects_ragged_rows() {
        let err = parse_ucr("1,0.0\n2,1.0,2.0", Delimiter::Comma).unwrap_err();
        assert!(
            matches!(err, ParseError::InconsistentRowLength { line: 2, expected: 1, found: 2 }),
            "got {err:?}"
        );
    }

    #[test]
    fn rejects_non_numeric_with_position() {
        let err = parse_ucr("1,0.0,oops", Delimiter::Comma).unwrap_err();
        assert!(
            matches!(err, ParseError::NonNumeric { line: 1, column: 3, .. }),
            "got {err:?}"
        );
    }

    #[test]
    fn rejects_non_finite_values() {
        let err = parse_ucr("1,0.0,inf", Delimiter::Comma).unwrap_err();
        assert!(matches!(err, ParseError::NonFinite { line: 1, column: 3 }), "got {err:?}");
    }

    #[test]
    fn rejects_empty_input_and_label_only_rows() {
        assert!(matches!(parse_ucr("", Delimiter::Comma), Err(ParseError::EmptyInput)));
        assert!(matches!(parse_ucr("  \n\n", Delimiter::Comma), Err(ParseError::EmptyInput)));
        assert!(matches!(parse_ucr("1", Delimiter::Comma), Err(ParseError::EmptyRow { line: 1 })));
    }

    #[test]
    fn tab_and_whitespace_delimiters() {
        let tab = parse_ucr("1\t0.5\t0.7", Delimiter::Tab).unwrap();
        let ws = parse_ucr("1  0.5   0.7", Delimiter::Whitespace).unwrap();
        assert_eq!(tab[0].values, ws[0].values);
    }

    #[test]
    fn delimiter_detection() {
        assert_eq!(detect_delimiter("1,2,3"), Delimiter::Comma);
        assert_eq!(detect_delimiter("1\t2\t3"), Delimiter::Tab);
        assert_eq!(detect_delimiter("1 2 3"), Delimiter::Whitespace);
    }

    #[test]
    fn znormalize_zero_mean_input_scales_to_unit_std() {
        let out = znormalize(&[0.0, 1.0, -1.0]);
        let mean = out.iter().sum::<f64>() / 3.0;
        assert!(mean.abs() <= 1e-9);
        assert!((popstd(&out) - 1.0).abs() <= 1e-9);
        // zero-mean input: output is proportional to input
        let scale = out[1];
        assert!((out[2] + scale).abs() <= 1e-12);
        assert!(out[0].abs() <= 1e-12);
    }

    #[test]
    fn znormalize_constant_series_maps_to_zeros() {
        assert_eq!(znormalize(&[5.0, 5.0, 5.0]), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn znormalize_matches_two_pass_oracle() {
        // independent two-pass mean/std computation of (t - 2)/sqrt(2/3)
        let input = [1.0, 2.0, 3.0];
        let mean = input.iter().sum::<f64>() / 3.0;
        let std = (input.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 3.0).sqrt();
        let expected: Vec<f64> = input.iter().map(|v| (v - mean) / std).collect();
        let out = znormalize(&input);
        for (a, b) in out.iter().zip(&expected) {
            assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
        assert!((out[2] - 1.224744871391589).abs() <= 1e-12);
    }

    #[test]
    fn parse_then_normalize_preserves_shape() {
        let ds = Dataset::parse("1,1.0,2.0,4.0\n2,9.0,1.0,5.0\n1,3.0,3.0,3.0", Delimiter::Comma)
            .unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.series_length, 3);
        assert_eq!(ds.num_classes, 2);
        assert!(ds.series.iter().all(|s| s.len() == 3));
        assert_eq!(ds.series[2].values, vec![0.0, 0.0, 0.0]);
        assert_eq!(ds.labels(), Some(vec![0, 1, 0]));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn non_constant_output_has_zero_mean_unit_std(
                values in proptest::collection::vec(-1e3f64..1e3, 2..64)
            ) {
                prop_assume!(popstd(&values) > 1e-6);
                let out = znormalize(&values);
                let mean = out.iter().sum::<f64>() / out.len() as f64;
                prop_assert!(mean.abs() <= 1e-9);
                prop_assert!((popstd(&out) - 1.0).abs() <= 1e-9);
            }

            #[test]
            fn znormalize_is_idempotent(
                values in proptest::collection::vec(-1e3f64..1e3, 2..64)
            ) {
                let once = znormalize(&values);
                let twice = znormalize(&once);
                for (a, b) in once.iter().zip(&twice) {
                    prop_assert!((a - b).abs() <= 1e-9);
                }
            }
        }
    }
}
