//! The JSON input format and the error/exit-code mapping shared by all commands.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::decomposition::BundleDatum;
use crate::lattice::{ExtensionForm, Violation};
use crate::linalg::{CMat, C64};
use crate::structure::ComplexStructure;

pub const DEFAULT_TOL: f64 = 1e-9;

/// Process exit status of every command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Ok = 0,
    Parse = 1,
    FormInvalid = 2,
    Degenerate = 3,
    RiemannFails = 4,
    Inconsistent = 5,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

/// Complex matrices are lists of rows of `[re, im]` pairs.
pub type ComplexRows = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputDocument {
    pub m: usize,
    pub d: usize,
    /// `[2d][2m][2m]`.
    #[serde(rename = "A")]
    pub a: Vec<Vec<Vec<i64>>>,
    /// `2m × m` period matrix.
    #[serde(rename = "V")]
    pub v: ComplexRows,
    /// `2d × d` period matrix.
    #[serde(rename = "U")]
    pub u: ComplexRows,
    /// `d × 2m`, values of `φ` on the basis of `Γ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<ComplexRows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Just the extension tensor; extra fields are ignored so a full
/// [`InputDocument`] is also accepted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormDocument {
    pub m: usize,
    pub d: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<Vec<i64>>>,
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(ParseError),
    #[error("malformed input: {0}")]
    Shape(String),
    #[error("extension form is not alternating:\n{}", list(.0))]
    Form(Vec<Violation>),
    #[error("degenerate complex structure {which}: singular-value ratio {ratio:.3e} <= tolerance {tol:.3e}")]
    Degenerate { which: String, ratio: f64, tol: f64 },
    #[error("Riemann relation fails: residual {residual:.3e} > {tol:.3e} x scale {scale:.3e}")]
    Riemann { residual: f64, scale: f64, tol: f64 },
    #[error("internal consistency check failed:\n{}", .0.join("\n"))]
    Inconsistent(Vec<String>),
    #[error("{0}")]
    Usage(String),
}

fn list(v: &[Violation]) -> String {
    v.iter().map(|x| format!("  {x}")).collect::<Vec<_>>().join("\n")
}

impl ReportError {
    pub fn exit_status(&self) -> ExitStatus {
        match self {
            ReportError::Io { .. } | ReportError::Parse(_) | ReportError::Shape(_) | ReportError::Usage(_) => {
                ExitStatus::Parse
            }
            ReportError::Form(_) => ExitStatus::FormInvalid,
            ReportError::Degenerate { .. } => ExitStatus::Degenerate,
            ReportError::Riemann { .. } => ExitStatus::RiemannFails,
            ReportError::Inconsistent(_) => ExitStatus::Inconsistent,
        }
    }
}

/// A JSON syntax or type error with the offending source line.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub context: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "parse error at line {}, column {}: {}", self.line, self.column, self.message)?;
        writeln!(f, "{:>5} | {}", self.line, self.context)?;
        write!(f, "{:>5} | {}^", "", " ".repeat(self.column.saturating_sub(1)))
    }
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T, ReportError> {
    serde_json::from_str(text).map_err(|e| {
        let line = e.line();
        let context = text.lines().nth(line.saturating_sub(1)).unwrap_or("").to_string();
        ReportError::Parse(ParseError {
            line,
            column: e.column(),
            message: e.to_string(),
            context,
        })
    })
}

pub fn read_file(path: &Path) -> Result<String, ReportError> {
    std::fs::read_to_string(path).map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn complex_matrix(name: &str, rows: &ComplexRows, nrows: usize, ncols: usize) -> Result<CMat, ReportError> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(ReportError::Shape(format!(
            "{name} must be {nrows} rows of {ncols} [re, im] pairs"
        )));
    }
    if rows.iter().flatten().flatten().any(|x| !x.is_finite()) {
        return Err(ReportError::Shape(format!("{name} has a non-finite entry")));
    }
    Ok(CMat::from_fn(nrows, ncols, |r, c| {
        let [re, im] = rows[r][c];
        C64::new(re, im)
    }))
}

pub fn complex_rows(m: &CMat) -> ComplexRows {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
        .collect()
}

fn checked_form(m: usize, d: usize, a: &[Vec<Vec<i64>>]) -> Result<ExtensionForm, ReportError> {
    if m == 0 || d == 0 {
        return Err(ReportError::Shape("m and d must be positive".into()));
    }
    let (n, r) = (2 * m, 2 * d);
    if a.len() != r || a.iter().any(|s| s.len() != n || s.iter().any(|row| row.len() != n)) {
        return Err(ReportError::Shape(format!("A must have shape [{r}][{n}][{n}]")));
    }
    let form = ExtensionForm::from_nested(a).map_err(|e| ReportError::Shape(e.to_string()))?;
    let violations = form.validate();
    if !violations.is_empty() {
        return Err(ReportError::Form(violations));
    }
    Ok(form)
}

impl FormDocument {
    pub fn parse(text: &str) -> Result<Self, ReportError> {
        parse_json(text)
    }

    pub fn form(&self) -> Result<ExtensionForm, ReportError> {
        checked_form(self.m, self.d, &self.a)
    }
}

/// Components of a parsed document that passed the shape and form checks.
#[derive(Debug, Clone)]
pub struct Parsed {
    pub form: ExtensionForm,
    pub base: ComplexStructure,
    pub fibre: ComplexStructure,
    pub phi: Option<CMat>,
}

impl InputDocument {
    pub fn parse(text: &str) -> Result<Self, ReportError> {
        parse_json(text)
    }

    pub fn load(path: &Path) -> Result<Self, ReportError> {
        Self::parse(&read_file(path)?)
    }

    /// Shapes and the alternating property; no numerical checks.
    pub fn components(&self) -> Result<Parsed, ReportError> {
        let form = checked_form(self.m, self.d, &self.a)?;
        let base = ComplexStructure::new(complex_matrix("V", &self.v, 2 * self.m, self.m)?)
            .map_err(|e| ReportError::Shape(e.to_string()))?;
        let fibre = ComplexStructure::new(complex_matrix("U", &self.u, 2 * self.d, self.d)?)
            .map_err(|e| ReportError::Shape(e.to_string()))?;
        let phi = self
            .phi
            .as_ref()
            .map(|p| complex_matrix("phi", p, self.d, 2 * self.m))
            .transpose()?;
        if let Some(t) = self.tol {
            if !(t.is_finite() && t > 0.0) {
                return Err(ReportError::Shape(format!("tol must be positive, got {t}")));
            }
        }
        Ok(Parsed {
            form,
            base,
            fibre,
            phi,
        })
    }

    pub fn from_parts(
        form: &ExtensionForm,
        base: &ComplexStructure,
        fibre: &ComplexStructure,
        phi: Option<&CMat>,
    ) -> Self {
        InputDocument {
            m: base.half_rank(),
            d: fibre.half_rank(),
            a: form.to_nested(),
            v: complex_rows(base.period()),
            u: complex_rows(fibre.period()),
            phi: phi.map(complex_rows),
            tol: None,
            seed: None,
        }
    }

    pub fn from_datum(datum: &BundleDatum) -> Self {
        Self::from_parts(&datum.form, &datum.base, &datum.fibre, datum.phi.as_ref())
    }

    /// SHA-256 of the canonical single-line serialization.
    pub fn sha256(&self) -> String {
        let text = crate::json::to_compact_string(self).expect("documents serialize");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

/// `--tol` beats the document's `tol`, which beats `TBI_TOL`, which beats
/// [`DEFAULT_TOL`].
pub fn resolve_tol(flag: Option<f64>, doc: Option<f64>, env: Option<f64>) -> f64 {
    flag.or(doc).or(env).unwrap_or(DEFAULT_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn catalog_documents_round_trip() {
        for datum in [catalog::iwasawa_datum(), catalog::product_datum(2, 1)] {
            let doc = InputDocument::from_datum(&datum);
            let text = crate::json::to_string(&doc).unwrap();
            let back = InputDocument::parse(&text).unwrap();
            assert_eq!(back, doc);
            let parts = back.components().unwrap();
            assert_eq!(parts.form, datum.form);
            assert_eq!(parts.base, datum.base);
        }
    }

    #[test]
    fn parse_errors_carry_line_context() {
        let text = "{\n  \"m\": 1,\n  \"d\": oops\n}";
        match InputDocument::parse(text) {
            Err(ReportError::Parse(p)) => {
                assert_eq!(p.line, 3);
                assert_eq!(p.context, "  \"d\": oops");
                assert!(p.to_string().contains("line 3"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let mut v = serde_json::to_value(InputDocument::from_datum(&catalog::iwasawa_datum())).unwrap();
        v["extra"] = serde_json::json!(1);
        let err = InputDocument::parse(&v.to_string()).unwrap_err();
        assert_eq!(err.exit_status(), ExitStatus::Parse);
    }

    #[test]
    fn form_violations_map_to_exit_two() {
        let mut doc = InputDocument::from_datum(&catalog::iwasawa_datum());
        doc.a[1][0][3] = 5;
        let err = doc.components().unwrap_err();
        assert_eq!(err.exit_status(), ExitStatus::FormInvalid);
        assert!(err.to_string().contains("(2,1,4)"), "{err}");
    }

    #[test]
    fn shape_errors_map_to_exit_one() {
        let mut doc = InputDocument::from_datum(&catalog::iwasawa_datum());
        doc.v.pop();
        assert_eq!(doc.components().unwrap_err().exit_status(), ExitStatus::Parse);
        let mut doc = InputDocument::from_datum(&catalog::iwasawa_datum());
        doc.m = 3;
        assert_eq!(doc.components().unwrap_err().exit_status(), ExitStatus::Parse);
    }

    #[test]
    fn tolerance_precedence() {
        assert_eq!(resolve_tol(Some(1e-3), Some(1e-4), Some(1e-5)), 1e-3);
        assert_eq!(resolve_tol(None, Some(1e-4), Some(1e-5)), 1e-4);
        assert_eq!(resolve_tol(None, None, Some(1e-5)), 1e-5);
        assert_eq!(resolve_tol(None, None, None), DEFAULT_TOL);
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let doc = InputDocument::from_datum(&catalog::iwasawa_datum());
        assert_eq!(doc.sha256(), doc.clone().sha256());
        assert_eq!(doc.sha256().len(), 64);
        let mut other = doc.clone();
        other.seed = Some(1);
        assert_ne!(doc.sha256(), other.sha256());
    }

    #[test]
    fn form_document_accepts_full_documents() {
        let doc = InputDocument::from_datum(&catalog::iwasawa_datum());
        let text = crate::json::to_string(&doc).unwrap();
        let form = FormDocument::parse(&text).unwrap().form().unwrap();
        assert_eq!(form, catalog::iwasawa_form());
    }
}
