use tbi_core::commands;
use tbi_core::document::{ExitStatus, FormDocument, InputDocument};
use tbi_core::json;

const TOL: f64 = 1e-9;

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

#[test]
fn product_torus_has_binomial_hodge_numbers() {
    let doc = commands::catalog("product").unwrap();
    let n = doc.m + doc.d;
    let report = commands::invariants(&doc, TOL).unwrap();
    let want: Vec<usize> = (0..=n).map(|p| binomial(n, p)).collect();
    assert_eq!(report.cohomology.h_o, want);
    // a torus has trivial tangent bundle, so h^p(Θ) = n·h^p(O)
    let theta: Vec<usize> = want.iter().map(|h| n * h).collect();
    assert_eq!(report.cohomology.h_theta, theta);
    assert!(report.consistency.is_empty());
}

#[test]
fn report_survives_a_text_round_trip() {
    let doc = commands::catalog("iwasawa").unwrap();
    let text = json::to_string(&doc).unwrap();
    let back = InputDocument::parse(&text).unwrap();
    assert_eq!(back, doc);
    let a = json::to_string(&commands::invariants(&doc, TOL).unwrap()).unwrap();
    let b = json::to_string(&commands::invariants(&back, TOL).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn hash_ignores_layout() {
    let doc = commands::catalog("iwasawa").unwrap();
    let compact = json::to_compact_string(&doc).unwrap();
    let value: serde_json::Value = serde_json::from_str(&compact).unwrap();
    let mut reordered = serde_json::Map::new();
    for key in ["U", "V", "A", "d", "m"] {
        reordered.insert(key.to_string(), value[key].clone());
    }
    let spaced = serde_json::to_string_pretty(&reordered).unwrap();
    assert_eq!(InputDocument::parse(&spaced).unwrap().sha256(), doc.sha256());
}

#[test]
fn sampled_points_validate() {
    let doc = commands::catalog("iwasawa").unwrap();
    let form = FormDocument { m: doc.m, d: doc.d, a: doc.a.clone() };
    let report = commands::sample(&form, 3, 5, 100, TOL).unwrap();
    assert_eq!(report.found, 5);
    for point in &report.points {
        let text = json::to_string(point.document.as_ref().unwrap()).unwrap();
        let parsed = InputDocument::parse(&text).unwrap();
        let (_, v) = commands::validate(&parsed, TOL).unwrap();
        assert!(v.riemann.member);
    }
}

#[test]
fn broken_alternation_is_reported() {
    let mut doc = commands::catalog("iwasawa").unwrap();
    doc.a[0][1][1] = 3;
    let err = commands::validate(&doc, TOL).unwrap_err();
    assert_eq!(err.exit_status(), ExitStatus::FormInvalid);
}
