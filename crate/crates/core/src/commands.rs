//! The `tbi` subcommands as library functions returning serializable reports.

use std::fmt::Write as _;

use serde::Serialize;

use crate::catalog;
use crate::cohomology::{CohomologyEngine, CohomologyReport};
use crate::curve::{self, CurveError};
use crate::decomposition::{riemann_check, BundleDatum};
use crate::document::{ComplexRows, FormDocument, InputDocument, ReportError};
use crate::lattice::{commutator, group_inverse, group_multiply, ExtensionForm, GroupElement};
use crate::linalg::CTensor3;
use crate::variety::{sample_many, trial_seed};

/// Band for flagging rank decisions close to the threshold.
pub const WARNING_BAND: f64 = 10.0;

/// Largest acceptable relative `|d₂ ∘ d₂|`.
pub const D2_SQUARED_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiemannSummary {
    pub member: bool,
    pub residual: f64,
    pub scale: f64,
    pub relative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Validation {
    pub m: usize,
    pub d: usize,
    pub tol: f64,
    /// `σ_min/σ_max` of `(Ω | Ω̄)` for `V` and `U`.
    pub base_ratio: f64,
    pub fibre_ratio: f64,
    pub riemann: RiemannSummary,
}

/// All load-time checks, in order: shapes (exit 1), form (2), structures
/// (3), Riemann relation (4).
pub fn validate(doc: &InputDocument, tol: f64) -> Result<(BundleDatum, Validation), ReportError> {
    let parts = doc.components()?;
    let mut ratios = [0.0; 2];
    for (slot, (which, s)) in ratios.iter_mut().zip([("V", &parts.base), ("U", &parts.fibre)]) {
        let check = s.check(tol);
        if !check.is_ok() {
            return Err(ReportError::Degenerate {
                which: which.to_string(),
                ratio: check.ratio,
                tol,
            });
        }
        *slot = check.ratio;
    }
    let verdict = riemann_check(&parts.form, &parts.base, &parts.fibre, tol)
        .map_err(|e| ReportError::Inconsistent(vec![e.to_string()]))?;
    if !verdict.member {
        return Err(ReportError::Riemann {
            residual: verdict.residual_norm,
            scale: verdict.scale,
            tol,
        });
    }
    let validation = Validation {
        m: doc.m,
        d: doc.d,
        tol,
        base_ratio: ratios[0],
        fibre_ratio: ratios[1],
        riemann: RiemannSummary {
            member: verdict.member,
            residual: verdict.residual_norm,
            scale: verdict.scale,
            relative: verdict.relative_residual(),
        },
    };
    let datum = BundleDatum {
        form: parts.form,
        base: parts.base,
        fibre: parts.fibre,
        phi: parts.phi,
    };
    Ok((datum, validation))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecompositionNorms {
    pub complex: f64,
    pub hermitian: f64,
    pub forbidden: f64,
    pub scale: f64,
    pub reconstruction_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupChecks {
    pub commutators: usize,
    pub associativity: usize,
    pub inverses: usize,
    pub failures: Vec<String>,
}

/// Exact group-law checks on the lifts of the basis of `Γ`.
pub fn group_checks(form: &ExtensionForm) -> GroupChecks {
    let n = form.base_rank();
    let lifts: Vec<GroupElement> = (0..n).map(|i| GroupElement::lift(form, i)).collect();
    let id = GroupElement::identity(form);
    let mut failures = Vec::new();
    let mut counts = (0, 0, 0);
    for (i, gi) in lifts.iter().enumerate() {
        counts.2 += 1;
        let inv = group_inverse(gi, form).expect("ranks match");
        if group_multiply(gi, &inv, form).expect("ranks match") != id {
            failures.push(format!("e{} * e{}^-1 != 1", i + 1, i + 1));
        }
        for (j, gj) in lifts.iter().enumerate() {
            if i < j {
                counts.0 += 1;
                let c = commutator(gi, gj, form).expect("ranks match");
                let unit = vec![0; n];
                let (mut x, mut y) = (unit.clone(), unit);
                x[i] = 1;
                y[j] = 1;
                if c.lambda != form.apply(&x, &y) || c.gamma.iter().any(|&g| g != 0) {
                    failures.push(format!("[e{}, e{}] != A(e{}, e{})", i + 1, j + 1, i + 1, j + 1));
                }
            }
            for (k, gk) in lifts.iter().enumerate() {
                counts.1 += 1;
                let left = group_multiply(&group_multiply(gi, gj, form).expect("ranks match"), gk, form)
                    .expect("ranks match");
                let right = group_multiply(gi, &group_multiply(gj, gk, form).expect("ranks match"), form)
                    .expect("ranks match");
                if left != right {
                    failures.push(format!("(e{} e{}) e{} != e{} (e{} e{})", i + 1, j + 1, k + 1, i + 1, j + 1, k + 1));
                }
            }
        }
    }
    GroupChecks {
        commutators: counts.0,
        associativity: counts.1,
        inverses: counts.2,
        failures,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportDocument {
    pub input_sha256: String,
    pub m: usize,
    pub d: usize,
    pub tol: f64,
    pub seed: Option<u64>,
    pub riemann: RiemannSummary,
    pub decomposition: DecompositionNorms,
    pub cohomology: CohomologyReport,
    pub group_checks: GroupChecks,
    pub warnings: Vec<String>,
    /// Failed internal identities; non-empty means exit status 5.
    pub consistency: Vec<String>,
}

fn inconsistent(e: impl std::fmt::Display) -> ReportError {
    ReportError::Inconsistent(vec![e.to_string()])
}

pub fn invariants(doc: &InputDocument, tol: f64) -> Result<ReportDocument, ReportError> {
    let (datum, validation) = validate(doc, tol)?;
    let engine = CohomologyEngine::new(&datum, tol).map_err(inconsistent)?;
    let parts = engine.parts();
    let residuals = parts.residuals(&datum.form);
    let cohomology = engine.report();
    let checks = group_checks(&datum.form);

    let mut warnings = Vec::new();
    for r in &cohomology.diagnostics.ranks {
        if r.info.is_near_threshold(WARNING_BAND) {
            warnings.push(format!(
                "rank of {} is near the threshold {:.3e} (smallest kept {:?}, largest dropped {:?})",
                r.name, r.info.threshold, r.info.smallest_kept, r.info.largest_dropped
            ));
        }
    }
    for (name, ratio) in [("V", validation.base_ratio), ("U", validation.fibre_ratio)] {
        if ratio < WARNING_BAND * tol {
            warnings.push(format!("structure {name} is nearly degenerate (ratio {ratio:.3e})"));
        }
    }
    let riemann = validation.riemann;
    if riemann.residual > riemann.scale * tol / WARNING_BAND {
        warnings.push(format!(
            "Riemann residual {:.3e} is within {WARNING_BAND}x of the tolerance",
            riemann.relative
        ));
    }

    let mut consistency = cohomology.consistency_issues();
    if cohomology.diagnostics.d2_squared_residual > D2_SQUARED_LIMIT {
        consistency.push(format!(
            "d2 o d2 residual {:.3e} exceeds {D2_SQUARED_LIMIT:.0e}",
            cohomology.diagnostics.d2_squared_residual
        ));
    }
    consistency.extend(checks.failures.iter().cloned());

    Ok(ReportDocument {
        input_sha256: doc.sha256(),
        m: doc.m,
        d: doc.d,
        tol,
        seed: doc.seed,
        riemann,
        decomposition: DecompositionNorms {
            complex: parts.complex.max_abs(),
            hermitian: parts.hermitian.max_abs(),
            forbidden: parts.forbidden.max_abs(),
            scale: parts.scale,
            reconstruction_error: residuals.reconstruction,
        },
        cohomology,
        group_checks: checks,
        warnings,
        consistency,
    })
}

fn grid(out: &mut String, name: &str, g: &[Vec<usize>]) {
    let m = g.len() - 1;
    let d = g[0].len() - 1;
    let _ = writeln!(out, "{name} (rows j = {d}..0, columns i = 0..{m})");
    for j in (0..=d).rev() {
        let row: Vec<String> = (0..=m).map(|i| format!("{:>4}", g[i][j])).collect();
        let _ = writeln!(out, "  j={j:<2}{}", row.join(""));
    }
}

fn join(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

/// Human-readable rendering of a report.
pub fn render_table(r: &ReportDocument) -> String {
    let c = &r.cohomology;
    let mut out = String::new();
    let _ = writeln!(out, "m = {}, d = {}, tol = {:e}", r.m, r.d, r.tol);
    let _ = writeln!(out, "input sha256      {}", r.input_sha256);
    let _ = writeln!(out, "Riemann residual  {:.3e} (relative)", r.riemann.relative);
    let _ = writeln!(
        out,
        "|B'| |B\"| |forb|  {:.3e} {:.3e} {:.3e}",
        r.decomposition.complex, r.decomposition.hermitian, r.decomposition.forbidden
    );
    let _ = writeln!(out, "h^p(O_X)          {}", join(&c.h_o));
    let _ = writeln!(out, "h^0(Omega^1)      {}", c.h0_omega1);
    let _ = writeln!(out, "closed 1-forms    {}", c.closed_1forms);
    let _ = writeln!(out, "h^1(O_X)          {}", c.h1_o);
    let _ = writeln!(out, "parallelizable    {}", if c.parallelizable { "yes" } else { "no" });
    let _ = writeln!(out, "h^p(Theta_X)      {}", join(&c.h_theta));
    let case = c
        .kodaira_spencer
        .case
        .map_or("-".to_string(), |k| format!("case {}", k.number()));
    let _ = writeln!(
        out,
        "H^1(Theta) target {} (m^2+m), actual {}, {case}",
        c.ks_target_dim, c.kodaira_spencer.h1_theta
    );
    grid(&mut out, "E2", &c.e2);
    grid(&mut out, "E3", &c.e3);
    let _ = writeln!(out, "d2 o d2 residual  {:.3e}", c.diagnostics.d2_squared_residual);
    let _ = writeln!(
        out,
        "group law         {} commutators, {} triples, {} inverses, {} failures",
        r.group_checks.commutators,
        r.group_checks.associativity,
        r.group_checks.inverses,
        r.group_checks.failures.len()
    );
    for w in &r.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    for issue in &r.consistency {
        let _ = writeln!(out, "inconsistent: {issue}");
    }
    out
}

fn tensor_rows(t: &CTensor3) -> Vec<ComplexRows> {
    t.to_nested()
        .into_iter()
        .map(|slice| {
            slice
                .into_iter()
                .map(|row| row.into_iter().map(|z| [z.re, z.im]).collect())
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionReport {
    pub m: usize,
    pub d: usize,
    pub tol: f64,
    pub norms: DecompositionNorms,
    pub complex_antisymmetry: f64,
    pub conjugation: f64,
    pub hermitian_mirror: f64,
    /// `B'[k][a][b]`, `[re, im]`.
    pub complex: Vec<ComplexRows>,
    /// `B"[k][a][b̄]`.
    pub hermitian: Vec<ComplexRows>,
    pub forbidden: Vec<ComplexRows>,
}

pub fn decompose(doc: &InputDocument, tol: f64) -> Result<DecompositionReport, ReportError> {
    let (datum, _) = validate(doc, tol)?;
    let parts = datum.decompose(tol).map_err(inconsistent)?;
    let res = parts.residuals(&datum.form);
    Ok(DecompositionReport {
        m: doc.m,
        d: doc.d,
        tol,
        norms: DecompositionNorms {
            complex: parts.complex.max_abs(),
            hermitian: parts.hermitian.max_abs(),
            forbidden: parts.forbidden.max_abs(),
            scale: parts.scale,
            reconstruction_error: res.reconstruction,
        },
        complex_antisymmetry: res.complex_antisymmetry,
        conjugation: res.conjugation,
        hermitian_mirror: res.hermitian_mirror,
        complex: tensor_rows(&parts.complex),
        hermitian: tensor_rows(&parts.hermitian),
        forbidden: tensor_rows(&parts.forbidden),
    })
}

pub const CATALOG_NAMES: [&str; 2] = ["iwasawa", "product"];

/// `product` is the trivial bundle with `m = 2`, `d = 1`.
pub fn catalog(name: &str) -> Result<InputDocument, ReportError> {
    let datum = match name {
        "iwasawa" => catalog::iwasawa_datum(),
        "product" => catalog::product_datum(2, 1),
        other => {
            return Err(ReportError::Usage(format!(
                "unknown catalog entry '{other}' (known: {})",
                CATALOG_NAMES.join(", ")
            )))
        }
    };
    Ok(InputDocument::from_datum(&datum))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleOutcome {
    pub index: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attempts: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub document: Option<InputDocument>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleReport {
    pub seed: u64,
    pub count: usize,
    pub max_attempts: usize,
    pub found: usize,
    pub points: Vec<SampleOutcome>,
}

/// Trial `i` uses [`trial_seed`]`(seed, i)`; trials run concurrently.
pub fn sample(
    form_doc: &FormDocument,
    seed: u64,
    count: usize,
    max_attempts: usize,
    tol: f64,
) -> Result<SampleReport, ReportError> {
    let form = form_doc.form()?;
    let points: Vec<SampleOutcome> = sample_many(&form, seed, count, max_attempts, tol)
        .into_iter()
        .enumerate()
        .map(|(index, r)| {
            let s = trial_seed(seed, index as u64);
            match r {
                Ok(p) => {
                    let mut doc = InputDocument::from_parts(&form, &p.base, &p.fibre, None);
                    doc.tol = Some(tol);
                    doc.seed = Some(s);
                    SampleOutcome {
                        index,
                        seed: s,
                        attempts: Some(p.attempts),
                        document: Some(doc),
                        error: None,
                    }
                }
                Err(e) => SampleOutcome {
                    index,
                    seed: s,
                    attempts: None,
                    document: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(SampleReport {
        seed,
        count,
        max_attempts,
        found: points.iter().filter(|p| p.document.is_some()).count(),
        points,
    })
}

/// Parses `e<k>` (lift of the `k`-th basis vector of `Γ`), `f<k>` (the
/// `k`-th central generator), or `l₁,…,l_{2d}:g₁,…,g_{2m}`; indices are 1-based.
pub fn parse_element(text: &str, form: &ExtensionForm) -> Result<GroupElement, ReportError> {
    let bad = |why: &str| ReportError::Usage(format!("bad group element '{text}': {why}"));
    let t = text.trim();
    if let Some((l, g)) = t.split_once(':') {
        let ints = |s: &str| -> Result<Vec<i64>, ReportError> {
            if s.trim().is_empty() {
                return Ok(Vec::new());
            }
            s.split(',')
                .map(|x| x.trim().parse::<i64>().map_err(|_| bad("expected integers")))
                .collect()
        };
        let (lambda, gamma) = (ints(l)?, ints(g)?);
        if lambda.len() != form.fibre_rank() || gamma.len() != form.base_rank() {
            return Err(bad(&format!(
                "expected {} central and {} base coordinates",
                form.fibre_rank(),
                form.base_rank()
            )));
        }
        return Ok(GroupElement::new(lambda, gamma));
    }
    let (kind, rest) = t.split_at(t.chars().next().map_or(0, char::len_utf8));
    let k: usize = rest.parse().map_err(|_| bad("expected e<k>, f<k> or l:g"))?;
    let limit = match kind {
        "e" => form.base_rank(),
        "f" => form.fibre_rank(),
        _ => return Err(bad("expected e<k>, f<k> or l:g")),
    };
    if k == 0 || k > limit {
        return Err(bad(&format!("index must be in 1..={limit}")));
    }
    Ok(if kind == "e" {
        GroupElement::lift(form, k - 1)
    } else {
        GroupElement::central(form, k - 1)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupReport {
    pub g1: GroupElement,
    pub g2: GroupElement,
    pub product: GroupElement,
    pub inverse_g1: GroupElement,
    pub inverse_g2: GroupElement,
    pub commutator: GroupElement,
    /// `A(γ₁, γ₂)`, which the commutator's central part must equal.
    pub form_value: Vec<i64>,
}

pub fn group(form_doc: &FormDocument, g1: &str, g2: &str) -> Result<GroupReport, ReportError> {
    let form = form_doc.form()?;
    let a = parse_element(g1, &form)?;
    let b = parse_element(g2, &form)?;
    let lat = |e: crate::lattice::LatticeError| ReportError::Usage(e.to_string());
    let comm = commutator(&a, &b, &form).map_err(lat)?;
    let form_value = form.apply(&a.gamma, &b.gamma);
    if comm.lambda != form_value {
        return Err(inconsistent("commutator differs from A(g1, g2)"));
    }
    Ok(GroupReport {
        product: group_multiply(&a, &b, &form).map_err(lat)?,
        inverse_g1: group_inverse(&a, &form).map_err(lat)?,
        inverse_g2: group_inverse(&b, &form).map_err(lat)?,
        commutator: comm,
        form_value,
        g1: a,
        g2: b,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveReport {
    pub genus: u64,
    pub fibre_dim: u64,
    pub kuranishi_dim: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub divisibility_index: Option<u64>,
}

pub fn curve(genus: u64, fibre_dim: u64, chern: Option<&[i64]>) -> Result<CurveReport, ReportError> {
    let usage = |e: CurveError| ReportError::Usage(e.to_string());
    let kuranishi_dim = curve::kuranishi_dim(genus, fibre_dim).map_err(usage)?;
    let divisibility_index = chern
        .map(|c| curve::chern_divisibility(c, fibre_dim as usize))
        .transpose()
        .map_err(usage)?;
    Ok(CurveReport {
        genus,
        fibre_dim,
        kuranishi_dim,
        divisibility_index,
    })
}
