//! The parameter variety `T B_A ⊂ Gr(m,2m) × Gr(d,2d)`: local equations in a
//! graph chart, the codimension bound, and randomized point sampling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::decomposition::{riemann_check, DecomposeError, RiemannVerdict};
use crate::lattice::ExtensionForm;
use crate::linalg::{self, CMat, C64, ZERO};
use crate::structure::{gaussian, random_structure_with, ComplexStructure, StructureError, DEFAULT_TOL_DET};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VarietyError {
    #[error("base structure: {0}")]
    Base(StructureError),
    #[error("chart: {0}")]
    Chart(StructureError),
    #[error("rank mismatch: form base rank {base_rank} / fibre rank {fibre_rank}, V half rank {v}, chart size {u}")]
    Ranks {
        base_rank: usize,
        fibre_rank: usize,
        v: usize,
        u: usize,
    },
    #[error("no point found in {attempts} attempts (best excess singular value {best_residual:.3e})")]
    Exhausted { attempts: usize, best_residual: f64 },
    #[error(transparent)]
    Decompose(#[from] DecomposeError),
    #[error("extension form is not alternating")]
    InvalidForm,
}

/// `w_{h,ℓ} = A(v_h, v_ℓ) ∈ Λ ⊗ ℂ` for `h < ℓ`, with the graph-chart residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalEquations {
    /// `(h, ℓ, w_{h,ℓ})`, 0-based, `h < ℓ`.
    pub w_vectors: Vec<(usize, usize, Vec<C64>)>,
    pub chart: CMat,
    /// `w'' − U*·w'` per pair, same order as `w_vectors`.
    pub residuals: Vec<Vec<C64>>,
    /// `max_k Σ_{ij} |A^k_{ij}| |v_{ih}| |v_{jℓ}|`, a bound on `|w_{h,ℓ}|`.
    pub bounds: Vec<f64>,
}

impl LocalEquations {
    pub fn residual_norm(&self) -> f64 {
        self.residuals
            .iter()
            .map(|r| linalg::max_abs_slice(r))
            .fold(0.0, f64::max)
    }

    /// Bound on `|w''|` and `|U*·w'|` over all pairs: the largest `|w|`
    /// bound times `max(1, ‖U*‖_∞)`.
    pub fn scale(&self) -> f64 {
        let chart_norm = (0..self.chart.nrows())
            .map(|r| self.chart.row(r).iter().map(|z| z.norm()).sum::<f64>())
            .fold(1.0, f64::max);
        self.bounds.iter().copied().fold(0.0, f64::max) * chart_norm
    }

    pub fn is_member(&self, tol: f64) -> bool {
        self.residual_norm() <= tol * self.scale()
    }
}

fn apply(m: &CMat, x: &[C64]) -> Vec<C64> {
    (0..m.nrows())
        .map(|r| x.iter().enumerate().map(|(c, &v)| m[(r, c)] * v).sum())
        .collect()
}

/// `A(x, y)` for complex lattice-coordinate vectors.
fn eval_complex(form: &ExtensionForm, x: &[C64], y: &[C64]) -> Vec<C64> {
    (0..form.fibre_rank())
        .map(|k| {
            let mut acc = ZERO;
            for (i, xi) in x.iter().enumerate() {
                for (j, yj) in y.iter().enumerate() {
                    let c = form.get(k, i, j);
                    if c != 0 {
                        acc += xi * yj * c as f64;
                    }
                }
            }
            acc
        })
        .collect()
}

fn w_vectors(form: &ExtensionForm, v: &ComplexStructure) -> Vec<(usize, usize, Vec<C64>)> {
    let p = v.period();
    let m = v.half_rank();
    let col = |h: usize| -> Vec<C64> { p.column(h).iter().copied().collect() };
    let mut out = Vec::with_capacity(m * m.saturating_sub(1) / 2);
    for h in 0..m {
        for l in h + 1..m {
            out.push((h, l, eval_complex(form, &col(h), &col(l))));
        }
    }
    out
}

/// Equations of `T B_A` near `(V, graph(U*))`: each `w_{h,ℓ}` must lie in
/// the graph `{(u', U*·u')}`.
pub fn local_equations(
    form: &ExtensionForm,
    v: &ComplexStructure,
    chart: &CMat,
    tol: f64,
) -> Result<LocalEquations, VarietyError> {
    let d = chart.nrows();
    if form.base_rank() != 2 * v.half_rank() || form.fibre_rank() != 2 * d || chart.ncols() != d {
        return Err(VarietyError::Ranks {
            base_rank: form.base_rank(),
            fibre_rank: form.fibre_rank(),
            v: v.half_rank(),
            u: d,
        });
    }
    v.validate(tol).map_err(VarietyError::Base)?;
    ComplexStructure::from_chart(chart)
        .and_then(|u| u.validate(tol))
        .map_err(VarietyError::Chart)?;
    let w = w_vectors(form, v);
    let p = v.period();
    let bounds = w
        .iter()
        .map(|&(h, l, _)| {
            (0..form.fibre_rank())
                .map(|k| {
                    let mut acc = 0.0;
                    for i in 0..p.nrows() {
                        for j in 0..p.nrows() {
                            acc += (form.get(k, i, j) as f64).abs() * p[(i, h)].norm() * p[(j, l)].norm();
                        }
                    }
                    acc
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let residuals = w
        .iter()
        .map(|(_, _, w)| {
            let (top, bottom) = w.split_at(d);
            let mapped = apply(chart, top);
            bottom.iter().zip(&mapped).map(|(a, b)| a - b).collect()
        })
        .collect();
    Ok(LocalEquations {
        w_vectors: w,
        chart: chart.clone(),
        residuals,
        bounds,
    })
}

/// `d · m(m−1)/2`, the bound on the codimension of `T B_A`.
pub fn codim_bound(m: usize, d: usize) -> usize {
    d * m * m.saturating_sub(1) / 2
}

/// A point of `T B_A` found by [`sample_point`].
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePoint {
    pub base: ComplexStructure,
    pub fibre: ComplexStructure,
    /// 1-based index of the successful attempt.
    pub attempts: usize,
    pub verdict: RiemannVerdict,
}

/// Searches `T B_A` by solving for `U` given a random `V`.
///
/// Each attempt draws `V`, spans `S = span{w_{h,ℓ}}`, and when
/// `dim S ≤ d` completes `S` with Gaussian vectors to a `d`-dimensional `U`,
/// accepting it if `U` is non-degenerate and the Riemann check passes.
/// Attempt `t` draws from stream `t` of a ChaCha generator seeded with
/// `seed`, so the result depends only on `(A, seed)`.
pub fn sample_point(
    form: &ExtensionForm,
    seed: u64,
    max_attempts: usize,
    tol: f64,
) -> Result<SamplePoint, VarietyError> {
    if !form.validate().is_empty() {
        return Err(VarietyError::InvalidForm);
    }
    let m = form.base_rank() / 2;
    let d = form.fibre_rank() / 2;
    let mut best = f64::INFINITY;
    for attempt in 0..max_attempts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(attempt as u64);
        let v = random_structure_with(m, &mut rng).map_err(VarietyError::Base)?;
        let w = w_vectors(form, &v);
        let mut span = CMat::zeros(2 * d, w.len());
        for (c, (_, _, wv)) in w.iter().enumerate() {
            for (r, &x) in wv.iter().enumerate() {
                span[(r, c)] = x;
            }
        }
        let scale = linalg::max_abs(&span);
        let (basis, info) = linalg::column_space(&span, tol * scale);
        if info.rank > d {
            let sv = linalg::singular_values(&span);
            best = best.min(sv[d] / scale);
            continue;
        }
        let mut period = CMat::zeros(2 * d, d);
        period.columns_mut(0, info.rank).copy_from(&basis);
        for c in info.rank..d {
            for r in 0..2 * d {
                period[(r, c)] = gaussian(&mut rng);
            }
        }
        let u = ComplexStructure::new(period).map_err(VarietyError::Chart)?;
        if !u.check(DEFAULT_TOL_DET).is_ok() {
            continue;
        }
        let verdict = riemann_check(form, &v, &u, tol)?;
        if verdict.member {
            return Ok(SamplePoint {
                base: v,
                fibre: u,
                attempts: attempt + 1,
                verdict,
            });
        }
        best = best.min(verdict.relative_residual());
    }
    Err(VarietyError::Exhausted {
        attempts: max_attempts,
        best_residual: best,
    })
}

/// Seed of the `index`-th independent trial derived from a base seed.
pub fn trial_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 step
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs `count` independent trials concurrently; results are in trial order.
pub fn sample_many(
    form: &ExtensionForm,
    seed: u64,
    count: usize,
    max_attempts: usize,
    tol: f64,
) -> Vec<Result<SamplePoint, VarietyError>> {
    (0..count)
        .into_par_iter()
        .map(|i| sample_point(form, trial_seed(seed, i as u64), max_attempts, tol))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::structure::random_structure;

    const TOL: f64 = 1e-9;

    #[test]
    fn codimension_bound_values() {
        assert_eq!(codim_bound(2, 1), 1);
        assert_eq!(codim_bound(1, 5), 0);
        assert_eq!(codim_bound(3, 2), 6);
    }

    #[test]
    fn zero_form_has_trivial_equations() {
        let a = ExtensionForm::zero(6, 2).unwrap();
        let v = random_structure(3, 1).unwrap();
        let chart = CMat::from_element(1, 1, C64::new(0.3, 1.1));
        let eq = local_equations(&a, &v, &chart, TOL).unwrap();
        assert_eq!(eq.w_vectors.len(), 3);
        assert_eq!(eq.residual_norm(), 0.0);
        assert!(eq.is_member(TOL));
    }

    #[test]
    fn iwasawa_standard_chart() {
        let d = catalog::iwasawa_datum();
        let chart = d.fibre.chart().unwrap();
        let eq = local_equations(&d.form, &d.base, &chart, TOL).unwrap();
        assert_eq!(eq.w_vectors.len(), 1);
        assert_eq!((eq.w_vectors[0].0, eq.w_vectors[0].1), (0, 1));
        assert!(eq.residual_norm() < 1e-15);
        assert!(eq.is_member(TOL));
        assert!(riemann_check(&d.form, &d.base, &d.fibre, TOL).unwrap().member);
    }

    #[test]
    fn w_vectors_are_antisymmetric() {
        let inst = catalog::gaussian_instance(4, 2, 3, catalog::InstanceKind::Mixed);
        let p = inst.base.period();
        for (h, l, w) in w_vectors(&inst.form, &inst.base) {
            let col = |i: usize| -> Vec<C64> { p.column(i).iter().copied().collect() };
            let rev = eval_complex(&inst.form, &col(l), &col(h));
            for (a, b) in w.iter().zip(&rev) {
                assert!((a + b).norm() <= 1e-12 * a.norm().max(1.0));
            }
        }
    }

    #[test]
    fn degenerate_chart_is_rejected() {
        let a = catalog::iwasawa_form();
        let v = ComplexStructure::standard(2);
        let chart = CMat::from_element(1, 1, C64::new(2.0, 0.0));
        assert!(matches!(
            local_equations(&a, &v, &chart, TOL),
            Err(VarietyError::Chart(_))
        ));
    }

    #[test]
    fn verdicts_agree_with_riemann_check() {
        let mut members = 0;
        for seed in 0..50u64 {
            let m = 2 + (seed % 3) as usize;
            let d = 1 + (seed % 2) as usize;
            let inst = catalog::gaussian_instance(m, d, seed, catalog::InstanceKind::Mixed);
            let fibre = if seed % 2 == 0 {
                inst.fibre.clone()
            } else {
                random_structure(d, seed).unwrap()
            };
            let chart = fibre.chart().unwrap();
            let eq = local_equations(&inst.form, &inst.base, &chart, TOL).unwrap();
            let verdict = riemann_check(&inst.form, &inst.base, &fibre, TOL).unwrap();
            assert_eq!(eq.is_member(TOL), verdict.member, "seed {seed}");
            members += usize::from(verdict.member);
        }
        assert_eq!(members, 25);
    }

    #[test]
    fn sampler_trivial_cases() {
        let zero = ExtensionForm::zero(4, 2).unwrap();
        let p = sample_point(&zero, 1, 10, TOL).unwrap();
        assert_eq!(p.attempts, 1);
        let mut curve = ExtensionForm::zero(2, 4).unwrap();
        curve.set_pair(0, 0, 1, 3);
        curve.set_pair(3, 0, 1, -1);
        for seed in 0..10 {
            assert!(sample_point(&curve, seed, 5, TOL).is_ok());
        }
    }

    #[test]
    fn sampler_finds_iwasawa_points() {
        let a = catalog::iwasawa_form();
        for seed in 0..10 {
            let p = sample_point(&a, seed, 100, TOL).unwrap();
            assert!(riemann_check(&a, &p.base, &p.fibre, TOL).unwrap().member);
            let again = sample_point(&a, seed, 100, TOL).unwrap();
            assert_eq!(p, again);
            let parts = crate::decomposition::decompose(&a, &p.base, &p.fibre, TOL).unwrap();
            assert!(parts.forbidden.max_abs() <= TOL * parts.scale);
        }
    }

    #[test]
    fn sampler_reports_exhaustion() {
        // Three independent w's in a 2-dimensional Λ ⊗ ℂ: dim S = 2 > d = 1.
        let inst = catalog::gaussian_instance(3, 1, 0, catalog::InstanceKind::Mixed);
        match sample_point(&inst.form, 0, 3, TOL) {
            Err(VarietyError::Exhausted { attempts, best_residual }) => {
                assert_eq!(attempts, 3);
                assert!(best_residual > 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sample_many_is_ordered_and_deterministic() {
        let a = catalog::iwasawa_form();
        let first = sample_many(&a, 9, 6, 100, TOL);
        let second = sample_many(&a, 9, 6, 100, TOL);
        assert_eq!(first, second);
        for (i, r) in first.iter().enumerate() {
            assert_eq!(r, &sample_point(&a, trial_seed(9, i as u64), 100, TOL));
        }
    }
}
