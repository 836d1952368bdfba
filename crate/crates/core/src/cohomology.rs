//! Cohomology of `X` from the decomposed form: holomorphic 1-forms, the
//! Leray spectral sequence for `h^p(O_X)`, and `H^p(Θ_X)` through the
//! maps `b_p : V ⊗ H^p(O_X) → U ⊗ H^{p+1}(O_X)`.
//!
//! `E₂^{i,j} = Λ^i V̄^∨ ⊗ Λ^j Ū^∨` with basis `e_S ⊗ e_K` (row-major in
//! `(S, K)`), and `d₂(ω ⊗ η) = Σ_k (β_k ∧ ω) ⊗ ι_k η` where
//! `β_k = Σ_{a<b} B̄'^k_{ab} v̄^a ∧ v̄^b`.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::decomposition::{BundleDatum, DecomposeError, DecomposedForm};
use crate::exterior::{contract, wedge_left, wedge_pair, ExteriorBasis};
use crate::linalg::{self, CMat, RankInfo, C64, ZERO};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CohomologyError {
    #[error("degree {degree} out of range 0..={max}")]
    Degree { degree: usize, max: usize },
    #[error(transparent)]
    Decompose(#[from] DecomposeError),
}

/// One differential `d₂ : E₂^{i,j} → E₂^{i+2,j−1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct D2Map {
    pub source: (usize, usize),
    pub target: (usize, usize),
    pub matrix: CMat,
    pub rank: RankInfo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralTable {
    /// `e2[i][j] = C(m,i)·C(d,j)`.
    pub e2: Vec<Vec<usize>>,
    pub d2_maps: Vec<D2Map>,
    pub e3: Vec<Vec<usize>>,
    /// Orthonormal basis of `ker d₂ ∩ (im d₂)^⊥` in `E₂^{i,j}`, as columns.
    pub representatives: Vec<Vec<CMat>>,
    /// Largest `|d₂ ∘ d₂|` over composable pairs, relative to the product
    /// of the two factors' max-norms.
    pub d2_squared_residual: f64,
}

impl SpectralTable {
    pub fn d2(&self, i: usize, j: usize) -> Option<&D2Map> {
        self.d2_maps.iter().find(|map| map.source == (i, j))
    }

    /// `h^p = Σ_{i+j=p} dim E₃^{i,j}`.
    pub fn h(&self) -> Vec<usize> {
        let m = self.e3.len() - 1;
        let d = self.e3[0].len() - 1;
        let mut h = vec![0; m + d + 1];
        for (i, row) in self.e3.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                h[i + j] += v;
            }
        }
        h
    }

    fn euler(grid: &[Vec<usize>]) -> i64 {
        grid.iter()
            .enumerate()
            .flat_map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(move |(j, &v)| if (i + j) % 2 == 0 { v as i64 } else { -(v as i64) })
            })
            .sum()
    }

    pub fn euler_e2(&self) -> i64 {
        Self::euler(&self.e2)
    }

    pub fn euler_e3(&self) -> i64 {
        Self::euler(&self.e3)
    }
}

/// `dim H⁰(Ω¹_X)` and a basis of the annihilator of `Im B"` in `U^∨`.
#[derive(Debug, Clone, PartialEq)]
pub struct FormsDim {
    pub dim: usize,
    /// `d × k`, columns are functionals `β ∈ U^∨`.
    pub coker_basis: CMat,
    pub rank: RankInfo,
}

/// `dim H^p(Θ_X) = dim coker b_{p−1} + dim ker b_p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ThetaDims {
    pub dim: usize,
    pub coker_dim: usize,
    pub ker_dim: usize,
}

/// The cases of the `H¹(Θ_X)` estimate for elliptic fibres.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KsCase {
    /// `B" = 0`.
    HermitianZero,
    /// `B" ≠ 0` and `B' ≠ 0`.
    BothNonzero,
    /// `B' = 0`, `B" ≠ 0`.
    ComplexZero,
}

impl KsCase {
    pub fn number(self) -> u8 {
        match self {
            KsCase::HermitianZero => 1,
            KsCase::BothNonzero => 2,
            KsCase::ComplexZero => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct KodairaSpencer {
    pub h1_theta: usize,
    /// `m² + m`.
    pub target: usize,
    /// Only for `d = 1` and `A ≠ 0`.
    pub case: Option<KsCase>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedRank {
    pub name: String,
    #[serde(flatten)]
    pub info: RankInfo,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    /// Absolute singular-value cut, `tol · scale`.
    pub threshold: f64,
    pub scale: f64,
    pub d2_squared_residual: f64,
    pub ranks: Vec<NamedRank>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CohomologyReport {
    #[serde(rename = "h_O")]
    pub h_o: Vec<usize>,
    pub h0_omega1: usize,
    pub closed_1forms: usize,
    #[serde(rename = "h1_O")]
    pub h1_o: usize,
    pub parallelizable: bool,
    pub h_theta: Vec<usize>,
    pub ks_target_dim: usize,
    pub kodaira_spencer: KodairaSpencer,
    pub e2: Vec<Vec<usize>>,
    pub e3: Vec<Vec<usize>>,
    pub diagnostics: Diagnostics,
}

impl CohomologyReport {
    /// Identities every report must satisfy; a non-empty result means the
    /// rank decisions are inconsistent.
    pub fn consistency_issues(&self) -> Vec<String> {
        let mut issues = Vec::new();
        let n = self.h_o.len() - 1;
        if self.h_o[0] != 1 || self.h_o[n] != 1 {
            issues.push(format!("h^0 = {}, h^{n} = {}, expected 1", self.h_o[0], self.h_o[n]));
        }
        for p in 0..=n {
            if self.h_o[p] != self.h_o[n - p] {
                issues.push(format!("h^{p} = {} but h^{} = {}", self.h_o[p], n - p, self.h_o[n - p]));
                break;
            }
        }
        let euler: i64 = self
            .h_o
            .iter()
            .enumerate()
            .map(|(p, &h)| if p % 2 == 0 { h as i64 } else { -(h as i64) })
            .sum();
        if euler != 0 {
            issues.push(format!("alternating sum of h^p is {euler}"));
        }
        if n >= 1 && self.h_o[1] != self.h1_o {
            issues.push(format!(
                "spectral h^1 = {} disagrees with h^1(O) = {}",
                self.h_o[1], self.h1_o
            ));
        }
        if self.closed_1forms > self.h0_omega1 {
            issues.push("more closed 1-forms than 1-forms".to_string());
        }
        if (self.h0_omega1 == n) != self.parallelizable {
            issues.push(format!(
                "h^0(Ω¹) = {} but parallelizable = {}",
                self.h0_omega1, self.parallelizable
            ));
        }
        issues
    }
}

/// All cohomological invariants of one bundle.
#[derive(Debug, Clone)]
pub struct CohomologyEngine {
    parts: DecomposedForm,
    m: usize,
    d: usize,
    threshold: f64,
    ext_v: ExteriorBasis,
    ext_u: ExteriorBasis,
    table: SpectralTable,
    b_ranks: Vec<RankInfo>,
}

impl CohomologyEngine {
    pub fn new(datum: &BundleDatum, tol: f64) -> Result<Self, CohomologyError> {
        Ok(Self::from_parts(datum.decompose(tol)?))
    }

    pub fn from_parts(parts: DecomposedForm) -> Self {
        let m = parts.base_dim();
        let d = parts.fibre_dim();
        let threshold = parts.tol * parts.scale;
        let ext_v = ExteriorBasis::new(m);
        let ext_u = ExteriorBasis::new(d);
        let mut engine = CohomologyEngine {
            parts,
            m,
            d,
            threshold,
            ext_v,
            ext_u,
            table: SpectralTable {
                e2: Vec::new(),
                d2_maps: Vec::new(),
                e3: Vec::new(),
                representatives: Vec::new(),
                d2_squared_residual: 0.0,
            },
            b_ranks: Vec::new(),
        };
        engine.table = engine.build_table();
        engine.b_ranks = (0..m + d).map(|p| linalg::rank(&engine.b_map(p), threshold)).collect();
        engine
    }

    pub fn parts(&self) -> &DecomposedForm {
        &self.parts
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    fn block_dim(&self, i: usize, j: usize) -> usize {
        self.ext_v.dim(i) * self.ext_u.dim(j)
    }

    fn block_index(&self, j: usize, s: u32, k: u32) -> usize {
        self.ext_v.index(s) * self.ext_u.dim(j) + self.ext_u.index(k)
    }

    fn d2_matrix(&self, i: usize, j: usize) -> CMat {
        let (ti, tj) = (i + 2, j - 1);
        let mut out = CMat::zeros(self.block_dim(ti, tj), self.block_dim(i, j));
        let beta = &self.parts.conj_complex;
        for &s in self.ext_v.monomials(i) {
            for &kk in self.ext_u.monomials(j) {
                let col = self.block_index(j, s, kk);
                for k in 0..self.d {
                    let Some((sk, k2)) = contract(k, kk) else { continue };
                    for a in 0..self.m {
                        for b in a + 1..self.m {
                            let c = beta.get(k, a, b);
                            if c == ZERO {
                                continue;
                            }
                            if let Some((sw, s2)) = wedge_pair(a, b, s) {
                                let row = self.block_index(tj, s2, k2);
                                out[(row, col)] += c * f64::from(sk * sw);
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Left wedge with `v̄^b`: `E₂^{i,j} → E₂^{i+1,j}`.
    fn wedge_matrix(&self, b: usize, i: usize, j: usize) -> CMat {
        let mut out = CMat::zeros(self.block_dim(i + 1, j), self.block_dim(i, j));
        for &s in self.ext_v.monomials(i) {
            if let Some((sign, s2)) = wedge_left(b, s) {
                for &kk in self.ext_u.monomials(j) {
                    out[(self.block_index(j, s2, kk), self.block_index(j, s, kk))] += f64::from(sign);
                }
            }
        }
        out
    }

    fn build_table(&self) -> SpectralTable {
        let (m, d) = (self.m, self.d);
        let thr = self.threshold;
        let e2: Vec<Vec<usize>> = (0..=m)
            .map(|i| (0..=d).map(|j| self.block_dim(i, j)).collect())
            .collect();
        let sources: Vec<(usize, usize)> = (0..=m)
            .flat_map(|i| (1..=d).map(move |j| (i, j)))
            .filter(|&(i, _)| i + 2 <= m)
            .collect();
        let d2_maps: Vec<D2Map> = sources
            .par_iter()
            .map(|&(i, j)| {
                let matrix = self.d2_matrix(i, j);
                let rank = linalg::rank(&matrix, thr);
                D2Map {
                    source: (i, j),
                    target: (i + 2, j - 1),
                    matrix,
                    rank,
                }
            })
            .collect();
        let find = |i: usize, j: usize| d2_maps.iter().find(|map| map.source == (i, j));

        let mut d2_squared_residual: f64 = 0.0;
        for first in &d2_maps {
            let (ti, tj) = first.target;
            if let Some(second) = find(ti, tj) {
                let norm = linalg::max_abs(&first.matrix) * linalg::max_abs(&second.matrix);
                if norm > 0.0 {
                    let prod = &second.matrix * &first.matrix;
                    d2_squared_residual = d2_squared_residual.max(linalg::max_abs(&prod) / norm);
                }
            }
        }

        let blocks: Vec<(usize, usize)> = (0..=m).flat_map(|i| (0..=d).map(move |j| (i, j))).collect();
        let reps: Vec<CMat> = blocks
            .par_iter()
            .map(|&(i, j)| {
                let dim = e2[i][j];
                let kernel = match find(i, j) {
                    Some(out) => linalg::null_space(&out.matrix, thr).0,
                    None => CMat::identity(dim, dim),
                };
                let incoming = if i >= 2 && j < d { find(i - 2, j + 1) } else { None };
                match incoming {
                    Some(inc) if inc.rank.rank > 0 => {
                        let (image, _) = linalg::column_space(&inc.matrix, thr);
                        let inside = kernel.adjoint() * image;
                        let (inside, _) = linalg::column_space(&inside, f64::NEG_INFINITY);
                        let comp = linalg::orthogonal_complement(&inside, kernel.ncols());
                        &kernel * comp
                    }
                    _ => kernel,
                }
            })
            .collect();
        let mut representatives = vec![Vec::with_capacity(d + 1); m + 1];
        let mut e3 = vec![vec![0; d + 1]; m + 1];
        for (&(i, j), r) in blocks.iter().zip(reps) {
            e3[i][j] = r.ncols();
            representatives[i].push(r);
        }
        SpectralTable {
            e2,
            d2_maps,
            e3,
            representatives,
            d2_squared_residual,
        }
    }

    pub fn leray_table(&self) -> &SpectralTable {
        &self.table
    }

    pub fn h_o(&self) -> Vec<usize> {
        self.table.h()
    }

    fn rank_of(&self, t: &linalg::CTensor3) -> RankInfo {
        linalg::rank(&t.flatten_first(), self.threshold)
    }

    pub fn h0_forms(&self) -> FormsDim {
        let flat = self.parts.hermitian.flatten_first();
        let (basis, rank) = linalg::null_space(&flat.transpose(), self.threshold);
        FormsDim {
            dim: self.m + basis.ncols(),
            coker_basis: basis,
            rank,
        }
    }

    fn joint_rank(&self) -> RankInfo {
        let bp = self.parts.complex.flatten_first();
        let bh = self.parts.hermitian.flatten_first();
        let mut joint = CMat::zeros(self.d, bp.ncols() + bh.ncols());
        joint.columns_mut(0, bp.ncols()).copy_from(&bp);
        joint.columns_mut(bp.ncols(), bh.ncols()).copy_from(&bh);
        linalg::rank(&joint, self.threshold)
    }

    pub fn closed_forms_dim(&self) -> usize {
        self.m + self.d - self.joint_rank().rank
    }

    pub fn h1_o(&self) -> usize {
        self.m + self.d - self.rank_of(&self.parts.complex).rank
    }

    pub fn is_parallelizable(&self) -> bool {
        self.parts.hermitian_vanishes()
    }

    /// Columns `(a, block i+j=p, representative)`, rows `(k, block, representative)`.
    fn b_map(&self, p: usize) -> CMat {
        let (m, d) = (self.m, self.d);
        let h = self.table.h();
        let mut out = CMat::zeros(d * h.get(p + 1).copied().unwrap_or(0), m * h[p]);
        if out.is_empty() {
            return out;
        }
        let offsets = |q: usize| -> Vec<usize> {
            let mut acc = 0;
            (0..=m)
                .map(|i| {
                    let here = acc;
                    if i <= q && q - i <= d {
                        acc += self.table.e3[i][q - i];
                    }
                    here
                })
                .collect()
        };
        let src_off = offsets(p);
        let dst_off = offsets(p + 1);
        let herm = &self.parts.hermitian;
        for i in 0..m {
            if i > p || p - i > d {
                continue;
            }
            let j = p - i;
            let src = &self.table.representatives[i][j];
            let dst = &self.table.representatives[i + 1][j];
            if src.ncols() == 0 || dst.ncols() == 0 {
                continue;
            }
            let projected: Vec<CMat> = (0..m)
                .map(|b| dst.adjoint() * self.wedge_matrix(b, i, j) * src)
                .collect();
            for a in 0..m {
                for k in 0..d {
                    for (b, proj) in projected.iter().enumerate() {
                        let c = herm.get(k, a, b);
                        if c == ZERO {
                            continue;
                        }
                        for t in 0..dst.ncols() {
                            for s in 0..src.ncols() {
                                let row = k * h[p + 1] + dst_off[i + 1] + t;
                                let col = a * h[p] + src_off[i] + s;
                                out[(row, col)] += c * proj[(t, s)];
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub fn b_rank(&self, p: usize) -> Option<RankInfo> {
        self.b_ranks.get(p).copied()
    }

    pub fn theta_cohomology(&self, p: usize) -> Result<ThetaDims, CohomologyError> {
        let n = self.m + self.d;
        if p > n {
            return Err(CohomologyError::Degree { degree: p, max: n });
        }
        let h = self.table.h();
        let rank_before = if p == 0 { 0 } else { self.b_ranks[p - 1].rank };
        let rank_here = self.b_ranks.get(p).map_or(0, |r| r.rank);
        let coker_dim = self.d * h[p] - rank_before;
        let ker_dim = self.m * h[p] - rank_here;
        Ok(ThetaDims {
            dim: coker_dim + ker_dim,
            coker_dim,
            ker_dim,
        })
    }

    pub fn kodaira_spencer_report(&self) -> KodairaSpencer {
        let h1_theta = self.theta_cohomology(1).map_or(0, |t| t.dim);
        let herm_zero = self.parts.hermitian_vanishes();
        let complex_zero = self.parts.complex_vanishes();
        let case = if self.d != 1 || (herm_zero && complex_zero) {
            None
        } else if herm_zero {
            Some(KsCase::HermitianZero)
        } else if complex_zero {
            Some(KsCase::ComplexZero)
        } else {
            Some(KsCase::BothNonzero)
        };
        KodairaSpencer {
            h1_theta,
            target: self.m * self.m + self.m,
            case,
        }
    }

    pub fn report(&self) -> CohomologyReport {
        let n = self.m + self.d;
        let forms = self.h0_forms();
        let mut ranks = vec![
            NamedRank {
                name: "B'".to_string(),
                info: self.rank_of(&self.parts.complex),
            },
            NamedRank {
                name: "B\"".to_string(),
                info: forms.rank,
            },
            NamedRank {
                name: "B' | B\"".to_string(),
                info: self.joint_rank(),
            },
        ];
        for map in &self.table.d2_maps {
            if !map.matrix.is_empty() {
                ranks.push(NamedRank {
                    name: format!("d2 ({},{})", map.source.0, map.source.1),
                    info: map.rank,
                });
            }
        }
        for (p, info) in self.b_ranks.iter().enumerate() {
            ranks.push(NamedRank {
                name: format!("b_{p}"),
                info: *info,
            });
        }
        let h_theta = (0..=n)
            .map(|p| self.theta_cohomology(p).map(|t| t.dim).unwrap_or(0))
            .collect();
        CohomologyReport {
            h_o: self.h_o(),
            h0_omega1: forms.dim,
            closed_1forms: self.closed_forms_dim(),
            h1_o: self.h1_o(),
            parallelizable: self.is_parallelizable(),
            h_theta,
            ks_target_dim: self.m * self.m + self.m,
            kodaira_spencer: self.kodaira_spencer_report(),
            e2: self.table.e2.clone(),
            e3: self.table.e3.clone(),
            diagnostics: Diagnostics {
                threshold: self.threshold,
                scale: self.parts.scale,
                d2_squared_residual: self.table.d2_squared_residual,
                ranks,
            },
        }
    }
}

/// `d₂` applied to a vector of `E₂^{i,j}`, for callers that only hold the table.
pub fn apply_d2(table: &SpectralTable, i: usize, j: usize, x: &[C64]) -> Option<Vec<C64>> {
    let map = table.d2(i, j)?;
    let v = nalgebra::DVector::from_column_slice(x);
    Some((&map.matrix * v).iter().copied().collect())
}
