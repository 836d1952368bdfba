//! Built-in bundles and a generator of random points of the parameter variety.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::decomposition::BundleDatum;
use crate::lattice::ExtensionForm;
use crate::linalg::{CMat, C64};
use crate::structure::{gaussian, ComplexStructure};

/// Antisymmetrised multiplication `ℤ[i]² × ℤ[i]² → ℤ[i]`,
/// `((z₁,z₂),(w₁,w₂)) ↦ z₁w₂ − z₂w₁`, in the basis
/// `e₁=(1,0), e₂=(i,0), e₃=(0,1), e₄=(0,i)` and `f₁=1, f₂=i`.
pub fn iwasawa_form() -> ExtensionForm {
    let mut a = ExtensionForm::zero(4, 2).expect("valid ranks");
    a.set_pair(0, 0, 2, 1);
    a.set_pair(1, 0, 3, 1);
    a.set_pair(1, 1, 2, 1);
    a.set_pair(0, 1, 3, -1);
    a
}

/// The Iwasawa manifold with the standard structures on `ℤ[i]²` and `ℤ[i]`.
pub fn iwasawa_datum() -> BundleDatum {
    BundleDatum {
        form: iwasawa_form(),
        base: ComplexStructure::standard(2),
        fibre: ComplexStructure::standard(1),
        phi: None,
    }
}

/// The product `Y × T` with standard structures.
pub fn product_datum(m: usize, d: usize) -> BundleDatum {
    BundleDatum {
        form: ExtensionForm::zero(2 * m, 2 * d).expect("positive dimensions"),
        base: ComplexStructure::standard(m),
        fibre: ComplexStructure::standard(d),
        phi: None,
    }
}

/// Which components a generated instance carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceKind {
    /// Only `B'` (complex-bilinear part); `B" = 0`.
    Complex,
    /// Only `B"` (sesquilinear part); `B' = 0`.
    Hermitian,
    /// Both.
    Mixed,
}

/// An extension form together with a compatible pair of structures.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub form: ExtensionForm,
    pub base: ComplexStructure,
    pub fibre: ComplexStructure,
}

impl Instance {
    /// Panics if the instance fails validation at `tol`.
    pub fn datum(&self, tol: f64) -> BundleDatum {
        BundleDatum::new(
            self.form.clone(),
            self.base.clone(),
            self.fibre.clone(),
            None,
            tol,
        )
        .expect("generated instances satisfy the Riemann relation")
    }
}

type Gauss = (i64, i64);

fn gmul(a: Gauss, b: Gauss) -> Gauss {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

fn gconj(a: Gauss) -> Gauss {
    (a.0, -a.1)
}

/// A random `(A, V, U)` with the First Riemann Relation holding exactly.
///
/// `A` is assembled on `ℤ[i]^m → ℤ[i]^d` from Gaussian-integer forms
/// `P_k(z, w)` (antisymmetric, complex bilinear) and
/// `H_k(z, w̄) − H_k(w, z̄)` (sesquilinear), so it has no `Λ²V̄^∨ ⊗ U`
/// component for the standard structures. Both lattices then get a random
/// unimodular change of basis and the period matrices a random complex
/// change of representative. Deterministic in `seed`.
pub fn gaussian_instance(m: usize, d: usize, seed: u64, kind: InstanceKind) -> Instance {
    assert!(m >= 1 && d >= 1, "dimensions must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entry = |rng: &mut ChaCha8Rng| -> Gauss { (rng.random_range(-2..=2), rng.random_range(-2..=2)) };

    let with_complex = kind != InstanceKind::Hermitian && m >= 2;
    let with_hermitian = kind != InstanceKind::Complex;
    let mut p = vec![vec![vec![(0, 0); m]; m]; d];
    let mut h = vec![vec![vec![(0, 0); m]; m]; d];
    loop {
        for k in 0..d {
            for a in 0..m {
                for b in 0..m {
                    if with_hermitian {
                        h[k][a][b] = entry(&mut rng);
                    }
                    if with_complex && a < b {
                        let v = entry(&mut rng);
                        p[k][a][b] = v;
                        p[k][b][a] = (-v.0, -v.1);
                    }
                }
            }
        }
        let nonzero = |t: &Vec<Vec<Vec<Gauss>>>| t.iter().flatten().flatten().any(|&x| x != (0, 0));
        if (!with_complex || nonzero(&p)) && (!with_hermitian || nonzero(&h)) {
            break;
        }
    }

    // Coordinates of the lattice basis vectors of ℤ[i]^m.
    let unit = |i: usize| -> (usize, Gauss) { (i / 2, if i.is_multiple_of(2) { (1, 0) } else { (0, 1) }) };
    let mut form = ExtensionForm::zero(2 * m, 2 * d).expect("positive dimensions");
    for i in 0..2 * m {
        for j in 0..2 * m {
            let (a, za) = unit(i);
            let (b, wb) = unit(j);
            for k in 0..d {
                let mut val = gmul(p[k][a][b], gmul(za, wb));
                let s = gmul(h[k][a][b], gmul(za, gconj(wb)));
                let t = gmul(h[k][b][a], gmul(wb, gconj(za)));
                val = (val.0 + s.0 - t.0, val.1 + s.1 - t.1);
                form.set(2 * k, i, j, val.0);
                form.set(2 * k + 1, i, j, val.1);
            }
        }
    }

    let (g, g_inv) = unimodular(2 * m, &mut rng);
    let (_, h_inv) = unimodular(2 * d, &mut rng);
    let form = transport(&form, &g, &h_inv);
    let base = represent(&g_inv, &ComplexStructure::standard(m), &mut rng);
    let fibre = represent(&h_inv, &ComplexStructure::standard(d), &mut rng);
    Instance { form, base, fibre }
}

/// A random unimodular integer matrix and its inverse, from elementary
/// row operations with unit multipliers.
fn unimodular<R: Rng>(n: usize, rng: &mut R) -> (DMatrix<i64>, DMatrix<i64>) {
    let mut g = DMatrix::<i64>::identity(n, n);
    let mut g_inv = DMatrix::<i64>::identity(n, n);
    if n < 2 {
        return (g, g_inv);
    }
    for _ in 0..n + 1 {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let s: i64 = if rng.random_bool(0.5) { 1 } else { -1 };
        // g ← E g with E = I + s·e_i e_jᵀ, and g⁻¹ ← g⁻¹ E⁻¹.
        let row_j = g.row(j).clone_owned();
        let mut row_i = g.row_mut(i);
        row_i += row_j * s;
        let col_i = g_inv.column(i).clone_owned();
        let mut col_j = g_inv.column_mut(j);
        col_j -= col_i * s;
    }
    (g, g_inv)
}

/// `A'(e'_i, e'_j) = h⁻¹ A(g e_i, g e_j)`.
fn transport(form: &ExtensionForm, g: &DMatrix<i64>, h_inv: &DMatrix<i64>) -> ExtensionForm {
    let n = form.base_rank();
    let r = form.fibre_rank();
    let mut out = ExtensionForm::zero(n, r).expect("same ranks");
    for i in 0..n {
        for j in 0..n {
            let x: Vec<i64> = g.column(i).iter().copied().collect();
            let y: Vec<i64> = g.column(j).iter().copied().collect();
            let val = form.apply(&x, &y);
            for k in 0..r {
                let v: i64 = (0..r).map(|l| h_inv[(k, l)] * val[l]).sum();
                out.set(k, i, j, v);
            }
        }
    }
    out
}

/// Period matrix in the new lattice basis, times a random invertible
/// `n × n` complex matrix (same subspace, different representative).
fn represent<R: Rng>(inv: &DMatrix<i64>, s: &ComplexStructure, rng: &mut R) -> ComplexStructure {
    let n = s.half_rank();
    let inv_c: CMat = inv.map(|x| C64::new(x as f64, 0.0));
    let mut mix = CMat::from_fn(n, n, |_, _| gaussian(rng));
    while crate::linalg::singular_values(&mix).last().copied().unwrap_or(0.0) < 0.1 {
        mix = CMat::from_fn(n, n, |_, _| gaussian(rng));
    }
    ComplexStructure::new(inv_c * s.period() * mix).expect("shape preserved")
}
