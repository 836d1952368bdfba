//! Exterior powers `Λ^k(ℂ^n)` with subset bases, wedge and interior products.
//!
//! A basis monomial `e_{s₁} ∧ … ∧ e_{s_k}` with `s₁ < … < s_k` is stored as
//! the bitmask of `{s₁,…,s_k}`; degree-`k` monomials are ordered by mask.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExteriorBasis {
    n: usize,
    by_degree: Vec<Vec<u32>>,
    position: Vec<usize>,
}

impl ExteriorBasis {
    pub fn new(n: usize) -> Self {
        assert!(n < 24, "exterior algebra of rank {n} is too large");
        let mut by_degree = vec![Vec::new(); n + 1];
        let mut position = vec![0; 1 << n];
        for mask in 0u32..(1 << n) {
            let deg = mask.count_ones() as usize;
            position[mask as usize] = by_degree[deg].len();
            by_degree[deg].push(mask);
        }
        ExteriorBasis {
            n,
            by_degree,
            position,
        }
    }

    pub fn rank(&self) -> usize {
        self.n
    }

    /// `C(n, k)`, zero outside `0..=n`.
    pub fn dim(&self, k: usize) -> usize {
        self.by_degree.get(k).map_or(0, Vec::len)
    }

    pub fn monomials(&self, k: usize) -> &[u32] {
        self.by_degree.get(k).map_or(&[], Vec::as_slice)
    }

    /// Position of a monomial within its degree.
    pub fn index(&self, mask: u32) -> usize {
        self.position[mask as usize]
    }
}

/// `e_a ∧ e_S = sign · e_{S ∪ {a}}`, or `None` if `a ∈ S`.
pub fn wedge_left(a: usize, mask: u32) -> Option<(i32, u32)> {
    let bit = 1u32 << a;
    if mask & bit != 0 {
        return None;
    }
    let before = (mask & (bit - 1)).count_ones();
    Some((if before.is_multiple_of(2) { 1 } else { -1 }, mask | bit))
}

/// `ι_k e_S = sign · e_{S ∖ {k}}` for the dual basis vector `k`, or `None` if `k ∉ S`.
pub fn contract(k: usize, mask: u32) -> Option<(i32, u32)> {
    let bit = 1u32 << k;
    if mask & bit == 0 {
        return None;
    }
    let before = (mask & (bit - 1)).count_ones();
    Some((if before.is_multiple_of(2) { 1 } else { -1 }, mask & !bit))
}

/// `e_a ∧ e_b ∧ e_S`, or `None` if the result vanishes.
pub fn wedge_pair(a: usize, b: usize, mask: u32) -> Option<(i32, u32)> {
    let (s1, m1) = wedge_left(b, mask)?;
    let (s2, m2) = wedge_left(a, m1)?;
    Some((s1 * s2, m2))
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k.min(n - k)).fold(1, |acc, i| acc * (n - i) / (i + 1))
}
