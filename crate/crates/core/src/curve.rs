//! Invariants of principal torus bundles over a curve.

use num_integer::Integer;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CurveError {
    #[error("genus {0} is below 2")]
    GenusTooSmall(u64),
    #[error("fibre dimension must be positive")]
    ZeroFibre,
    #[error("Chern vector has length {found}, expected {expected}")]
    ChernLength { found: usize, expected: usize },
}

/// `3g − 3 + dg + d²`: dimension of the Kuranishi space of a bundle over a
/// genus-`g` curve with `d`-dimensional fibre.
pub fn kuranishi_dim(genus: u64, fibre_dim: u64) -> Result<u64, CurveError> {
    if genus < 2 {
        return Err(CurveError::GenusTooSmall(genus));
    }
    if fibre_dim == 0 {
        return Err(CurveError::ZeroFibre);
    }
    Ok(3 * genus - 3 + fibre_dim * genus + fibre_dim * fibre_dim)
}

/// Non-negative gcd of the entries; `0` for the zero class.
pub fn divisibility_index(chern: &[i64]) -> u64 {
    chern
        .iter()
        .fold(0i64, |acc, &x| acc.gcd(&x))
        .unsigned_abs()
}

/// [`divisibility_index`] after checking the vector lives in `ℤ^{2d}`.
pub fn chern_divisibility(chern: &[i64], fibre_dim: usize) -> Result<u64, CurveError> {
    if chern.len() != 2 * fibre_dim {
        return Err(CurveError::ChernLength {
            found: chern.len(),
            expected: 2 * fibre_dim,
        });
    }
    Ok(divisibility_index(chern))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kuranishi_values() {
        assert_eq!(kuranishi_dim(2, 1), Ok(6));
        assert_eq!(kuranishi_dim(2, 2), Ok(11));
        assert_eq!(kuranishi_dim(3, 1), Ok(10));
        assert_eq!(kuranishi_dim(1, 1), Err(CurveError::GenusTooSmall(1)));
        assert_eq!(kuranishi_dim(0, 3), Err(CurveError::GenusTooSmall(0)));
        assert_eq!(kuranishi_dim(2, 0), Err(CurveError::ZeroFibre));
    }

    #[test]
    fn divisibility_values() {
        assert_eq!(divisibility_index(&[0, 0, 0, 0]), 0);
        assert_eq!(divisibility_index(&[2, 4, 6, 0]), 2);
        assert_eq!(divisibility_index(&[1, 0, 0, 0]), 1);
        assert_eq!(divisibility_index(&[-6, 9]), 3);
        assert_eq!(divisibility_index(&[]), 0);
        assert_eq!(chern_divisibility(&[2, 4], 2), Err(CurveError::ChernLength { found: 2, expected: 4 }));
    }

    proptest! {
        #[test]
        fn kuranishi_splits_into_three_parts(g in 2u64..50, d in 1u64..20) {
            let total = kuranishi_dim(g, d).unwrap();
            prop_assert_eq!(total, (3 * g - 3) + d * g + d * d);
            prop_assert!(kuranishi_dim(g + 1, d).unwrap() > total);
            prop_assert!(kuranishi_dim(g, d + 1).unwrap() > total);
        }

        #[test]
        fn divisibility_ignores_order_and_sign(
            v in proptest::collection::vec(-1000i64..1000, 2..8),
            flips in proptest::collection::vec(any::<bool>(), 8),
            rot in 0usize..8,
        ) {
            let mu = divisibility_index(&v);
            let mut w: Vec<i64> = v.iter().zip(&flips).map(|(&x, &f)| if f { -x } else { x }).collect();
            let len = w.len();
            w.rotate_left(rot % len);
            prop_assert_eq!(divisibility_index(&w), mu);
            if mu > 0 {
                prop_assert!(v.iter().all(|x| x % mu as i64 == 0));
                let scaled: Vec<i64> = v.iter().map(|x| x / mu as i64).collect();
                prop_assert_eq!(divisibility_index(&scaled), 1);
            }
        }
    }
}
