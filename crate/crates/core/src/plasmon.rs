//! Conversion between NP eigenvalues and plasmonic permittivity ratios.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Permittivity ratio `k = (2 lambda + 1) / (2 lambda - 1)` at which the
/// transmission problem resonates.
pub fn lambda_to_k(lambda: f64) -> Result<f64> {
    if !lambda.is_finite() {
        return Err(domain("lambda_to_k", format!("non-finite lambda {lambda}")));
    }
    if lambda == 0.5 {
        return Err(Error::Pole {
            op: "lambda_to_k",
            at: 0.5,
        });
    }
    Ok((2.0 * lambda + 1.0) / (2.0 * lambda - 1.0))
}

/// Inverse map `lambda = (k + 1) / (2 (k - 1))`.
pub fn k_to_lambda(k: f64) -> Result<f64> {
    if !k.is_finite() {
        return Err(domain("k_to_lambda", format!("non-finite k {k}")));
    }
    if k == 1.0 {
        return Err(Error::Pole {
            op: "k_to_lambda",
            at: 1.0,
        });
    }
    Ok((k + 1.0) / (2.0 * (k - 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonancePair {
    pub lambda: f64,
    pub k: f64,
}

/// Resonant ratios for a list of eigenvalues, ordered by `|k|`. The
/// eigenvalue `1/2` (constant mode) has no finite ratio and is skipped.
pub fn resonance_table(lambdas: &[f64]) -> Result<Vec<ResonancePair>> {
    let mut out = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        match lambda_to_k(lambda) {
            Ok(k) => out.push(ResonancePair { lambda, k }),
            Err(Error::Pole { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    out.sort_by(|a, b| a.k.abs().total_cmp(&b.k.abs()));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sphere_values() {
        // sphere eigenvalue 1/(2(2n+1)) resonates at k = -(n+1)/n
        assert!((lambda_to_k(1.0 / 6.0).unwrap() + 2.0).abs() < 1e-15);
        assert!((lambda_to_k(0.1).unwrap() + 1.5).abs() < 1e-15);
        assert_eq!(lambda_to_k(0.0).unwrap(), -1.0);
        assert!(matches!(lambda_to_k(0.5), Err(Error::Pole { .. })));
        assert!(matches!(k_to_lambda(1.0), Err(Error::Pole { .. })));
        assert!(lambda_to_k(f64::NAN).is_err());
        assert!((k_to_lambda(-2.0).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(lambda_to_k(-0.5).unwrap(), 0.0);
    }

    #[test]
    fn negative_lambda_has_smaller_ratio() {
        for k in 1..50 {
            let lam = 0.5 * k as f64 / 50.0;
            assert!(lambda_to_k(-lam).unwrap().abs() < lambda_to_k(lam).unwrap().abs());
        }
    }

    #[test]
    fn table_sorted_and_skips_pole() {
        let t = resonance_table(&[0.5, 1.0 / 6.0, 0.1, -0.3]).unwrap();
        assert_eq!(t.len(), 3);
        for w in t.windows(2) {
            assert!(w[0].k.abs() <= w[1].k.abs());
        }
    }

    proptest! {
        #[test]
        fn round_trip(lambda in -0.5f64..0.49) {
            let k = lambda_to_k(lambda).unwrap();
            let back = k_to_lambda(k).unwrap();
            prop_assert!((back - lambda).abs() <= 1e-12);
        }

        #[test]
        fn negative_k_inside_spectrum(lambda in -0.4999f64..0.4999) {
            prop_assert!(lambda_to_k(lambda).unwrap() < 0.0);
        }
    }
}
