use std::collections::HashMap;

use num::{BigUint, One, Zero};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// One-sided exact binomial tail `P(X >= max(k, n - k))` for
/// `X ~ Bin(n, 1/2)`.
pub fn binomial_test(k: u64, n: u64) -> Result<Rational> {
    if k > n {
        return Err(Error::InvalidCounts(format!("binomial test with {k} successes in {n} trials")));
    }
    let from = k.max(n - k);
    let mut term = BigUint::one();
    // term = C(n, i), walked down from C(n, n)
    let mut tail = BigUint::zero();
    for i in (from..=n).rev() {
        tail += &term;
        if i > 0 {
            term = term * BigUint::from(i) / BigUint::from(n - i + 1);
        }
    }
    Ok(Rational::new(tail.into(), (BigUint::one() << n as usize).into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TTestKind {
    /// Unequal variances with Welch-Satterthwaite degrees of freedom.
    #[default]
    Welch,
    /// Pooled variance.
    Student,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TTest {
    pub statistic: f64,
    pub df: f64,
    /// Two-sided.
    pub p_value: f64,
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Two-sample t-test. When both samples have zero variance the statistic is
/// 0 (p = 1) for equal means and infinite (p = 0) otherwise.
pub fn two_sample_t_test(a: &[f64], b: &[f64], kind: TTestKind) -> Result<TTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Degenerate(format!(
            "t-test needs two values per group, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (se2, df) = match kind {
        TTestKind::Welch => {
            let (qa, qb) = (va / na, vb / nb);
            let se2 = qa + qb;
            let denom = qa * qa / (na - 1.0) + qb * qb / (nb - 1.0);
            (se2, if denom > 0.0 { se2 * se2 / denom } else { na + nb - 2.0 })
        }
        TTestKind::Student => {
            let pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / (na + nb - 2.0);
            (pooled * (1.0 / na + 1.0 / nb), na + nb - 2.0)
        }
    };
    let diff = ma - mb;
    if se2 == 0.0 {
        return Ok(if diff == 0.0 {
            TTest {
                statistic: 0.0,
                df,
                p_value: 1.0,
            }
        } else {
            TTest {
                statistic: diff.signum() * f64::INFINITY,
                df,
                p_value: 0.0,
            }
        });
    }
    let statistic = diff / se2.sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Degenerate(format!("t distribution: {e}")))?;
    let p_value = (2.0 * dist.sf(statistic.abs())).min(1.0);
    Ok(TTest { statistic, df, p_value })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationKind {
    /// `1 - 6 sum d^2 / (n (n^2 - 1))` on rank positions.
    #[default]
    Spearman,
    /// Pearson coefficient of the rank positions.
    PearsonOnRanks,
}

/// Correlation between two orderings of the same keys, best first.
pub fn rank_correlation(r1: &[String], r2: &[String], kind: CorrelationKind) -> Result<f64> {
    if r1.len() != r2.len() {
        return Err(Error::DimensionMismatch(format!("rankings of {} and {} keys", r1.len(), r2.len())));
    }
    let n = r1.len();
    if n < 2 {
        return Err(Error::Degenerate(format!("rank correlation needs two keys, got {n}")));
    }
    let pos: HashMap<&str, usize> = r2.iter().enumerate().map(|(i, k)| (k.as_str(), i)).collect();
    if pos.len() != n {
        return Err(Error::DimensionMismatch("second ranking repeats a key".into()));
    }
    let mut ranks = Vec::with_capacity(n);
    let mut seen = std::collections::HashSet::new();
    for (i, k) in r1.iter().enumerate() {
        let j = *pos
            .get(k.as_str())
            .ok_or_else(|| Error::DimensionMismatch(format!("key {k} missing from the second ranking")))?;
        if !seen.insert(k.as_str()) {
            return Err(Error::DimensionMismatch("first ranking repeats a key".into()));
        }
        ranks.push((i as i128, j as i128));
    }
    Ok(match kind {
        CorrelationKind::Spearman => {
            let d2: i128 = ranks.iter().map(|(a, b)| (a - b) * (a - b)).sum();
            let n = n as i128;
            let value = Rational::one() - Rational::new((6 * d2).into(), (n * (n * n - 1)).into());
            crate::rational::to_f64(&value)
        }
        CorrelationKind::PearsonOnRanks => {
            let xs: Vec<f64> = ranks.iter().map(|r| r.0 as f64).collect();
            let ys: Vec<f64> = ranks.iter().map(|r| r.1 as f64).collect();
            let (mx, _) = mean_var(&xs);
            let (my, _) = mean_var(&ys);
            let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
            let sx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>().sqrt();
            let sy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum::<f64>().sqrt();
            cov / (sx * sy)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::to_f64;

    fn keys(s: &str) -> Vec<String> {
        s.split(' ').map(String::from).collect()
    }

    #[test]
    fn binomial_tails() {
        let p = to_f64(&binomial_test(36, 64).unwrap());
        assert!((p - 0.19).abs() <= 0.01, "{p}");
        assert_eq!(binomial_test(36, 64).unwrap(), binomial_test(28, 64).unwrap());
        let mode = to_f64(&binomial_test(32, 64).unwrap());
        assert!((mode - 0.549_673_376_873_983_4).abs() < 1e-12, "{mode}");
        assert_eq!(
            binomial_test(64, 64).unwrap(),
            Rational::new(1.into(), (BigUint::one() << 64usize).into())
        );
        assert_eq!(binomial_test(0, 0).unwrap(), Rational::one());
        assert!(binomial_test(3, 2).is_err());
    }

    #[test]
    fn binomial_matches_direct_summation() {
        fn choose(n: u64, k: u64) -> f64 {
            (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
        }
        for n in 1..40u64 {
            for k in 0..=n {
                let from = k.max(n - k);
                let direct: f64 = (from..=n).map(|i| choose(n, i)).sum::<f64>() / 2f64.powi(n as i32);
                assert!((to_f64(&binomial_test(k, n).unwrap()) - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn welch_matches_hand_computation() {
        let a = [0.9473, 0.9512, 0.9390, 0.9555, 0.9421];
        let b = [0.9610, 0.9588, 0.9702, 0.9655, 0.9631];
        let t = two_sample_t_test(&a, &b, TTestKind::Welch).unwrap();
        // means 0.94702 and 0.96372, variances 4.40817e-5 and 1.94545e-5
        let (ma, mb) = (0.94702, 0.96372);
        let va = [0.9473f64, 0.9512, 0.9390, 0.9555, 0.9421].iter().map(|x| (x - ma).powi(2)).sum::<f64>() / 4.0;
        let vb = [0.9610f64, 0.9588, 0.9702, 0.9655, 0.9631].iter().map(|x| (x - mb).powi(2)).sum::<f64>() / 4.0;
        let hand = (ma - mb) / (va / 5.0 + vb / 5.0).sqrt();
        assert!((t.statistic - hand).abs() < 1e-9);
        assert!((t.statistic - -4.675_688_796_510_217).abs() < 1e-6);
        assert!((t.df - 6.919_129_533_726_817).abs() < 1e-6);
        assert!((t.p_value - 0.002_343_494_474_736_144_7).abs() < 1e-6, "{}", t.p_value);
    }

    #[test]
    fn t_test_limits() {
        let same = [0.5, 0.6, 0.7];
        assert_eq!(two_sample_t_test(&same, &same, TTestKind::Welch).unwrap().p_value, 1.0);
        let a = [0.0, 1e-9, 0.0, 2e-9];
        let b = [1.0, 1.0 - 1e-9, 1.0, 1.0];
        assert!(two_sample_t_test(&a, &b, TTestKind::Welch).unwrap().p_value < 1e-4);
        let flat = two_sample_t_test(&[1.0, 1.0], &[2.0, 2.0], TTestKind::Welch).unwrap();
        assert_eq!(flat.p_value, 0.0);
        assert!(flat.statistic.is_infinite());
        assert_eq!(two_sample_t_test(&[1.0, 1.0], &[1.0, 1.0], TTestKind::Student).unwrap().p_value, 1.0);
        assert!(two_sample_t_test(&[1.0], &[1.0, 2.0], TTestKind::Welch).is_err());
        let student = two_sample_t_test(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0, 5.0], TTestKind::Student).unwrap();
        assert_eq!(student.df, 5.0);
    }

    #[test]
    fn rank_correlation_cases() {
        let r = keys("a b c d e f");
        let rev = keys("f e d c b a");
        for kind in [CorrelationKind::Spearman, CorrelationKind::PearsonOnRanks] {
            assert_eq!(rank_correlation(&r, &r, kind).unwrap(), 1.0);
            assert!((rank_correlation(&r, &rev, kind).unwrap() + 1.0).abs() < 1e-12);
        }
        assert_eq!(rank_correlation(&r, &rev, CorrelationKind::Spearman).unwrap(), -1.0);
        // d = (1, 1, 1, 1, 1, 1): 1 - 36 / 210
        let swapped = keys("b a d c f e");
        let rho = rank_correlation(&r, &swapped, CorrelationKind::Spearman).unwrap();
        assert!((rho - (1.0 - 36.0 / 210.0)).abs() < 1e-15);
        assert!((rho - 0.828_571_428_571_428_7).abs() < 1e-12);
        let pearson = rank_correlation(&r, &swapped, CorrelationKind::PearsonOnRanks).unwrap();
        assert!((rho - pearson).abs() < 1e-12);
        assert!(rank_correlation(&r, &keys("a b c d e g"), CorrelationKind::Spearman).is_err());
        assert!(rank_correlation(&keys("a"), &keys("a"), CorrelationKind::Spearman).is_err());
    }
}
