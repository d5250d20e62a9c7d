//! Paired choice tests and valuation tests.
//!
//! Three point classifications of a frequency pair (weak, strong, band) plus
//! sampling-error-aware variants: confidence-interval consistency flags for
//! choice counts, and sign/mean tests on valuation samples.

use crate::error::{Error, Result};
use crate::stats::normal_quantile;
use serde::Serialize;

/// Observed choice frequencies for the two tasks, optionally with the raw
/// counts they came from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FrequencyPair {
    pub rho_ab: f64,
    pub rho_cd: f64,
    pub counts: Option<ChoiceCounts>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChoiceCounts {
    pub k_ab: u64,
    pub n_ab: u64,
    pub k_cd: u64,
    pub n_cd: u64,
}

impl FrequencyPair {
    pub fn new(rho_ab: f64, rho_cd: f64) -> Result<Self> {
        for (name, v) in [("rho_ab", rho_ab), ("rho_cd", rho_cd)] {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::construction(format!(
                    "{name} must lie in [0, 1], got {v}"
                )));
            }
        }
        Ok(FrequencyPair {
            rho_ab,
            rho_cd,
            counts: None,
        })
    }

    pub fn from_counts(k_ab: u64, n_ab: u64, k_cd: u64, n_cd: u64) -> Result<Self> {
        if n_ab == 0 || n_cd == 0 {
            return Err(Error::data("frequency counts need n >= 1"));
        }
        if k_ab > n_ab || k_cd > n_cd {
            return Err(Error::data("frequency counts need k <= n"));
        }
        Ok(FrequencyPair {
            rho_ab: k_ab as f64 / n_ab as f64,
            rho_cd: k_cd as f64 / n_cd as f64,
            counts: Some(ChoiceCounts {
                k_ab,
                n_ab,
                k_cd,
                n_cd,
            }),
        })
    }
}

/// Point classification of a frequency pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Verdict {
    Eu,
    Cre,
    Rcre,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Eu => write!(f, "EU"),
            Verdict::Cre => write!(f, "CRE"),
            Verdict::Rcre => write!(f, "RCRE"),
        }
    }
}

/// Weak paired test: equality of the two frequencies up to `tol`.
pub fn weak_test(fp: &FrequencyPair, tol: f64) -> Verdict {
    let diff = fp.rho_ab - fp.rho_cd;
    if diff > tol {
        Verdict::Cre
    } else if -diff > tol {
        Verdict::Rcre
    } else {
        Verdict::Eu
    }
}

/// Strong paired test: the 1/2-threshold quadrant geometry.
///
/// CRE requires rho_ab on or above 1/2 and rho_cd below, with at least one
/// inequality strict; RCRE is the mirror image; everything else (both
/// quadrant diagonal squares, including the center point) is EU.
pub fn strong_test(fp: &FrequencyPair) -> Verdict {
    let (a, c) = (fp.rho_ab, fp.rho_cd);
    let cre = (a >= 0.5 && c < 0.5) || (a > 0.5 && c <= 0.5);
    let rcre = (c >= 0.5 && a < 0.5) || (c > 0.5 && a <= 0.5);
    match (cre, rcre) {
        (true, false) => Verdict::Cre,
        (false, true) => Verdict::Rcre,
        _ => Verdict::Eu,
    }
}

/// Band classification: any gap up to one half between the two frequencies
/// is compatible with expected utility under unrestricted >=1/2-accuracy
/// choice noise, so only `|rho_ab - rho_cd| > 1/2` is a violation. The band
/// is closed (boundary points classify as EU).
pub fn mnoss_region_test(fp: &FrequencyPair) -> Verdict {
    if fp.rho_cd < fp.rho_ab - 0.5 {
        Verdict::Cre
    } else if fp.rho_cd > fp.rho_ab + 0.5 {
        Verdict::Rcre
    } else {
        Verdict::Eu
    }
}

/// Non-exclusive consistency flags from per-task confidence intervals.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ConsistencyFlags {
    pub eu: bool,
    pub cre: bool,
    pub rcre: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CiMethod {
    Wald,
    ClopperPearson,
}

fn binomial_ci(k: u64, n: u64, level: f64, method: CiMethod) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::data("confidence interval needs n >= 1"));
    }
    if k > n {
        return Err(Error::data("confidence interval needs k <= n"));
    }
    if !(0.0 < level && level < 1.0) {
        return Err(Error::data(format!(
            "confidence level must lie in (0, 1), got {level}"
        )));
    }
    let alpha = 1.0 - level;
    match method {
        CiMethod::Wald => {
            let p = k as f64 / n as f64;
            let z = normal_quantile(1.0 - alpha / 2.0);
            let half = z * (p * (1.0 - p) / n as f64).sqrt();
            Ok(((p - half).max(0.0), (p + half).min(1.0)))
        }
        CiMethod::ClopperPearson => {
            use statrs::distribution::{Beta, ContinuousCDF};
            let lo = if k == 0 {
                0.0
            } else {
                Beta::new(k as f64, (n - k + 1) as f64)
                    .map_err(|e| Error::data(e.to_string()))?
                    .inverse_cdf(alpha / 2.0)
            };
            let hi = if k == n {
                1.0
            } else {
                Beta::new((k + 1) as f64, (n - k) as f64)
                    .map_err(|e| Error::data(e.to_string()))?
                    .inverse_cdf(1.0 - alpha / 2.0)
            };
            Ok((lo, hi))
        }
    }
}

/// Confidence-interval variant of the strong test. A verdict flag is set
/// when the per-task intervals each intersect the half of the unit interval
/// that the verdict requires; flags are not mutually exclusive.
pub fn ci_strong_consistency(
    k_ab: u64,
    n_ab: u64,
    k_cd: u64,
    n_cd: u64,
    level: f64,
    method: CiMethod,
) -> Result<ConsistencyFlags> {
    let (lo_ab, hi_ab) = binomial_ci(k_ab, n_ab, level, method)?;
    let (lo_cd, hi_cd) = binomial_ci(k_cd, n_cd, level, method)?;
    // Intersecting [1/2, 1] means the upper end reaches 1/2; intersecting
    // [0, 1/2) means the lower end is strictly below it.
    let ab_hi_half = hi_ab >= 0.5;
    let ab_lo_half = lo_ab < 0.5;
    let cd_hi_half = hi_cd >= 0.5;
    let cd_lo_half = lo_cd < 0.5;
    Ok(ConsistencyFlags {
        eu: (ab_hi_half && cd_hi_half) || (ab_lo_half && cd_lo_half),
        cre: ab_hi_half && cd_lo_half,
        rcre: cd_hi_half && ab_lo_half,
    })
}

/// Paired valuation samples (m_ab, m_cd).
#[derive(Clone, Debug, PartialEq)]
pub struct ValuationSampleSet {
    pub pairs: Vec<(f64, f64)>,
}

impl ValuationSampleSet {
    pub fn new(pairs: Vec<(f64, f64)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::data("valuation sample set must be nonempty"));
        }
        Ok(ValuationSampleSet { pairs })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SignTestResult {
    /// Tie-adjusted fraction of pairs with m_ab > m_cd.
    pub estimate: f64,
    pub se: f64,
    pub verdict: Verdict,
}

/// Sign valuation test: estimates Pr(m_ab > m_cd), ties counted as 1/2.
/// CRE verdict when the estimate sits more than 3 standard errors below
/// 1/2 (the m_cd side wins too often), RCRE in the mirror case.
pub fn sign_test(vs: &ValuationSampleSet) -> Result<SignTestResult> {
    let n = vs.len();
    if n < 30 {
        return Err(Error::data(format!(
            "sign test needs at least 30 pairs for the normal approximation, got {n}"
        )));
    }
    let mut wins = 0.0;
    for &(ab, cd) in &vs.pairs {
        if ab > cd {
            wins += 1.0;
        } else if ab == cd {
            wins += 0.5;
        }
    }
    let est = wins / n as f64;
    let se = (est * (1.0 - est) / n as f64).sqrt();
    let verdict = if est < 0.5 - 3.0 * se {
        Verdict::Cre
    } else if est > 0.5 + 3.0 * se {
        Verdict::Rcre
    } else {
        Verdict::Eu
    };
    Ok(SignTestResult {
        estimate: est,
        se,
        verdict,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MeanTestResult {
    /// mean(m_cd) - mean(m_ab)
    pub delta: f64,
    pub se: f64,
    pub verdict: Verdict,
}

/// Mean valuation test on paired differences. CRE verdict when the m_cd
/// valuations exceed the m_ab valuations by more than 3 standard errors.
pub fn mean_test(vs: &ValuationSampleSet) -> Result<MeanTestResult> {
    let n = vs.len();
    if n < 30 {
        return Err(Error::data(format!(
            "mean test needs at least 30 pairs for the normal approximation, got {n}"
        )));
    }
    let diffs: Vec<f64> = vs.pairs.iter().map(|&(ab, cd)| cd - ab).collect();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n as f64 - 1.0);
    let se = (var / n as f64).sqrt();
    let verdict = if mean > 3.0 * se {
        Verdict::Cre
    } else if mean < -3.0 * se {
        Verdict::Rcre
    } else {
        Verdict::Eu
    };
    Ok(MeanTestResult {
        delta: mean,
        se,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use proptest::prelude::*;

    fn fp(a: f64, c: f64) -> FrequencyPair {
        FrequencyPair::new(a, c).unwrap()
    }

    #[test]
    fn weak_test_cases() {
        assert_eq!(weak_test(&fp(0.6, 0.6), 0.0), Verdict::Eu);
        assert_eq!(weak_test(&fp(0.80, 0.35), 0.0), Verdict::Cre);
        assert_eq!(weak_test(&fp(0.3, 0.5), 0.0), Verdict::Rcre);
        assert_eq!(weak_test(&fp(0.52, 0.48), 0.05), Verdict::Eu);
    }

    #[test]
    fn strong_test_cases() {
        assert_eq!(strong_test(&fp(0.80, 0.35)), Verdict::Cre);
        assert_eq!(strong_test(&fp(0.5, 0.5)), Verdict::Eu);
        assert_eq!(strong_test(&fp(0.4, 0.6)), Verdict::Rcre);
        // Boundary handling: one weak and one strict inequality suffice.
        assert_eq!(strong_test(&fp(0.5, 0.4)), Verdict::Cre);
        assert_eq!(strong_test(&fp(0.6, 0.5)), Verdict::Cre);
        assert_eq!(strong_test(&fp(0.5, 0.6)), Verdict::Rcre);
        assert_eq!(strong_test(&fp(0.4, 0.4)), Verdict::Eu);
    }

    #[test]
    fn band_test_cases() {
        assert_eq!(mnoss_region_test(&fp(2.0 / 3.0, 1.0 / 3.0)), Verdict::Eu);
        assert_eq!(mnoss_region_test(&fp(0.9, 0.2)), Verdict::Cre);
        assert_eq!(mnoss_region_test(&fp(0.4, 0.95)), Verdict::Rcre);
        // Closed band: points with a gap of exactly one half stay EU.
        assert_eq!(mnoss_region_test(&fp(0.5, 1.0)), Verdict::Eu);
        assert_eq!(mnoss_region_test(&fp(1.0, 0.5)), Verdict::Eu);
    }

    #[test]
    fn grid_partition_nesting_and_implication() {
        // 201x201 grid: every point gets exactly one verdict per test,
        // regions nest (band CRE within strong CRE within weak CRE), and
        // strong CRE implies a strictly positive frequency gap.
        let mut strong_counts = [0u32; 3];
        for i in 0..=200 {
            for j in 0..=200 {
                let point = fp(i as f64 / 200.0, j as f64 / 200.0);
                let s = strong_test(&point);
                let m = mnoss_region_test(&point);
                let w = weak_test(&point, 0.0);
                strong_counts[match s {
                    Verdict::Eu => 0,
                    Verdict::Cre => 1,
                    Verdict::Rcre => 2,
                }] += 1;
                if m == Verdict::Cre {
                    assert_eq!(s, Verdict::Cre, "band CRE outside strong CRE at {point:?}");
                }
                if m == Verdict::Rcre {
                    assert_eq!(s, Verdict::Rcre);
                }
                if s == Verdict::Cre {
                    assert_eq!(w, Verdict::Cre, "strong CRE outside weak CRE at {point:?}");
                    assert!(point.rho_ab > point.rho_cd);
                }
                if s == Verdict::Rcre {
                    assert_eq!(w, Verdict::Rcre);
                }
            }
        }
        assert_eq!(strong_counts.iter().sum::<u32>(), 201 * 201);
        assert!(strong_counts.iter().all(|&c| c > 0));
    }

    #[test]
    fn ci_flags_footnote_frequencies() {
        let flags = ci_strong_consistency(48, 100, 30, 100, 0.95, CiMethod::Wald).unwrap();
        assert!(flags.cre);
        // The CRE-side flag comes with an EU flag here: both intervals also
        // reach below one half.
        assert!(flags.eu);
        assert!(!flags.rcre);
    }

    #[test]
    fn ci_flags_degenerate_counts() {
        let flags = ci_strong_consistency(100, 100, 0, 100, 0.95, CiMethod::Wald).unwrap();
        assert_eq!(
            flags,
            ConsistencyFlags {
                eu: false,
                cre: true,
                rcre: false
            }
        );
    }

    #[test]
    fn ci_flags_collapse_to_strong_verdict() {
        let flags = ci_strong_consistency(
            8_000_000_000,
            10_000_000_000,
            3_500_000_000,
            10_000_000_000,
            0.95,
            CiMethod::Wald,
        )
        .unwrap();
        assert_eq!(
            flags,
            ConsistencyFlags {
                eu: false,
                cre: true,
                rcre: false
            }
        );
    }

    #[test]
    fn ci_flags_monotone_in_n() {
        for method in [CiMethod::Wald, CiMethod::ClopperPearson] {
            let small = ci_strong_consistency(12, 25, 10, 25, 0.95, method).unwrap();
            let large = ci_strong_consistency(120, 250, 100, 250, 0.95, method).unwrap();
            assert!(!large.eu || small.eu);
            assert!(!large.cre || small.cre);
            assert!(!large.rcre || small.rcre);
        }
    }

    #[test]
    fn ci_rejects_bad_input() {
        assert!(ci_strong_consistency(1, 0, 1, 10, 0.95, CiMethod::Wald).is_err());
        assert!(ci_strong_consistency(11, 10, 1, 10, 0.95, CiMethod::Wald).is_err());
        assert!(ci_strong_consistency(1, 10, 1, 10, 1.0, CiMethod::Wald).is_err());
    }

    #[test]
    fn sign_test_exchangeable_pairs_near_half() {
        let mut s = RngStream::new(42, 1);
        let pairs: Vec<(f64, f64)> = (0..40_000)
            .map(|_| (s.next_uniform(), s.next_uniform()))
            .collect();
        let res = sign_test(&ValuationSampleSet::new(pairs).unwrap()).unwrap();
        assert_eq!(res.verdict, Verdict::Eu);
        assert!((res.estimate - 0.5).abs() < 4.0 * res.se);
    }

    #[test]
    fn sign_test_ties_count_half() {
        let pairs = vec![(1.0, 1.0); 64];
        let res = sign_test(&ValuationSampleSet::new(pairs).unwrap()).unwrap();
        assert_eq!(res.estimate, 0.5);
        assert_eq!(res.verdict, Verdict::Eu);
    }

    #[test]
    fn mean_test_identical_laws_is_eu() {
        let mut s = RngStream::new(7, 2);
        let pairs: Vec<(f64, f64)> = (0..40_000)
            .map(|_| (1.0 + s.next_uniform(), 1.0 + s.next_uniform()))
            .collect();
        let res = mean_test(&ValuationSampleSet::new(pairs).unwrap()).unwrap();
        assert_eq!(res.verdict, Verdict::Eu);
    }

    #[test]
    fn small_samples_are_data_errors() {
        let pairs = vec![(1.0, 2.0); 29];
        assert!(sign_test(&ValuationSampleSet::new(pairs.clone()).unwrap()).is_err());
        assert!(mean_test(&ValuationSampleSet::new(pairs).unwrap()).is_err());
        assert!(ValuationSampleSet::new(vec![]).is_err());
    }

    proptest! {
        // Strong and band tests classify every point into exactly one verdict;
        // already guaranteed by the return type, so check region geometry.
        #[test]
        fn strong_cre_implies_weak_cre(a in 0.0f64..=1.0, c in 0.0f64..=1.0) {
            let point = fp(a, c);
            if strong_test(&point) == Verdict::Cre {
                prop_assert_eq!(weak_test(&point, 0.0), Verdict::Cre);
            }
            if mnoss_region_test(&point) == Verdict::Cre {
                prop_assert_eq!(strong_test(&point), Verdict::Cre);
            }
        }

        // The sign-test estimate only depends on order, so any strictly
        // increasing transformation applied to both coordinates preserves it.
        #[test]
        fn sign_test_invariant_under_monotone_transform(seed in 0u64..1000) {
            let mut s = RngStream::new(seed, 3);
            let pairs: Vec<(f64, f64)> = (0..64)
                .map(|_| (s.next_uniform() * 10.0, s.next_uniform() * 10.0))
                .collect();
            let transformed: Vec<(f64, f64)> =
                pairs.iter().map(|&(a, c)| (a.exp(), c.exp())).collect();
            let r1 = sign_test(&ValuationSampleSet::new(pairs).unwrap()).unwrap();
            let r2 = sign_test(&ValuationSampleSet::new(transformed).unwrap()).unwrap();
            prop_assert_eq!(r1.estimate, r2.estimate);
        }
    }
}
