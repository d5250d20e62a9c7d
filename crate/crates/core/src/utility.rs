//! von Neumann-Morgenstern utilities and probability weighting functions.

use crate::error::{Error, Result};
use crate::lottery::Lottery;
use serde::Serialize;

/// A normalized utility with u(0) = 0.
///
/// `Crra` is the power family u(x) = x^gamma. Gamma is accepted on (0, 2]:
/// the reduced-form valuation machinery (`valuation`) restricts itself to
/// the concave range (0, 1], while the mean-test bias analysis also needs
/// the convex side.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum UtilitySpec {
    Crra { gamma: f64 },
    /// A finite table prize -> utility with u(0) = 0, strictly increasing.
    /// No interpolation: evaluation off the grid is a domain error.
    TwoPoint { points: Vec<(f64, f64)> },
}

impl UtilitySpec {
    pub fn crra(gamma: f64) -> Result<Self> {
        if !gamma.is_finite() || !(gamma > 0.0 && gamma <= 2.0) {
            return Err(Error::construction(format!(
                "CRRA exponent must lie in (0, 2], got {gamma}"
            )));
        }
        Ok(UtilitySpec::Crra { gamma })
    }

    /// Builds a table utility; points need not be sorted on input.
    pub fn two_point(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::construction("utility table must be nonempty"));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in points.windows(2) {
            if !(w[0].0 < w[1].0 && w[0].1 < w[1].1) {
                return Err(Error::construction(
                    "utility table must be strictly increasing",
                ));
            }
        }
        if let Some(&(x0, u0)) = points.first() {
            if x0 < 0.0 || (x0 == 0.0 && u0 != 0.0) || u0 < 0.0 {
                return Err(Error::construction(
                    "utility table must satisfy u(0) = 0 on nonnegative prizes",
                ));
            }
        }
        Ok(UtilitySpec::TwoPoint { points })
    }

    /// Evaluates u at a prize.
    pub fn eval(&self, x: f64) -> Result<f64> {
        match self {
            UtilitySpec::Crra { gamma } => {
                if x < 0.0 {
                    return Err(Error::domain(format!("CRRA utility needs x >= 0, got {x}")));
                }
                Ok(x.powf(*gamma))
            }
            UtilitySpec::TwoPoint { points } => {
                if x == 0.0 {
                    return Ok(0.0);
                }
                points
                    .iter()
                    .find(|(px, _)| *px == x)
                    .map(|(_, u)| *u)
                    .ok_or_else(|| {
                        Error::domain(format!("prize {x} is not in the utility table"))
                    })
            }
        }
    }

    /// Inverse utility h = u^-1 on t >= 0. Only CRRA is invertible off grid.
    pub fn invert(&self, t: f64) -> Result<f64> {
        match self {
            UtilitySpec::Crra { gamma } => {
                if t < 0.0 {
                    return Err(Error::domain(format!(
                        "inverse CRRA utility needs t >= 0, got {t}"
                    )));
                }
                Ok(t.powf(1.0 / *gamma))
            }
            UtilitySpec::TwoPoint { .. } => Err(Error::domain(
                "table utilities are not invertible off their grid",
            )),
        }
    }

    pub fn crra_gamma(&self) -> Option<f64> {
        match self {
            UtilitySpec::Crra { gamma } => Some(*gamma),
            UtilitySpec::TwoPoint { .. } => None,
        }
    }
}

/// Expected utility of a binary lottery: prob * u(prize).
pub fn expected_utility(l: &Lottery, u: &UtilitySpec) -> Result<f64> {
    Ok(l.prob * u.eval(l.prize)?)
}

/// Probability weighting (distortion) functions on [0, 1].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum WeightingSpec {
    Identity,
    /// w(p) = p^sigma / (p^sigma + (1-p)^sigma)^(1/sigma)
    Tk { sigma: f64 },
    /// v(p) = exp(-(-ln p)^alpha); alpha = 1 reduces exactly to p.
    Prelec { alpha: f64 },
}

impl WeightingSpec {
    pub fn tk(sigma: f64) -> Result<Self> {
        if !sigma.is_finite() || !(sigma > 0.0 && sigma <= 2.0) {
            return Err(Error::construction(format!(
                "distortion exponent must lie in (0, 2], got {sigma}"
            )));
        }
        Ok(WeightingSpec::Tk { sigma })
    }

    pub fn prelec(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::construction(format!(
                "weighting exponent must lie in (0, 2], got {alpha}"
            )));
        }
        Ok(WeightingSpec::Prelec { alpha })
    }
}

/// Evaluates the weighting function. Endpoints are explicit branches so
/// neither ln(0) nor 0^0 is ever formed.
pub fn weight_eval(w: &WeightingSpec, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!(
            "weighting functions are defined on [0, 1], got {p}"
        )));
    }
    Ok(match w {
        WeightingSpec::Identity => p,
        WeightingSpec::Tk { sigma } => {
            if p == 0.0 {
                0.0
            } else if p == 1.0 {
                1.0
            } else {
                let num = p.powf(*sigma);
                let den = (p.powf(*sigma) + (1.0 - p).powf(*sigma)).powf(1.0 / *sigma);
                num / den
            }
        }
        WeightingSpec::Prelec { alpha } => prelec_weight(p, *alpha),
    })
}

/// Prelec weight for a probability already known to lie in [0, 1].
pub(crate) fn prelec_weight(p: f64, alpha: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else if p == 1.0 {
        1.0
    } else if alpha == 1.0 {
        p
    } else {
        (-((-p.ln()).powf(alpha))).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn crra(g: f64) -> UtilitySpec {
        UtilitySpec::crra(g).unwrap()
    }

    fn lot(x: f64, p: f64) -> Lottery {
        Lottery::new(x, p).unwrap()
    }

    #[test]
    fn expected_utility_direct_formula() {
        let v = expected_utility(&lot(30.0, 0.8), &crra(0.5)).unwrap();
        assert_relative_eq!(v, 0.8 * 30.0_f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(v, 4.38178, epsilon = 1e-5);
    }

    #[test]
    fn null_probability_has_zero_value() {
        let v = expected_utility(&lot(17.3, 0.0), &crra(0.7)).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn table_utility_evaluates_and_rejects_off_grid() {
        let u = UtilitySpec::two_point(vec![(10.0, 8.0), (30.0, 12.0)]).unwrap();
        assert_eq!(expected_utility(&lot(10.0, 1.0), &u).unwrap(), 8.0);
        assert_eq!(u.eval(0.0).unwrap(), 0.0);
        assert!(u.eval(20.0).is_err());
        assert!(u.invert(8.0).is_err());
        assert!(UtilitySpec::two_point(vec![(10.0, 8.0), (30.0, 7.0)]).is_err());
        assert!(UtilitySpec::two_point(vec![(0.0, 1.0)]).is_err());
    }

    #[test]
    fn invert_matches_fig1_corner() {
        let u = crra(0.5);
        assert_relative_eq!(u.invert(4.38178).unwrap(), 19.2, epsilon = 1e-4);
        assert_eq!(crra(1.0).invert(24.0).unwrap(), 24.0);
        assert!(u.invert(-0.1).is_err());
    }

    #[test]
    fn invert_round_trip_quarter_gamma() {
        let u = crra(0.25);
        for z in [0.1, 1.0, 10.0] {
            let x = u.invert(z).unwrap();
            assert_relative_eq!(u.eval(x).unwrap(), z, max_relative = 1e-12);
        }
    }

    #[test]
    fn round_trip_over_log_spaced_grid() {
        for g in [0.25, 0.5, 0.8, 1.0] {
            let u = crra(g);
            for i in 0..100 {
                let x = 10f64.powf(-2.0 + 4.0 * i as f64 / 99.0);
                let t = u.eval(x).unwrap();
                assert_relative_eq!(u.invert(t).unwrap(), x, max_relative = 1e-10);
                assert_relative_eq!(u.eval(u.invert(t).unwrap()).unwrap(), t, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn tk_weight_values() {
        let w = WeightingSpec::tk(0.7).unwrap();
        assert_relative_eq!(weight_eval(&w, 0.5).unwrap(), 0.45736, epsilon = 1e-4);
        assert_eq!(weight_eval(&w, 0.0).unwrap(), 0.0);
        assert_eq!(weight_eval(&w, 1.0).unwrap(), 1.0);
        assert!(weight_eval(&w, 1.2).is_err());
    }

    #[test]
    fn prelec_fixed_point_and_identity() {
        let e_inv = 1.0 / std::f64::consts::E;
        for a in [0.8, 1.0, 1.2] {
            let w = WeightingSpec::prelec(a).unwrap();
            assert!((weight_eval(&w, e_inv).unwrap() - e_inv).abs() < 1e-12);
        }
        let w1 = WeightingSpec::prelec(1.0).unwrap();
        assert_eq!(weight_eval(&w1, 0.37).unwrap(), 0.37);
    }

    #[test]
    fn weights_strictly_increasing_on_grid() {
        for s in [0.5, 0.7, 0.8, 1.0, 1.5] {
            for w in [WeightingSpec::tk(s).unwrap(), WeightingSpec::prelec(s).unwrap()] {
                let mut prev = weight_eval(&w, 0.0).unwrap();
                for i in 1..=1000 {
                    let cur = weight_eval(&w, i as f64 * 1e-3).unwrap();
                    assert!(cur > prev, "{w:?} not increasing at p = {}", i as f64 * 1e-3);
                    prev = cur;
                }
                assert_eq!(prev, 1.0);
            }
        }
    }

    proptest! {
        // First-order stochastic dominance: raising prize or probability
        // strictly raises expected utility when the other argument is positive.
        #[test]
        fn fosd_monotonicity(
            g in 0.05f64..2.0,
            x in 0.01f64..100.0,
            p in 0.01f64..1.0,
            bump in 0.01f64..1.0,
        ) {
            let u = crra(g);
            let base = expected_utility(&lot(x, p), &u).unwrap();
            let more_prize = expected_utility(&lot(x * (1.0 + bump), p), &u).unwrap();
            let more_prob = expected_utility(&lot(x, (p + bump * (1.0 - p)).min(1.0)), &u).unwrap();
            prop_assert!(more_prize > base);
            if p + bump * (1.0 - p) > p {
                prop_assert!(more_prob > base);
            }
        }

        #[test]
        fn crra_round_trip(g in 0.05f64..2.0, t in 0.0f64..1.0e4) {
            let u = crra(g);
            let x = u.invert(t).unwrap();
            let back = u.eval(x).unwrap();
            prop_assert!((back - t).abs() <= 1e-10 * t.max(1.0));
        }
    }
}
