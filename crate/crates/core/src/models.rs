//! Stochastic choice engines.
//!
//! Closed-form choice probabilities where the model admits them (difference
//! link on weighted values, pair-scaled links), Monte Carlo otherwise
//! (utility shocks, perception errors, random weighting exponents). Every
//! Monte Carlo operation reports sample counts through `FrequencyPair`
//! counts so callers can compute standard errors.
//!
//! Tie convention: a simulated agent picks the first-listed option only on
//! a strict value advantage, so with shared draws the two orderings of a
//! pair partition every realization exactly.

use crate::error::{Error, Result};
use crate::lottery::{CommonRatioProblem, Lottery};
use crate::rng::RngStream;
use crate::stats::normal_cdf;
use crate::testkit::FrequencyPair;
use crate::utility::{expected_utility, prelec_weight, weight_eval, UtilitySpec, WeightingSpec};
use crate::valuation::NoiseSpec;
use serde::Serialize;

// ---------------------------------------------------------------------------
// Difference links
// ---------------------------------------------------------------------------

/// Symmetric strictly increasing cdf F with F(0) = 1/2, applied to value
/// differences.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum FechnerLink {
    /// Cdf of U[-h, h]: the difference of the task's uniform error and zero.
    UniformDiff { halfwidth: f64 },
    /// Triangular cdf on [-h, h]: the difference of two i.i.d. U[-h/2, h/2]
    /// errors attached to the alternatives.
    TriangularDiff { halfwidth: f64 },
    Logistic { scale: f64 },
    Probit { scale: f64 },
}

impl FechnerLink {
    pub fn uniform_diff(halfwidth: f64) -> Result<Self> {
        if !(halfwidth > 0.0) {
            return Err(Error::construction("link half-width must be > 0"));
        }
        Ok(FechnerLink::UniformDiff { halfwidth })
    }

    pub fn triangular_diff(halfwidth: f64) -> Result<Self> {
        if !(halfwidth > 0.0) {
            return Err(Error::construction("link half-width must be > 0"));
        }
        Ok(FechnerLink::TriangularDiff { halfwidth })
    }

    pub fn logistic(scale: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::construction("link scale must be > 0"));
        }
        Ok(FechnerLink::Logistic { scale })
    }

    pub fn probit(scale: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::construction("link scale must be > 0"));
        }
        Ok(FechnerLink::Probit { scale })
    }

    pub fn cdf(&self, t: f64) -> f64 {
        match *self {
            FechnerLink::UniformDiff { halfwidth: h } => ((t + h) / (2.0 * h)).clamp(0.0, 1.0),
            FechnerLink::TriangularDiff { halfwidth: h } => {
                if t <= -h {
                    0.0
                } else if t >= h {
                    1.0
                } else if t <= 0.0 {
                    (h + t) * (h + t) / (2.0 * h * h)
                } else {
                    1.0 - (h - t) * (h - t) / (2.0 * h * h)
                }
            }
            FechnerLink::Logistic { scale } => 1.0 / (1.0 + (-t / scale).exp()),
            FechnerLink::Probit { scale } => normal_cdf(t / scale),
        }
    }
}

// ---------------------------------------------------------------------------
// Fechnerian models over (weighted) expected utility
// ---------------------------------------------------------------------------

/// Difference-link model over a deterministic value function. With the
/// identity weighting the value is expected utility (the additive-noise
/// expected utility model); a non-identity weighting gives the Fechnerian
/// prospect model.
#[derive(Clone, Debug, Serialize)]
pub struct FechnerModel {
    pub utility: UtilitySpec,
    pub link: FechnerLink,
    pub weighting: WeightingSpec,
}

impl FechnerModel {
    pub fn value(&self, l: &Lottery) -> Result<f64> {
        Ok(weight_eval(&self.weighting, l.prob)? * self.utility.eval(l.prize)?)
    }
}

/// Closed-form choice probability F(V(l1) - V(l2)); no sampling.
pub fn fechner_choice_prob(m: &FechnerModel, l1: &Lottery, l2: &Lottery) -> Result<f64> {
    Ok(m.link.cdf(m.value(l1)? - m.value(l2)?))
}

// ---------------------------------------------------------------------------
// Utility-shock model (every realized preference satisfies independence)
// ---------------------------------------------------------------------------

/// Random expected utility: the prize utility itself is shocked, so the
/// realized value of (x, p) is p (u(x) + eps_x). Scaling both options of a
/// task by a common ratio never reverses a realized comparison.
#[derive(Clone, Debug, Serialize)]
pub struct ReuModel {
    pub utility: UtilitySpec,
    pub shock: NoiseSpec,
}

/// Monte Carlo frequency pair; each replication draws fresh per-prize
/// shocks for each task.
pub fn reu_choice_pair(
    m: &ReuModel,
    prob: &CommonRatioProblem,
    n: usize,
    stream: &mut RngStream,
) -> Result<FrequencyPair> {
    if n == 0 {
        return Err(Error::data("need at least 1 replication"));
    }
    let ux = m.utility.eval(prob.x)?;
    let uy = m.utility.eval(prob.y)?;
    let mut k_ab = 0u64;
    let mut k_cd = 0u64;
    for _ in 0..n {
        let (ex, ey) = (m.shock.sample(stream), m.shock.sample(stream));
        if ux + ex > prob.p * (uy + ey) {
            k_ab += 1;
        }
        let (ex, ey) = (m.shock.sample(stream), m.shock.sample(stream));
        if prob.r * (ux + ex) > prob.r * prob.p * (uy + ey) {
            k_cd += 1;
        }
    }
    FrequencyPair::from_counts(k_ab, n as u64, k_cd, n as u64)
}

// ---------------------------------------------------------------------------
// Additive perception-and-utility errors
// ---------------------------------------------------------------------------

/// Correlation structure for the error terms of
/// U(z, q) = q u(z) + eps_q f(z) + eps_z g(q) + eps_{q,z}.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum PerceptionCase {
    /// Every error term independent and symmetric about zero.
    IndependentSymmetric,
    /// eps_{q,z} = alpha eps_q eps_z + beta eps*_{q,z} + gamma with fresh
    /// symmetric eps*; all other errors independent symmetric.
    ProductForm { alpha: f64, beta: f64, gamma: f64 },
    /// One pair-error draw shared by both options of a task.
    SharedSymmetric,
    /// All probability errors of a task equal lambda times its common
    /// prize error.
    LinearlyDependent { lambda: f64 },
}

/// Weighting error and prize error of the sure option. `Zero` pins the
/// weight at probability one to be exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SureWeightError {
    Zero,
    LikeProbability,
}

/// f in the additive error model: the coefficient the probability error
/// multiplies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PrizeMap {
    /// f(z) = u(z)
    Utility,
    /// f(z) = z
    Identity,
}

/// g in the additive error model: the coefficient the prize error
/// multiplies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ProbMap {
    /// g(q) = q; with only prize errors this reduces to the utility-shock
    /// model above.
    Linear,
    /// g constant at one: a plain additive prize shock.
    One,
}

#[derive(Clone, Debug, Serialize)]
pub struct PerceptionModel {
    pub utility: UtilitySpec,
    pub prize_map: PrizeMap,
    pub prob_map: ProbMap,
    pub prob_noise: NoiseSpec,
    pub prize_noise: NoiseSpec,
    pub pair_noise: NoiseSpec,
    pub case: PerceptionCase,
    pub sure: SureWeightError,
}

impl PerceptionModel {
    /// Validates the case-specific consistency requirements.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        utility: UtilitySpec,
        prize_map: PrizeMap,
        prob_map: ProbMap,
        prob_noise: NoiseSpec,
        prize_noise: NoiseSpec,
        pair_noise: NoiseSpec,
        case: PerceptionCase,
        sure: SureWeightError,
    ) -> Result<Self> {
        match case {
            PerceptionCase::IndependentSymmetric | PerceptionCase::SharedSymmetric => {
                for (name, n) in [
                    ("probability", &prob_noise),
                    ("prize", &prize_noise),
                    ("pair", &pair_noise),
                ] {
                    if !n.is_symmetric_zero() {
                        return Err(Error::config(format!(
                            "{name} noise must be symmetric about zero for this case"
                        )));
                    }
                }
            }
            PerceptionCase::ProductForm { beta, .. } => {
                if !prob_noise.is_symmetric_zero() || !prize_noise.is_symmetric_zero() {
                    return Err(Error::config(
                        "probability and prize noises must be symmetric about zero",
                    ));
                }
                if beta != 0.0 && !pair_noise.is_symmetric_zero() {
                    return Err(Error::config(
                        "the residual pair noise must be symmetric about zero",
                    ));
                }
            }
            PerceptionCase::LinearlyDependent { lambda } => {
                if lambda == 0.0 || !lambda.is_finite() {
                    return Err(Error::config("lambda must be finite and nonzero"));
                }
                if !prize_noise.is_symmetric_zero() || !pair_noise.is_symmetric_zero() {
                    return Err(Error::config(
                        "prize and pair noises must be symmetric about zero",
                    ));
                }
            }
        }
        Ok(PerceptionModel {
            utility,
            prize_map,
            prob_map,
            prob_noise,
            prize_noise,
            pair_noise,
            case,
            sure,
        })
    }

    fn f(&self, z: f64) -> Result<f64> {
        match self.prize_map {
            PrizeMap::Utility => self.utility.eval(z),
            PrizeMap::Identity => Ok(z),
        }
    }

    fn g(&self, q: f64) -> f64 {
        match self.prob_map {
            ProbMap::Linear => q,
            ProbMap::One => 1.0,
        }
    }

    /// One realization of the error difference
    /// xi = eps_q f(z2) + eps_z2 g(q) - eps_q1 f(z1) - eps_z1 g(q1) +
    /// (eps_{q,z2} - eps_{q1,z1}) for a task {(z1, q1), (z2, q)} where the
    /// first option is the (scaled) sure one.
    fn xi(
        &self,
        q1: f64,
        z1: f64,
        q2: f64,
        z2: f64,
        sure_is_exact: bool,
        stream: &mut RngStream,
    ) -> Result<f64> {
        let (e_q1, e_q2, e_z1, e_z2) = match self.case {
            PerceptionCase::LinearlyDependent { lambda } => {
                let w = self.prize_noise.sample(stream);
                let e_q1 = if sure_is_exact { 0.0 } else { lambda * w };
                (e_q1, lambda * w, w, w)
            }
            _ => {
                let e_q1 = if sure_is_exact {
                    0.0
                } else {
                    self.prob_noise.sample(stream)
                };
                (
                    e_q1,
                    self.prob_noise.sample(stream),
                    self.prize_noise.sample(stream),
                    self.prize_noise.sample(stream),
                )
            }
        };
        let pair_diff = match self.case {
            PerceptionCase::IndependentSymmetric | PerceptionCase::LinearlyDependent { .. } => {
                self.pair_noise.sample(stream) - self.pair_noise.sample(stream)
            }
            PerceptionCase::ProductForm { alpha, beta, gamma } => {
                let star1 = self.pair_noise.sample(stream);
                let star2 = self.pair_noise.sample(stream);
                let p1 = alpha * e_q1 * e_z1 + beta * star1 + gamma;
                let p2 = alpha * e_q2 * e_z2 + beta * star2 + gamma;
                p2 - p1
            }
            PerceptionCase::SharedSymmetric => {
                // Identical pair error on both options of the task; the
                // difference cancels exactly.
                self.pair_noise.sample(stream);
                0.0
            }
        };
        Ok(e_q2 * self.f(z2)? + e_z2 * self.g(q2) - e_q1 * self.f(z1)? - e_z1 * self.g(q1)
            + pair_diff)
    }
}

/// Monte Carlo frequency pair under the additive perception-error model.
/// The sure option of the AB task carries its own error terms, pinned or
/// drawn according to the model's `sure` setting.
pub fn perception_choice_pair(
    m: &PerceptionModel,
    prob: &CommonRatioProblem,
    n: usize,
    stream: &mut RngStream,
) -> Result<FrequencyPair> {
    if n == 0 {
        return Err(Error::data("need at least 1 replication"));
    }
    let ux = m.utility.eval(prob.x)?;
    let uy = m.utility.eval(prob.y)?;
    let d_ab = ux - prob.p * uy;
    let d_cd = prob.r * d_ab;
    let sure_exact = m.sure == SureWeightError::Zero;
    let mut k_ab = 0u64;
    let mut k_cd = 0u64;
    for _ in 0..n {
        if d_ab > m.xi(1.0, prob.x, prob.p, prob.y, sure_exact, stream)? {
            k_ab += 1;
        }
        // Both options of the CD task are risky; their weights always err.
        if d_cd > m.xi(prob.r, prob.x, prob.r * prob.p, prob.y, false, stream)? {
            k_cd += 1;
        }
    }
    FrequencyPair::from_counts(k_ab, n as u64, k_cd, n as u64)
}

// ---------------------------------------------------------------------------
// Pair-scaled links
// ---------------------------------------------------------------------------

/// Strictly positive symmetric scale applied to the value difference before
/// the link: rho = F(G(l1, l2) [v(l1) - v(l2)]).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum PairScale {
    Const(f64),
    /// c exp(a (v1 + v2) + b |v1 - v2|); symmetric in the pair and positive
    /// for c > 0.
    ExpValue { a: f64, b: f64, c: f64 },
}

impl PairScale {
    fn eval(&self, v1: f64, v2: f64) -> f64 {
        match *self {
            PairScale::Const(c) => c,
            PairScale::ExpValue { a, b, c } => c * (a * (v1 + v2) + b * (v1 - v2).abs()).exp(),
        }
    }
}

/// Expected utility with a pair-dependent discrimination scale.
#[derive(Clone, Debug, Serialize)]
pub struct WeakEuModel {
    pub utility: UtilitySpec,
    pub link: FechnerLink,
    pub scale: PairScale,
}

/// Closed form F(G(l1, l2) (EU(l1) - EU(l2))); errors if the scale is not
/// strictly positive at the pair.
pub fn weakeu_choice_prob(m: &WeakEuModel, l1: &Lottery, l2: &Lottery) -> Result<f64> {
    let v1 = expected_utility(l1, &m.utility)?;
    let v2 = expected_utility(l2, &m.utility)?;
    let g = m.scale.eval(v1, v2);
    if !(g > 0.0) {
        return Err(Error::model(format!(
            "pair scale must be strictly positive, got {g}"
        )));
    }
    Ok(m.link.cdf(g * (v1 - v2)))
}

// ---------------------------------------------------------------------------
// Prospect-theory choice frequencies (the Figure 3 generator)
// ---------------------------------------------------------------------------

/// Simulates per-task choice frequencies under the deterministic prospect
/// value with uniform choice errors on [-h, h): the agent picks A when
/// u(x) - w(p) u(y) > eps (fresh eps per choice) and C when
/// w(r) u(x) - w(rp) u(y) > eps. `noise_halfwidth = 0` degenerates to the
/// deterministic preference indicators.
pub fn prospect_frequency_sim(
    gamma: f64,
    sigma: f64,
    prob: &CommonRatioProblem,
    noise_halfwidth: f64,
    n_choices: usize,
    stream: &mut RngStream,
) -> Result<FrequencyPair> {
    if n_choices == 0 {
        return Err(Error::data("need at least 1 choice per task"));
    }
    if !(noise_halfwidth >= 0.0) {
        return Err(Error::domain("noise half-width must be >= 0".to_string()));
    }
    let u = UtilitySpec::crra(gamma)?;
    let w = WeightingSpec::tk(sigma)?;
    let ux = u.eval(prob.x)?;
    let uy = u.eval(prob.y)?;
    let d_ab = ux - weight_eval(&w, prob.p)? * uy;
    let d_cd = weight_eval(&w, prob.r)? * ux - weight_eval(&w, prob.r * prob.p)? * uy;
    let mut k_ab = 0u64;
    let mut k_cd = 0u64;
    for _ in 0..n_choices {
        if d_ab > stream.next_symmetric(noise_halfwidth) {
            k_ab += 1;
        }
        if d_cd > stream.next_symmetric(noise_halfwidth) {
            k_cd += 1;
        }
    }
    FrequencyPair::from_counts(k_ab, n_choices as u64, k_cd, n_choices as u64)
}

// ---------------------------------------------------------------------------
// Random weighting exponent
// ---------------------------------------------------------------------------

/// Law of the weighting exponent, supported inside (0, 2).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum AlphaDist {
    /// Uniform on [1 - delta, 1 + delta]; mean = median = 1.
    SymmetricUniform,
    /// Asymmetric piecewise-uniform with median exactly 1: half the mass
    /// uniform on [1 - left * delta, 1), half uniform on [1, 1 + right * delta].
    Median1 { left: f64, right: f64 },
}

/// Prospect value with CRRA utility and an exponent-randomized weighting
/// w(q; alpha) = exp(-(-ln q)^alpha), drawn fresh per task and replication.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RandomPrelecModel {
    pub gamma: f64,
    pub delta: f64,
    pub alpha_dist: AlphaDist,
}

impl RandomPrelecModel {
    pub fn new(gamma: f64, delta: f64, alpha_dist: AlphaDist) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 2.0) {
            return Err(Error::construction(format!(
                "gamma must lie in (0, 2], got {gamma}"
            )));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::construction(format!(
                "delta must lie in (0, 1), got {delta}"
            )));
        }
        if let AlphaDist::Median1 { left, right } = alpha_dist {
            if !(left > 0.0 && left <= 1.0 && right > 0.0 && right <= 1.0) {
                return Err(Error::construction(
                    "median-1 side fractions must lie in (0, 1]",
                ));
            }
        }
        Ok(RandomPrelecModel {
            gamma,
            delta,
            alpha_dist,
        })
    }

    pub fn sample_alpha(&self, stream: &mut RngStream) -> f64 {
        match self.alpha_dist {
            AlphaDist::SymmetricUniform => 1.0 - self.delta + 2.0 * self.delta * stream.next_uniform(),
            AlphaDist::Median1 { left, right } => {
                let u = stream.next_uniform();
                if u < 0.5 {
                    1.0 - left * self.delta * (1.0 - 2.0 * u)
                } else {
                    1.0 + right * self.delta * (2.0 * u - 1.0)
                }
            }
        }
    }
}

/// Monte Carlo frequency pair: choose A when u(x) > w(p; alpha) u(y) and
/// C when w(r; alpha) u(x) > w(rp; alpha) u(y), fresh alpha per task and
/// replication. `p = 1` makes the AB task weight-free and is rejected.
pub fn random_prelec_choice_pair(
    m: &RandomPrelecModel,
    prob: &CommonRatioProblem,
    n: usize,
    stream: &mut RngStream,
) -> Result<FrequencyPair> {
    if n == 0 {
        return Err(Error::data("need at least 1 replication"));
    }
    if prob.p >= 1.0 {
        return Err(Error::domain(
            "the AB task needs p < 1 for the weighting to matter".to_string(),
        ));
    }
    let ux = prob.x.powf(m.gamma);
    let uy = prob.y.powf(m.gamma);
    let mut k_ab = 0u64;
    let mut k_cd = 0u64;
    for _ in 0..n {
        let a1 = m.sample_alpha(stream);
        if ux > prelec_weight(prob.p, a1) * uy {
            k_ab += 1;
        }
        let a2 = m.sample_alpha(stream);
        if prelec_weight(prob.r, a2) * ux > prelec_weight(prob.r * prob.p, a2) * uy {
            k_cd += 1;
        }
    }
    FrequencyPair::from_counts(k_ab, n as u64, k_cd, n as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lottery::make_problem;
    use approx::assert_relative_eq;

    fn crra(g: f64) -> UtilitySpec {
        UtilitySpec::crra(g).unwrap()
    }

    fn stream(id: u64) -> RngStream {
        RngStream::new(0xBEEF, id)
    }

    #[test]
    fn links_are_symmetric_and_halved_at_zero() {
        let links = [
            FechnerLink::uniform_diff(1.8).unwrap(),
            FechnerLink::triangular_diff(2.0).unwrap(),
            FechnerLink::logistic(0.7).unwrap(),
            FechnerLink::probit(1.3).unwrap(),
        ];
        for link in links {
            assert_relative_eq!(link.cdf(0.0), 0.5, epsilon = 1e-12);
            for t in [-2.5, -1.0, -0.3, 0.2, 0.9, 3.0] {
                assert_relative_eq!(link.cdf(t) + link.cdf(-t), 1.0, epsilon = 1e-12);
            }
            // Half-point only at zero.
            assert!(link.cdf(1e-9) > 0.5);
            assert!(link.cdf(-1e-9) < 0.5);
            let mut prev = link.cdf(-0.99);
            for i in 1..100 {
                let cur = link.cdf(-0.99 + 0.02 * i as f64);
                assert!(cur >= prev);
                prev = cur;
            }
        }
    }

    #[test]
    fn fechner_uniform_link_value() {
        let m = FechnerModel {
            utility: crra(1.0),
            link: FechnerLink::uniform_diff(1.8).unwrap(),
            weighting: WeightingSpec::Identity,
        };
        // Directly on the value difference: F(0.35) = (0.35 + 1.8)/3.6.
        assert_relative_eq!(m.link.cdf(0.35), 0.59722, epsilon = 1e-5);
        let l = Lottery::new(2.0, 0.5).unwrap();
        assert_eq!(fechner_choice_prob(&m, &l, &l).unwrap(), 0.5);
    }

    #[test]
    fn additive_noise_model_violates_scaling_invariance() {
        // Table utility with u(10) = 8, u(30) = 12 and i.i.d. U[-1, 1]
        // errors per option: the scaled-down pair flips a sure rejection
        // into 169/800.
        let m = FechnerModel {
            utility: UtilitySpec::two_point(vec![(10.0, 8.0), (30.0, 12.0)]).unwrap(),
            link: FechnerLink::triangular_diff(2.0).unwrap(),
            weighting: WeightingSpec::Identity,
        };
        let l1 = Lottery::new(10.0, 1.0).unwrap();
        let l2 = Lottery::new(30.0, 0.9).unwrap();
        assert_eq!(fechner_choice_prob(&m, &l1, &l2).unwrap(), 0.0);

        let s1 = Lottery::new(10.0, 0.25).unwrap();
        let s2 = Lottery::new(30.0, 0.225).unwrap();
        let rho = fechner_choice_prob(&m, &s1, &s2).unwrap();
        assert!((rho - 169.0 / 800.0).abs() < 1e-15, "rho = {rho}");
    }

    #[test]
    fn fechner_complementarity_exact() {
        let m = FechnerModel {
            utility: crra(0.8),
            link: FechnerLink::logistic(0.5).unwrap(),
            weighting: WeightingSpec::tk(0.7).unwrap(),
        };
        let l1 = Lottery::new(12.0, 0.7).unwrap();
        let l2 = Lottery::new(30.0, 0.4).unwrap();
        let sum = fechner_choice_prob(&m, &l1, &l2).unwrap()
            + fechner_choice_prob(&m, &l2, &l1).unwrap();
        assert_relative_eq!(sum, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn additive_model_weak_test_bias_direction() {
        // With identity weighting and u(x) > p u(y), the first-task
        // probability strictly exceeds the scaled one.
        let m = FechnerModel {
            utility: crra(0.8),
            link: FechnerLink::logistic(1.0).unwrap(),
            weighting: WeightingSpec::Identity,
        };
        let prob = make_problem(10.0, 12.0, 0.8, 0.3).unwrap();
        let rho_ab = fechner_choice_prob(&m, &prob.a(), &prob.b()).unwrap();
        let rho_cd = fechner_choice_prob(&m, &prob.c(), &prob.d()).unwrap();
        let d = m.value(&prob.a()).unwrap() - m.value(&prob.b()).unwrap();
        assert!(d > 0.0);
        assert!(rho_ab > rho_cd);
    }

    #[test]
    fn reu_degenerate_shock_is_deterministic() {
        let m = ReuModel {
            utility: crra(0.5),
            shock: NoiseSpec::Degenerate(0.0),
        };
        let prob = make_problem(25.0, 30.0, 0.8, 0.4).unwrap();
        // u(25) = 5 > 0.8 sqrt(30) = 4.38.
        let fp = reu_choice_pair(&m, &prob, 100, &mut stream(1)).unwrap();
        assert_eq!(fp.rho_ab, 1.0);
        assert_eq!(fp.rho_cd, 1.0);
    }

    #[test]
    fn reu_frequencies_agree_across_tasks() {
        let m = ReuModel {
            utility: crra(0.5),
            shock: NoiseSpec::uniform(-3.0, 3.0).unwrap(),
        };
        let prob = make_problem(22.0, 30.0, 0.8, 0.4).unwrap();
        let n = 1_000_000;
        let fp = reu_choice_pair(&m, &prob, n, &mut stream(2)).unwrap();
        let bound = 4.0 * (0.25 / n as f64).sqrt() * std::f64::consts::SQRT_2;
        assert!(
            (fp.rho_ab - fp.rho_cd).abs() < bound,
            "{} vs {}",
            fp.rho_ab,
            fp.rho_cd
        );
    }

    #[test]
    fn reu_matches_quadrature_oracle() {
        // x = y with shocks U[-u(x), u(x)]: the winning probability has a
        // smooth one-dimensional integral representation through the shock
        // cdf; Simpson quadrature is the oracle.
        let x = 9.0f64;
        let gamma = 0.5;
        let ux = x.powf(gamma);
        let p = 0.7;
        let m = ReuModel {
            utility: crra(gamma),
            shock: NoiseSpec::uniform(-ux, ux).unwrap(),
        };
        let prob = make_problem(x, x, p, 0.5).unwrap();
        let n = 400_000;
        let fp = reu_choice_pair(&m, &prob, n, &mut stream(3)).unwrap();

        // Pr(ux + e1 > p (ux + e2)) = E_e2 [1 - F1(p(ux + e2) - ux)]
        let cdf = |t: f64| ((t + ux) / (2.0 * ux)).clamp(0.0, 1.0);
        let steps = 100_000;
        let h = 2.0 * ux / steps as f64;
        let mut acc = 0.0;
        for i in 0..=steps {
            let w = if i == 0 || i == steps {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let e2 = -ux + i as f64 * h;
            acc += w * (1.0 - cdf(p * (ux + e2) - ux));
        }
        let oracle = acc * h / 3.0 / (2.0 * ux);
        assert!(
            (fp.rho_ab - oracle).abs() < 0.003,
            "mc {} vs quadrature {oracle}",
            fp.rho_ab
        );
    }

    #[test]
    fn perception_degenerate_errors_reduce_to_indicators() {
        let zero = NoiseSpec::Degenerate(0.0);
        let m = PerceptionModel::new(
            crra(0.5),
            PrizeMap::Utility,
            ProbMap::Linear,
            zero.clone(),
            zero.clone(),
            zero,
            PerceptionCase::IndependentSymmetric,
            SureWeightError::Zero,
        )
        .unwrap();
        let prob = make_problem(25.0, 30.0, 0.8, 0.4).unwrap();
        let fp = perception_choice_pair(&m, &prob, 50, &mut stream(4)).unwrap();
        assert_eq!((fp.rho_ab, fp.rho_cd), (1.0, 1.0));
    }

    #[test]
    fn perception_quadrant_consistency_independent_case() {
        // u(x) - p u(y) = +0.5 with sub-unit symmetric noises: both
        // frequencies sit at or above one half (within sampling error).
        let y = 30.0f64;
        let p = 0.8;
        let gamma = 0.5;
        let x = (p * y.powf(gamma) + 0.5).powf(1.0 / gamma);
        let prob = make_problem(x, y, p, 0.4).unwrap();
        let m = PerceptionModel::new(
            crra(gamma),
            PrizeMap::Utility,
            ProbMap::Linear,
            NoiseSpec::uniform(-0.08, 0.08).unwrap(),
            NoiseSpec::two_point_sym(0.5).unwrap(),
            NoiseSpec::uniform(-0.6, 0.6).unwrap(),
            PerceptionCase::IndependentSymmetric,
            SureWeightError::Zero,
        )
        .unwrap();
        let n = 400_000;
        let fp = perception_choice_pair(&m, &prob, n, &mut stream(5)).unwrap();
        let se = (0.25 / n as f64).sqrt();
        assert!(fp.rho_ab >= 0.5 - 3.0 * se, "{}", fp.rho_ab);
        assert!(fp.rho_cd >= 0.5 - 3.0 * se, "{}", fp.rho_cd);
    }

    #[test]
    fn perception_quadrant_consistency_shared_case() {
        let y = 30.0f64;
        let p = 0.8;
        let gamma = 0.5;
        let x = (p * y.powf(gamma) + 0.5).powf(1.0 / gamma);
        let prob = make_problem(x, y, p, 0.4).unwrap();
        let m = PerceptionModel::new(
            crra(gamma),
            PrizeMap::Utility,
            ProbMap::Linear,
            NoiseSpec::uniform(-0.08, 0.08).unwrap(),
            NoiseSpec::two_point_sym(0.5).unwrap(),
            NoiseSpec::uniform(-0.6, 0.6).unwrap(),
            PerceptionCase::SharedSymmetric,
            SureWeightError::LikeProbability,
        )
        .unwrap();
        let n = 400_000;
        let fp = perception_choice_pair(&m, &prob, n, &mut stream(6)).unwrap();
        let se = (0.25 / n as f64).sqrt();
        assert!(fp.rho_ab >= 0.5 - 3.0 * se);
        assert!(fp.rho_cd >= 0.5 - 3.0 * se);
    }

    #[test]
    fn perception_config_errors() {
        let skew = NoiseSpec::two_point_skew(0.2, 0.3).unwrap();
        let sym = NoiseSpec::two_point_sym(0.2).unwrap();
        assert!(PerceptionModel::new(
            crra(0.5),
            PrizeMap::Utility,
            ProbMap::Linear,
            skew,
            sym.clone(),
            sym.clone(),
            PerceptionCase::IndependentSymmetric,
            SureWeightError::Zero,
        )
        .is_err());
        assert!(PerceptionModel::new(
            crra(0.5),
            PrizeMap::Utility,
            ProbMap::Linear,
            sym.clone(),
            sym.clone(),
            sym,
            PerceptionCase::LinearlyDependent { lambda: 0.0 },
            SureWeightError::Zero,
        )
        .is_err());
    }

    #[test]
    fn weakeu_reduces_and_scales() {
        let m1 = WeakEuModel {
            utility: crra(1.0),
            link: FechnerLink::uniform_diff(1.8).unwrap(),
            scale: PairScale::Const(1.0),
        };
        let l1 = Lottery::new(2.0, 0.8).unwrap();
        let l2 = Lottery::new(1.25, 1.0).unwrap();
        let fm = FechnerModel {
            utility: crra(1.0),
            link: FechnerLink::uniform_diff(1.8).unwrap(),
            weighting: WeightingSpec::Identity,
        };
        assert_eq!(
            weakeu_choice_prob(&m1, &l1, &l2).unwrap(),
            fechner_choice_prob(&fm, &l1, &l2).unwrap()
        );

        // EU-equal lotteries sit at one half for any positive scale.
        let eq1 = Lottery::new(2.0, 0.5).unwrap();
        let eq2 = Lottery::new(1.0, 1.0).unwrap();
        let m2 = WeakEuModel {
            utility: crra(1.0),
            link: FechnerLink::uniform_diff(1.8).unwrap(),
            scale: PairScale::ExpValue { a: 0.3, b: 0.9, c: 2.0 },
        };
        assert_eq!(weakeu_choice_prob(&m2, &eq1, &eq2).unwrap(), 0.5);

        // Scale 2 doubles the difference before the link.
        let m3 = WeakEuModel {
            utility: crra(1.0),
            link: FechnerLink::uniform_diff(1.8).unwrap(),
            scale: PairScale::Const(2.0),
        };
        let a = Lottery::new(1.35, 1.0).unwrap();
        let b = Lottery::new(2.0, 0.5).unwrap();
        assert_relative_eq!(
            weakeu_choice_prob(&m3, &a, &b).unwrap(),
            (0.7 + 1.8) / 3.6,
            epsilon = 1e-12
        );
        let bad = WeakEuModel {
            utility: crra(1.0),
            link: FechnerLink::uniform_diff(1.8).unwrap(),
            scale: PairScale::Const(0.0),
        };
        assert!(weakeu_choice_prob(&bad, &a, &b).is_err());
    }

    #[test]
    fn prospect_sim_population_means() {
        let prob = make_problem(12.0, 30.0, 0.5, 0.2).unwrap();
        let n = 1_000_000;
        let fp = prospect_frequency_sim(0.8, 0.7, &prob, 1.8, n, &mut stream(7)).unwrap();
        let se = (0.25 / n as f64).sqrt();
        assert!((fp.rho_ab - 0.5974218).abs() < 4.0 * se, "{}", fp.rho_ab);
        assert!((fp.rho_cd - 0.3105417).abs() < 4.0 * se, "{}", fp.rho_cd);
    }

    #[test]
    fn prospect_sim_zero_noise_is_deterministic() {
        let prob = make_problem(12.0, 30.0, 0.5, 0.2).unwrap();
        let fp = prospect_frequency_sim(0.8, 0.7, &prob, 0.0, 100, &mut stream(8)).unwrap();
        // Value differences +0.3507 and -0.6820: A always, C never.
        assert_eq!((fp.rho_ab, fp.rho_cd), (1.0, 0.0));
    }

    #[test]
    fn prospect_sim_indifference_near_half() {
        // sigma = gamma = 1 and x = p y: both tasks are EU-indifferent, and
        // the strict-advantage tie rule picks the risky option every time
        // only when noise is absent; with noise the frequency is near half.
        let prob = make_problem(24.0, 30.0, 0.8, 0.4).unwrap();
        let n = 200_000;
        let fp = prospect_frequency_sim(1.0, 1.0, &prob, 1.8, n, &mut stream(9)).unwrap();
        let se = (0.25 / n as f64).sqrt();
        assert!((fp.rho_ab - 0.5).abs() < 4.0 * se);
        assert!((fp.rho_cd - 0.5).abs() < 4.0 * se);
    }

    #[test]
    fn random_prelec_reduces_to_indicators_for_tiny_delta() {
        let m = RandomPrelecModel::new(1.0, 1e-9, AlphaDist::SymmetricUniform).unwrap();
        // x above p y: A and C win for every alpha near 1.
        let prob = make_problem(27.0, 30.0, 0.8, 0.5).unwrap();
        let fp = random_prelec_choice_pair(&m, &prob, 200, &mut stream(10)).unwrap();
        assert_eq!((fp.rho_ab, fp.rho_cd), (1.0, 1.0));
    }

    #[test]
    fn random_prelec_indifference_point() {
        let m = RandomPrelecModel::new(1.0, 0.2, AlphaDist::SymmetricUniform).unwrap();
        let prob = make_problem(24.0, 30.0, 0.8, 0.5).unwrap();
        let n = 400_000;
        let fp = random_prelec_choice_pair(&m, &prob, n, &mut stream(11)).unwrap();
        let se = (0.25 / n as f64).sqrt();
        assert!((fp.rho_ab - 0.5).abs() < 4.0 * se, "{}", fp.rho_ab);
        assert!((fp.rho_cd - 0.5).abs() < 4.0 * se, "{}", fp.rho_cd);
    }

    #[test]
    fn random_prelec_median_one_strong_quadrant() {
        let m = RandomPrelecModel::new(
            0.9,
            0.5,
            AlphaDist::Median1 {
                left: 1.0,
                right: 0.35,
            },
        )
        .unwrap();
        // Clearly away from indifference on both sides.
        for (x, expect_high) in [(27.0, true), (20.0, false)] {
            let prob = make_problem(x, 30.0, 0.8, 0.5).unwrap();
            let n = 200_000;
            let fp = random_prelec_choice_pair(&m, &prob, n, &mut stream(12)).unwrap();
            if expect_high {
                assert!(fp.rho_ab > 0.52 && fp.rho_cd > 0.52, "{fp:?}");
            } else {
                assert!(fp.rho_ab < 0.48 && fp.rho_cd < 0.48, "{fp:?}");
            }
        }
        let bad = make_problem(24.0, 30.0, 1.0, 0.5).unwrap();
        assert!(random_prelec_choice_pair(&m, &bad, 10, &mut stream(13)).is_err());
    }

    #[test]
    fn monte_carlo_complementarity_with_shared_draws() {
        // Simulate both orderings of a task from the same draws; the strict
        // advantage rule makes the two indicators partition each draw.
        let u = crra(0.5);
        let prob = make_problem(20.0, 30.0, 0.8, 0.4).unwrap();
        let ux = u.eval(prob.x).unwrap();
        let uy = u.eval(prob.y).unwrap();
        let shock = NoiseSpec::two_point_sym(1.0).unwrap();
        let mut s = stream(14);
        for _ in 0..10_000 {
            let e1 = shock.sample(&mut s);
            let e2 = shock.sample(&mut s);
            let v1 = ux + e1;
            let v2 = prob.p * (uy + e2);
            let first = v1 > v2;
            let second = v2 > v1;
            assert!(!(first && second));
            // Ties go to the second-listed option in both orderings.
            if v1 == v2 {
                assert!(!first && !second);
            }
        }
    }
}
