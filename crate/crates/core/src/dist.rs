//! Degree distributions and their probability generating functions.
//!
//! The branching-process approximation needs three things from a degree law
//! `P`: its generating function `G(x) = E[x^N]`, its mean, and the
//! size-biased offspring law `P*` with `P*(d-1) = d P(d) / sum_d d P(d)` —
//! the degree distribution seen by following a uniformly random edge, minus
//! the edge you arrived on.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// Default truncation point when an infinite-support law has to be
/// materialized as an empirical vector (only the size-biased geometric
/// needs this). Tail mass beyond the cut is renormalized away; a warning is
/// printed if it exceeds [`TAIL_MASS_WARN`].
pub const DEFAULT_DMAX: usize = 200;

/// Dropped tail mass above this triggers a stderr warning.
pub const TAIL_MASS_WARN: f64 = 1e-9;

/// Tolerance for "probabilities sum to one" checks.
const PROB_SUM_TOL: f64 = 1e-12;

/// A degree distribution on {0, 1, 2, ...}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DegreeDist {
    /// Poisson with mean `lambda > 0`.
    Poisson { lambda: f64 },
    /// Every node has exactly `degree` neighbors.
    Regular { degree: usize },
    /// Geometric on {0,1,2,...}: `P(d) = p (1-p)^d` with success probability
    /// `p` in (0, 1].
    Geometric { p: f64 },
    /// Explicit probabilities for degrees `0..probs.len()`.
    Empirical { probs: Vec<f64> },
}

impl DegreeDist {
    pub fn poisson(lambda: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(Error::domain(format!(
                "Poisson mean must be positive and finite, got {lambda}"
            )));
        }
        Ok(DegreeDist::Poisson { lambda })
    }

    pub fn regular(degree: usize) -> Self {
        DegreeDist::Regular { degree }
    }

    pub fn geometric(p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::domain(format!(
                "geometric success probability must be in (0, 1], got {p}"
            )));
        }
        Ok(DegreeDist::Geometric { p })
    }

    pub fn empirical(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::domain(
                "empirical distribution needs at least one entry",
            ));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::domain("empirical probabilities must be nonnegative"));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::domain(format!(
                "empirical probabilities must sum to 1 within {PROB_SUM_TOL}, got {sum}"
            )));
        }
        Ok(DegreeDist::Empirical { probs })
    }

    /// Generating function `G(x) = E[x^N]` for `x` in `[0, 1]`.
    pub fn gen_fn(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::domain(format!(
                "gen_fn requires x in [0,1], got {x}"
            )));
        }
        Ok(match self {
            DegreeDist::Poisson { lambda } => (lambda * (x - 1.0)).exp(),
            DegreeDist::Regular { degree } => x.powi(*degree as i32),
            DegreeDist::Geometric { p } => p / (1.0 - (1.0 - p) * x),
            DegreeDist::Empirical { probs } => horner(probs, x),
        })
    }

    /// Analytic derivative `G'(x)`. Provided per variant so property tests
    /// can cross-check it against finite differences, and so the offspring
    /// generating function `G'(x)/mean` never needs truncation.
    pub fn gen_fn_derivative(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::domain(format!(
                "gen_fn_derivative requires x in [0,1], got {x}"
            )));
        }
        Ok(match self {
            DegreeDist::Poisson { lambda } => lambda * (lambda * (x - 1.0)).exp(),
            DegreeDist::Regular { degree } => {
                if *degree == 0 {
                    0.0
                } else {
                    *degree as f64 * x.powi(*degree as i32 - 1)
                }
            }
            DegreeDist::Geometric { p } => {
                let denom = 1.0 - (1.0 - p) * x;
                p * (1.0 - p) / (denom * denom)
            }
            DegreeDist::Empirical { probs } => {
                // d/dx sum p_d x^d = sum_{d>=1} d p_d x^{d-1}
                let deriv: Vec<f64> = probs
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(d, p)| d as f64 * p)
                    .collect();
                horner(&deriv, x)
            }
        })
    }

    /// Exact mean degree.
    pub fn mean_degree(&self) -> f64 {
        match self {
            DegreeDist::Poisson { lambda } => *lambda,
            DegreeDist::Regular { degree } => *degree as f64,
            DegreeDist::Geometric { p } => (1.0 - p) / p,
            DegreeDist::Empirical { probs } => {
                probs.iter().enumerate().map(|(d, p)| d as f64 * p).sum()
            }
        }
    }

    /// Size-biased offspring distribution `P*(d-1) = d P(d) / mean`, with
    /// the default truncation for infinite-support inputs.
    pub fn size_biased(&self) -> Result<DegreeDist> {
        self.size_biased_truncated(DEFAULT_DMAX)
    }

    /// As [`size_biased`](Self::size_biased) with an explicit truncation
    /// point for laws whose offspring distribution has infinite support.
    /// Poisson maps to itself and Regular(d) to Regular(d-1) exactly.
    pub fn size_biased_truncated(&self, d_max: usize) -> Result<DegreeDist> {
        let mean = self.mean_degree();
        if mean <= 0.0 {
            return Err(Error::domain(
                "size-biasing is undefined for a distribution with mean degree 0",
            ));
        }
        match self {
            DegreeDist::Poisson { lambda } => Ok(DegreeDist::Poisson { lambda: *lambda }),
            DegreeDist::Regular { degree } => Ok(DegreeDist::Regular { degree: degree - 1 }),
            DegreeDist::Geometric { p } => {
                // P*(k) = (k+1) p^2 (1-p)^k, a negative binomial; truncate.
                let mut probs = Vec::with_capacity(d_max + 1);
                let mut tail = 1.0;
                for k in 0..=d_max {
                    let w = (k as f64 + 1.0) * p * p * (1.0 - p).powi(k as i32);
                    probs.push(w);
                    tail -= w;
                }
                if tail > TAIL_MASS_WARN {
                    eprintln!(
                        "warning: size-biased geometric truncated at {d_max} drops tail mass {tail:.3e}; renormalizing"
                    );
                }
                let sum: f64 = probs.iter().sum();
                for w in &mut probs {
                    *w /= sum;
                }
                Ok(DegreeDist::Empirical { probs })
            }
            DegreeDist::Empirical { probs } => {
                let mut out: Vec<f64> = probs
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(d, p)| d as f64 * p / mean)
                    .collect();
                if out.is_empty() {
                    out.push(1.0);
                }
                let sum: f64 = out.iter().sum();
                for w in &mut out {
                    *w /= sum;
                }
                Ok(DegreeDist::Empirical { probs: out })
            }
        }
    }

    /// Draw one degree.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        match self {
            DegreeDist::Poisson { lambda } => sample_poisson(*lambda, rng),
            DegreeDist::Regular { degree } => *degree,
            DegreeDist::Geometric { p } => {
                if *p >= 1.0 {
                    0
                } else {
                    let u: f64 = rng.random();
                    // floor(ln u / ln(1-p)); u in (0,1] to avoid ln(0)
                    let u = u.max(f64::MIN_POSITIVE);
                    (u.ln() / (1.0 - p).ln()).floor() as usize
                }
            }
            DegreeDist::Empirical { probs } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (d, p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return d;
                    }
                }
                probs.len() - 1
            }
        }
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Knuth's product method, chunked so it stays exact for large means
/// (e^-lambda underflows past ~700 otherwise).
fn sample_poisson<R: Rng>(lambda: f64, rng: &mut R) -> usize {
    let mut remaining = lambda;
    let mut count = 0usize;
    while remaining > 0.0 {
        let chunk = remaining.min(500.0);
        let threshold = (-chunk).exp();
        let mut prod: f64 = 1.0;
        loop {
            prod *= rng.random::<f64>();
            if prod < threshold {
                break;
            }
            count += 1;
        }
        remaining -= chunk;
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use proptest::prelude::*;

    /// Independent oracle: evaluate the Poisson GF by direct series
    /// summation until the term falls below 1e-18.
    fn poisson_gf_series(lambda: f64, x: f64) -> f64 {
        let mut term = (-lambda).exp();
        let mut sum = term;
        let mut d = 1.0;
        loop {
            term *= lambda * x / d;
            sum += term;
            d += 1.0;
            if term < 1e-18 || d > 10_000.0 {
                return sum;
            }
        }
    }

    #[test]
    fn gen_fn_at_one_is_one() {
        let dists = [
            DegreeDist::poisson(10.0).unwrap(),
            DegreeDist::regular(3),
            DegreeDist::geometric(0.3).unwrap(),
            DegreeDist::empirical(vec![0.2, 0.3, 0.5]).unwrap(),
        ];
        for d in &dists {
            assert!((d.gen_fn(1.0).unwrap() - 1.0).abs() < 1e-12, "{d:?}");
        }
    }

    #[test]
    fn poisson_gf_matches_closed_form_and_series() {
        let d = DegreeDist::poisson(10.0).unwrap();
        let got = d.gen_fn(0.9).unwrap();
        assert!((got - 0.367_879_441_171_442_4).abs() < 1e-15);
        assert!((got - poisson_gf_series(10.0, 0.9)).abs() < 1e-12);
        for &x in &[0.0, 0.17, 0.5, 0.99, 1.0] {
            let series = poisson_gf_series(10.0, x);
            assert!((d.gen_fn(x).unwrap() - series).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn regular_gf_is_power() {
        let d = DegreeDist::regular(3);
        assert_eq!(d.gen_fn(0.5).unwrap(), 0.125);
    }

    #[test]
    fn gen_fn_rejects_out_of_range() {
        let d = DegreeDist::poisson(2.0).unwrap();
        assert!(d.gen_fn(-0.1).is_err());
        assert!(d.gen_fn(1.1).is_err());
    }

    #[test]
    fn mean_degree_values() {
        assert_eq!(DegreeDist::poisson(10.0).unwrap().mean_degree(), 10.0);
        assert_eq!(DegreeDist::regular(3).mean_degree(), 3.0);
        assert_eq!(
            DegreeDist::empirical(vec![0.5, 0.0, 0.5])
                .unwrap()
                .mean_degree(),
            1.0
        );
        let g = DegreeDist::geometric(0.25).unwrap();
        assert!((g.mean_degree() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn size_biased_poisson_is_itself() {
        let d = DegreeDist::poisson(10.0).unwrap();
        assert_eq!(d.size_biased().unwrap(), d);
    }

    #[test]
    fn size_biased_regular_drops_one() {
        assert_eq!(
            DegreeDist::regular(3).size_biased().unwrap(),
            DegreeDist::regular(2)
        );
    }

    #[test]
    fn size_biased_empirical_example() {
        // P = [0, 1/2, 1/2] over {0,1,2}  ->  P* = [1/3, 2/3] over {0,1}
        let d = DegreeDist::empirical(vec![0.0, 0.5, 0.5]).unwrap();
        match d.size_biased().unwrap() {
            DegreeDist::Empirical { probs } => {
                assert_eq!(probs.len(), 2);
                assert!((probs[0] - 1.0 / 3.0).abs() < 1e-15);
                assert!((probs[1] - 2.0 / 3.0).abs() < 1e-15);
            }
            other => panic!("expected empirical, got {other:?}"),
        }
    }

    #[test]
    fn size_biased_geometric_is_negative_binomial() {
        let p = 0.4;
        let d = DegreeDist::geometric(p).unwrap();
        match d.size_biased().unwrap() {
            DegreeDist::Empirical { probs } => {
                for (k, got) in probs.iter().take(30).enumerate() {
                    let want = (k as f64 + 1.0) * p * p * (1.0 - p).powi(k as i32);
                    assert!((got - want).abs() < 1e-12, "k={k}");
                }
            }
            other => panic!("expected empirical, got {other:?}"),
        }
    }

    #[test]
    fn size_biased_rejects_mean_zero() {
        assert!(DegreeDist::regular(0).size_biased().is_err());
        assert!(DegreeDist::empirical(vec![1.0])
            .unwrap()
            .size_biased()
            .is_err());
    }

    #[test]
    fn offspring_gf_equals_derivative_over_mean() {
        // G_{P*}(x) = G'(x) / mean, checked with the derivative evaluated by
        // central finite differences at 20 seeded-random x values.
        let dists = [
            DegreeDist::poisson(7.0).unwrap(),
            DegreeDist::regular(4),
            DegreeDist::geometric(0.35).unwrap(),
            DegreeDist::empirical(vec![0.1, 0.2, 0.3, 0.15, 0.25]).unwrap(),
        ];
        let mut rng = substream(7, &[0]);
        for d in &dists {
            let sb = d.size_biased().unwrap();
            let m = d.mean_degree();
            for _ in 0..20 {
                let x: f64 = 0.01 + 0.98 * rng.random::<f64>();
                let h = 1e-6;
                let fd = (d.gen_fn(x + h).unwrap() - d.gen_fn(x - h).unwrap()) / (2.0 * h);
                assert!(
                    (sb.gen_fn(x).unwrap() - fd / m).abs() < 1e-6,
                    "{d:?} at x={x}"
                );
                // and the analytic derivative agrees with finite differences
                assert!((d.gen_fn_derivative(x).unwrap() - fd).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn poisson_sampler_matches_mean_and_variance() {
        let mut rng = substream(11, &[0]);
        let d = DegreeDist::poisson(10.0).unwrap();
        let n = 200_000;
        let samples: Vec<f64> = (0..n).map(|_| d.sample(&mut rng) as f64).collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        // SE of the mean is sqrt(10/n) ~ 0.007
        assert!((mean - 10.0).abs() < 0.03, "mean {mean}");
        assert!((var - 10.0).abs() < 0.15, "var {var}");
    }

    proptest! {
        #[test]
        fn gen_fn_in_unit_interval_monotone_convex(lambda in 0.1f64..30.0, p in 0.05f64..1.0, deg in 0usize..12) {
            let dists = vec![
                DegreeDist::poisson(lambda).unwrap(),
                DegreeDist::regular(deg),
                DegreeDist::geometric(p).unwrap(),
            ];
            for d in &dists {
                let g: Vec<f64> = (0..=100)
                    .map(|i| d.gen_fn(i as f64 / 100.0).unwrap())
                    .collect();
                for v in &g {
                    prop_assert!((0.0..=1.0 + 1e-12).contains(v));
                }
                for w in g.windows(2) {
                    prop_assert!(w[1] + 1e-12 >= w[0]);
                }
                for w in g.windows(3) {
                    // convexity: second difference nonnegative
                    prop_assert!(w[2] - 2.0 * w[1] + w[0] >= -1e-9);
                }
            }
        }

        #[test]
        fn empirical_gen_fn_monotone(raw in proptest::collection::vec(0.0f64..1.0, 1..10)) {
            let sum: f64 = raw.iter().sum();
            prop_assume!(sum > 1e-6);
            let probs: Vec<f64> = raw.iter().map(|x| x / sum).collect();
            // renormalize exactly enough for the constructor
            let d = DegreeDist::empirical(probs);
            prop_assume!(d.is_ok());
            let d = d.unwrap();
            let mut prev = -1.0;
            for i in 0..=100 {
                let x = i as f64 / 100.0;
                let g = d.gen_fn(x).unwrap();
                prop_assert!((0.0..=1.0 + 1e-12).contains(&g));
                prop_assert!(g + 1e-12 >= prev);
                prev = g;
            }
        }
    }
}
