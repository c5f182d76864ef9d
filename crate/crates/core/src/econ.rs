//! Expected-utility agents: willingness to pay, risk premium, and the
//! self-protection investment threshold.
//!
//! An agent with concave utility `u`, wealth `w` and potential loss `l`
//! facing loss probability `p` will pay up to `m` to escape the risk, where
//! `u(w - m) = p u(w - l) + (1 - p) u(w)`. Concavity gives `m >= p l`; the
//! excess `pi(p) = m - p l` is the risk premium. Comparing the protected
//! and unprotected lotteries yields the investment threshold
//! `(pN - pS) l + pi(pN) - pi(pS)`: the agent buys protection iff its cost
//! is strictly below it.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// Bisection tolerance (in money units) for the numeric willingness-to-pay
/// solver.
const WTP_TOL: f64 = 1e-12;
const WTP_MAX_ITER: usize = 200;

/// Utility function families. All are strictly increasing and concave on
/// their domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Utility {
    /// Linear utility; risk premium is identically zero.
    RiskNeutral,
    /// Constant absolute risk aversion: `u(x) = -exp(-a x)`, `a > 0`.
    Cara { a: f64 },
    /// Shifted logarithm: `u(x) = ln(x + shift)` on `x > -shift`.
    Log { shift: f64 },
    /// Constant relative risk aversion: `u(x) = (x^(1-rho) - 1) / (1-rho)`
    /// on `x > 0`, `rho >= 0`, `rho != 1`.
    Crra { rho: f64 },
}

impl Utility {
    pub fn validate(&self) -> Result<()> {
        match self {
            Utility::RiskNeutral => Ok(()),
            Utility::Cara { a } => {
                if *a > 0.0 && a.is_finite() {
                    Ok(())
                } else {
                    Err(Error::domain(format!("CARA requires a > 0, got {a}")))
                }
            }
            Utility::Log { shift } => {
                if shift.is_finite() {
                    Ok(())
                } else {
                    Err(Error::domain("log utility shift must be finite"))
                }
            }
            Utility::Crra { rho } => {
                if *rho >= 0.0 && (*rho - 1.0).abs() > f64::EPSILON && rho.is_finite() {
                    Ok(())
                } else {
                    Err(Error::domain(format!(
                        "CRRA requires rho >= 0 and rho != 1, got {rho}"
                    )))
                }
            }
        }
    }

    /// Evaluate `u(x)`. Caller is responsible for `x` being in the domain;
    /// out-of-domain points return -inf so bracketing logic stays sound.
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Utility::RiskNeutral => x,
            Utility::Cara { a } => -(-a * x).exp(),
            Utility::Log { shift } => {
                let z = x + shift;
                if z > 0.0 {
                    z.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Utility::Crra { rho } => {
                if *rho == 0.0 {
                    x
                } else if x > 0.0 {
                    (x.powf(1.0 - rho) - 1.0) / (1.0 - rho)
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    /// Infimum of the utility domain (exclusive).
    pub fn domain_min(&self) -> f64 {
        match self {
            Utility::RiskNeutral | Utility::Cara { .. } => f64::NEG_INFINITY,
            Utility::Log { shift } => -shift,
            Utility::Crra { rho } => {
                if *rho == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    0.0
                }
            }
        }
    }
}

/// One agent's economic data: utility, initial wealth, potential loss, and
/// protection cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentEconomy {
    pub utility: Utility,
    pub wealth: f64,
    pub loss: f64,
    pub cost: f64,
}

impl AgentEconomy {
    pub fn new(utility: Utility, wealth: f64, loss: f64, cost: f64) -> Result<Self> {
        utility.validate()?;
        if !loss.is_finite() || loss < 0.0 {
            return Err(Error::domain(format!("loss must be >= 0, got {loss}")));
        }
        if !(0.0..=loss).contains(&cost) {
            return Err(Error::domain(format!(
                "cost must satisfy 0 <= c <= l, got c={cost}, l={loss}"
            )));
        }
        if wealth - loss - cost <= utility.domain_min() {
            return Err(Error::domain(
                "wealth - loss - cost must lie inside the utility domain",
            ));
        }
        Ok(AgentEconomy {
            utility,
            wealth,
            loss,
            cost,
        })
    }

    pub fn risk_neutral(loss: f64, cost: f64) -> Result<Self> {
        AgentEconomy::new(Utility::RiskNeutral, 0.0, loss, cost)
    }

    /// Maximum amount `m` the agent pays to escape a loss of `self.loss`
    /// occurring with probability `p`: solves
    /// `u(w - m) = p u(w - l) + (1 - p) u(w)`.
    ///
    /// Risk-neutral and CARA agents use closed forms; other utilities go
    /// through bisection on `[0, l]` (valid since `u` is strictly
    /// increasing and `m` always lies in `[p l, l]`).
    pub fn willingness_to_pay(&self, p: f64) -> Result<f64> {
        check_prob(p)?;
        match self.utility {
            Utility::RiskNeutral => Ok(p * self.loss),
            Utility::Cara { a } => Ok(cara_willingness(a, self.wealth, self.loss, p)),
            _ => self.willingness_to_pay_numeric(p),
        }
    }

    /// The generic bisection path, public so tests can pit it against the
    /// closed forms.
    pub fn willingness_to_pay_numeric(&self, p: f64) -> Result<f64> {
        check_prob(p)?;
        let u = &self.utility;
        let (w, l) = (self.wealth, self.loss);
        let target = p * u.eval(w - l) + (1.0 - p) * u.eval(w);
        if !target.is_finite() {
            return Err(Error::domain(
                "expected utility is not finite; loss outcome outside utility domain",
            ));
        }
        // g(m) = u(w - m) - target is strictly decreasing, g(0) >= 0, g(l) <= 0.
        let g = |m: f64| u.eval(w - m) - target;
        if g(0.0) < -WTP_TOL {
            return Err(Error::domain("no willingness-to-pay root in [0, loss]"));
        }
        let (mut lo, mut hi) = (0.0f64, l);
        for _ in 0..WTP_MAX_ITER {
            if hi - lo <= WTP_TOL {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if g(mid) >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Risk premium `pi(p) = m(p) - p l`; zero for risk-neutral agents and
    /// at the degenerate ends `p = 0`, `p = 1`.
    pub fn risk_premium(&self, p: f64) -> Result<f64> {
        Ok(self.willingness_to_pay(p)? - p * self.loss)
    }

    /// Investment threshold `(pN - pS) l + pi(pN) - pi(pS)`, i.e.
    /// `m(pN) - m(pS)`. The agent's best response is to invest iff its cost
    /// is strictly below this value.
    pub fn invest_threshold(&self, p_n: f64, p_s: f64) -> Result<f64> {
        check_prob(p_n)?;
        check_prob(p_s)?;
        if p_s > p_n {
            return Err(Error::domain(format!(
                "invest_threshold requires pS <= pN, got pS={p_s}, pN={p_n}"
            )));
        }
        Ok(self.willingness_to_pay(p_n)? - self.willingness_to_pay(p_s)?)
    }
}

/// Closed-form CARA inversion:
/// `m = w + ln(p e^{-a(w-l)} + (1-p) e^{-a w}) / a = ln(1 + p(e^{a l} - 1)) / a`.
fn cara_willingness(a: f64, _w: f64, l: f64, p: f64) -> f64 {
    (1.0 + p * ((a * l).exp() - 1.0)).ln() / a
}

fn check_prob(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "probability must be in [0,1], got {p}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cara_agent(a: f64, w: f64, l: f64) -> AgentEconomy {
        AgentEconomy::new(Utility::Cara { a }, w, l, 0.0).unwrap()
    }

    #[test]
    fn risk_neutral_wtp_is_expected_loss() {
        let e = AgentEconomy::risk_neutral(1.0, 0.0).unwrap();
        assert_eq!(e.willingness_to_pay(0.3).unwrap(), 0.3);
        assert_eq!(e.risk_premium(0.7).unwrap(), 0.0);
    }

    #[test]
    fn wtp_zero_probability_is_zero() {
        for u in [
            Utility::RiskNeutral,
            Utility::Cara { a: 1.0 },
            Utility::Log { shift: 5.0 },
            Utility::Crra { rho: 2.0 },
        ] {
            let e = AgentEconomy::new(u, 3.0, 1.0, 0.5).unwrap();
            assert!(e.willingness_to_pay(0.0).unwrap().abs() < 1e-10, "{u:?}");
        }
    }

    #[test]
    fn cara_wtp_matches_independent_closed_form() {
        // m = w + ln(p e^{-(w-l)} + (1-p) e^{-w}), evaluated separately
        let e = cara_agent(1.0, 1.0, 1.0);
        let m = e.willingness_to_pay(0.5).unwrap();
        assert!((m - 0.620_114_506_958_277_5).abs() < 1e-12);
        let pi = e.risk_premium(0.5).unwrap();
        assert!((pi - 0.120_114_506_958_277_52).abs() < 1e-12);
    }

    #[test]
    fn numeric_path_agrees_with_cara_closed_form() {
        for &(a, w, l) in &[(1.0, 1.0, 1.0), (0.5, 2.0, 1.5), (3.0, 0.5, 0.4)] {
            let e = cara_agent(a, w, l);
            for i in 0..=20 {
                let p = i as f64 / 20.0;
                let closed = e.willingness_to_pay(p).unwrap();
                let numeric = e.willingness_to_pay_numeric(p).unwrap();
                assert!(
                    (closed - numeric).abs() < 1e-8,
                    "a={a} w={w} l={l} p={p}: {closed} vs {numeric}"
                );
            }
        }
    }

    #[test]
    fn risk_premium_vanishes_at_both_ends() {
        for u in [
            Utility::Cara { a: 2.0 },
            Utility::Log { shift: 4.0 },
            Utility::Crra { rho: 0.5 },
            Utility::Crra { rho: 3.0 },
        ] {
            let e = AgentEconomy::new(u, 3.0, 1.0, 0.0).unwrap();
            assert!(e.risk_premium(0.0).unwrap().abs() < 1e-10, "{u:?} at 0");
            assert!(e.risk_premium(1.0).unwrap().abs() < 1e-10, "{u:?} at 1");
        }
    }

    #[test]
    fn risk_premium_nonnegative_on_grid() {
        for u in [
            Utility::Cara { a: 1.5 },
            Utility::Log { shift: 4.0 },
            Utility::Crra { rho: 2.0 },
        ] {
            let e = AgentEconomy::new(u, 3.0, 1.0, 0.0).unwrap();
            for i in 0..=100 {
                let p = i as f64 / 100.0;
                assert!(e.risk_premium(p).unwrap() > -1e-9, "{u:?} p={p}");
            }
        }
    }

    #[test]
    fn invest_threshold_risk_neutral() {
        let e = AgentEconomy::risk_neutral(1.0, 0.0).unwrap();
        assert!((e.invest_threshold(0.6, 0.2).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(e.invest_threshold(0.5, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn invest_threshold_equal_probs_is_zero_any_utility() {
        for u in [
            Utility::Cara { a: 1.0 },
            Utility::Log { shift: 5.0 },
            Utility::Crra { rho: 2.0 },
        ] {
            let e = AgentEconomy::new(u, 4.0, 1.0, 0.0).unwrap();
            assert!(e.invest_threshold(0.4, 0.4).unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn invest_threshold_cara_closed_form() {
        // m(p) = ln(1 + p(e^{a l} - 1))/a is wealth-free for CARA;
        // threshold = m(0.5) - m(0.1) computed by an independent script.
        let e = cara_agent(1.0, 2.0, 1.0);
        let t = e.invest_threshold(0.5, 0.1).unwrap();
        assert!((t - 0.461_549_428_217_848_4).abs() < 1e-8);
    }

    #[test]
    fn invest_threshold_rejects_reversed_probs() {
        let e = AgentEconomy::risk_neutral(1.0, 0.0).unwrap();
        assert!(e.invest_threshold(0.2, 0.6).is_err());
    }

    #[test]
    fn invest_threshold_monotone_in_both_arguments() {
        let e = cara_agent(1.0, 3.0, 1.0);
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=50 {
            let pn = 0.3 + 0.7 * i as f64 / 50.0;
            let t = e.invest_threshold(pn, 0.3).unwrap();
            assert!(t >= prev - 1e-12);
            prev = t;
        }
        let mut prev = f64::INFINITY;
        for i in 0..=50 {
            let ps = 0.6 * i as f64 / 50.0;
            let t = e.invest_threshold(0.6, ps).unwrap();
            assert!(t <= prev + 1e-12);
            prev = t;
        }
    }

    #[test]
    fn constructor_rejects_invalid_economies() {
        assert!(AgentEconomy::new(Utility::RiskNeutral, 0.0, 1.0, 1.5).is_err()); // c > l
        assert!(AgentEconomy::new(Utility::RiskNeutral, 0.0, -1.0, 0.0).is_err()); // l < 0
        assert!(AgentEconomy::new(Utility::Crra { rho: 2.0 }, 1.0, 1.0, 0.5).is_err()); // w-l-c <= 0
        assert!(AgentEconomy::new(Utility::Cara { a: -1.0 }, 1.0, 1.0, 0.0).is_err());
        assert!(AgentEconomy::new(Utility::Crra { rho: 1.0 }, 5.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn utilities_increasing_and_concave_at_samples() {
        let cases = [
            (Utility::Cara { a: 1.3 }, 0.0f64),
            (Utility::Log { shift: 2.0 }, -1.5),
            (Utility::Crra { rho: 0.7 }, 0.1),
            (Utility::Crra { rho: 2.5 }, 0.1),
        ];
        for (u, lo) in cases {
            let xs: Vec<f64> = (0..40).map(|i| lo + 0.2 + i as f64 * 0.1).collect();
            for w in xs.windows(2) {
                assert!(u.eval(w[1]) > u.eval(w[0]), "{u:?} not increasing");
            }
            for w in xs.windows(3) {
                let mid = u.eval(w[1]);
                assert!(
                    mid >= 0.5 * (u.eval(w[0]) + u.eval(w[2])) - 1e-12,
                    "{u:?} not concave"
                );
            }
        }
    }

    proptest! {
        #[test]
        fn wtp_bounded_by_expected_loss_and_loss(a in 0.1f64..4.0, p in 0.0f64..1.0) {
            let e = cara_agent(a, 2.0, 1.0);
            let m = e.willingness_to_pay(p).unwrap();
            prop_assert!(m >= p * e.loss - 1e-10);
            prop_assert!(m <= e.loss + 1e-10);
        }
    }
}
