//! The analytic core: fixed point of the recursive distributional equation
//! and the loss probabilities it induces at the root.
//!
//! On the limiting Galton-Watson tree, the probability `h` that a child
//! subtree infects its parent solves
//!
//! ```text
//! h = 1 - gamma (1-p-) G*(1 - q- h) - (1-gamma) (1-p+) G*(1 - q+ h)
//! ```
//!
//! where `G*` is the generating function of the size-biased offspring law
//! and `gamma` the investing fraction. The map is non-decreasing and
//! concave in `h`, so with positive seed mass the fixed point is unique;
//! with zero seed mass (`gamma p- + (1-gamma) p+ = 0`) the smallest
//! solution `h = 0` is the physical one (no seeds, no infection) and the
//! equation may also admit a supercritical root.
//!
//! Root-level loss probabilities then use the root degree law `P` itself:
//! `pN = 1 - (1-p+) G(1 - q+ h)` and `pS = 1 - (1-p-) G(1 - q- h)`, and the
//! critical cost is the investment threshold at those probabilities.

use serde::{Deserialize, Serialize};

use crate::dist::DegreeDist;
use crate::econ::AgentEconomy;
use crate::error::Error;
use crate::Result;

/// Residual tolerance certified for the returned fixed point.
pub const RDE_RESIDUAL_TOL: f64 = 1e-10;
/// Fixed-point iteration step tolerance before the bisection polish.
const FP_STEP_TOL: f64 = 1e-14;
const FP_MAX_ITER: usize = 10_000;
/// Bracket width for the bisection polish.
const BISECT_TOL: f64 = 1e-15;

/// Epidemic parameter bundle: seed probabilities, contagion probabilities,
/// and the degree law of the underlying random graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpidemicParams {
    /// Direct-loss probability of an unprotected agent.
    pub p_plus: f64,
    /// Direct-loss probability of a protected agent (`p_minus <= p_plus`).
    pub p_minus: f64,
    /// Contagion probability onto an unprotected receiver.
    pub q_plus: f64,
    /// Contagion probability onto a protected receiver (`q_minus <= q_plus`).
    pub q_minus: f64,
    /// Degree distribution of the graph.
    pub degree: DegreeDist,
}

impl EpidemicParams {
    pub fn new(
        p_plus: f64,
        p_minus: f64,
        q_plus: f64,
        q_minus: f64,
        degree: DegreeDist,
    ) -> Result<Self> {
        for (name, v) in [
            ("p_plus", p_plus),
            ("p_minus", p_minus),
            ("q_plus", q_plus),
            ("q_minus", q_minus),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::domain(format!("{name} must be in [0,1], got {v}")));
            }
        }
        if p_minus > p_plus {
            return Err(Error::domain(format!(
                "protection cannot raise the direct loss probability: p_minus={p_minus} > p_plus={p_plus}"
            )));
        }
        if q_minus > q_plus {
            return Err(Error::domain(format!(
                "protection cannot raise the contagion probability: q_minus={q_minus} > q_plus={q_plus}"
            )));
        }
        Ok(EpidemicParams {
            p_plus,
            p_minus,
            q_plus,
            q_minus,
            degree,
        })
    }

    /// Erdos-Renyi convenience: Poisson degree with mean `lambda`.
    pub fn erdos_renyi(
        p_plus: f64,
        p_minus: f64,
        q_plus: f64,
        q_minus: f64,
        lambda: f64,
    ) -> Result<Self> {
        EpidemicParams::new(
            p_plus,
            p_minus,
            q_plus,
            q_minus,
            DegreeDist::poisson(lambda)?,
        )
    }

    /// Strong protection: investing blocks both direct loss and contagion.
    pub fn is_strong_protection(&self) -> bool {
        self.p_minus == 0.0 && self.q_minus == 0.0
    }

    /// Weak protection: investing leaves the contagion probability unchanged.
    pub fn is_weak_protection(&self) -> bool {
        self.q_minus == self.q_plus
    }

    /// Generating function of the size-biased offspring law, computed as
    /// `G'(x) / mean` so no variant needs truncation. A mean-zero degree law
    /// (isolated nodes) has no edges to follow; the empty product convention
    /// `G* = 1` keeps the fixed point at the pure seed mixture.
    pub fn offspring_gf(&self, x: f64) -> Result<f64> {
        let mean = self.degree.mean_degree();
        if mean == 0.0 {
            return Ok(1.0);
        }
        Ok(self.degree.gen_fn_derivative(x)? / mean)
    }

    /// The fixed-point map `x -> f(x, gamma)`.
    pub fn rde_map(&self, x: f64, gamma: f64) -> Result<f64> {
        let gs = self.offspring_gf(1.0 - self.q_minus * x)?;
        let gn = self.offspring_gf(1.0 - self.q_plus * x)?;
        Ok(1.0 - gamma * (1.0 - self.p_minus) * gs - (1.0 - gamma) * (1.0 - self.p_plus) * gn)
    }

    /// The same map with an explicitly given offspring law instead of the
    /// size-biased degree law; this is what a finite tree with that
    /// offspring distribution unrolls to, level by level.
    pub fn rde_map_with_offspring(
        &self,
        x: f64,
        gamma: f64,
        offspring: &DegreeDist,
    ) -> Result<f64> {
        let gs = offspring.gen_fn(1.0 - self.q_minus * x)?;
        let gn = offspring.gen_fn(1.0 - self.q_plus * x)?;
        Ok(1.0 - gamma * (1.0 - self.p_minus) * gs - (1.0 - gamma) * (1.0 - self.p_plus) * gn)
    }
}

/// Root of the RDE at one investing fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RdeRoot {
    /// The fixed point `h(gamma)`.
    pub h: f64,
    /// True outside the uniqueness regime (`p_plus > 0`, or `gamma = 1`
    /// with `p_minus > 0`); the smallest nonnegative solution is returned.
    pub degenerate: bool,
}

/// Full analytic solution at one investing fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LmfSolution {
    pub gamma: f64,
    pub h: f64,
    /// Loss probability of an unprotected agent.
    pub p_n: f64,
    /// Loss probability of a protected agent.
    pub p_s: f64,
    /// Critical cost: invest iff `c < c_gamma`.
    pub c_gamma: f64,
    pub degenerate: bool,
}

/// Solve the RDE for `h(gamma)`.
///
/// With positive seed mass the unique fixed point is found by monotone
/// iteration from 1 (which can only converge from above) followed by a
/// bisection polish of the bracket `[0, x]`, certifying the residual below
/// [`RDE_RESIDUAL_TOL`] regardless of how close the map's slope is to one.
/// With zero seed mass the smallest solution is `h = 0` exactly.
pub fn solve_rde(params: &EpidemicParams, gamma: f64) -> Result<RdeRoot> {
    check_gamma(gamma)?;
    let degenerate = !(params.p_plus > 0.0 || (gamma == 1.0 && params.p_minus > 0.0));
    let seed_mass = gamma * params.p_minus + (1.0 - gamma) * params.p_plus;
    if seed_mass == 0.0 {
        // No seeds anywhere: the minimal (physical) solution is 0. Iterating
        // upward from 0 would stay there; supercritical parameters admit a
        // second, larger root that no seedless epidemic can reach.
        return Ok(RdeRoot { h: 0.0, degenerate });
    }

    let f = |x: f64| params.rde_map(x, gamma);
    let mut x = 1.0f64;
    for _ in 0..FP_MAX_ITER {
        let fx = f(x)?;
        if (fx - x).abs() < FP_STEP_TOL {
            x = fx;
            break;
        }
        x = fx;
    }
    // Iterates from 1 stay >= the fixed point, so g(x) = f(x) - x <= 0 here
    // while g(0) = seed_mass > 0: [0, x] brackets the root.
    let mut lo = 0.0f64;
    let mut hi = x.clamp(0.0, 1.0);
    if f(hi)? - hi > 0.0 {
        hi = 1.0; // numeric edge: restart from the full interval
    }
    while hi - lo > BISECT_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? - mid > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let h = 0.5 * (lo + hi);
    let residual = (f(h)? - h).abs();
    if residual > RDE_RESIDUAL_TOL {
        return Err(Error::NonConvergence(format!(
            "RDE residual {residual:.3e} above {RDE_RESIDUAL_TOL:.0e} at gamma={gamma}"
        )));
    }
    Ok(RdeRoot { h, degenerate })
}

/// Root-level loss probabilities `(pN, pS)` at the given fraction, using
/// the root degree law (not the offspring law).
pub fn loss_probs(params: &EpidemicParams, gamma: f64) -> Result<(f64, f64)> {
    let root = solve_rde(params, gamma)?;
    loss_probs_at(params, root.h)
}

/// Loss probabilities for a known `h` (shared by the curve evaluators).
pub fn loss_probs_at(params: &EpidemicParams, h: f64) -> Result<(f64, f64)> {
    let p_n = 1.0 - (1.0 - params.p_plus) * params.degree.gen_fn(1.0 - params.q_plus * h)?;
    let p_s = 1.0 - (1.0 - params.p_minus) * params.degree.gen_fn(1.0 - params.q_minus * h)?;
    Ok((p_n, p_s))
}

/// Critical cost `c(gamma)`: the investment threshold evaluated at the
/// analytic loss probabilities. Agents invest iff their cost is strictly
/// below it.
pub fn critical_cost(params: &EpidemicParams, econ: &AgentEconomy, gamma: f64) -> Result<f64> {
    let (p_n, p_s) = loss_probs(params, gamma)?;
    econ.invest_threshold(p_n, p_s)
}

impl LmfSolution {
    /// Solve everything at one fraction.
    pub fn solve(params: &EpidemicParams, econ: &AgentEconomy, gamma: f64) -> Result<Self> {
        let root = solve_rde(params, gamma)?;
        let (p_n, p_s) = loss_probs_at(params, root.h)?;
        let c_gamma = econ.invest_threshold(p_n, p_s)?;
        Ok(LmfSolution {
            gamma,
            h: root.h,
            p_n,
            p_s,
            c_gamma,
            degenerate: root.degenerate,
        })
    }

    /// Population mean loss probability `gamma pS + (1-gamma) pN`.
    pub fn mean_loss(&self) -> f64 {
        self.gamma * self.p_s + (1.0 - self.gamma) * self.p_n
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if (0.0..=1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "gamma must be in [0,1], got {gamma}"
        )))
    }
}
