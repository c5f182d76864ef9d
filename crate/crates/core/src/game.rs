//! Equilibrium analysis on top of the analytic layer: Nash equilibria of
//! the population investment game, social cost and social optimum, price of
//! anarchy, best-response dynamics, tipping thresholds, and adoption
//! curves.
//!
//! The self-consistency condition is `gamma = P(c <= c(gamma))` where
//! `c(gamma)` is the critical cost at investing fraction `gamma`. Constant
//! costs make the best-response map a step function, so equilibria are the
//! boundary points (0 when `c >= c(0)`, 1 when `c <= c(1)`) plus
//! indifference crossings `c = c(gamma)`; a continuous cost distribution
//! makes the map continuous and the crossings ordinary fixed points.
//!
//! Stability follows the usual slope convention: an equilibrium is stable
//! when the best-response map crosses the diagonal from above (local slope
//! below one, estimated by finite differences).

use serde::{Deserialize, Serialize};

use crate::econ::AgentEconomy;
use crate::error::Error;
use crate::lmf::{solve_rde, LmfSolution};
use crate::numeric::golden_min;
use crate::EpidemicParams;
use crate::Result;

/// Default number of cells in the equilibrium scan grid.
pub const SCAN_GRID: usize = 1024;
/// Self-consistency tolerance for accepting an equilibrium.
pub const EQ_RESIDUAL_TOL: f64 = 1e-6;
/// Bisection tolerance (in gamma) when refining crossings.
const REFINE_TOL: f64 = 1e-12;
/// Finite-difference step for the stability slope.
const STABILITY_DELTA: f64 = 1e-4;
/// Convergence tolerance for best-response dynamics.
pub const BR_TOL: f64 = 1e-9;
/// Bisection tolerance for the tipping threshold.
pub const TIPPING_TOL: f64 = 1e-6;
/// Golden-section tolerance for the social optimum.
const OPT_TOL: f64 = 1e-9;

/// Piecewise-linear cumulative distribution of the cost/loss ratio,
/// continuous and non-decreasing on [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostCdf {
    /// `(t, F(t))` knots; `t` strictly increasing from 0 to 1, `F`
    /// non-decreasing with `F(1) = 1`.
    points: Vec<(f64, f64)>,
}

impl CostCdf {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::domain("cost cdf needs at least two knots"));
        }
        if points[0].0 != 0.0 || points[points.len() - 1].0 != 1.0 {
            return Err(Error::domain("cost cdf knots must span t = 0 to t = 1"));
        }
        if (points[points.len() - 1].1 - 1.0).abs() > 1e-12 {
            return Err(Error::domain("cost cdf must reach 1 at t = 1"));
        }
        if points[0].1 < 0.0 {
            return Err(Error::domain("cost cdf must be nonnegative"));
        }
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::domain(
                    "cost cdf knots must be strictly increasing in t",
                ));
            }
            if w[1].1 < w[0].1 {
                return Err(Error::domain("cost cdf must be non-decreasing"));
            }
        }
        Ok(CostCdf { points })
    }

    /// Uniform distribution of c/l on [0, 1].
    pub fn uniform() -> Self {
        CostCdf {
            points: vec![(0.0, 0.0), (1.0, 1.0)],
        }
    }

    /// `F(t)`, clamped outside the knot span.
    pub fn eval(&self, t: f64) -> f64 {
        if t <= self.points[0].0 {
            return self.points[0].1;
        }
        for w in self.points.windows(2) {
            let ((t0, f0), (t1, f1)) = (w[0], w[1]);
            if t <= t1 {
                return f0 + (f1 - f0) * (t - t0) / (t1 - t0);
            }
        }
        1.0
    }

    /// Mean of the cost ratio over the lowest-`gamma` quantile:
    /// `(1/gamma) * integral_0^gamma Q(u) du` with `Q = F^{-1}`.
    pub fn mean_below_quantile(&self, gamma: f64) -> f64 {
        if gamma <= 0.0 {
            return 0.0;
        }
        let gamma = gamma.min(1.0);
        let mut acc_mass = self.points[0].1.min(gamma); // possible atom at t = 0
        let mut acc_integral = 0.0; // the atom sits at t = 0, contributes 0
        for w in self.points.windows(2) {
            if acc_mass >= gamma {
                break;
            }
            let ((t0, f0), (t1, f1)) = (w[0], w[1]);
            let seg_mass = f1 - f0;
            if seg_mass <= 0.0 {
                continue;
            }
            let take = (gamma - acc_mass).min(seg_mass);
            let frac = take / seg_mass;
            let t_end = t0 + frac * (t1 - t0);
            acc_integral += take * 0.5 * (t0 + t_end);
            acc_mass += take;
        }
        acc_integral / gamma
    }
}

/// Population cost structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostModel {
    /// Every agent has the same cost `c` and loss `l`.
    Constant { cost: f64, loss: f64 },
    /// i.i.d. cost ratios `c/l` with the given continuous cdf and a common
    /// loss `l`.
    Distribution { cdf: CostCdf, loss: f64 },
}

impl CostModel {
    pub fn constant(cost: f64, loss: f64) -> Result<Self> {
        if !loss.is_finite() || loss < 0.0 || !(0.0..=loss).contains(&cost) {
            return Err(Error::domain(format!(
                "constant cost requires 0 <= c <= l, got c={cost}, l={loss}"
            )));
        }
        Ok(CostModel::Constant { cost, loss })
    }

    pub fn loss(&self) -> f64 {
        match self {
            CostModel::Constant { loss, .. } | CostModel::Distribution { loss, .. } => *loss,
        }
    }

    /// Fraction of the population whose best response is to invest when the
    /// critical cost is `c_gamma` (the population-level map uses `<=`).
    pub fn invest_fraction(&self, c_gamma: f64) -> f64 {
        match self {
            CostModel::Constant { cost, .. } => {
                if *cost <= c_gamma {
                    1.0
                } else {
                    0.0
                }
            }
            CostModel::Distribution { cdf, loss } => cdf.eval((c_gamma / loss).clamp(0.0, 1.0)),
        }
    }

    /// Mean protection cost paid by the investing fraction `gamma`;
    /// investors are the agents with the lowest costs.
    pub fn mean_invested_cost(&self, gamma: f64) -> f64 {
        match self {
            CostModel::Constant { cost, .. } => *cost,
            CostModel::Distribution { cdf, loss } => loss * cdf.mean_below_quantile(gamma),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Unstable,
}

/// One self-consistent investing fraction.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Equilibrium {
    pub gamma: f64,
    pub p_n: f64,
    pub p_s: f64,
    pub per_capita_cost: f64,
    pub stability: Stability,
}

/// The full equilibrium picture for one parameter set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquilibriumReport {
    /// All equilibria found, sorted by `gamma`.
    pub equilibria: Vec<Equilibrium>,
    pub social_opt_gamma: f64,
    pub social_opt_cost: f64,
    /// Worst equilibrium cost over optimal cost; `None` when the considered
    /// equilibrium set is empty (possible only outside the strong- and
    /// weak-protection regimes).
    pub price_of_anarchy: Option<f64>,
}

/// Knobs for [`find_equilibria_opts`].
#[derive(Debug, Clone, Copy)]
pub struct EquilibriumOptions {
    /// Scan grid cells over gamma.
    pub scan_points: usize,
    /// Count unstable interior equilibria as candidates for the "worst
    /// equilibrium" in the price of anarchy.
    pub include_unstable: bool,
}

impl Default for EquilibriumOptions {
    fn default() -> Self {
        EquilibriumOptions {
            scan_points: SCAN_GRID,
            include_unstable: false,
        }
    }
}

/// Analytic solutions precomputed on a uniform gamma grid; shared by the
/// scan, the social-optimum search, and the adoption-curve sweep.
struct GammaGrid {
    sols: Vec<LmfSolution>,
}

impl GammaGrid {
    fn build(params: &EpidemicParams, econ: &AgentEconomy, cells: usize) -> Result<Self> {
        let sols = (0..=cells)
            .map(|i| LmfSolution::solve(params, econ, i as f64 / cells as f64))
            .collect::<Result<Vec<_>>>()?;
        Ok(GammaGrid { sols })
    }

    fn gamma(&self, i: usize) -> f64 {
        i as f64 / (self.sols.len() - 1) as f64
    }
}

fn check_cost_consistency(econ: &AgentEconomy, cost: &CostModel) -> Result<()> {
    let l = cost.loss();
    if (econ.loss - l).abs() > 1e-9 * l.max(1.0) {
        return Err(Error::domain(format!(
            "cost model loss {l} disagrees with agent loss {}",
            econ.loss
        )));
    }
    Ok(())
}

/// Per-capita expected cost at investing fraction `gamma`:
/// `gamma (mean invested cost + pS l + pi(pS)) + (1-gamma) (pN l + pi(pN))`.
pub fn social_cost(
    params: &EpidemicParams,
    econ: &AgentEconomy,
    cost: &CostModel,
    gamma: f64,
) -> Result<f64> {
    check_cost_consistency(econ, cost)?;
    let sol = LmfSolution::solve(params, econ, gamma)?;
    social_cost_of(&sol, econ, cost)
}

fn social_cost_of(sol: &LmfSolution, econ: &AgentEconomy, cost: &CostModel) -> Result<f64> {
    let l = cost.loss();
    let pi_n = econ.risk_premium(sol.p_n)?;
    let pi_s = econ.risk_premium(sol.p_s)?;
    let invested = if sol.gamma > 0.0 {
        sol.gamma * (cost.mean_invested_cost(sol.gamma) + sol.p_s * l + pi_s)
    } else {
        0.0
    };
    Ok(invested + (1.0 - sol.gamma) * (sol.p_n * l + pi_n))
}

/// Find all equilibria with default options.
pub fn find_equilibria(
    params: &EpidemicParams,
    econ: &AgentEconomy,
    cost: &CostModel,
) -> Result<EquilibriumReport> {
    find_equilibria_opts(params, econ, cost, &EquilibriumOptions::default())
}

pub fn find_equilibria_opts(
    params: &EpidemicParams,
    econ: &AgentEconomy,
    cost: &CostModel,
    opts: &EquilibriumOptions,
) -> Result<EquilibriumReport> {
    check_cost_consistency(econ, cost)?;
    let grid = GammaGrid::build(params, econ, opts.scan_points.max(2))?;
    find_equilibria_on_grid(params, econ, cost, &grid, opts)
}

fn find_equilibria_on_grid(
    params: &EpidemicParams,
    econ: &AgentEconomy,
    cost: &CostModel,
    grid: &GammaGrid,
    opts: &EquilibriumOptions,
) -> Result<EquilibriumReport> {
    let cells = grid.sols.len() - 1;
    let mut gammas: Vec<f64> = Vec::new();

    match cost {
        CostModel::Constant { cost: c, .. } => {
            // boundary conditions: nobody invests iff c >= c(0) (ties break
            // to not investing at agent level); everybody iff c <= c(1)
            if *c >= grid.sols[0].c_gamma {
                gammas.push(0.0);
            }
            if *c <= grid.sols[cells].c_gamma {
                gammas.push(1.0);
            }
            // interior indifference crossings c = c(gamma)
            let g = |sol: &LmfSolution| sol.c_gamma - c;
            for i in 0..cells {
                let (a, b) = (g(&grid.sols[i]), g(&grid.sols[i + 1]));
                if a == 0.0 {
                    push_interior(&mut gammas, grid.gamma(i));
                } else if a.signum() != b.signum() {
                    let f = |gamma: f64| -> Result<f64> {
                        Ok(LmfSolution::solve(params, econ, gamma)?.c_gamma - c)
                    };
                    let root = bisect_fallible(f, grid.gamma(i), grid.gamma(i + 1), a)?;
                    // reject sign changes produced by a discontinuity in
                    // c(gamma) rather than an actual crossing
                    let resid = (LmfSolution::solve(params, econ, root)?.c_gamma - c).abs();
                    if resid <= EQ_RESIDUAL_TOL * cost.loss().max(1e-12) {
                        push_interior(&mut gammas, root);
                    }
                }
            }
        }
        CostModel::Distribution { .. } => {
            let g = |sol: &LmfSolution| cost.invest_fraction(sol.c_gamma) - sol.gamma;
            for (i, sol) in grid.sols.iter().enumerate() {
                if g(sol).abs() <= EQ_RESIDUAL_TOL {
                    gammas.push(grid.gamma(i));
                }
            }
            for i in 0..cells {
                let (a, b) = (g(&grid.sols[i]), g(&grid.sols[i + 1]));
                if a.signum() != b.signum() && a != 0.0 && b != 0.0 {
                    let f = |gamma: f64| -> Result<f64> {
                        let sol = LmfSolution::solve(params, econ, gamma)?;
                        Ok(cost.invest_fraction(sol.c_gamma) - gamma)
                    };
                    let root = bisect_fallible(f, grid.gamma(i), grid.gamma(i + 1), a)?;
                    let sol = LmfSolution::solve(params, econ, root)?;
                    if (cost.invest_fraction(sol.c_gamma) - root).abs() <= EQ_RESIDUAL_TOL {
                        gammas.push(root);
                    }
                }
            }
        }
    }

    gammas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    gammas.dedup_by(|a, b| (*a - *b).abs() < 1e-7);

    let mut equilibria = Vec::with_capacity(gammas.len());
    for gamma in gammas {
        let sol = LmfSolution::solve(params, econ, gamma)?;
        let per_capita_cost = social_cost_of(&sol, econ, cost)?;
        let stability = stability_label(params, econ, cost, gamma)?;
        equilibria.push(Equilibrium {
            gamma,
            p_n: sol.p_n,
            p_s: sol.p_s,
            per_capita_cost,
            stability,
        });
    }

    if equilibria.is_empty() && (params.is_strong_protection() || params.is_weak_protection()) {
        return Err(Error::NonConvergence(
            "no equilibrium found although the best-response map is monotone".into(),
        ));
    }

    let (social_opt_gamma, social_opt_cost) =
        social_optimum(params, econ, cost, grid, &equilibria)?;

    let worst = equilibria
        .iter()
        .filter(|e| opts.include_unstable || e.stability == Stability::Stable)
        .map(|e| e.per_capita_cost)
        .fold(None, |acc: Option<f64>, c| {
            Some(acc.map_or(c, |a| a.max(c)))
        });
    let price_of_anarchy = worst.map(|w| w / social_opt_cost);

    Ok(EquilibriumReport {
        equilibria,
        social_opt_gamma,
        social_opt_cost,
        price_of_anarchy,
    })
}

fn push_interior(gammas: &mut Vec<f64>, gamma: f64) {
    if gamma > 1e-9 && gamma < 1.0 - 1e-9 {
        gammas.push(gamma);
    }
}

/// Bisect a fallible function given its value at the left end.
fn bisect_fallible<F: Fn(f64) -> Result<f64>>(
    f: F,
    mut lo: f64,
    mut hi: f64,
    f_lo: f64,
) -> Result<f64> {
    let lo_sign = f_lo.signum();
    while hi - lo > REFINE_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Slope of the best-response map near `gamma`; stable iff below one.
fn stability_label(
    params: &EpidemicParams,
    econ: &AgentEconomy,
    cost: &CostModel,
    gamma: f64,
) -> Result<Stability> {
    let lo = (gamma - STABILITY_DELTA).max(0.0);
    let hi = (gamma + STABILITY_DELTA).min(1.0);
    let br = |g: f64| -> Result<f64> {
        let sol = LmfSolution::solve(params, econ, g)?;
        Ok(cost.invest_fraction(sol.c_gamma))
    };
    let slope = (br(hi)? - br(lo)?) / (hi - lo);
    Ok(if slope < 1.0 {
        Stability::Stable
    } else {
        Stability::Unstable
    })
}

/// Grid scan plus golden-section refinement, with the boundaries and the
/// equilibria themselves as extra candidates so the reported optimum never
/// exceeds any equilibrium cost.
fn social_optimum(
    params: &EpidemicParams,
    econ: &AgentEconomy,
    cost: &CostModel,
    grid: &GammaGrid,
    equilibria: &[Equilibrium],
) -> Result<(f64, f64)> {
    let mut best = (0.0, f64::INFINITY);
    for (i, sol) in grid.sols.iter().enumerate() {
        let c = social_cost_of(sol, econ, cost)?;
        if c < best.1 {
            best = (grid.gamma(i), c);
        }
    }
    let cells = grid.sols.len() - 1;
    let step = 1.0 / cells as f64;
    let lo = (best.0 - step).max(0.0);
    let hi = (best.0 + step).min(1.0);
    let f = |g: f64| social_cost(params, econ, cost, g).unwrap_or(f64::INFINITY);
    let (g_ref, c_ref) = golden_min(f, lo, hi, OPT_TOL);
    if c_ref < best.1 {
        best = (g_ref, c_ref);
    }
    for e in equilibria {
        if e.per_capita_cost < best.1 {
            best = (e.gamma, e.per_capita_cost);
        }
    }
    Ok(best)
}

/// Price of anarchy under strong protection (`p- = q- = 0`) with
/// risk-neutral agents and constant costs:
/// `sup_gamma c / (gamma c + h(gamma) l)`, evaluated by grid search plus
/// golden-section refinement of the denominator.
pub fn price_of_anarchy_strong(
    params: &EpidemicParams,
    econ: &AgentEconomy,
    cost: &CostModel,
) -> Result<f64> {
    if !params.is_strong_protection() {
        return Err(Error::regime(
            "price_of_anarchy_strong requires p_minus = q_minus = 0",
        ));
    }
    require_risk_neutral(econ, "price_of_anarchy_strong")?;
    let CostModel::Constant { cost: c, loss: l } = cost else {
        return Err(Error::regime(
            "price_of_anarchy_strong requires a constant cost",
        ));
    };
    check_cost_consistency(econ, cost)?;
    let denom = |gamma: f64| -> Result<f64> { Ok(gamma * c + solve_rde(params, gamma)?.h * l) };
    let cells = SCAN_GRID;
    let mut best = (0.0, f64::INFINITY);
    for i in 0..=cells {
        let g = i as f64 / cells as f64;
        let d = denom(g)?;
        if d < best.1 {
            best = (g, d);
        }
    }
    let step = 1.0 / cells as f64;
    let f = |g: f64| denom(g).unwrap_or(f64::INFINITY);
    let (_, d_ref) = golden_min(
        f,
        (best.0 - step).max(0.0),
        (best.0 + step).min(1.0),
        OPT_TOL,
    );
    let d_min = best.1.min(d_ref);
    if d_min <= 0.0 {
        // only possible when c = 0 and the epidemic dies: nobody has
        // anything to pay, the outcome is trivially optimal
        return Ok(1.0);
    }
    Ok(c / d_min)
}

/// Both price-of-anarchy evaluations for weak protection (`q+ = q-`).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WeakPoa {
    /// First-principles value: worst equilibrium cost over optimal cost.
    pub generic: Option<f64>,
    /// The closed-form expression `1 v 1(c0 < c) h(0) l / (c + h(1) l)`.
    pub formula: f64,
    /// Whether the two agree to within `1e-6` relative; a disagreement is
    /// surfaced to the caller rather than silently resolved.
    pub agree: bool,
}

/// Price of anarchy under weak protection with risk-neutral agents and
/// constant costs. Returns both the closed-form value and the
/// first-principles ratio from [`find_equilibria`].
pub fn price_of_anarchy_weak(
    params: &EpidemicParams,
    econ: &AgentEconomy,
    cost: &CostModel,
) -> Result<WeakPoa> {
    if !params.is_weak_protection() {
        return Err(Error::regime(
            "price_of_anarchy_weak requires q_plus = q_minus",
        ));
    }
    require_risk_neutral(econ, "price_of_anarchy_weak")?;
    let CostModel::Constant { cost: c, loss: l } = cost else {
        return Err(Error::regime(
            "price_of_anarchy_weak requires a constant cost",
        ));
    };
    check_cost_consistency(econ, cost)?;

    let h0 = solve_rde(params, 0.0)?.h;
    let h1 = solve_rde(params, 1.0)?.h;
    let c0 = crate::lmf::critical_cost(params, econ, 0.0)?;
    let formula = if *c > c0 {
        (h0 * l / (c + h1 * l)).max(1.0)
    } else {
        1.0
    };

    let report = find_equilibria(params, econ, cost)?;
    let generic = report.price_of_anarchy;
    let agree = match generic {
        Some(g) => (g - formula).abs() <= 1e-6 * formula.abs().max(1.0),
        None => false,
    };
    Ok(WeakPoa {
        generic,
        formula,
        agree,
    })
}

fn require_risk_neutral(econ: &AgentEconomy, what: &str) -> Result<()> {
    if econ.utility == crate::econ::Utility::RiskNeutral {
        Ok(())
    } else {
        Err(Error::regime(format!(
            "{what} is defined for risk-neutral agents"
        )))
    }
}

/// Trajectory of the population best-response dynamics
/// `gamma_{t+1} = P(c <= c(gamma_t))`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BrdTrajectory {
    pub gammas: Vec<f64>,
    pub converged: bool,
    /// Final value when converged.
    pub limit: Option<f64>,
    /// The two alternating values when the dynamics settle into a 2-cycle
    /// instead of converging.
    pub two_cycle: Option<(f64, f64)>,
}

pub fn best_response_dynamics(
    params: &EpidemicParams,
    econ: &AgentEconomy,
    cost: &CostModel,
    gamma0: f64,
    max_steps: usize,
) -> Result<BrdTrajectory> {
    if !(0.0..=1.0).contains(&gamma0) {
        return Err(Error::domain(format!(
            "gamma0 must be in [0,1], got {gamma0}"
        )));
    }
    check_cost_consistency(econ, cost)?;
    let br = |g: f64| -> Result<f64> {
        let sol = LmfSolution::solve(params, econ, g)?;
        Ok(cost.invest_fraction(sol.c_gamma))
    };
    let mut gammas = vec![gamma0];
    for _ in 0..max_steps {
        let cur = *gammas.last().unwrap();
        let next = br(cur)?;
        gammas.push(next);
        if (next - cur).abs() < BR_TOL {
            return Ok(BrdTrajectory {
                converged: true,
                limit: Some(next),
                two_cycle: None,
                gammas,
            });
        }
        let k = gammas.len();
        if k >= 3 && (gammas[k - 1] - gammas[k - 3]).abs() < BR_TOL {
            // oscillation: report the 2-cycle
            return Ok(BrdTrajectory {
                converged: false,
                limit: None,
                two_cycle: Some((gammas[k - 2], gammas[k - 1])),
                gammas,
            });
        }
    }
    Ok(BrdTrajectory {
        converged: false,
        limit: None,
        two_cycle: None,
        gammas,
    })
}

/// Smallest seeded fraction from which the best-response dynamics reach the
/// highest equilibrium, found by bisection over the starting point. `None`
/// when there is at most one equilibrium or when no seeding is needed.
pub fn tipping_threshold(
    params: &EpidemicParams,
    econ: &AgentEconomy,
    cost: &CostModel,
) -> Result<Option<f64>> {
    let report = find_equilibria(params, econ, cost)?;
    if report.equilibria.len() <= 1 {
        return Ok(None);
    }
    let target = report
        .equilibria
        .iter()
        .map(|e| e.gamma)
        .fold(f64::NEG_INFINITY, f64::max);
    let reaches = |gamma0: f64| -> Result<bool> {
        let t = best_response_dynamics(params, econ, cost, gamma0, 10_000)?;
        Ok(t.converged && (t.limit.unwrap() - target).abs() < 1e-5)
    };
    if reaches(0.0)? {
        return Ok(None);
    }
    if !reaches(1.0)? {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > TIPPING_TOL {
        let mid = 0.5 * (lo + hi);
        if reaches(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// One row of the adoption-curve table: one equilibrium of one
/// `(q_minus, cost ratio)` cell.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AdoptionRow {
    pub q_minus: f64,
    pub cost_ratio: f64,
    pub gamma: f64,
    pub stability: Stability,
    pub p_n: f64,
    pub p_s: f64,
    pub social_cost: f64,
    pub poa: Option<f64>,
}

/// Sweep the technology-quality parameter `q-` and the cost ratio `c/l`,
/// reporting every equilibrium branch of every cell. The curve is
/// multivalued in bistable bands; stable and unstable branches carry their
/// label. Cells whose equilibrium set is empty (possible outside the two
/// monotone regimes) contribute no rows.
pub fn adoption_curve(
    params_base: &EpidemicParams,
    econ: &AgentEconomy,
    q_minus_values: &[f64],
    cost_grid: &[f64],
) -> Result<Vec<AdoptionRow>> {
    let opts = EquilibriumOptions::default();
    let mut rows = Vec::new();
    for &q_minus in q_minus_values {
        if !(0.0..=params_base.q_plus).contains(&q_minus) {
            return Err(Error::domain(format!(
                "adoption curve requires 0 <= q_minus <= q_plus, got {q_minus}"
            )));
        }
        let params = EpidemicParams::new(
            params_base.p_plus,
            params_base.p_minus,
            params_base.q_plus,
            q_minus,
            params_base.degree.clone(),
        )?;
        let grid = GammaGrid::build(&params, econ, opts.scan_points)?;
        for &ratio in cost_grid {
            let cost = CostModel::constant(ratio * econ.loss, econ.loss)?;
            let report = find_equilibria_on_grid(&params, econ, &cost, &grid, &opts)?;
            for e in &report.equilibria {
                rows.push(AdoptionRow {
                    q_minus,
                    cost_ratio: ratio,
                    gamma: e.gamma,
                    stability: e.stability,
                    p_n: e.p_n,
                    p_s: e.p_s,
                    social_cost: e.per_capita_cost,
                    poa: report.price_of_anarchy,
                });
            }
        }
    }
    Ok(rows)
}
