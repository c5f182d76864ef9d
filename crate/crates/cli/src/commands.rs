//! The eight subcommands. Every command is deterministic given its
//! configuration and seed, and emits a [`Table`] (except `gen-graph`, which
//! emits the edge-list text itself).

use serde_json::json;

use epirisk::dist::DegreeDist;
use epirisk::game::{
    adoption_curve, best_response_dynamics, find_equilibria_opts, price_of_anarchy_strong,
    price_of_anarchy_weak, tipping_threshold, CostModel, EquilibriumOptions, Stability,
};
use epirisk::lmf::{solve_rde, EpidemicParams, LmfSolution};
use epirisk::netgen::{gen_config, gen_er, Graph};
use epirisk::rng::substream;
use epirisk::sim::{exact_tiny, run_epidemic, Investment, SimConfig};
use rand::Rng;

use crate::config::{defaults, Config};
use crate::table::{Cell, Table};
use crate::{CliError, CliResult};

fn stability_cell(s: Stability) -> Cell {
    Cell::Str(match s {
        Stability::Stable => "stable".into(),
        Stability::Unstable => "unstable".into(),
    })
}

fn params_meta(table: &mut Table, params: &EpidemicParams) {
    table.meta_entry("p_plus", json!(params.p_plus));
    table.meta_entry("p_minus", json!(params.p_minus));
    table.meta_entry("q_plus", json!(params.q_plus));
    table.meta_entry("q_minus", json!(params.q_minus));
    table.meta_entry(
        "degree",
        serde_json::to_value(&params.degree).unwrap_or(serde_json::Value::Null),
    );
}

/// `lmf-solve`: sweep the analytic solution over a gamma grid, or over
/// `lambda q+` when `run.sweep = "lambda_q"`.
pub fn lmf_solve(cfg: &Config) -> CliResult<Table> {
    let params = cfg.epidemic_params()?;
    let econ = cfg.agent_economy()?;
    let sweep = cfg.str_or("run", "sweep", "gamma")?;
    match sweep.as_str() {
        "gamma" => {
            let points = cfg
                .usize_or("run", "gamma_grid", defaults::GAMMA_GRID)?
                .max(2);
            let mut table = Table::new("lmf-solve", vec!["gamma", "h", "p_n", "p_s", "c_gamma"]);
            params_meta(&mut table, &params);
            for i in 0..points {
                let gamma = i as f64 / (points - 1) as f64;
                let sol = LmfSolution::solve(&params, &econ, gamma)?;
                table.push(vec![
                    Cell::Num(gamma),
                    Cell::Num(sol.h),
                    Cell::Num(sol.p_n),
                    Cell::Num(sol.p_s),
                    Cell::Num(sol.c_gamma),
                ]);
            }
            Ok(table)
        }
        "lambda_q" => {
            let DegreeDist::Poisson { lambda } = params.degree else {
                return Err(CliError::Config(
                    "run.sweep = \"lambda_q\" requires a poisson degree distribution".into(),
                ));
            };
            let lq_max = cfg.f64_or("run", "lambda_q_max", 10.0)?;
            if lq_max > lambda {
                return Err(CliError::Config(format!(
                    "lambda_q_max {lq_max} needs q_plus > 1 at lambda = {lambda}"
                )));
            }
            let points = cfg.usize_or("run", "sweep_points", 401)?.max(2);
            let gamma = cfg.f64_or("run", "gamma", 0.0)?;
            let mut table = Table::new("lmf-solve", vec!["lambda_q", "h"]);
            params_meta(&mut table, &params);
            table.meta_entry("gamma", json!(gamma));
            for i in 0..points {
                let lq = lq_max * i as f64 / (points - 1) as f64;
                let q_plus = lq / lambda;
                let swept = EpidemicParams::new(
                    params.p_plus,
                    params.p_minus,
                    q_plus,
                    params.q_minus.min(q_plus),
                    params.degree.clone(),
                )?;
                let h = solve_rde(&swept, gamma)?.h;
                table.push(vec![Cell::Num(lq), Cell::Num(h)]);
            }
            Ok(table)
        }
        other => Err(CliError::Config(format!(
            "run.sweep must be gamma or lambda_q, got '{other}'"
        ))),
    }
}

fn equilibrium_options(cfg: &Config) -> CliResult<EquilibriumOptions> {
    Ok(EquilibriumOptions {
        scan_points: cfg
            .usize_or("run", "scan_points", epirisk::game::SCAN_GRID)?
            .max(2),
        include_unstable: cfg.bool_or("run", "include_unstable", false)?,
    })
}

/// `equilibria`: the full equilibrium report for one parameter set.
pub fn equilibria(cfg: &Config) -> CliResult<Table> {
    let params = cfg.epidemic_params()?;
    let econ = cfg.agent_economy()?;
    let cost = cfg.cost_model()?;
    let opts = equilibrium_options(cfg)?;
    let report = find_equilibria_opts(&params, &econ, &cost, &opts)?;

    let mut table = Table::new(
        "equilibria",
        vec![
            "gamma",
            "stability",
            "p_n",
            "p_s",
            "per_capita_cost",
            "social_opt_gamma",
            "social_opt_cost",
            "poa",
        ],
    );
    params_meta(&mut table, &params);
    table.meta_entry("social_opt_gamma", json!(report.social_opt_gamma));
    table.meta_entry("social_opt_cost", json!(report.social_opt_cost));
    table.meta_entry("poa", json!(report.price_of_anarchy));

    // weak protection with constant risk-neutral costs also has the
    // closed-form price of anarchy: report both and flag disagreement
    if params.is_weak_protection()
        && matches!(cost, CostModel::Constant { .. })
        && econ.utility == epirisk::econ::Utility::RiskNeutral
    {
        let wp = price_of_anarchy_weak(&params, &econ, &cost)?;
        table.meta_entry("poa_formula", json!(wp.formula));
        table.meta_entry("poa_agreement", json!(wp.agree));
        if !wp.agree {
            table.meta_entry(
                "poa_warning",
                json!(format!(
                    "closed-form PoA {} differs from first-principles {:?}",
                    wp.formula, wp.generic
                )),
            );
        }
    }

    for e in &report.equilibria {
        table.push(vec![
            Cell::Num(e.gamma),
            stability_cell(e.stability),
            Cell::Num(e.p_n),
            Cell::Num(e.p_s),
            Cell::Num(e.per_capita_cost),
            Cell::Num(report.social_opt_gamma),
            Cell::Num(report.social_opt_cost),
            Cell::opt_num(report.price_of_anarchy),
        ]);
    }
    Ok(table)
}

/// `adoption-curve`: equilibrium branches over a (q-, cost ratio) grid.
pub fn adoption_curve_cmd(cfg: &Config) -> CliResult<Table> {
    let params = cfg.epidemic_params()?;
    let econ = cfg.agent_economy()?;
    let q_values = cfg
        .f64_list("run", "q_minus_values")?
        .unwrap_or_else(|| defaults::Q_MINUS_VALUES.to_vec());
    let points = cfg
        .usize_or("run", "cost_grid", defaults::COST_GRID)?
        .max(2);
    let costs: Vec<f64> = (0..points)
        .map(|i| i as f64 / (points - 1) as f64)
        .collect();

    let rows = adoption_curve(&params, &econ, &q_values, &costs)?;
    let mut table = Table::new(
        "adoption-curve",
        vec![
            "q_minus",
            "cost_ratio",
            "gamma",
            "stability",
            "p_n",
            "p_s",
            "social_cost",
            "poa",
        ],
    );
    params_meta(&mut table, &params);
    table.meta_entry("q_minus_values", json!(q_values));
    table.meta_entry("cost_grid", json!(points));
    for r in rows {
        table.push(vec![
            Cell::Num(r.q_minus),
            Cell::Num(r.cost_ratio),
            Cell::Num(r.gamma),
            stability_cell(r.stability),
            Cell::Num(r.p_n),
            Cell::Num(r.p_s),
            Cell::Num(r.social_cost),
            Cell::opt_num(r.poa),
        ]);
    }
    Ok(table)
}

/// `poa-curve`: price of anarchy versus cost ratio. The `--case` flag
/// pins the protection regime (strong forces `p- = q- = 0`, weak forces
/// `q- = q+`); `general` uses the parameters as configured and has no
/// closed-form column.
pub fn poa_curve(cfg: &Config) -> CliResult<Table> {
    let base = cfg.epidemic_params()?;
    let econ = cfg.agent_economy()?;
    let case = cfg.str_or("run", "case", "strong")?;
    let params = match case.as_str() {
        "strong" => EpidemicParams::new(base.p_plus, 0.0, base.q_plus, 0.0, base.degree.clone())?,
        "weak" => EpidemicParams::new(
            base.p_plus,
            base.p_minus,
            base.q_plus,
            base.q_plus,
            base.degree.clone(),
        )?,
        "general" => base.clone(),
        other => {
            return Err(CliError::Config(format!(
                "run.case must be strong, weak or general, got '{other}'"
            )))
        }
    };
    let loss = econ.loss;
    let points = cfg.usize_or("run", "cost_points", 201)?.max(2);
    let c_min = cfg.f64_or("run", "cost_min", params.p_plus / 10.0)?;
    let c_max = cfg.f64_or("run", "cost_max", params.p_plus * 10.0)?;
    if !(0.0..=1.0).contains(&c_min) || c_max <= c_min || c_max > 1.0 {
        return Err(CliError::Config(format!(
            "poa-curve needs 0 <= cost_min < cost_max <= 1, got [{c_min}, {c_max}]"
        )));
    }
    let opts = equilibrium_options(cfg)?;

    let mut table = Table::new("poa-curve", vec!["cost_ratio", "poa", "poa_formula"]);
    params_meta(&mut table, &params);
    table.meta_entry("case", json!(case));
    for i in 0..points {
        let ratio = c_min + (c_max - c_min) * i as f64 / (points - 1) as f64;
        let cost = CostModel::constant(ratio * loss, loss)?;
        let report = find_equilibria_opts(&params, &econ, &cost, &opts)?;
        let formula = match case.as_str() {
            "strong" => Some(price_of_anarchy_strong(&params, &econ, &cost)?),
            "weak" => Some(price_of_anarchy_weak(&params, &econ, &cost)?.formula),
            _ => None,
        };
        table.push(vec![
            Cell::Num(ratio),
            Cell::opt_num(report.price_of_anarchy),
            Cell::opt_num(formula),
        ]);
    }
    Ok(table)
}

/// `validate`: simulation against the analytic prediction. Returns the
/// report table and whether the acceptance thresholds were met.
pub fn validate(cfg: &Config) -> CliResult<(Table, bool)> {
    match cfg.str_or("run", "mode", "lmf")?.as_str() {
        "lmf" => validate_lmf(cfg),
        "tiny" => validate_tiny(cfg),
        other => Err(CliError::Config(format!(
            "run.mode must be lmf or tiny, got '{other}'"
        ))),
    }
}

/// Graph sizes ladder: the absolute gap between the empirical infection
/// fraction and the analytic mixture must decrease along the ladder and
/// finish below 0.01.
fn validate_lmf(cfg: &Config) -> CliResult<(Table, bool)> {
    let params = cfg.epidemic_params()?;
    let econ = cfg.agent_economy()?;
    let gamma = cfg.f64_or("run", "gamma", 0.5)?;
    let trials = cfg.usize_or("run", "trials", 200)?;
    let seed = cfg.u64_or("run", "seed", defaults::SEED)?;
    let ladder: Vec<usize> = cfg
        .f64_list("run", "n_ladder")?
        .unwrap_or_else(|| vec![1_000.0, 10_000.0, 100_000.0])
        .into_iter()
        .map(|x| x as usize)
        .collect();

    let predicted = LmfSolution::solve(&params, &econ, gamma)?.mean_loss();
    let mut table = Table::new(
        "validate",
        vec!["n", "trials", "empirical", "predicted", "gap", "std_error"],
    );
    params_meta(&mut table, &params);
    table.meta_entry("mode", json!("lmf"));
    table.meta_entry("gamma", json!(gamma));

    let mut gaps = Vec::new();
    for (i, &n) in ladder.iter().enumerate() {
        let graph = build_graph(&params.degree, n, seed.wrapping_add(1000 + i as u64))?;
        let config = SimConfig {
            params: params.clone(),
            investment: Investment::Fraction(gamma),
            trials,
            seed: seed.wrapping_add(2000 + i as u64),
            record_per_node: false,
        };
        let out = run_epidemic(&graph, &config)?;
        let gap = (out.mean_infected - predicted).abs();
        gaps.push(gap);
        table.push(vec![
            Cell::Int(n as u64),
            Cell::Int(trials as u64),
            Cell::Num(out.mean_infected),
            Cell::Num(predicted),
            Cell::Num(gap),
            Cell::Num(out.se_infected),
        ]);
    }
    let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
    let final_ok = gaps.last().is_some_and(|g| *g < 0.01);
    let pass = decreasing && final_ok;
    table.meta_entry("gaps_decreasing", json!(decreasing));
    table.meta_entry("final_gap_below_0.01", json!(final_ok));
    table.meta_entry("verdict", json!(if pass { "pass" } else { "fail" }));
    Ok((table, pass))
}

/// Monte Carlo against exact enumeration on tiny random graphs: every
/// node's infection probability within 4 standard errors.
fn validate_tiny(cfg: &Config) -> CliResult<(Table, bool)> {
    let params = cfg.epidemic_params()?;
    let graphs = cfg.usize_or("run", "graphs", 20)?;
    let trials = cfg.usize_or("run", "trials", 100_000)?;
    let seed = cfg.u64_or("run", "seed", defaults::SEED)?;

    let mut table = Table::new(
        "validate",
        vec!["graph", "node", "exact", "estimate", "std_error", "z"],
    );
    params_meta(&mut table, &params);
    table.meta_entry("mode", json!("tiny"));
    let mut pass = true;
    let mut rng = substream(seed, &[0x71]);
    for g_idx in 0..graphs {
        let n = rng.random_range(2..=5usize);
        let graph = loop {
            let candidate = gen_er(n, 1.5, seed.wrapping_add(3000 + g_idx as u64))?;
            if n + 2 * candidate.edge_count() <= 16 {
                break candidate;
            }
        };
        let invested: Vec<bool> = (0..n).map(|_| rng.random()).collect();
        let exact = exact_tiny(&graph, &params, &invested)?;
        let config = SimConfig {
            params: params.clone(),
            investment: Investment::Explicit(invested),
            trials,
            seed: seed.wrapping_add(4000 + g_idx as u64),
            record_per_node: true,
        };
        let out = run_epidemic(&graph, &config)?;
        for (node, (&p, &est)) in exact.iter().zip(out.per_node.iter()).enumerate() {
            let se = (p * (1.0 - p) / trials as f64).sqrt();
            let z = if se > 0.0 {
                (est - p).abs() / se
            } else if est == p {
                0.0
            } else {
                f64::INFINITY
            };
            if z >= 4.0 {
                pass = false;
            }
            table.push(vec![
                Cell::Int(g_idx as u64),
                Cell::Int(node as u64),
                Cell::Num(p),
                Cell::Num(est),
                Cell::Num(se),
                Cell::Num(z),
            ]);
        }
    }
    table.meta_entry("verdict", json!(if pass { "pass" } else { "fail" }));
    Ok((table, pass))
}

/// `tipping`: threshold, target equilibrium, and the dynamics from just
/// below and just above the threshold.
pub fn tipping(cfg: &Config) -> CliResult<Table> {
    let params = cfg.epidemic_params()?;
    let econ = cfg.agent_economy()?;
    let cost = cfg.cost_model()?;
    let max_steps = cfg.usize_or("run", "max_steps", 10_000)?;

    let report = find_equilibria_opts(&params, &econ, &cost, &equilibrium_options(cfg)?)?;
    let target = report
        .equilibria
        .iter()
        .map(|e| e.gamma)
        .fold(f64::NEG_INFINITY, f64::max);
    let threshold = tipping_threshold(&params, &econ, &cost)?;

    let mut table = Table::new(
        "tipping",
        vec![
            "threshold",
            "target_gamma",
            "step",
            "gamma_below",
            "gamma_above",
        ],
    );
    params_meta(&mut table, &params);
    table.meta_entry("threshold", json!(threshold));
    table.meta_entry("target_gamma", json!(target));

    let (below, above) = match threshold {
        Some(thr) => {
            let eps = 10.0 * epirisk::game::TIPPING_TOL;
            let below =
                best_response_dynamics(&params, &econ, &cost, (thr - eps).max(0.0), max_steps)?;
            let above =
                best_response_dynamics(&params, &econ, &cost, (thr + eps).min(1.0), max_steps)?;
            (below.gammas, above.gammas)
        }
        None => {
            let from_zero = best_response_dynamics(&params, &econ, &cost, 0.0, max_steps)?;
            (from_zero.gammas, Vec::new())
        }
    };
    let steps = below.len().max(above.len());
    for i in 0..steps {
        table.push(vec![
            Cell::opt_num(threshold),
            Cell::Num(target),
            Cell::Int(i as u64),
            Cell::opt_num(below.get(i).copied()),
            Cell::opt_num(above.get(i).copied()),
        ]);
    }
    Ok(table)
}

fn build_graph(degree: &DegreeDist, n: usize, seed: u64) -> CliResult<Graph> {
    match degree {
        DegreeDist::Poisson { lambda } => Ok(gen_er(n, *lambda, seed)?),
        other => Ok(gen_config(n, other, seed)?),
    }
}

/// `simulate`: raw Monte Carlo on a generated or loaded graph.
pub fn simulate(cfg: &Config) -> CliResult<Table> {
    let params = cfg.epidemic_params()?;
    let gamma = cfg.f64_or("run", "gamma", 0.5)?;
    let trials = cfg.usize_or("run", "trials", defaults::TRIALS)?;
    let seed = cfg.u64_or("run", "seed", defaults::SEED)?;

    let graph = match cfg.str_opt("run", "graph")? {
        Some(path) => {
            let file = std::fs::File::open(&path)
                .map_err(|e| CliError::Config(format!("cannot open graph '{path}': {e}")))?;
            Graph::read_edge_list(file)?
        }
        None => {
            let n = cfg.usize_or("graph", "n", 10_000)?;
            build_graph(
                &params.degree,
                n,
                cfg.u64_or("graph", "seed", seed.wrapping_add(1))?,
            )?
        }
    };

    let config = SimConfig {
        params: params.clone(),
        investment: Investment::Fraction(gamma),
        trials,
        seed,
        record_per_node: false,
    };
    let out = run_epidemic(&graph, &config)?;

    let mut table = Table::new(
        "simulate",
        vec![
            "n",
            "edges",
            "trials",
            "empirical_gamma",
            "mean_infected",
            "mean_infected_given_s",
            "mean_infected_given_n",
            "se_infected",
            "se_given_s",
            "se_given_n",
        ],
    );
    params_meta(&mut table, &params);
    table.meta_entry("gamma", json!(gamma));
    table.meta_entry("seed", json!(seed));
    table.push(vec![
        Cell::Int(graph.node_count() as u64),
        Cell::Int(graph.edge_count() as u64),
        Cell::Int(out.trials as u64),
        Cell::Num(out.empirical_gamma),
        Cell::Num(out.mean_infected),
        Cell::Num(out.mean_infected_given_s),
        Cell::Num(out.mean_infected_given_n),
        Cell::Num(out.se_infected),
        Cell::Num(out.se_given_s),
        Cell::Num(out.se_given_n),
    ]);
    Ok(table)
}

/// `gen-graph`: emit a graph as edge-list text (`n m`, then `u v` lines).
pub fn gen_graph(cfg: &Config) -> CliResult<String> {
    let n = cfg.usize_or("graph", "n", 1000)?;
    let seed = cfg.u64_or("graph", "seed", cfg.u64_or("run", "seed", defaults::SEED)?)?;
    let kind = cfg.str_or("graph", "kind", "er")?;
    let graph = match kind.as_str() {
        "er" => {
            let lambda = cfg.f64_or("graph", "lambda", cfg.degree_dist()?.mean_degree())?;
            gen_er(n, lambda, seed)?
        }
        "config" => gen_config(n, &cfg.degree_dist()?, seed)?,
        other => {
            return Err(CliError::Config(format!(
                "graph.kind must be er or config, got '{other}'"
            )))
        }
    };
    let mut buf = Vec::new();
    graph
        .write_edge_list(&mut buf)
        .map_err(|e| CliError::Io(e.to_string()))?;
    String::from_utf8(buf).map_err(|e| CliError::Io(e.to_string()))
}
