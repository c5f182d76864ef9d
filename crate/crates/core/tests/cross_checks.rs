//! Cross-module consistency checks: generated graphs against their target
//! degree laws, and the analytic fixed-point layer against the exact tree
//! recursion on sampled random trees.

use epirisk::dist::DegreeDist;
use epirisk::econ::AgentEconomy;
use epirisk::game::{best_response_dynamics, find_equilibria, CostModel};
use epirisk::lmf::LmfSolution;
use epirisk::netgen::{gen_config, gen_er, gen_gw_tree};
use epirisk::rng::substream;
use epirisk::sim::tree_dp;
use epirisk::EpidemicParams;
use rand::Rng;

/// Chi-square critical value by the Wilson-Hilferty approximation.
fn chi2_critical(df: usize, z: f64) -> f64 {
    let k = df as f64;
    let t = 1.0 - 2.0 / (9.0 * k) + z * (2.0 / (9.0 * k)).sqrt();
    k * t * t * t
}

/// Chi-square statistic of observed degree counts against a Poisson law,
/// pooling low-probability degrees so every expected count is at least 5;
/// the remainder goes into one tail bin. Returns
/// `(statistic, degrees_of_freedom)`.
fn chi2_vs_poisson(observed: &[usize], n: usize, lambda: f64) -> (f64, usize) {
    let count = |d: usize| observed.get(d).copied().unwrap_or(0) as f64;
    let mut stat = 0.0;
    let mut bins = 0usize;
    let mut used_exp = 0.0;
    let mut used_obs = 0.0;
    let mut acc_exp = 0.0;
    let mut acc_obs = 0.0;
    let mut p = (-lambda).exp();
    let d_max = 10 * (lambda as usize + 10);
    for d in 0..d_max {
        acc_exp += p * n as f64;
        acc_obs += count(d);
        let remaining = n as f64 - used_exp - acc_exp;
        if acc_exp >= 5.0 && remaining >= 5.0 {
            stat += (acc_obs - acc_exp) * (acc_obs - acc_exp) / acc_exp;
            used_exp += acc_exp;
            used_obs += acc_obs;
            bins += 1;
            acc_exp = 0.0;
            acc_obs = 0.0;
        }
        p *= lambda / (d as f64 + 1.0);
    }
    let tail_exp = n as f64 - used_exp;
    let tail_obs = observed.iter().sum::<usize>() as f64 - used_obs;
    if tail_exp > 0.0 {
        stat += (tail_obs - tail_exp) * (tail_obs - tail_exp) / tail_exp;
        bins += 1;
    }
    (stat, bins - 1)
}

fn degree_histogram(adjacency_degrees: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut hist = Vec::new();
    for d in adjacency_degrees {
        if d >= hist.len() {
            hist.resize(d + 1, 0);
        }
        hist[d] += 1;
    }
    hist
}

#[test]
fn er_degrees_match_poisson_chi2() {
    let n = 100_000;
    let lambda = 10.0;
    let g = gen_er(n, lambda, 2024).unwrap();
    let hist = degree_histogram((0..n).map(|v| g.degree(v)));
    let (stat, df) = chi2_vs_poisson(&hist, n, lambda);
    let crit = chi2_critical(df, 2.326_347_874_040_840_8); // alpha = 0.01
    assert!(
        stat < crit,
        "chi2 = {stat:.1} above critical {crit:.1} at df = {df}"
    );
}

#[test]
fn config_model_degrees_match_poisson_chi2() {
    let n = 100_000;
    let lambda = 10.0;
    let g = gen_config(n, &DegreeDist::poisson(lambda).unwrap(), 2025).unwrap();
    g.validate().unwrap();
    let hist = degree_histogram((0..n).map(|v| g.degree(v)));
    let (stat, df) = chi2_vs_poisson(&hist, n, lambda);
    let crit = chi2_critical(df, 2.326_347_874_040_840_8);
    assert!(
        stat < crit,
        "chi2 = {stat:.1} above critical {crit:.1} at df = {df}"
    );
}

#[test]
fn unrolled_rde_matches_random_tree_dp_average() {
    // Averaging the exact per-tree DP over sampled Galton-Watson trees
    // estimates the depth-d iterate of the fixed-point map: subtree values
    // are independent, so expectations push through the products.
    let params = EpidemicParams::erdos_renyi(0.06, 0.01, 0.45, 0.15, 3.0).unwrap();
    let offspring = params.degree.size_biased().unwrap(); // Poisson(3)
    let gamma = 0.4;
    let depth = 4u32;
    let trees = 20_000usize;
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for t in 0..trees {
        let tree = gen_gw_tree(&offspring, &offspring, depth, 40_000 + t as u64).unwrap();
        let y = tree_dp(&tree, &params, gamma).unwrap();
        sum += y;
        sumsq += y * y;
    }
    let mean = sum / trees as f64;
    let var = (sumsq / trees as f64 - mean * mean).max(0.0);
    let se = (var / trees as f64).sqrt();

    let mut x = gamma * params.p_minus + (1.0 - gamma) * params.p_plus;
    for _ in 0..depth {
        x = params.rde_map(x, gamma).unwrap();
    }
    assert!(
        (mean - x).abs() < 4.0 * se,
        "tree average {mean:.5} vs unrolled map {x:.5} (se {se:.5})"
    );
}

#[test]
fn brd_fixed_points_are_equilibria_across_random_draws() {
    let mut rng = substream(555, &[0]);
    let econ = AgentEconomy::risk_neutral(1.0, 0.0).unwrap();
    for i in 0..20 {
        let q_plus = 0.2 + 0.7 * rng.random::<f64>();
        let weak = i % 2 == 0;
        let params = EpidemicParams::erdos_renyi(
            0.02 + 0.2 * rng.random::<f64>(),
            if weak {
                0.01 * rng.random::<f64>()
            } else {
                0.0
            },
            q_plus,
            if weak { q_plus } else { 0.0 },
            2.0 + 10.0 * rng.random::<f64>(),
        )
        .unwrap();
        let cost = CostModel::constant(0.8 * rng.random::<f64>() + 0.01, 1.0).unwrap();
        let report = find_equilibria(&params, &econ, &cost).unwrap();
        for gamma0 in [0.0, 0.5, 1.0] {
            let t = best_response_dynamics(&params, &econ, &cost, gamma0, 2_000).unwrap();
            if let Some(limit) = t.limit {
                assert!(
                    report
                        .equilibria
                        .iter()
                        .any(|e| (e.gamma - limit).abs() < 1e-5),
                    "draw {i}: limit {limit} missing from {:?}",
                    report
                        .equilibria
                        .iter()
                        .map(|e| e.gamma)
                        .collect::<Vec<_>>()
                );
            }
        }
    }
}

#[test]
fn lmf_solution_internally_consistent_across_draws() {
    let mut rng = substream(556, &[0]);
    let econ = AgentEconomy::risk_neutral(1.0, 0.0).unwrap();
    for _ in 0..50 {
        let p_plus = 0.01 + 0.5 * rng.random::<f64>();
        let q_plus: f64 = rng.random();
        let params = EpidemicParams::erdos_renyi(
            p_plus,
            p_plus * rng.random::<f64>(),
            q_plus,
            q_plus * rng.random::<f64>(),
            1.0 + 12.0 * rng.random::<f64>(),
        )
        .unwrap();
        let gamma: f64 = rng.random();
        let sol = LmfSolution::solve(&params, &econ, gamma).unwrap();
        assert!(sol.p_s <= sol.p_n + 1e-12);
        assert!((0.0..=1.0).contains(&sol.h));
        assert!((sol.c_gamma - (sol.p_n - sol.p_s)).abs() < 1e-12); // risk neutral, l = 1
    }
}
