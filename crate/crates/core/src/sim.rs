//! Ground truth for the epidemic layer.
//!
//! The final state on a graph solves, per node,
//! `1 - X_i = (1 - phi_i) prod_{j~i} (1 - theta_ji X_j)` where `phi_i` is
//! the direct-loss indicator and `theta_ji` the contagion indicator on the
//! directed edge j -> i, with parameters chosen by the *receiver's*
//! protection state. On graphs with cycles this equation admits spurious
//! mutually-infected solutions; the minimal one — reachability from the
//! direct-loss seeds through open directed edges — is the physical outcome
//! and the one computed here.
//!
//! Three routes to the same quantity keep each other honest:
//! [`run_epidemic`] (Monte Carlo), [`exact_tiny`] (full enumeration of all
//! seed and edge indicators on tiny graphs), and [`tree_dp`] (exact
//! bottom-up recursion on trees).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::lmf::EpidemicParams;
use crate::netgen::{Graph, GwTree};
use crate::rng::substream;
use crate::Result;

/// Enumeration budget for [`exact_tiny`]: at most 2^24 joint outcomes.
pub const EXACT_BUDGET_BITS: u32 = 24;

/// Substream ids for the per-trial variable families; fixed so that paired
/// runs (same seed, different gamma or q/p parameters) reuse identical
/// uniforms and are coupled draw by draw.
const VAR_INVEST: u64 = 0;
const VAR_SEED: u64 = 1;
const VAR_EDGE: u64 = 2;

/// How the investment decisions are assigned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Investment {
    /// i.i.d. Bernoulli(gamma) per node, redrawn each trial.
    Fraction(f64),
    /// A fixed explicit vector, shared by all trials.
    Explicit(Vec<bool>),
}

/// Monte Carlo configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: EpidemicParams,
    pub investment: Investment,
    pub trials: usize,
    pub seed: u64,
    /// Record per-node infection frequencies (memory grows with n).
    #[serde(default)]
    pub record_per_node: bool,
}

impl SimConfig {
    pub fn validate(&self, graph: &Graph) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::domain("trials must be >= 1"));
        }
        match &self.investment {
            Investment::Fraction(g) => {
                if !(0.0..=1.0).contains(g) {
                    return Err(Error::domain(format!("gamma must be in [0,1], got {g}")));
                }
            }
            Investment::Explicit(d) => {
                if d.len() != graph.node_count() {
                    return Err(Error::domain(format!(
                        "investment vector length {} != node count {}",
                        d.len(),
                        graph.node_count()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Aggregate Monte Carlo outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimOutcome {
    pub trials: usize,
    /// Fraction of all node-trials infected.
    pub mean_infected: f64,
    /// Infection frequency among protected node-trials.
    pub mean_infected_given_s: f64,
    /// Infection frequency among unprotected node-trials.
    pub mean_infected_given_n: f64,
    pub se_infected: f64,
    pub se_given_s: f64,
    pub se_given_n: f64,
    /// Empirical investing fraction across all trials.
    pub empirical_gamma: f64,
    /// Per-node infection frequencies (empty unless requested).
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub per_node: Vec<f64>,
}

/// Directed-edge bookkeeping: edge indicators are drawn in a fixed order
/// (receiver node, then position in its adjacency list), and `mirror[s]`
/// maps the slot of neighbor j in adj(i) to the slot of i in adj(j) so BFS
/// can look up the indicator of the edge it is about to traverse.
struct EdgeIndex {
    offsets: Vec<usize>,
    mirror: Vec<usize>,
}

impl EdgeIndex {
    fn build(graph: &Graph) -> Self {
        let n = graph.node_count();
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for v in 0..n {
            offsets.push(offsets[v] + graph.degree(v));
        }
        let mut mirror = vec![0usize; offsets[n]];
        for i in 0..n {
            for (k, &j) in graph.neighbors(i).iter().enumerate() {
                let pos_in_j = graph
                    .neighbors(j as usize)
                    .binary_search(&(i as u32))
                    .expect("graph symmetry");
                mirror[offsets[i] + k] = offsets[j as usize] + pos_in_j;
            }
        }
        EdgeIndex { offsets, mirror }
    }

    fn slot(&self, receiver: usize, pos: usize) -> usize {
        self.offsets[receiver] + pos
    }
}

struct TrialStats {
    infected: u64,
    invested: u64,
    infected_invested: u64,
    infected_nodes: Option<Vec<bool>>,
}

/// One-shot percolation outcome, averaged over `config.trials` independent
/// trials. Trials run in parallel; per-trial substreams and an ordered
/// reduction make the result independent of the execution schedule.
pub fn run_epidemic(graph: &Graph, config: &SimConfig) -> Result<SimOutcome> {
    config.validate(graph)?;
    let index = EdgeIndex::build(graph);
    let stats: Vec<TrialStats> = (0..config.trials)
        .into_par_iter()
        .map(|trial| run_trial(graph, &index, config, trial as u64))
        .collect();

    let n = graph.node_count() as f64;
    let trials = config.trials as f64;
    let mut tot_inf = 0u64;
    let mut tot_inv = 0u64;
    let mut tot_inf_inv = 0u64;
    let mut per_node = if config.record_per_node {
        vec![0u64; graph.node_count()]
    } else {
        Vec::new()
    };
    // per-trial fractions for standard errors
    let mut fr_inf = Vec::with_capacity(stats.len());
    let mut fr_s = Vec::new();
    let mut fr_n = Vec::new();
    for s in &stats {
        tot_inf += s.infected;
        tot_inv += s.invested;
        tot_inf_inv += s.infected_invested;
        fr_inf.push(s.infected as f64 / n);
        if s.invested > 0 {
            fr_s.push(s.infected_invested as f64 / s.invested as f64);
        }
        let non = graph.node_count() as u64 - s.invested;
        if non > 0 {
            fr_n.push((s.infected - s.infected_invested) as f64 / non as f64);
        }
        if let Some(nodes) = &s.infected_nodes {
            for (i, &inf) in nodes.iter().enumerate() {
                per_node[i] += inf as u64;
            }
        }
    }
    let node_trials = n * trials;
    let invested = tot_inv as f64;
    let non_invested = node_trials - invested;
    let mean_infected = tot_inf as f64 / node_trials;
    let mean_infected_given_s = if invested > 0.0 {
        tot_inf_inv as f64 / invested
    } else {
        0.0
    };
    let mean_infected_given_n = if non_invested > 0.0 {
        (tot_inf - tot_inf_inv) as f64 / non_invested
    } else {
        0.0
    };
    Ok(SimOutcome {
        trials: config.trials,
        mean_infected,
        mean_infected_given_s,
        mean_infected_given_n,
        se_infected: std_error(&fr_inf),
        se_given_s: std_error(&fr_s),
        se_given_n: std_error(&fr_n),
        empirical_gamma: invested / node_trials,
        per_node: per_node.into_iter().map(|c| c as f64 / trials).collect(),
    })
}

fn std_error(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt()
}

fn run_trial(graph: &Graph, index: &EdgeIndex, config: &SimConfig, trial: u64) -> TrialStats {
    let n = graph.node_count();
    let p = &config.params;
    let seed = config.seed;

    // Variable families are drawn in fixed node/slot order from dedicated
    // substreams. Thresholding a single uniform by the state-dependent
    // parameter couples runs across gamma: raising gamma can only switch
    // nodes N -> S, which can only close seeds and edges, so infection sets
    // shrink monotonically per draw.
    let mut rng_d = substream(seed, &[trial, VAR_INVEST]);
    let invested: Vec<bool> = match &config.investment {
        Investment::Fraction(gamma) => (0..n)
            .map(|_| rand::Rng::random::<f64>(&mut rng_d) < *gamma)
            .collect(),
        Investment::Explicit(d) => d.clone(),
    };

    let mut rng_phi = substream(seed, &[trial, VAR_SEED]);
    let mut stack: Vec<u32> = Vec::new();
    let mut infected = vec![false; n];
    for i in 0..n {
        let u: f64 = rand::Rng::random(&mut rng_phi);
        let thr = if invested[i] { p.p_minus } else { p.p_plus };
        if u < thr {
            infected[i] = true;
            stack.push(i as u32);
        }
    }

    let mut rng_edge = substream(seed, &[trial, VAR_EDGE]);
    let m2 = index.mirror.len();
    let mut open_in = vec![false; m2];
    for i in 0..n {
        let thr = if invested[i] { p.q_minus } else { p.q_plus };
        for k in 0..graph.degree(i) {
            let u: f64 = rand::Rng::random(&mut rng_edge);
            open_in[index.slot(i, k)] = u < thr;
        }
    }

    // minimal solution: reachability from seeds over open directed edges
    while let Some(j) = stack.pop() {
        for (k, &i) in graph.neighbors(j as usize).iter().enumerate() {
            if infected[i as usize] {
                continue;
            }
            // edge j -> i carries the indicator stored at i's slot for j
            if open_in[index.mirror[index.slot(j as usize, k)]] {
                infected[i as usize] = true;
                stack.push(i);
            }
        }
    }

    let mut inf = 0u64;
    let mut inv = 0u64;
    let mut inf_inv = 0u64;
    for i in 0..n {
        inf += infected[i] as u64;
        inv += invested[i] as u64;
        inf_inv += (infected[i] && invested[i]) as u64;
    }
    TrialStats {
        infected: inf,
        invested: inv,
        infected_invested: inf_inv,
        infected_nodes: config.record_per_node.then_some(infected),
    }
}

/// Exact per-node infection probabilities by summing over every joint
/// outcome of the seed indicators and the two directed contagion indicators
/// per edge. Requires `n + 2 m <= 24` bits of outcome space.
pub fn exact_tiny(graph: &Graph, params: &EpidemicParams, invested: &[bool]) -> Result<Vec<f64>> {
    exact_tiny_impl(graph, params, invested, false)
}

/// As [`exact_tiny`], additionally verifying for every outcome that the
/// reachability set satisfies the recursion and is minimal (flipping any
/// infected node to healthy breaks it). Used by tests.
pub fn exact_tiny_verified(
    graph: &Graph,
    params: &EpidemicParams,
    invested: &[bool],
) -> Result<Vec<f64>> {
    exact_tiny_impl(graph, params, invested, true)
}

fn exact_tiny_impl(
    graph: &Graph,
    params: &EpidemicParams,
    invested: &[bool],
    verify_minimal: bool,
) -> Result<Vec<f64>> {
    let n = graph.node_count();
    if invested.len() != n {
        return Err(Error::domain("investment vector length mismatch"));
    }
    let edges = graph.edges();
    let m = edges.len();
    let bits = n as u32 + 2 * m as u32;
    if bits > EXACT_BUDGET_BITS {
        return Err(Error::budget(format!(
            "exact enumeration needs {bits} outcome bits, budget is {EXACT_BUDGET_BITS}"
        )));
    }

    // bit layout: [0..n) seeds phi_i, then per edge (u,v): bit for u->v,
    // bit for v->u (indicator parameter set by the receiver's state)
    let mut p_one = Vec::with_capacity(bits as usize);
    for &inv in invested.iter() {
        p_one.push(if inv { params.p_minus } else { params.p_plus });
    }
    for &(u, v) in &edges {
        p_one.push(if invested[v as usize] {
            params.q_minus
        } else {
            params.q_plus
        });
        p_one.push(if invested[u as usize] {
            params.q_minus
        } else {
            params.q_plus
        });
    }

    let mut node_prob = vec![0.0f64; n];
    let total = 1u64 << bits;
    let mut infected = vec![false; n];
    let mut stack: Vec<u32> = Vec::new();
    for outcome in 0..total {
        let mut weight = 1.0f64;
        for (b, p1) in p_one.iter().enumerate() {
            let bit = (outcome >> b) & 1 == 1;
            weight *= if bit { *p1 } else { 1.0 - p1 };
            if weight == 0.0 {
                break;
            }
        }
        if weight == 0.0 {
            continue;
        }
        infected.iter_mut().for_each(|x| *x = false);
        stack.clear();
        for (i, node) in infected.iter_mut().enumerate() {
            if (outcome >> i) & 1 == 1 {
                *node = true;
                stack.push(i as u32);
            }
        }
        let edge_open = |from: u32, to: u32| -> bool {
            // find the undirected edge index; graphs here are tiny
            for (e, &(u, v)) in edges.iter().enumerate() {
                if (u, v) == (from.min(to), from.max(to)) {
                    let b = n + 2 * e + if from == u { 0 } else { 1 };
                    return (outcome >> b) & 1 == 1;
                }
            }
            unreachable!("edge lookup")
        };
        while let Some(j) = stack.pop() {
            for &i in graph.neighbors(j as usize) {
                if !infected[i as usize] && edge_open(j, i) {
                    infected[i as usize] = true;
                    stack.push(i);
                }
            }
        }
        if verify_minimal {
            verify_minimal_solution(graph, outcome, n, &edges, &infected);
        }
        for i in 0..n {
            if infected[i] {
                node_prob[i] += weight;
            }
        }
    }
    Ok(node_prob)
}

/// Check that `infected` satisfies the recursion for this outcome and that
/// flipping any single infected node to healthy violates it somewhere.
fn verify_minimal_solution(
    graph: &Graph,
    outcome: u64,
    n: usize,
    edges: &[(u32, u32)],
    infected: &[bool],
) {
    let open = |from: usize, to: usize| -> bool {
        for (e, &(u, v)) in edges.iter().enumerate() {
            if (u as usize, v as usize) == (from.min(to), from.max(to)) {
                let b = n + 2 * e + if from == u as usize { 0 } else { 1 };
                return (outcome >> b) & 1 == 1;
            }
        }
        unreachable!()
    };
    let seeded = |i: usize| (outcome >> i) & 1 == 1;
    let consistent = |x: &[bool]| -> bool {
        (0..n).all(|i| {
            let forced = seeded(i)
                || graph
                    .neighbors(i)
                    .iter()
                    .any(|&j| x[j as usize] && open(j as usize, i));
            x[i] == forced
        })
    };
    assert!(consistent(infected), "reachability violates the recursion");
    for i in 0..n {
        if infected[i] {
            let mut flipped = infected.to_vec();
            flipped[i] = false;
            assert!(
                !consistent(&flipped),
                "solution not minimal: node {i} can be flipped healthy"
            );
        }
    }
}

/// Exact root infection probability on a tree by bottom-up recursion,
/// marginalizing each node's investment state at fraction `gamma`:
///
/// ```text
/// y_i = gamma (1 - (1-p-) prod_k (1 - q- y_k))
///     + (1-gamma) (1 - (1-p+) prod_k (1 - q+ y_k))
/// ```
///
/// Leaves get the pure seed mixture. The subtree variables entering each
/// product are independent, which is what makes the recursion exact. The
/// returned value is the root's infection probability over its full child
/// set: the infection-from-below law when the tree's root degree was drawn
/// from the offspring law, and the node-level law when it was drawn from
/// the graph's degree law.
pub fn tree_dp(tree: &GwTree, params: &EpidemicParams, gamma: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::domain(format!(
            "gamma must be in [0,1], got {gamma}"
        )));
    }
    let n = tree.node_count();
    let mut y = vec![0.0f64; n];
    // children always have larger ids (breadth-first construction)
    for i in (0..n).rev() {
        let mut prod_s = 1.0f64;
        let mut prod_n = 1.0f64;
        for &c in &tree.children[i] {
            prod_s *= 1.0 - params.q_minus * y[c as usize];
            prod_n *= 1.0 - params.q_plus * y[c as usize];
        }
        y[i] = gamma * (1.0 - (1.0 - params.p_minus) * prod_s)
            + (1.0 - gamma) * (1.0 - (1.0 - params.p_plus) * prod_n);
    }
    Ok(y[0])
}
