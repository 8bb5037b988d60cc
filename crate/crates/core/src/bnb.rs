//! Branch-and-bound over the binaries of a [`PathModel`].
//!
//! Children are evaluated as soon as they are created, each one by a dual
//! simplex restart from its parent's final tableau. Only active nodes (those
//! neither pruned nor separated) are kept.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::linmodel::{LinModelError, PathModel};
use crate::lpsolve::{reduce, solve_dual_warmstart, solve_primal, solve_primal_unreduced, BoundChange, LpError, LpProblem, LpResult, LpStatus, Reduction};

pub const INTEGRALITY_TOL: f64 = 1e-6;

/// Active nodes keeping their full tableau; beyond this the basis alone is
/// kept and the tableau rebuilt when the node is separated.
const WARM_NODE_BUDGET: usize = 256;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BnbError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Model(#[from] LinModelError),
    #[error("invalid search configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    DepthFirst,
    BestBoundBreadth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BranchRule {
    NumericalOrder,
    /// Fractional binary appearing in the most constraints.
    MostConstrained,
    /// Fractional binary with the largest objective coefficient magnitude.
    MaxCostPenalty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub strategy: Strategy,
    pub branch_rule: BranchRule,
    pub node_limit: usize,
    /// Relative optimality gap under which a node is pruned.
    pub gap_tolerance: f64,
    /// Keep one trace line per node in the outcome.
    pub trace: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::BestBoundBreadth,
            branch_rule: BranchRule::MostConstrained,
            node_limit: 100_000,
            gap_tolerance: 1e-9,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Proof {
    Optimal,
    LimitHit,
    Infeasible,
}

/// Integer solution in the model's variable space.
#[derive(Debug, Clone, PartialEq)]
pub struct Incumbent {
    pub x: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct BnbOutcome {
    pub incumbent: Option<Incumbent>,
    /// Relaxations solved, the root included.
    pub node_count: usize,
    pub proof: Proof,
    /// Objective of every incumbent improvement, in order.
    pub incumbent_history: Vec<f64>,
    /// Largest number of simultaneously active nodes.
    pub max_active: usize,
    /// False if some child bound fell below its parent's.
    pub bounds_monotone: bool,
    pub root_bound: f64,
    pub trace: Vec<String>,
}

/// Fixings of the binaries along one root-to-node chain, in the reduced space.
#[derive(Debug, Clone)]
struct Node {
    id: usize,
    depth: usize,
    bound: f64,
    fixings: Vec<(usize, f64)>,
    lp: LpResult,
}

struct Ranked(Node);

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Ranked {}
impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Ranked {
    // max-heap: the best node (lowest bound, then depth, then id) ranks highest
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .bound
            .total_cmp(&self.0.bound)
            .then_with(|| other.0.depth.cmp(&self.0.depth))
            .then_with(|| other.0.id.cmp(&self.0.id))
    }
}

enum Pool {
    Stack(Vec<Node>),
    Heap(BinaryHeap<Ranked>),
}

impl Pool {
    fn push(&mut self, n: Node) {
        match self {
            Pool::Stack(s) => s.push(n),
            Pool::Heap(h) => h.push(Ranked(n)),
        }
    }
    fn pop(&mut self) -> Option<Node> {
        match self {
            Pool::Stack(s) => s.pop(),
            Pool::Heap(h) => h.pop().map(|r| r.0),
        }
    }
    fn len(&self) -> usize {
        match self {
            Pool::Stack(s) => s.len(),
            Pool::Heap(h) => h.len(),
        }
    }
}

/// Cheapest cost of a transfer over its drift interval.
fn best_leg_cost(model: &PathModel, e: usize) -> Option<f64> {
    let tr = model.transfers[e].as_ref()?;
    let (lo, hi) = tr.alpha_bounds;
    Some(tr.cost_at(lo).min(tr.cost_at(hi)))
}

/// Solves the LP of a fully fixed path.
pub fn evaluate_path(model: &PathModel, nodes: &[usize]) -> Result<Option<Incumbent>, BnbError> {
    let Some(lp) = model.fix_path(nodes) else {
        return Ok(None);
    };
    let r = solve_primal(&lp)?;
    if !r.is_optimal() {
        return Ok(None);
    }
    Ok(Some(Incumbent { objective: r.objective, x: r.x }))
}

/// Nearest-neighbour paths from every admissible start, each completed by an
/// LP over drift offsets and dates; the cheapest feasible one is returned.
pub fn greedy_incumbent(model: &PathModel) -> Result<Option<Incumbent>, BnbError> {
    let n = model.num_nodes();
    let starts: Vec<usize> = match model.fictitious {
        Some(f) => vec![f],
        None => (0..n).collect(),
    };
    let mut best: Option<Incumbent> = None;
    for start in starts {
        let mut path = vec![start];
        let mut used = vec![false; n];
        used[start] = true;
        while path.len() < model.n_select {
            let cur = *path.last().unwrap();
            let next = (0..n)
                .filter(|&j| !used[j])
                .filter_map(|j| model.pair(cur, j).and_then(|e| best_leg_cost(model, e)).map(|c| (j, c)))
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            let Some((j, _)) = next else { break };
            used[j] = true;
            path.push(j);
        }
        if path.len() < model.n_select {
            continue;
        }
        if let Some(inc) = evaluate_path(model, &path)? {
            if best.as_ref().is_none_or(|b| inc.objective < b.objective) {
                best = Some(inc);
            }
        }
    }
    Ok(best)
}

pub fn solve(model: &PathModel, cfg: &SearchConfig) -> Result<BnbOutcome, BnbError> {
    solve_with_hints(model, cfg, &[])
}

/// Branch-and-bound seeded with the greedy incumbent and with the given
/// candidate paths (node indices).
pub fn solve_with_hints(model: &PathModel, cfg: &SearchConfig, hints: &[Vec<usize>]) -> Result<BnbOutcome, BnbError> {
    if cfg.node_limit == 0 {
        return Err(BnbError::Config("node_limit must be positive".into()));
    }
    let mut search = Search::new(model, cfg);
    if let Some(inc) = greedy_incumbent(model)? {
        search.offer(inc, "greedy");
    }
    for h in hints {
        if let Some(inc) = evaluate_path(model, h)? {
            search.offer(inc, "hint");
        }
    }
    search.run()
}

struct Search<'a> {
    model: &'a PathModel,
    cfg: &'a SearchConfig,
    red: Reduction,
    /// Reduced column -> is binary.
    binary: Vec<bool>,
    /// Branching priority per reduced column (higher first).
    priority: Vec<f64>,
    incumbent: Option<Incumbent>,
    history: Vec<f64>,
    trace: Vec<String>,
    next_id: usize,
    node_count: usize,
    bounds_monotone: bool,
}

impl<'a> Search<'a> {
    fn new(model: &'a PathModel, cfg: &'a SearchConfig) -> Self {
        let red = reduce(&model.lp);
        let is_bin: Vec<bool> = {
            let mut v = vec![false; model.variables.len()];
            for j in model.binaries() {
                v[j] = true;
            }
            v
        };
        let binary: Vec<bool> = red.col_map.iter().map(|&j| is_bin[j]).collect();
        let priority: Vec<f64> = red
            .col_map
            .iter()
            .map(|&j| match cfg.branch_rule {
                BranchRule::NumericalOrder => 0.0,
                BranchRule::MostConstrained => model.lp.rows.iter().filter(|r| r[j] != 0.0).count() as f64,
                BranchRule::MaxCostPenalty => model.lp.objective[j].abs(),
            })
            .collect();
        Self {
            model,
            cfg,
            red,
            binary,
            priority,
            incumbent: None,
            history: Vec::new(),
            trace: Vec::new(),
            next_id: 0,
            node_count: 0,
            bounds_monotone: true,
        }
    }

    fn log(&mut self, line: String) {
        log::trace!("{line}");
        if self.cfg.trace {
            self.trace.push(line);
        }
    }

    fn offer(&mut self, inc: Incumbent, source: &str) -> bool {
        if self.incumbent.as_ref().is_none_or(|b| inc.objective < b.objective - 1e-9) {
            self.log(format!("incumbent {:.6} from {source}", inc.objective));
            self.history.push(inc.objective);
            self.incumbent = Some(inc);
            true
        } else {
            false
        }
    }

    fn cutoff(&self) -> f64 {
        match &self.incumbent {
            Some(inc) => inc.objective - self.cfg.gap_tolerance * inc.objective.abs().max(1.0),
            None => f64::INFINITY,
        }
    }

    /// Fractional binary chosen by the branching rule, `None` when integral.
    fn branching_variable(&self, x: &[f64]) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (j, &v) in x.iter().enumerate() {
            if !self.binary[j] || (v - v.round()).abs() <= INTEGRALITY_TOL {
                continue;
            }
            // columns are visited in index order, so ties keep the lowest
            if best.is_none_or(|b| self.priority[j] > self.priority[b]) {
                best = Some(j);
            }
        }
        best
    }

    fn integral_solution(&self, x: &[f64]) -> Vec<f64> {
        let snapped: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(j, &v)| if self.binary[j] { v.round() } else { v })
            .collect();
        self.red.expand(&snapped)
    }

    fn new_id(&mut self) -> usize {
        self.next_id += 1;
        self.next_id - 1
    }

    /// Classifies an evaluated node: `Some(node)` when it stays active.
    fn settle(&mut self, node: Node, parent_bound: Option<f64>) -> Option<Node> {
        let tag = format!("node {} depth {}", node.id, node.depth);
        match node.lp.status {
            LpStatus::Infeasible => {
                self.log(format!("{tag} bound inf action prune-infeasible"));
                return None;
            }
            LpStatus::Unbounded => {
                self.log(format!("{tag} bound -inf action prune-unbounded"));
                return None;
            }
            LpStatus::Optimal => {}
        }
        if let Some(pb) = parent_bound {
            if node.bound < pb - 1e-6 {
                self.bounds_monotone = false;
            }
        }
        if node.bound >= self.cutoff() {
            self.log(format!("{tag} bound {:.6} action prune-bound", node.bound));
            return None;
        }
        if self.branching_variable(&node.lp.x).is_none() {
            let x = self.integral_solution(&node.lp.x);
            let objective = self.model.lp.objective_value(&x);
            self.log(format!("{tag} bound {:.6} action integer", node.bound));
            self.offer(Incumbent { x, objective }, "tree");
            return None;
        }
        self.log(format!("{tag} bound {:.6} action keep", node.bound));
        Some(node)
    }

    fn child(&mut self, parent: &Node, var: usize, value: f64, problem: &LpProblem) -> Result<Node, BnbError> {
        let lp = solve_dual_warmstart(problem, &parent.lp, BoundChange::fix(var, value))?;
        self.node_count += 1;
        let mut fixings = parent.fixings.clone();
        fixings.push((var, value));
        Ok(Node { id: self.new_id(), depth: parent.depth + 1, bound: lp.objective, fixings, lp })
    }

    fn problem_for(&self, fixings: &[(usize, f64)]) -> LpProblem {
        let mut p = self.red.problem.clone();
        for &(j, v) in fixings {
            p.lower[j] = v;
            p.upper[j] = v;
        }
        p
    }

    fn finish(self, proof: Proof, max_active: usize, root_bound: f64) -> BnbOutcome {
        BnbOutcome {
            incumbent: self.incumbent,
            node_count: self.node_count,
            proof,
            incumbent_history: self.history,
            max_active,
            bounds_monotone: self.bounds_monotone,
            root_bound,
            trace: self.trace,
        }
    }

    fn run(mut self) -> Result<BnbOutcome, BnbError> {
        if self.red.infeasible {
            self.node_count = 1;
            self.log("node 0 depth 0 bound inf action prune-infeasible".into());
            let proof = if self.incumbent.is_some() { Proof::Optimal } else { Proof::Infeasible };
            return Ok(self.finish(proof, 0, f64::INFINITY));
        }
        let root_lp = solve_primal_unreduced(&self.red.problem)?;
        self.node_count = 1;
        let root = Node { id: self.new_id(), depth: 0, bound: root_lp.objective, fixings: Vec::new(), lp: root_lp };
        let root_bound = root.bound;
        let mut pool = match self.cfg.strategy {
            Strategy::DepthFirst => Pool::Stack(Vec::new()),
            Strategy::BestBoundBreadth => Pool::Heap(BinaryHeap::new()),
        };
        if let Some(root) = self.settle(root, None) {
            pool.push(root);
        }
        let mut max_active = pool.len();
        let mut limit_hit = false;
        while let Some(mut node) = pool.pop() {
            if node.bound >= self.cutoff() {
                self.log(format!("node {} depth {} bound {:.6} action prune-bound", node.id, node.depth, node.bound));
                continue;
            }
            if self.node_count + 2 > self.cfg.node_limit {
                limit_hit = true;
                break;
            }
            let var = self.branching_variable(&node.lp.x).expect("active nodes are fractional");
            self.log(format!(
                "node {} depth {} bound {:.6} action branch {}",
                node.id,
                node.depth,
                node.bound,
                self.model.variables[self.red.col_map[var]].name
            ));
            // depth-first pops the last pushed child, so the 1-branch goes last
            let order = match self.cfg.strategy {
                Strategy::DepthFirst => [0.0, 1.0],
                Strategy::BestBoundBreadth => [1.0, 0.0],
            };
            let parent_bound = node.bound;
            if node.lp.warm.is_none() {
                // rebuild the tableau once for both children
                let p = self.problem_for(&node.fixings);
                node.lp = match solve_primal_unreduced(&p) {
                    Ok(r) if r.is_optimal() => r,
                    _ => continue,
                };
            }
            for value in order {
                let mut fixings = node.fixings.clone();
                fixings.push((var, value));
                let problem = self.problem_for(&fixings);
                let child = self.child(&node, var, value, &problem)?;
                if let Some(active) = self.settle(child, Some(parent_bound)) {
                    pool.push(active);
                }
            }
            if pool.len() > WARM_NODE_BUDGET {
                trim_warm_states(&mut pool);
            }
            max_active = max_active.max(pool.len());
        }
        let proof = if limit_hit {
            Proof::LimitHit
        } else if self.incumbent.is_none() {
            Proof::Infeasible
        } else {
            Proof::Optimal
        };
        Ok(self.finish(proof, max_active, root_bound))
    }
}

/// Drops tableaux of the nodes least likely to be separated soon.
fn trim_warm_states(pool: &mut Pool) {
    match pool {
        Pool::Stack(s) => {
            let keep_from = s.len().saturating_sub(WARM_NODE_BUDGET);
            for n in &mut s[..keep_from] {
                n.lp.warm = None;
            }
        }
        Pool::Heap(h) => {
            let mut nodes: Vec<Ranked> = std::mem::take(h).into_sorted_vec();
            // ascending order: the best nodes come last
            let cut = nodes.len().saturating_sub(WARM_NODE_BUDGET);
            for r in &mut nodes[..cut] {
                r.0.lp.warm = None;
            }
            *h = nodes.into_iter().collect();
        }
    }
}
