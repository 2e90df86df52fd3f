//! Best-bound branch and bound over binary variables.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use log::debug;

use super::simplex::solve_with_bounds;
use super::{LinearProgram, LpSolution, SolveStatus, SolverOptions};
use crate::error::Result;

/// Run the rounding heuristic at the root and then every this many nodes.
const HEURISTIC_EVERY: usize = 50;

struct Node {
    bound: f64,
    seq: usize,
    fixings: Vec<(usize, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // BinaryHeap is a max-heap: smaller bound first, then older node first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Solves `lp` with its binary variables restricted to {0, 1}.
///
/// Without binaries this is a plain LP solve. When the node limit is hit the
/// best incumbent (if any) is returned with status `NodeLimit`.
pub fn solve_milp(lp: &LinearProgram, opts: &SolverOptions) -> Result<LpSolution> {
    lp.validate()?;
    opts.validate()?;
    let base: Vec<(f64, f64)> = lp.vars.iter().map(|v| (v.lower, v.upper)).collect();
    let binaries: Vec<usize> = lp.binaries().collect();

    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    let mut nodes = 0usize;
    heap.push(Node {
        bound: f64::NEG_INFINITY,
        seq,
        fixings: Vec::new(),
    });

    while let Some(node) = heap.pop() {
        if let Some((best, _)) = &incumbent {
            if node.bound >= prune_level(*best, opts) {
                continue;
            }
        }
        if nodes >= opts.max_nodes {
            debug!("branch and bound stopped at the node limit");
            return Ok(finish(incumbent, SolveStatus::NodeLimit, nodes, &binaries, lp));
        }
        nodes += 1;

        let mut bounds = base.clone();
        for &(j, v) in &node.fixings {
            bounds[j] = (v, v);
        }
        let relax = solve_with_bounds(lp, &bounds, opts)?;
        match relax.status {
            SolveStatus::Optimal => {}
            SolveStatus::Unbounded if nodes == 1 => {
                return Ok(LpSolution::without_point(SolveStatus::Unbounded, nodes));
            }
            _ => continue,
        }
        if let Some((best, _)) = &incumbent {
            if relax.objective >= prune_level(*best, opts) {
                continue;
            }
        }

        let branch_var = most_fractional(&relax.x, &binaries, opts.integrality_tol);
        let Some(j) = branch_var else {
            offer(&mut incumbent, relax.objective, relax.x);
            continue;
        };

        if nodes == 1 || nodes.is_multiple_of(HEURISTIC_EVERY) {
            if let Some((obj, x)) = round_and_repair(lp, &bounds, &relax.x, &binaries, opts)? {
                offer(&mut incumbent, obj, x);
                if relax.objective >= prune_level(obj, opts) {
                    continue;
                }
            }
        }

        for v in [0.0, 1.0] {
            seq += 1;
            let mut fixings = node.fixings.clone();
            fixings.push((j, v));
            heap.push(Node {
                bound: relax.objective,
                seq,
                fixings,
            });
        }
    }

    let status = if incumbent.is_some() {
        SolveStatus::Optimal
    } else {
        SolveStatus::Infeasible
    };
    debug!("branch and bound finished after {nodes} nodes: {status:?}");
    Ok(finish(incumbent, status, nodes, &binaries, lp))
}

fn prune_level(best: f64, opts: &SolverOptions) -> f64 {
    best - (best.abs() * opts.relative_gap).max(1e-9)
}

fn offer(incumbent: &mut Option<(f64, Vec<f64>)>, obj: f64, x: Vec<f64>) {
    if incumbent.as_ref().is_none_or(|(best, _)| obj < *best) {
        *incumbent = Some((obj, x));
    }
}

fn finish(
    incumbent: Option<(f64, Vec<f64>)>,
    status: SolveStatus,
    nodes: usize,
    binaries: &[usize],
    lp: &LinearProgram,
) -> LpSolution {
    match incumbent {
        Some((_, mut x)) => {
            for &j in binaries {
                x[j] = x[j].round();
            }
            LpSolution {
                status,
                objective: lp.objective(&x),
                x,
                nodes_explored: nodes,
            }
        }
        None => LpSolution::without_point(status, nodes),
    }
}

fn most_fractional(x: &[f64], binaries: &[usize], tol: f64) -> Option<usize> {
    let mut best = None;
    let mut best_frac = tol;
    for &j in binaries {
        let f = (x[j] - x[j].floor()).min(x[j].ceil() - x[j]);
        if f > best_frac {
            best_frac = f;
            best = Some(j);
        }
    }
    best
}

/// Rounds fractional binaries up, drops any that keep a row violated when a
/// flip to zero fixes it, and re-optimises the continuous part.
fn round_and_repair(
    lp: &LinearProgram,
    bounds: &[(f64, f64)],
    x: &[f64],
    binaries: &[usize],
    opts: &SolverOptions,
) -> Result<Option<(f64, Vec<f64>)>> {
    let mut y = x.to_vec();
    for &j in binaries {
        y[j] = if y[j] > opts.integrality_tol { 1.0 } else { 0.0 };
    }
    let tol = opts.feasibility_tol;
    for _ in 0..binaries.len().min(64) {
        let Some(row) = lp.constraints.iter().find(|c| c.violation(&y) > tol) else {
            break;
        };
        let mut repaired = false;
        for &(j, _) in &row.terms {
            if !lp.vars[j].binary || y[j] != 1.0 || bounds[j].0 > 0.0 {
                continue;
            }
            y[j] = 0.0;
            let ok = row.violation(&y) <= tol
                && lp
                    .constraints
                    .iter()
                    .filter(|c| c.terms.iter().any(|&(k, _)| k == j))
                    .all(|c| c.violation(&y) <= tol || c.violation(&y) <= c.violation(x));
            if ok {
                repaired = true;
                break;
            }
            y[j] = 1.0;
        }
        if !repaired {
            break;
        }
    }
    let mut fixed = bounds.to_vec();
    for &j in binaries {
        if y[j] < bounds[j].0 || y[j] > bounds[j].1 {
            return Ok(None);
        }
        fixed[j] = (y[j], y[j]);
    }
    let sol = solve_with_bounds(lp, &fixed, opts)?;
    if sol.status == SolveStatus::Optimal && lp.max_violation(&sol.x) <= tol.max(1e-6) {
        Ok(Some((sol.objective, sol.x)))
    } else {
        Ok(None)
    }
}
