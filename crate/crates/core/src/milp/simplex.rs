//! Two-phase bounded primal simplex on a dense tableau.
//!
//! Row `i` of the program becomes `a_i·x + s_i = b_i` with a slack bounded by
//! the row relation: `[0, ∞)` for `≤`, `(−∞, 0]` for `≥` and `[0, 0]` for `=`.
//! The all-slack basis is always available, so phase one minimises the sum of
//! bound violations of the basic variables instead of adding artificials.
//!
//! Pricing is Dantzig's rule with a Harris ratio test. After a run of
//! degenerate pivots the solver falls back to the least-index rule for both
//! the entering and the leaving variable until the objective moves again,
//! which rules out cycling.

use log::debug;

use super::{LinearProgram, LpSolution, Relation, SolveStatus, SolverOptions};
use crate::error::{Error, Result};

const PRIMAL_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const DROP_TOL: f64 = 1e-14;
const DEGENERATE_STEP: f64 = 1e-12;
const BLAND_AFTER: usize = 50;
const REFRESH_EVERY: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
enum State {
    Basic(usize),
    AtLower,
    AtUpper,
    /// Nonbasic free variable held at zero.
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    One,
    Two,
}

enum Step {
    Optimal,
    Unbounded,
    Moved,
}

pub(crate) struct Tableau {
    m: usize,
    n: usize,
    cols: usize,
    t: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    x: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<State>,
    rhs: Vec<f64>,
    rows: Vec<Vec<(usize, f64)>>,
    row_scale: Vec<f64>,
    /// Reduced costs of the active phase.
    d: Vec<f64>,
    /// Active cost vector (phase-one costs are derived from infeasibility).
    active_cost: Vec<f64>,
    pivots: usize,
    bland: bool,
    degenerate_run: usize,
}

/// Solves the LP relaxation of `lp` (binary flags are ignored).
pub fn solve_lp(lp: &LinearProgram, opts: &SolverOptions) -> Result<LpSolution> {
    lp.validate()?;
    opts.validate()?;
    let bounds: Vec<(f64, f64)> = lp.vars.iter().map(|v| (v.lower, v.upper)).collect();
    solve_with_bounds(lp, &bounds, opts)
}

pub(crate) fn solve_with_bounds(lp: &LinearProgram, bounds: &[(f64, f64)], opts: &SolverOptions) -> Result<LpSolution> {
    if bounds.iter().any(|(l, u)| l > u) {
        return Ok(LpSolution::without_point(SolveStatus::Infeasible, 0));
    }
    let mut tab = Tableau::new(lp, bounds);
    let status = tab.run()?;
    debug!(
        "simplex: {} rows, {} columns, {} pivots, {:?}",
        tab.m, tab.n, tab.pivots, status
    );
    if status != SolveStatus::Optimal {
        return Ok(LpSolution::without_point(status, 0));
    }
    let x: Vec<f64> = (0..tab.n)
        .map(|j| tab.x[j].clamp(bounds[j].0, bounds[j].1))
        .collect();
    let viol = lp.max_violation(&x);
    if viol > opts.feasibility_tol {
        log::warn!("simplex solution violates a constraint by {viol:.3e}");
    }
    Ok(LpSolution {
        status,
        objective: lp.objective(&x),
        x,
        nodes_explored: 0,
    })
}

impl Tableau {
    fn new(lp: &LinearProgram, bounds: &[(f64, f64)]) -> Self {
        let m = lp.num_constraints();
        let n = lp.num_vars();
        let cols = n + m;
        let mut t = vec![0.0; m * cols];
        let mut lower = Vec::with_capacity(cols);
        let mut upper = Vec::with_capacity(cols);
        let mut cost = Vec::with_capacity(cols);
        let mut x = Vec::with_capacity(cols);
        let mut state = Vec::with_capacity(cols);
        for (j, v) in lp.vars.iter().enumerate() {
            let (l, u) = bounds[j];
            lower.push(l);
            upper.push(u);
            cost.push(v.cost);
            if l.is_finite() {
                x.push(l);
                state.push(State::AtLower);
            } else if u.is_finite() {
                x.push(u);
                state.push(State::AtUpper);
            } else {
                x.push(0.0);
                state.push(State::Free);
            }
        }
        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut row_scale = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        for (i, c) in lp.constraints.iter().enumerate() {
            // merge duplicate terms
            let mut terms: Vec<(usize, f64)> = Vec::with_capacity(c.terms.len());
            for &(j, a) in &c.terms {
                match terms.iter_mut().find(|(k, _)| *k == j) {
                    Some(e) => e.1 += a,
                    None => terms.push((j, a)),
                }
            }
            terms.retain(|&(_, a)| a != 0.0);
            let big = terms.iter().fold(0.0f64, |acc, &(_, a)| acc.max(a.abs()));
            let scale = if big > 0.0 { 1.0 / big } else { 1.0 };
            let terms: Vec<(usize, f64)> = terms.into_iter().map(|(j, a)| (j, a * scale)).collect();
            let row = &mut t[i * cols..(i + 1) * cols];
            for &(j, a) in &terms {
                row[j] = a;
            }
            row[n + i] = 1.0;
            let b = c.rhs * scale;
            let (sl, su) = match c.relation {
                Relation::Le => (0.0, f64::INFINITY),
                Relation::Ge => (f64::NEG_INFINITY, 0.0),
                Relation::Eq => (0.0, 0.0),
            };
            lower.push(sl);
            upper.push(su);
            cost.push(0.0);
            let activity: f64 = terms.iter().map(|&(j, a)| a * x[j]).sum();
            x.push(b - activity);
            state.push(State::Basic(i));
            basis.push(n + i);
            rows.push(terms);
            rhs.push(b);
            row_scale.push(scale);
        }
        Self {
            m,
            n,
            cols,
            t,
            lower,
            upper,
            cost,
            x,
            basis,
            state,
            rhs,
            rows,
            row_scale,
            d: vec![0.0; cols],
            active_cost: vec![0.0; cols],
            pivots: 0,
            bland: false,
            degenerate_run: 0,
        }
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        &self.t[i * self.cols..(i + 1) * self.cols]
    }

    fn infeasibility(&self, k: usize) -> f64 {
        let v = self.x[k];
        if v < self.lower[k] - PRIMAL_TOL {
            -1.0
        } else if v > self.upper[k] + PRIMAL_TOL {
            1.0
        } else {
            0.0
        }
    }

    fn is_primal_feasible(&self) -> bool {
        self.basis.iter().all(|&k| self.infeasibility(k) == 0.0)
    }

    fn phase_cost(&self, phase: Phase, k: usize) -> f64 {
        match phase {
            Phase::Two => self.cost[k],
            Phase::One => match self.state[k] {
                State::Basic(_) => self.infeasibility(k),
                _ => 0.0,
            },
        }
    }

    /// Recomputes `d = c − c_B·T` for the active phase from scratch.
    fn recompute_reduced_costs(&mut self, phase: Phase) {
        for k in 0..self.cols {
            self.active_cost[k] = self.phase_cost(phase, k);
        }
        self.d.copy_from_slice(&self.active_cost);
        for i in 0..self.m {
            let cb = self.active_cost[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.t[i * self.cols..(i + 1) * self.cols];
            for (dj, &a) in self.d.iter_mut().zip(row) {
                if a != 0.0 {
                    *dj -= cb * a;
                }
            }
        }
        for &k in &self.basis {
            self.d[k] = 0.0;
        }
    }

    /// Applies phase-one cost changes of basic variables after a step.
    fn update_phase_one_costs(&mut self) {
        for i in 0..self.m {
            let k = self.basis[i];
            let c = self.infeasibility(k);
            let delta = c - self.active_cost[k];
            if delta != 0.0 {
                self.active_cost[k] = c;
                let row = &self.t[i * self.cols..(i + 1) * self.cols];
                for (dj, &a) in self.d.iter_mut().zip(row) {
                    if a != 0.0 {
                        *dj -= delta * a;
                    }
                }
                self.d[k] = 0.0;
            }
        }
    }

    /// Recomputes basic values as `B⁻¹(b − N·x_N)`, reading `B⁻¹` off the
    /// slack columns.
    fn refresh_basic_values(&mut self) {
        let mut v = self.rhs.clone();
        for (i, terms) in self.rows.iter().enumerate() {
            for &(j, a) in terms {
                if !matches!(self.state[j], State::Basic(_)) {
                    v[i] -= a * self.x[j];
                }
            }
            let s = self.n + i;
            if !matches!(self.state[s], State::Basic(_)) {
                v[i] -= self.x[s];
            }
        }
        for i in 0..self.m {
            let row = self.row(i);
            let binv = &row[self.n..];
            let val: f64 = binv
                .iter()
                .zip(&v)
                .filter(|(b, _)| **b != 0.0)
                .map(|(b, vk)| b * vk)
                .sum();
            let k = self.basis[i];
            self.x[k] = val;
        }
    }

    fn run(&mut self) -> Result<SolveStatus> {
        let max_pivots = 50 * (self.m + self.n) + 1000;
        for _attempt in 0..4 {
            if !self.is_primal_feasible() {
                self.recompute_reduced_costs(Phase::One);
                let mut since_refresh = 0;
                loop {
                    if self.is_primal_feasible() {
                        break;
                    }
                    match self.step(Phase::One)? {
                        Step::Optimal => {
                            // No improving direction while still infeasible.
                            self.refresh_basic_values();
                            if self.is_primal_feasible() {
                                break;
                            }
                            return Ok(SolveStatus::Infeasible);
                        }
                        Step::Unbounded => {
                            return Err(Error::Internal("phase one cannot be unbounded".into()));
                        }
                        Step::Moved => {}
                    }
                    self.update_phase_one_costs();
                    since_refresh += 1;
                    if since_refresh >= REFRESH_EVERY {
                        since_refresh = 0;
                        self.refresh_basic_values();
                        self.recompute_reduced_costs(Phase::One);
                    }
                    if self.pivots > max_pivots {
                        return Err(Error::Internal("simplex iteration limit reached".into()));
                    }
                }
            }
            self.bland = false;
            self.degenerate_run = 0;
            self.recompute_reduced_costs(Phase::Two);
            let mut since_refresh = 0;
            loop {
                match self.step(Phase::Two)? {
                    Step::Optimal => break,
                    Step::Unbounded => return Ok(SolveStatus::Unbounded),
                    Step::Moved => {}
                }
                since_refresh += 1;
                if since_refresh >= REFRESH_EVERY {
                    since_refresh = 0;
                    self.refresh_basic_values();
                    self.recompute_reduced_costs(Phase::Two);
                    if !self.is_primal_feasible() {
                        break;
                    }
                }
                if self.pivots > max_pivots {
                    return Err(Error::Internal("simplex iteration limit reached".into()));
                }
            }
            self.refresh_basic_values();
            if self.is_primal_feasible() {
                // Confirm optimality on fresh reduced costs.
                self.recompute_reduced_costs(Phase::Two);
                if self.choose_entering().is_none() {
                    return Ok(SolveStatus::Optimal);
                }
            }
        }
        Err(Error::Internal("simplex failed to converge numerically".into()))
    }

    /// Picks an entering column and direction (+1 increase, −1 decrease).
    fn choose_entering(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.cols {
            let dir = match self.state[j] {
                State::Basic(_) => continue,
                State::AtLower => {
                    if self.d[j] < -DUAL_TOL && self.upper[j] > self.lower[j] {
                        1.0
                    } else {
                        continue;
                    }
                }
                State::AtUpper => {
                    if self.d[j] > DUAL_TOL && self.upper[j] > self.lower[j] {
                        -1.0
                    } else {
                        continue;
                    }
                }
                State::Free => {
                    if self.d[j] < -DUAL_TOL {
                        1.0
                    } else if self.d[j] > DUAL_TOL {
                        -1.0
                    } else {
                        continue;
                    }
                }
            };
            if self.bland {
                return Some((j, dir));
            }
            let score = self.d[j].abs();
            if score > best_score {
                best_score = score;
                best = Some((j, dir));
            }
        }
        best
    }

    /// Step limit imposed by basic row `i` when it moves at rate `-alpha`,
    /// with the bound it would leave at. `slack` relaxes the bound (Harris).
    fn row_limit(&self, phase: Phase, i: usize, alpha: f64, slack: f64) -> Option<(f64, bool)> {
        let k = self.basis[i];
        let (v, l, u) = (self.x[k], self.lower[k], self.upper[k]);
        let below = v < l - PRIMAL_TOL;
        let above = v > u + PRIMAL_TOL;
        if alpha > 0.0 {
            // decreasing
            if phase == Phase::One && below {
                return None;
            }
            if phase == Phase::One && above {
                return Some((((v - u) + slack) / alpha, true));
            }
            if l.is_finite() {
                Some((((v - l).max(0.0) + slack) / alpha, false))
            } else {
                None
            }
        } else {
            // increasing
            if phase == Phase::One && above {
                return None;
            }
            if phase == Phase::One && below {
                return Some((((l - v) + slack) / -alpha, false));
            }
            if u.is_finite() {
                Some((((u - v).max(0.0) + slack) / -alpha, true))
            } else {
                None
            }
        }
    }

    fn step(&mut self, phase: Phase) -> Result<Step> {
        let Some((q, dir)) = self.choose_entering() else {
            return Ok(Step::Optimal);
        };
        let cols = self.cols;
        let column: Vec<(usize, f64)> = (0..self.m)
            .filter_map(|i| {
                let a = self.t[i * cols + q];
                (a.abs() > PIVOT_TOL).then_some((i, a * dir))
            })
            .collect();

        let flip = self.upper[q] - self.lower[q];

        // Ratio test.
        let mut leave: Option<(usize, bool)> = None;
        let mut step = f64::INFINITY;
        if self.bland {
            let mut best_var = usize::MAX;
            for &(i, alpha) in &column {
                if let Some((r, at_upper)) = self.row_limit(phase, i, alpha, 0.0) {
                    let r = r.max(0.0);
                    let k = self.basis[i];
                    if r < step - 1e-12 || (r <= step + 1e-12 && k < best_var) {
                        step = r;
                        best_var = k;
                        leave = Some((i, at_upper));
                    }
                }
            }
        } else {
            let mut relaxed = f64::INFINITY;
            for &(i, alpha) in &column {
                if let Some((r, _)) = self.row_limit(phase, i, alpha, PRIMAL_TOL) {
                    relaxed = relaxed.min(r);
                }
            }
            if relaxed.is_finite() {
                let mut best_pivot = 0.0;
                for &(i, alpha) in &column {
                    if let Some((r, at_upper)) = self.row_limit(phase, i, alpha, 0.0) {
                        if r <= relaxed && alpha.abs() > best_pivot {
                            best_pivot = alpha.abs();
                            step = r.max(0.0);
                            leave = Some((i, at_upper));
                        }
                    }
                }
            }
        }

        if flip.is_finite() && flip <= step {
            // Bound flip: the entering variable crosses to its other bound.
            for &(i, alpha) in &column {
                let k = self.basis[i];
                self.x[k] -= alpha * flip;
            }
            self.x[q] = if dir > 0.0 { self.upper[q] } else { self.lower[q] };
            self.state[q] = if dir > 0.0 { State::AtUpper } else { State::AtLower };
            self.note_progress(flip);
            return Ok(Step::Moved);
        }

        let Some((r, at_upper)) = leave else {
            return Ok(Step::Unbounded);
        };

        for &(i, alpha) in &column {
            let k = self.basis[i];
            self.x[k] -= alpha * step;
        }
        self.x[q] += dir * step;
        let leaving = self.basis[r];
        self.x[leaving] = if at_upper { self.upper[leaving] } else { self.lower[leaving] };
        self.state[leaving] = if at_upper { State::AtUpper } else { State::AtLower };
        self.basis[r] = q;
        self.state[q] = State::Basic(r);
        self.pivot(r, q, &column, dir);
        self.pivots += 1;
        self.note_progress(step);
        Ok(Step::Moved)
    }

    fn note_progress(&mut self, step: f64) {
        if step <= DEGENERATE_STEP {
            self.degenerate_run += 1;
            if self.degenerate_run >= BLAND_AFTER {
                self.bland = true;
            }
        } else {
            self.degenerate_run = 0;
            self.bland = false;
        }
    }

    /// Gauss-Jordan pivot on `(r, q)`; `column` holds the nonzeros of column
    /// `q` multiplied by `dir`.
    fn pivot(&mut self, r: usize, q: usize, column: &[(usize, f64)], dir: f64) {
        let cols = self.cols;
        let piv = self.t[r * cols + q];
        let inv = 1.0 / piv;
        let mut nz: Vec<usize> = Vec::new();
        {
            let row = &mut self.t[r * cols..(r + 1) * cols];
            for (j, a) in row.iter_mut().enumerate() {
                if *a != 0.0 {
                    *a *= inv;
                    if a.abs() < DROP_TOL {
                        *a = 0.0;
                    } else {
                        nz.push(j);
                    }
                }
            }
            row[q] = 1.0;
        }
        let pivot_row: Vec<f64> = nz.iter().map(|&j| self.t[r * cols + j]).collect();
        for &(i, alpha) in column {
            if i == r {
                continue;
            }
            let f = alpha * dir;
            let row = &mut self.t[i * cols..(i + 1) * cols];
            for (&j, &p) in nz.iter().zip(&pivot_row) {
                let v = row[j] - f * p;
                row[j] = if v.abs() < DROP_TOL { 0.0 } else { v };
            }
            row[q] = 0.0;
        }
        let dq = self.d[q];
        if dq != 0.0 {
            for (&j, &p) in nz.iter().zip(&pivot_row) {
                self.d[j] -= dq * p;
            }
        }
        self.d[q] = 0.0;
    }

    #[allow(dead_code)]
    pub(crate) fn row_scale(&self) -> &[f64] {
        &self.row_scale
    }
}
