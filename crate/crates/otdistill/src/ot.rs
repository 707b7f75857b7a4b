//! Exact discrete optimal transport on the bipartite transportation graph.
//!
//! The solver is a transportation-tableau network simplex: northwest-corner
//! start, Bland's rule for entering arcs (anti-cycling), spanning-tree duals.
//! It returns a vertex plan together with dual potentials that satisfy
//! feasibility, complementary slackness, and a zero duality gap up to
//! rounding.

use crate::domain::{CostMatrix, DiscreteDistribution};
use crate::{Error, Result};
use ndarray::{Array1, Array2};

/// Marginal mass mismatch tolerated between source and target.
const MARGINAL_TOL: f64 = 1e-6;

/// Optimal plan, dual potentials, and objective for one transport problem.
#[derive(Debug, Clone)]
pub struct TransportSolution {
    /// Optimal plan; `plan[[i, j]]` is mass moved from source i to target j.
    pub plan: Array2<f64>,
    /// Dual potentials of the source marginal constraints (mean-centered).
    pub source_potentials: Array1<f64>,
    /// Dual potentials of the target marginal constraints; the subgradient of
    /// the transport cost with respect to the target weights.
    pub target_potentials: Array1<f64>,
    /// Optimal value of ⟨C, T⟩.
    pub objective: f64,
}

impl TransportSolution {
    /// Dual objective Σ aᵢαᵢ + Σ wⱼβⱼ for the given marginals.
    pub fn dual_objective(&self, source_weights: &Array1<f64>, target_weights: &Array1<f64>) -> f64 {
        let s: f64 = self
            .source_potentials
            .iter()
            .zip(source_weights)
            .map(|(&a, &w)| a * w)
            .sum();
        let t: f64 = self
            .target_potentials
            .iter()
            .zip(target_weights)
            .map(|(&b, &w)| b * w)
            .sum();
        s + t
    }
}

/// Pairwise p-th-power Euclidean costs between two supports.
pub fn build_cost_matrix(
    source: &DiscreteDistribution,
    target: &DiscreteDistribution,
    p: f64,
) -> Result<CostMatrix> {
    if source.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            context: "cost matrix supports",
            left: source.dim(),
            right: target.dim(),
        });
    }
    if !p.is_finite() || p < 1.0 {
        return Err(Error::InvalidExponent(p));
    }
    let n = source.len();
    let m = target.len();
    let mut entries = Array2::zeros((n, m));
    for (i, x) in source.points().rows().into_iter().enumerate() {
        for (j, y) in target.points().rows().into_iter().enumerate() {
            let mut sq = 0.0;
            for (&a, &b) in x.iter().zip(y.iter()) {
                let diff = a - b;
                sq += diff * diff;
            }
            entries[[i, j]] = if p == 2.0 {
                sq
            } else if p == 1.0 {
                sq.sqrt()
            } else {
                sq.sqrt().powf(p)
            };
        }
    }
    Ok(CostMatrix { entries, exponent: p })
}

/// Transportation tableau over the positive-weight sub-problem.
struct Tableau<'a> {
    n: usize,
    m: usize,
    cost: &'a Array2<f64>,
    basis: Vec<(usize, usize)>,
    flow: Vec<f64>,
    in_basis: Vec<bool>,
    /// node -> incident basis slots; nodes 0..n are rows, n..n+m are columns.
    adj: Vec<Vec<usize>>,
}

impl<'a> Tableau<'a> {
    fn new(a: &[f64], b: &[f64], cost: &'a Array2<f64>) -> Self {
        let n = a.len();
        let m = b.len();
        let mut basis = Vec::with_capacity(n + m - 1);
        let mut flow = Vec::with_capacity(n + m - 1);
        let mut ra = a.to_vec();
        let mut rb = b.to_vec();
        let (mut i, mut j) = (0, 0);
        // Northwest-corner start; always yields n+m-1 basic cells.
        loop {
            let f = ra[i].min(rb[j]).max(0.0);
            basis.push((i, j));
            flow.push(f);
            ra[i] -= f;
            rb[j] -= f;
            if i == n - 1 && j == m - 1 {
                break;
            }
            if i == n - 1 {
                j += 1;
            } else if j == m - 1 {
                i += 1;
            } else if ra[i] <= rb[j] {
                i += 1;
            } else {
                j += 1;
            }
        }
        let mut in_basis = vec![false; n * m];
        let mut adj = vec![Vec::new(); n + m];
        for (slot, &(i, j)) in basis.iter().enumerate() {
            in_basis[i * m + j] = true;
            adj[i].push(slot);
            adj[n + j].push(slot);
        }
        Tableau {
            n,
            m,
            cost,
            basis,
            flow,
            in_basis,
            adj,
        }
    }

    /// Solve αᵢ + βⱼ = cᵢⱼ on the spanning tree, rooted at row 0 with α₀ = 0.
    fn duals(&self) -> (Vec<f64>, Vec<f64>) {
        let mut alpha = vec![0.0; self.n];
        let mut beta = vec![0.0; self.m];
        let mut visited = vec![false; self.n + self.m];
        let mut stack = vec![0usize];
        visited[0] = true;
        while let Some(u) = stack.pop() {
            for &slot in &self.adj[u] {
                let (i, j) = self.basis[slot];
                let v = if u == i { self.n + j } else { i };
                if !visited[v] {
                    if v >= self.n {
                        beta[j] = self.cost[[i, j]] - alpha[i];
                    } else {
                        alpha[i] = self.cost[[i, j]] - beta[j];
                    }
                    visited[v] = true;
                    stack.push(v);
                }
            }
        }
        debug_assert!(visited.iter().all(|&v| v), "basis tree must span all nodes");
        (alpha, beta)
    }

    /// Bland's rule: first cell in row-major order with reduced cost < -tol.
    fn entering(&self, alpha: &[f64], beta: &[f64], tol: f64) -> Option<(usize, usize)> {
        for i in 0..self.n {
            for j in 0..self.m {
                if !self.in_basis[i * self.m + j]
                    && self.cost[[i, j]] - alpha[i] - beta[j] < -tol
                {
                    return Some((i, j));
                }
            }
        }
        None
    }

    /// Tree path from the entering cell's row node to its column node.
    /// Returns basis slots ordered from the column end back to the row end,
    /// which alternate -θ, +θ, -θ, … around the pivot cycle.
    fn cycle_path(&self, enter: (usize, usize)) -> Vec<usize> {
        let start = enter.0;
        let goal = self.n + enter.1;
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; self.n + self.m];
        let mut visited = vec![false; self.n + self.m];
        visited[start] = true;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            if u == goal {
                break;
            }
            for &slot in &self.adj[u] {
                let (i, j) = self.basis[slot];
                let v = if u == i { self.n + j } else { i };
                if !visited[v] {
                    visited[v] = true;
                    parent[v] = Some((u, slot));
                    queue.push_back(v);
                }
            }
        }
        let mut path = Vec::new();
        let mut node = goal;
        while node != start {
            let (prev, slot) = parent[node].expect("tree connects all nodes");
            path.push(slot);
            node = prev;
        }
        path
    }

    fn pivot(&mut self, enter: (usize, usize)) {
        let path = self.cycle_path(enter);
        // Even positions (from the column end) lose θ.
        let mut theta = f64::INFINITY;
        let mut leave: Option<usize> = None;
        for (pos, &slot) in path.iter().enumerate() {
            if pos % 2 == 0 {
                let f = self.flow[slot];
                let better = match leave {
                    None => true,
                    Some(cur) => {
                        f < theta || (f == theta && self.basis[slot] < self.basis[cur])
                    }
                };
                if better {
                    theta = f;
                    leave = Some(slot);
                }
            }
        }
        let leave = leave.expect("pivot cycle has at least one leaving arc");
        for (pos, &slot) in path.iter().enumerate() {
            if pos % 2 == 0 {
                self.flow[slot] -= theta;
            } else {
                self.flow[slot] += theta;
            }
        }
        // Replace the leaving arc with the entering arc in the same slot.
        let (li, lj) = self.basis[leave];
        self.in_basis[li * self.m + lj] = false;
        self.adj[li].retain(|&s| s != leave);
        self.adj[self.n + lj].retain(|&s| s != leave);
        self.basis[leave] = enter;
        self.flow[leave] = theta;
        self.in_basis[enter.0 * self.m + enter.1] = true;
        self.adj[enter.0].push(leave);
        self.adj[self.n + enter.1].push(leave);
    }
}

/// Flows below this are treated as arithmetic residue when building the
/// support graph. Anything above the complementary-slackness threshold
/// (1e-10) must stay inside one component, so this sits well below it while
/// staying above accumulated pivot rounding.
const SUPPORT_FLOW_TOL: f64 = 1e-12;

/// Connected components of the positive-flow support graph.
/// Returns (component id per node, component count).
fn support_components(tab: &Tableau<'_>) -> (Vec<usize>, usize) {
    let total = tab.n + tab.m;
    let mut comp = vec![usize::MAX; total];
    let mut count = 0;
    for start in 0..total {
        if comp[start] != usize::MAX {
            continue;
        }
        comp[start] = count;
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for &slot in &tab.adj[u] {
                if tab.flow[slot] <= SUPPORT_FLOW_TOL {
                    continue;
                }
                let (i, j) = tab.basis[slot];
                let v = if u == i { tab.n + j } else { i };
                if comp[v] == usize::MAX {
                    comp[v] = count;
                    stack.push(v);
                }
            }
        }
        count += 1;
    }
    (comp, count)
}

/// Exact optimal transport between two validated distributions.
///
/// The returned duals are canonical: degenerate optima leave the duals free
/// up to a constant per support component, and that freedom is resolved by
/// centering the weighted mean of β inside each component (checked against
/// dual feasibility, falling back to the raw tree duals if violated). The
/// α side is then mean-centered globally. Target atoms with zero weight keep
/// their column and receive βⱼ = minᵢ (cᵢⱼ − αᵢ).
pub fn solve_exact(
    source: &DiscreteDistribution,
    target: &DiscreteDistribution,
    cost: &CostMatrix,
) -> Result<TransportSolution> {
    let n = source.len();
    let m = target.len();
    if cost.entries.nrows() != n || cost.entries.ncols() != m {
        return Err(Error::ShapeMismatch(format!(
            "cost is {}x{} but marginals are {}x{}",
            cost.entries.nrows(),
            cost.entries.ncols(),
            n,
            m
        )));
    }
    let a_full: Vec<f64> = source.weights().to_vec();
    let b_full: Vec<f64> = target.weights().to_vec();
    let sa: f64 = a_full.iter().sum();
    let sb: f64 = b_full.iter().sum();
    if (sa - sb).abs() > MARGINAL_TOL {
        return Err(Error::InfeasibleMarginals {
            source_mass: sa,
            target_mass: sb,
        });
    }

    // Solve on the positive-weight restriction; zero-weight rows/columns are
    // re-attached afterwards (the barycenter weight update can park atoms on
    // the simplex boundary).
    let rows: Vec<usize> = (0..n).filter(|&i| a_full[i] > 0.0).collect();
    let cols: Vec<usize> = (0..m).filter(|&j| b_full[j] > 0.0).collect();
    let a: Vec<f64> = rows.iter().map(|&i| a_full[i]).collect();
    let b: Vec<f64> = cols.iter().map(|&j| b_full[j]).collect();
    let sub_cost = Array2::from_shape_fn((rows.len(), cols.len()), |(ri, cj)| {
        cost.entries[[rows[ri], cols[cj]]]
    });

    let scale = 1.0 + sub_cost.iter().fold(0.0f64, |acc, &c| acc.max(c.abs()));
    let tol = 1e-11 * scale;
    let mut tab = Tableau::new(&a, &b, &sub_cost);
    let pivot_cap = 50 * rows.len() * cols.len() + 100;
    let mut pivots = 0;
    let (mut alpha, mut beta) = tab.duals();
    while let Some(enter) = tab.entering(&alpha, &beta, tol) {
        tab.pivot(enter);
        pivots += 1;
        if pivots > pivot_cap {
            return Err(Error::NumericalFailure("pivot limit exceeded"));
        }
        let d = tab.duals();
        alpha = d.0;
        beta = d.1;
    }

    // Canonicalize duals across support components: the dual objective does
    // not depend on the per-component constants, so center β within each
    // component. Adopt only if the recentered duals stay feasible.
    let (comp, comp_count) = support_components(&tab);
    if comp_count > 1 {
        let mut beta_mass = vec![0.0; comp_count];
        let mut mass = vec![0.0; comp_count];
        for (cj, &bw) in b.iter().enumerate() {
            let u = comp[tab.n + cj];
            beta_mass[u] += bw * beta[cj];
            mass[u] += bw;
        }
        let shift: Vec<f64> = beta_mass
            .iter()
            .zip(&mass)
            .map(|(&s, &w)| if w > 0.0 { s / w } else { 0.0 })
            .collect();
        let cand_alpha: Vec<f64> = alpha
            .iter()
            .enumerate()
            .map(|(ri, &v)| v + shift[comp[ri]])
            .collect();
        let cand_beta: Vec<f64> = beta
            .iter()
            .enumerate()
            .map(|(cj, &v)| v - shift[comp[tab.n + cj]])
            .collect();
        let feas_tol = 1e-9 * scale;
        let feasible = (0..rows.len()).all(|ri| {
            (0..cols.len()).all(|cj| cand_alpha[ri] + cand_beta[cj] <= sub_cost[[ri, cj]] + feas_tol)
        });
        if feasible {
            alpha = cand_alpha;
            beta = cand_beta;
        }
    }

    // Scatter plan and duals back to the full index sets.
    let mut plan = Array2::zeros((n, m));
    let mut objective = 0.0;
    for (slot, &(ri, cj)) in tab.basis.iter().enumerate() {
        let f = tab.flow[slot];
        if f != 0.0 {
            plan[[rows[ri], cols[cj]]] = f;
        }
        objective += f * sub_cost[[ri, cj]];
    }
    let mut alpha_full = vec![0.0; n];
    let mut beta_full = vec![0.0; m];
    for (ri, &i) in rows.iter().enumerate() {
        alpha_full[i] = alpha[ri];
    }
    for (cj, &j) in cols.iter().enumerate() {
        beta_full[j] = beta[cj];
    }
    // Zero-weight rows: tightest feasible α against the solved columns.
    for i in 0..n {
        if a_full[i] > 0.0 {
            continue;
        }
        alpha_full[i] = cols
            .iter()
            .map(|&j| cost.entries[[i, j]] - beta_full[j])
            .fold(f64::INFINITY, f64::min);
    }
    // Zero-weight columns: βⱼ = minᵢ (cᵢⱼ − αᵢ) over all rows.
    for j in 0..m {
        if b_full[j] > 0.0 {
            continue;
        }
        beta_full[j] = (0..n)
            .map(|i| cost.entries[[i, j]] - alpha_full[i])
            .fold(f64::INFINITY, f64::min);
    }
    // Duals are unique only up to a constant; fix it by mean-centering α.
    let mean_alpha = alpha_full.iter().sum::<f64>() / n as f64;
    for v in &mut alpha_full {
        *v -= mean_alpha;
    }
    for v in &mut beta_full {
        *v += mean_alpha;
    }

    Ok(TransportSolution {
        plan,
        source_potentials: Array1::from_vec(alpha_full),
        target_potentials: Array1::from_vec(beta_full),
        objective,
    })
}

/// p-Wasserstein distance between two distributions of equal dimension.
pub fn wasserstein_distance(
    source: &DiscreteDistribution,
    target: &DiscreteDistribution,
    p: f64,
) -> Result<f64> {
    let cost = build_cost_matrix(source, target, p)?;
    let solution = solve_exact(source, target, &cost)?;
    Ok(solution.objective.max(0.0).powf(1.0 / p))
}

/// Test oracle: minimum cost over all n! permutation couplings.
///
/// Requires equal-size supports with uniform weights and n ≤ 8.
pub fn brute_force_assignment(
    source: &DiscreteDistribution,
    target: &DiscreteDistribution,
    cost: &CostMatrix,
) -> Result<f64> {
    let n = source.len();
    if target.len() != n {
        return Err(Error::DimensionMismatch {
            context: "brute force needs n = m",
            left: n,
            right: target.len(),
        });
    }
    if n > 8 {
        return Err(Error::TooLarge(n));
    }
    let uniform = 1.0 / n as f64;
    let is_uniform = |w: ndarray::ArrayView1<'_, f64>| w.iter().all(|&x| (x - uniform).abs() <= 1e-9);
    if !is_uniform(source.weights()) {
        return Err(Error::NonUniformWeights("source"));
    }
    if !is_uniform(target.weights()) {
        return Err(Error::NonUniformWeights("target"));
    }
    if cost.entries.nrows() != n || cost.entries.ncols() != n {
        return Err(Error::ShapeMismatch(format!(
            "cost is {}x{}, expected {}x{}",
            cost.entries.nrows(),
            cost.entries.ncols(),
            n,
            n
        )));
    }

    // Heap's algorithm over all permutations.
    let mut perm: Vec<usize> = (0..n).collect();
    let mut counters = vec![0usize; n];
    let assignment_cost = |perm: &[usize]| -> f64 {
        perm.iter()
            .enumerate()
            .map(|(i, &j)| cost.entries[[i, j]])
            .sum::<f64>()
            * uniform
    };
    let mut best = assignment_cost(&perm);
    let mut k = 0;
    while k < n {
        if counters[k] < k {
            if k % 2 == 0 {
                perm.swap(0, k);
            } else {
                perm.swap(counters[k], k);
            }
            best = best.min(assignment_cost(&perm));
            counters[k] += 1;
            k = 0;
        } else {
            counters[k] = 0;
            k += 1;
        }
    }
    Ok(best)
}
