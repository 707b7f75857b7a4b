//! Free-support Wasserstein barycenters by alternating weight and position
//! optimization, closed-form fixed-grid KL/MMD barycenters, and kernel
//! rendering of weighted atoms onto a grid.

use crate::domain::{project_to_simplex, DiscreteDistribution, Seed};
use crate::ot::{build_cost_matrix, solve_exact, TransportSolution};
use crate::{Error, Result};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Atom initialization strategy for the free-support barycenter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitStrategy {
    /// m support points drawn without replacement from the source (seeded).
    Subsample,
    /// k-means++ style seeding: greedy spread, distance-squared sampling.
    KmeansSeed,
    /// Gaussian noise matched to the source mean and per-coordinate spread.
    RandomGaussian,
}

impl InitStrategy {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "subsample" => Ok(InitStrategy::Subsample),
            "kmeans_seed" | "kmeans-seed" => Ok(InitStrategy::KmeansSeed),
            "random_gaussian" | "random-gaussian" => Ok(InitStrategy::RandomGaussian),
            other => Err(Error::BadFlag(format!(
                "unknown init strategy `{other}` (expected subsample|kmeans_seed|random_gaussian)"
            ))),
        }
    }
}

/// Configuration of one free-support barycenter run.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct BarycenterConfig {
    /// Atom count m.
    pub m: usize,
    /// Outer iterations K.
    pub k: usize,
    /// Base step size; iteration k uses eta / sqrt(k).
    pub eta: f64,
    /// Atoms with weight below this floor skip the Newton position update.
    pub weight_floor: f64,
    /// Transport exponent; the Newton step is p = 2 specific.
    pub p: f64,
    pub init: InitStrategy,
    /// Reuse one transport solve per iteration for both sub-steps instead of
    /// re-solving between the weight and position updates.
    pub single_solve: bool,
}

impl Default for BarycenterConfig {
    fn default() -> Self {
        BarycenterConfig {
            m: 10,
            k: 10,
            eta: 0.05,
            weight_floor: 1e-8,
            p: 2.0,
            init: InitStrategy::Subsample,
            single_solve: false,
        }
    }
}

impl BarycenterConfig {
    fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(Error::InvalidConfig("m must be >= 1".into()));
        }
        if self.k < 1 {
            return Err(Error::InvalidConfig("k must be >= 1".into()));
        }
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return Err(Error::InvalidConfig("eta must be > 0".into()));
        }
        if !(self.weight_floor.is_finite() && self.weight_floor >= 0.0) {
            return Err(Error::InvalidConfig("weight_floor must be >= 0".into()));
        }
        if self.p != 2.0 {
            return Err(Error::InvalidExponent(self.p));
        }
        Ok(())
    }
}

/// Output of one free-support barycenter run.
#[derive(Debug, Clone, PartialEq)]
pub struct BarycenterResult {
    /// Atom positions, one row per atom.
    pub atoms: Array2<f64>,
    /// Atom weights on the simplex.
    pub weights: Array1<f64>,
    /// W₂² against the source after each outer iteration.
    pub objective_trace: Vec<f64>,
    pub iterations_run: usize,
}

/// Projected subgradient step on the atom weights.
pub fn update_weights(
    current: &ArrayView1<'_, f64>,
    dual_betas: &ArrayView1<'_, f64>,
    eta: f64,
) -> Result<Array1<f64>> {
    if current.len() != dual_betas.len() {
        return Err(Error::DimensionMismatch {
            context: "weights vs duals",
            left: current.len(),
            right: dual_betas.len(),
        });
    }
    if !eta.is_finite() || current.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteInput("update_weights"));
    }
    if dual_betas.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteInput("update_weights dual betas"));
    }
    let stepped: Vec<f64> = current
        .iter()
        .zip(dual_betas.iter())
        .map(|(&w, &b)| w - eta * b)
        .collect();
    Ok(Array1::from_vec(project_to_simplex(&stepped)?))
}

/// Newton position update: each atom with enough mass moves to the weighted
/// mean of the source mass its plan column assigns to it. The step is exact
/// because the fixed-plan objective is quadratic with Hessian 2wⱼI.
pub fn update_positions(
    atoms: &ArrayView2<'_, f64>,
    solution: &TransportSolution,
    source: &DiscreteDistribution,
    weights: &ArrayView1<'_, f64>,
    weight_floor: f64,
) -> Result<Array2<f64>> {
    let m = atoms.nrows();
    let n = source.len();
    if solution.plan.nrows() != n || solution.plan.ncols() != m {
        return Err(Error::ShapeMismatch(format!(
            "plan is {}x{}, expected {}x{}",
            solution.plan.nrows(),
            solution.plan.ncols(),
            n,
            m
        )));
    }
    if weights.len() != m {
        return Err(Error::DimensionMismatch {
            context: "weights vs atoms",
            left: weights.len(),
            right: m,
        });
    }
    for j in 0..m {
        let column_sum: f64 = (0..n).map(|i| solution.plan[[i, j]]).sum();
        if (column_sum - weights[j]).abs() > 1e-8 {
            return Err(Error::PlanMismatch {
                index: j,
                column_sum,
                weight: weights[j],
            });
        }
    }

    let mut updated = atoms.to_owned();
    for j in 0..m {
        if weights[j] < weight_floor || weights[j] <= 0.0 {
            continue;
        }
        let mut mean = Array1::zeros(source.dim());
        for (i, x) in source.points().rows().into_iter().enumerate() {
            let t = solution.plan[[i, j]];
            if t != 0.0 {
                mean.scaled_add(t, &x);
            }
        }
        mean /= weights[j];
        updated.row_mut(j).assign(&mean);
    }
    Ok(updated)
}

fn init_atoms(
    source: &DiscreteDistribution,
    m: usize,
    strategy: InitStrategy,
    seed: Seed,
) -> Array2<f64> {
    let n = source.len();
    let d = source.dim();
    let mut rng = seed.rng();
    let points = source.points();
    match strategy {
        InitStrategy::Subsample => {
            let mut indices: Vec<usize>;
            if m <= n {
                // Partial Fisher-Yates, then sorted for a stable atom order.
                let mut pool: Vec<usize> = (0..n).collect();
                for i in 0..m {
                    let j = rng.random_range(i..n);
                    pool.swap(i, j);
                }
                indices = pool[..m].to_vec();
                indices.sort_unstable();
            } else {
                log::warn!(
                    "barycenter: m = {m} exceeds source size {n}; sampling with replacement"
                );
                indices = (0..m).map(|_| rng.random_range(0..n)).collect();
            }
            let mut atoms = Array2::zeros((m, d));
            for (row, &i) in indices.iter().enumerate() {
                atoms.row_mut(row).assign(&points.row(i));
            }
            atoms
        }
        InitStrategy::KmeansSeed => {
            let weights = source.weights();
            let sample_index = |rng: &mut rand_chacha::ChaCha8Rng, probs: &[f64]| -> usize {
                let total: f64 = probs.iter().sum();
                let mut u = rng.random::<f64>() * total;
                for (i, &p) in probs.iter().enumerate() {
                    u -= p;
                    if u <= 0.0 {
                        return i;
                    }
                }
                probs.len() - 1
            };
            let mut chosen = vec![sample_index(&mut rng, &weights.to_vec())];
            let mut d2: Vec<f64> = (0..n)
                .map(|i| squared_distance(&points.row(i), &points.row(chosen[0])))
                .collect();
            while chosen.len() < m.min(n) {
                let probs: Vec<f64> = (0..n).map(|i| weights[i] * d2[i]).collect();
                let next = if probs.iter().sum::<f64>() > 0.0 {
                    sample_index(&mut rng, &probs)
                } else {
                    rng.random_range(0..n)
                };
                chosen.push(next);
                for i in 0..n {
                    d2[i] = d2[i].min(squared_distance(&points.row(i), &points.row(next)));
                }
            }
            while chosen.len() < m {
                chosen.push(rng.random_range(0..n));
            }
            let mut atoms = Array2::zeros((m, d));
            for (row, &i) in chosen.iter().enumerate() {
                atoms.row_mut(row).assign(&points.row(i));
            }
            atoms
        }
        InitStrategy::RandomGaussian => {
            let mean = source.mean();
            let mut var = Array1::<f64>::zeros(d);
            for (row, &w) in points.rows().into_iter().zip(source.weights()) {
                for c in 0..d {
                    let diff = row[c] - mean[c];
                    var[c] += w * diff * diff;
                }
            }
            let mut atoms = Array2::zeros((m, d));
            for mut row in atoms.rows_mut() {
                for c in 0..d {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    row[c] = mean[c] + var[c].sqrt() * z;
                }
            }
            atoms
        }
    }
}

fn squared_distance(a: &ArrayView1<'_, f64>, b: &ArrayView1<'_, f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum()
}

fn atoms_distribution(atoms: &Array2<f64>, weights: &Array1<f64>) -> Result<DiscreteDistribution> {
    DiscreteDistribution::new(atoms.clone(), weights.clone(), None)
}

/// Free-support W₂ barycenter of a single distribution: the best m-atom
/// compression of `source`, by K alternations of projected-subgradient weight
/// updates and exact Newton position updates.
pub fn free_support_barycenter(
    source: &DiscreteDistribution,
    config: &BarycenterConfig,
    seed: Seed,
) -> Result<BarycenterResult> {
    config.validate()?;
    let mut atoms = init_atoms(source, config.m, config.init, seed);
    // Left-to-right exact simplex sum, matching project_to_simplex outputs.
    let uniform = vec![1.0 / config.m as f64; config.m];
    let mut weights = Array1::from_vec(project_to_simplex(&uniform)?);

    let solve = |atoms: &Array2<f64>, weights: &Array1<f64>| -> Result<TransportSolution> {
        let target = atoms_distribution(atoms, weights)?;
        let cost = build_cost_matrix(source, &target, config.p)?;
        solve_exact(source, &target, &cost)
    };

    let mut trace = Vec::with_capacity(config.k);
    let mut solution = solve(&atoms, &weights)?;
    for outer in 1..=config.k {
        let step = config.eta / (outer as f64).sqrt();
        let new_weights =
            update_weights(&weights.view(), &solution.target_potentials.view(), step)?;
        if config.single_solve {
            // Literal reading: reuse the single per-iteration solve for both
            // sub-steps. Its plan matches the pre-update weights.
            atoms = update_positions(
                &atoms.view(),
                &solution,
                source,
                &weights.view(),
                config.weight_floor,
            )?;
            weights = new_weights;
        } else {
            weights = new_weights;
            let mid = solve(&atoms, &weights)?;
            atoms = update_positions(
                &atoms.view(),
                &mid,
                source,
                &weights.view(),
                config.weight_floor,
            )?;
        }
        solution = solve(&atoms, &weights)?;
        trace.push(solution.objective.max(0.0));
    }

    Ok(BarycenterResult {
        atoms,
        weights,
        objective_trace: trace,
        iterations_run: config.k,
    })
}

/// Rectangular grid over [xmin, xmax] × [ymin, ymax] with nx × ny cells.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl GridSpec {
    pub fn cell_center(&self, ix: usize, iy: usize) -> (f64, f64) {
        let (dx, dy) = self.cell_size();
        (
            self.xmin + (ix as f64 + 0.5) * dx,
            self.ymin + (iy as f64 + 0.5) * dy,
        )
    }

    pub fn cell_size(&self) -> (f64, f64) {
        (
            (self.xmax - self.xmin) / self.nx as f64,
            (self.ymax - self.ymin) / self.ny as f64,
        )
    }
}

/// Normalized density on a [`GridSpec`]; `values[[ix, iy]]` sums to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    pub spec: GridSpec,
    pub values: Array2<f64>,
}

impl GridDensity {
    pub fn new(spec: GridSpec, values: Array2<f64>) -> Result<Self> {
        if spec.nx == 0 || spec.ny == 0 {
            return Err(Error::EmptyGrid);
        }
        if values.nrows() != spec.nx || values.ncols() != spec.ny {
            return Err(Error::GridMismatch("values shape does not match spec"));
        }
        Ok(GridDensity { spec, values })
    }

    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Probability-weighted centroid of the cell centers.
    pub fn centroid(&self) -> (f64, f64) {
        let mut cx = 0.0;
        let mut cy = 0.0;
        for ix in 0..self.spec.nx {
            for iy in 0..self.spec.ny {
                let (x, y) = self.spec.cell_center(ix, iy);
                let p = self.values[[ix, iy]];
                cx += p * x;
                cy += p * y;
            }
        }
        (cx, cy)
    }
}

/// Barycenter objective used by [`fixed_grid_barycenter`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridMetric {
    /// argmin over µ of Σᵢ KL(νᵢ ‖ µ): the arithmetic mean.
    KlForward,
    /// argmin over µ of Σᵢ KL(µ ‖ νᵢ): the normalized geometric mean.
    KlReverse,
    /// argmin over µ of Σᵢ MMD²(µ, νᵢ): mean-embedding linearity gives the
    /// arithmetic mean (the mixture).
    MmdMixture,
}

const GRID_NORMALIZATION_TOL: f64 = 1e-6;

fn check_same_grid(densities: &[GridDensity]) -> Result<GridSpec> {
    let spec = densities
        .first()
        .ok_or(Error::GridMismatch("no input densities"))?
        .spec;
    for d in densities {
        if d.spec != spec {
            return Err(Error::GridMismatch("input grids differ"));
        }
        let mass = d.total_mass();
        if (mass - 1.0).abs() > GRID_NORMALIZATION_TOL {
            return Err(Error::UnnormalizedInput(mass));
        }
    }
    Ok(spec)
}

/// Closed-form barycenter of grid densities under the chosen objective.
pub fn fixed_grid_barycenter(densities: &[GridDensity], metric: GridMetric) -> Result<GridDensity> {
    let spec = check_same_grid(densities)?;
    let count = densities.len() as f64;
    let mut values = Array2::zeros((spec.nx, spec.ny));
    match metric {
        GridMetric::KlForward | GridMetric::MmdMixture => {
            for d in densities {
                values += &d.values;
            }
            values /= count;
        }
        GridMetric::KlReverse => {
            // Normalized geometric mean; vanishes wherever any input is zero.
            for ix in 0..spec.nx {
                for iy in 0..spec.ny {
                    let mut log_sum = 0.0;
                    let mut zero = false;
                    for d in densities {
                        let v = d.values[[ix, iy]];
                        if v <= 0.0 {
                            zero = true;
                            break;
                        }
                        log_sum += v.ln();
                    }
                    values[[ix, iy]] = if zero { 0.0 } else { (log_sum / count).exp() };
                }
            }
            let mass: f64 = values.iter().sum();
            if mass <= 0.0 {
                return Err(Error::DisjointSupport(
                    "geometric mean vanishes on every cell",
                ));
            }
            values /= mass;
        }
    }
    GridDensity::new(spec, values)
}

/// Smooth weighted atoms onto a grid with an isotropic Gaussian kernel and
/// renormalize the truncated tails to total mass one.
pub fn render_atoms_to_grid(
    atoms: &ArrayView2<'_, f64>,
    weights: &ArrayView1<'_, f64>,
    spec: &GridSpec,
    bandwidth: f64,
) -> Result<GridDensity> {
    if spec.nx == 0 || spec.ny == 0 {
        return Err(Error::EmptyGrid);
    }
    if !(bandwidth.is_finite() && bandwidth > 0.0) {
        return Err(Error::InvalidBandwidth(bandwidth));
    }
    if atoms.ncols() != 2 {
        return Err(Error::DimensionMismatch {
            context: "grid rendering needs 2-D atoms",
            left: atoms.ncols(),
            right: 2,
        });
    }
    if atoms.nrows() != weights.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} atoms vs {} weights",
            atoms.nrows(),
            weights.len()
        )));
    }
    let inv_two_sigma_sq = 1.0 / (2.0 * bandwidth * bandwidth);
    let mut values = Array2::zeros((spec.nx, spec.ny));
    for ix in 0..spec.nx {
        for iy in 0..spec.ny {
            let (x, y) = spec.cell_center(ix, iy);
            let mut v = 0.0;
            for (atom, &w) in atoms.rows().into_iter().zip(weights.iter()) {
                let dx = x - atom[0];
                let dy = y - atom[1];
                v += w * (-(dx * dx + dy * dy) * inv_two_sigma_sq).exp();
            }
            values[[ix, iy]] = v;
        }
    }
    let mass: f64 = values.iter().sum();
    if mass <= 0.0 {
        return Err(Error::EmptyGrid);
    }
    values /= mass;
    GridDensity::new(*spec, values)
}

/// Hard-bin a weighted point cloud onto a grid (each point's mass goes to
/// its containing cell; outside points clamp to the border cells).
pub fn bin_points_to_grid(dist: &DiscreteDistribution, spec: &GridSpec) -> Result<GridDensity> {
    if spec.nx == 0 || spec.ny == 0 {
        return Err(Error::EmptyGrid);
    }
    if dist.dim() != 2 {
        return Err(Error::DimensionMismatch {
            context: "grid binning needs 2-D points",
            left: dist.dim(),
            right: 2,
        });
    }
    let (dx, dy) = spec.cell_size();
    let mut values = Array2::zeros((spec.nx, spec.ny));
    for (p, &w) in dist.points().rows().into_iter().zip(dist.weights()) {
        let ix = (((p[0] - spec.xmin) / dx).floor() as isize).clamp(0, spec.nx as isize - 1);
        let iy = (((p[1] - spec.ymin) / dy).floor() as isize).clamp(0, spec.ny as isize - 1);
        values[[ix as usize, iy as usize]] += w;
    }
    GridDensity::new(*spec, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn two_point_source() -> DiscreteDistribution {
        DiscreteDistribution::uniform(array![[0.0], [2.0]], None).unwrap()
    }

    fn circle_source(seed: Seed, n: usize) -> DiscreteDistribution {
        crate::domain::make_blob_dataset(seed, 1, n, 2, "circles", 0.0)
            .unwrap()
            .remove(0)
    }

    #[test]
    fn update_weights_uniform_shift_is_identity() {
        let w = array![0.25, 0.25, 0.5];
        let betas = array![3.0, 3.0, 3.0];
        let out = update_weights(&w.view(), &betas.view(), 0.7).unwrap();
        for (a, b) in out.iter().zip(w.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn update_weights_two_atom_example() {
        // project([0.3, 0.5]) = [0.4, 0.6]; the grid-search oracle in the
        // domain tests pins the projection itself.
        let out = update_weights(&array![0.5, 0.5].view(), &array![1.0, 0.0].view(), 0.2).unwrap();
        assert_abs_diff_eq!(out[0], 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(out[1], 0.6, epsilon = 1e-12);
    }

    #[test]
    fn update_weights_zero_step_is_identity() {
        let w = array![0.125, 0.375, 0.5];
        let out = update_weights(&w.view(), &array![5.0, -2.0, 0.4].view(), 0.0).unwrap();
        assert_eq!(out, w);
    }

    #[test]
    fn update_positions_weighted_mean_example() {
        let source =
            DiscreteDistribution::new(array![[0.0, 0.0], [2.0, 0.0]], array![0.5, 0.5], None)
                .unwrap();
        let atoms = array![[5.0, 5.0], [7.0, -3.0]];
        let weights = array![0.5, 0.5];
        let solution = TransportSolution {
            plan: array![[0.25, 0.25], [0.25, 0.25]],
            source_potentials: array![0.0, 0.0],
            target_potentials: array![0.0, 0.0],
            objective: 0.0,
        };
        let out =
            update_positions(&atoms.view(), &solution, &source, &weights.view(), 1e-8).unwrap();
        assert_abs_diff_eq!(out[[0, 0]], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out[[0, 1]], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn update_positions_zero_weight_atom_unchanged() {
        let source = two_point_source();
        let atoms = array![[9.0], [1.0]];
        let weights = array![0.0, 1.0];
        let solution = TransportSolution {
            plan: array![[0.0, 0.5], [0.0, 0.5]],
            source_potentials: array![0.0, 0.0],
            target_potentials: array![0.0, 0.0],
            objective: 0.0,
        };
        let out =
            update_positions(&atoms.view(), &solution, &source, &weights.view(), 1e-8).unwrap();
        assert_eq!(out[[0, 0]], 9.0);
        assert_abs_diff_eq!(out[[1, 0]], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn update_positions_single_source_point() {
        let source = DiscreteDistribution::uniform(array![[3.5, -1.0]], None).unwrap();
        let atoms = array![[0.0, 0.0], [8.0, 8.0]];
        let weights = array![0.25, 0.75];
        let solution = TransportSolution {
            plan: array![[0.25, 0.75]],
            source_potentials: array![0.0],
            target_potentials: array![0.0, 0.0],
            objective: 0.0,
        };
        let out =
            update_positions(&atoms.view(), &solution, &source, &weights.view(), 1e-8).unwrap();
        for j in 0..2 {
            assert_abs_diff_eq!(out[[j, 0]], 3.5, epsilon = 1e-12);
            assert_abs_diff_eq!(out[[j, 1]], -1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn update_positions_rejects_mismatched_plan() {
        let source = two_point_source();
        let atoms = array![[0.0]];
        let weights = array![1.0];
        let solution = TransportSolution {
            plan: array![[0.2], [0.2]],
            source_potentials: array![0.0, 0.0],
            target_potentials: array![0.0],
            objective: 0.0,
        };
        assert!(matches!(
            update_positions(&atoms.view(), &solution, &source, &weights.view(), 1e-8),
            Err(Error::PlanMismatch { .. })
        ));
    }

    #[test]
    fn barycenter_two_points_single_atom_is_midpoint() {
        let source = two_point_source();
        let config = BarycenterConfig {
            m: 1,
            ..BarycenterConfig::default()
        };
        let result = free_support_barycenter(&source, &config, Seed(3)).unwrap();
        assert_abs_diff_eq!(result.atoms[[0, 0]], 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(result.weights[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn barycenter_full_support_reaches_zero() {
        let source = circle_source(Seed(7), 24);
        let config = BarycenterConfig {
            m: 24,
            ..BarycenterConfig::default()
        };
        let result = free_support_barycenter(&source, &config, Seed(11)).unwrap();
        assert!(
            *result.objective_trace.last().unwrap() <= 1e-10,
            "full-support barycenter should reproduce the source: trace {:?}",
            result.objective_trace
        );
    }

    #[test]
    fn barycenter_circle_run_descends_and_preserves_mean() {
        let source = circle_source(Seed(7), 100);
        let config = BarycenterConfig {
            m: 10,
            ..BarycenterConfig::default()
        };
        let initial = {
            let atoms = init_atoms(&source, config.m, config.init, Seed(7));
            let weights = Array1::from_elem(config.m, 0.1);
            let target = DiscreteDistribution::new(atoms, weights, None).unwrap();
            let cost = build_cost_matrix(&source, &target, 2.0).unwrap();
            solve_exact(&source, &target, &cost).unwrap().objective
        };
        let result = free_support_barycenter(&source, &config, Seed(7)).unwrap();
        assert!(*result.objective_trace.last().unwrap() < initial);

        let mut mean = Array1::<f64>::zeros(2);
        for (row, &w) in result.atoms.rows().into_iter().zip(result.weights.iter()) {
            mean.scaled_add(w, &row);
        }
        let source_mean = source.mean();
        for c in 0..2 {
            assert_abs_diff_eq!(mean[c], source_mean[c], epsilon = 1e-6);
        }
    }

    #[test]
    fn barycenter_deterministic() {
        let source = circle_source(Seed(2), 30);
        let config = BarycenterConfig {
            m: 5,
            ..BarycenterConfig::default()
        };
        let a = free_support_barycenter(&source, &config, Seed(9)).unwrap();
        let b = free_support_barycenter(&source, &config, Seed(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn barycenter_single_solve_mode_runs() {
        let source = circle_source(Seed(2), 20);
        let config = BarycenterConfig {
            m: 4,
            single_solve: true,
            ..BarycenterConfig::default()
        };
        let result = free_support_barycenter(&source, &config, Seed(1)).unwrap();
        assert_eq!(result.objective_trace.len(), config.k);
        assert!((result.weights.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    }

    fn grid2x2() -> GridSpec {
        GridSpec {
            nx: 2,
            ny: 2,
            xmin: 0.0,
            xmax: 2.0,
            ymin: 0.0,
            ymax: 2.0,
        }
    }

    #[test]
    fn fixed_grid_identity_on_equal_inputs() {
        let d = GridDensity::new(grid2x2(), array![[0.1, 0.2], [0.3, 0.4]]).unwrap();
        for metric in [
            GridMetric::KlForward,
            GridMetric::KlReverse,
            GridMetric::MmdMixture,
        ] {
            let out = fixed_grid_barycenter(&[d.clone(), d.clone()], metric).unwrap();
            for (a, b) in out.values.iter().zip(d.values.iter()) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn fixed_grid_kl_forward_of_one_hots_is_mixture() {
        let a = GridDensity::new(grid2x2(), array![[1.0, 0.0], [0.0, 0.0]]).unwrap();
        let b = GridDensity::new(grid2x2(), array![[0.0, 0.0], [0.0, 1.0]]).unwrap();
        let out = fixed_grid_barycenter(&[a, b], GridMetric::KlForward).unwrap();
        assert_abs_diff_eq!(out.values[[0, 0]], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(out.values[[1, 1]], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn fixed_grid_kl_reverse_disjoint_support_fails() {
        let a = GridDensity::new(grid2x2(), array![[1.0, 0.0], [0.0, 0.0]]).unwrap();
        let b = GridDensity::new(grid2x2(), array![[0.0, 0.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(
            fixed_grid_barycenter(&[a, b], GridMetric::KlReverse),
            Err(Error::DisjointSupport(_))
        ));
    }

    #[test]
    fn fixed_grid_rejects_unnormalized() {
        let a = GridDensity::new(grid2x2(), array![[0.9, 0.0], [0.0, 0.0]]).unwrap();
        assert!(matches!(
            fixed_grid_barycenter(&[a], GridMetric::KlForward),
            Err(Error::UnnormalizedInput(_))
        ));
    }

    #[test]
    fn render_single_atom_peaks_at_center() {
        let spec = GridSpec {
            nx: 9,
            ny: 9,
            xmin: -1.0,
            xmax: 1.0,
            ymin: -1.0,
            ymax: 1.0,
        };
        let atoms = array![[0.0, 0.0]];
        let weights = array![1.0];
        let density = render_atoms_to_grid(&atoms.view(), &weights.view(), &spec, 0.3).unwrap();
        assert_abs_diff_eq!(density.total_mass(), 1.0, epsilon = 1e-9);
        let mut best = (0, 0);
        let mut best_v = -1.0;
        for ix in 0..9 {
            for iy in 0..9 {
                if density.values[[ix, iy]] > best_v {
                    best_v = density.values[[ix, iy]];
                    best = (ix, iy);
                }
            }
        }
        assert_eq!(best, (4, 4));
    }

    #[test]
    fn render_small_bandwidth_concentrates_on_nearest_cell() {
        let spec = GridSpec {
            nx: 4,
            ny: 4,
            xmin: 0.0,
            xmax: 4.0,
            ymin: 0.0,
            ymax: 4.0,
        };
        let atoms = array![[1.3, 2.6]];
        let weights = array![1.0];
        let density = render_atoms_to_grid(&atoms.view(), &weights.view(), &spec, 0.02).unwrap();
        // Nearest cell center to (1.3, 2.6) is (1.5, 2.5) = cell (1, 2).
        assert!(density.values[[1, 2]] > 0.999);
    }

    #[test]
    fn render_rejects_bad_bandwidth() {
        let spec = grid2x2();
        let atoms = array![[0.5, 0.5]];
        let weights = array![1.0];
        assert!(matches!(
            render_atoms_to_grid(&atoms.view(), &weights.view(), &spec, 0.0),
            Err(Error::InvalidBandwidth(_))
        ));
    }
}
