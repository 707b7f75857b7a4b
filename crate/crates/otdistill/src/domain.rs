//! Shared domain types: weighted point clouds, seeds, simplex projection,
//! and seeded synthetic datasets.

use crate::{Error, Result};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::fmt::Write as _;
use std::path::Path;

/// Tolerance for accepting a raw weight vector (text formats lose precision).
pub const WEIGHT_SUM_INPUT_TOL: f64 = 1e-6;

/// Internal invariant tolerance on normalized weights.
pub const WEIGHT_SUM_INVARIANT_TOL: f64 = 1e-9;

/// Explicit 64-bit seed; the single entropy source for the whole crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Seed(pub u64);

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Seed {
    /// Deterministic RNG for this seed.
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Derive an independent child seed for a numbered substream.
    pub fn child(self, stream: u64) -> Seed {
        Seed(splitmix64(self.0 ^ splitmix64(stream)))
    }
}

/// Weighted point cloud representing an empirical measure on R^d.
///
/// Invariants (enforced at construction): weights nonnegative and summing to
/// one, at least one point, all coordinates finite.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    points: Array2<f64>,
    weights: Array1<f64>,
    label: Option<i64>,
}

impl DiscreteDistribution {
    /// Validate and normalize a raw (points, weights) pair.
    ///
    /// Weight sums within `1e-6` of one are rescaled to sum exactly one;
    /// anything further off is rejected.
    pub fn new(points: Array2<f64>, weights: Array1<f64>, label: Option<i64>) -> Result<Self> {
        let n = points.nrows();
        let d = points.ncols();
        if n == 0 {
            return Err(Error::EmptySupport("no points"));
        }
        if d == 0 {
            return Err(Error::EmptySupport("zero-dimensional points"));
        }
        if weights.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "{} points vs {} weights",
                n,
                weights.len()
            )));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteCoordinate { context: "points" });
        }
        for (index, &w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::NonFiniteCoordinate { context: "weights" });
            }
            if w < 0.0 {
                return Err(Error::NegativeWeight { index, value: w });
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_INPUT_TOL {
            return Err(Error::WeightSumOutOfTolerance {
                sum,
                tol: WEIGHT_SUM_INPUT_TOL,
            });
        }
        // Rescale so the left-to-right sum is exactly 1.0; re-validating the
        // result is then a no-op, which keeps serialization round trips exact.
        let weights = if sum == 1.0 {
            weights
        } else {
            let mut w = weights / sum;
            if let Some(last) = (0..n).rev().find(|&i| w[i] > 0.0) {
                let partial: f64 = w.iter().take(last).sum();
                w[last] = (1.0 - partial).max(0.0);
            }
            w
        };
        Ok(Self {
            points,
            weights,
            label,
        })
    }

    /// Uniformly weighted distribution over the given points.
    pub fn uniform(points: Array2<f64>, label: Option<i64>) -> Result<Self> {
        let n = points.nrows();
        if n == 0 {
            return Err(Error::EmptySupport("no points"));
        }
        let weights = Array1::from_elem(n, 1.0 / n as f64);
        Self::new(points, weights, label)
    }

    /// Number of support points.
    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        false // n >= 1 by construction
    }

    /// Ambient dimension d.
    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> ArrayView2<'_, f64> {
        self.points.view()
    }

    pub fn weights(&self) -> ArrayView1<'_, f64> {
        self.weights.view()
    }

    pub fn label(&self) -> Option<i64> {
        self.label
    }

    /// Weighted mean of the support points.
    pub fn mean(&self) -> Array1<f64> {
        let mut mean = Array1::zeros(self.dim());
        for (row, &w) in self.points.rows().into_iter().zip(self.weights.iter()) {
            mean.scaled_add(w, &row);
        }
        mean
    }

    /// Same support shifted by `offset`.
    pub fn translate(&self, offset: &ArrayView1<'_, f64>) -> Result<Self> {
        if offset.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "translate offset",
                left: offset.len(),
                right: self.dim(),
            });
        }
        let mut points = self.points.clone();
        for mut row in points.rows_mut() {
            row += offset;
        }
        Self::new(points, self.weights.clone(), self.label)
    }
}

/// Pairwise distance costs for one transport problem.
///
/// `entries[i][j]` is the Euclidean distance between source point `i` and
/// target point `j` raised to the power `exponent`.
#[derive(Debug, Clone)]
pub struct CostMatrix {
    pub entries: Array2<f64>,
    pub exponent: f64,
}

/// Euclidean projection onto the probability simplex (sort-based, O(m log m)).
///
/// The output is the closest point of the simplex to `v` and is an exact
/// fixed point: feeding the result back in returns it bit-identically.
pub fn project_to_simplex(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::EmptySupport("empty vector"));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteInput("project_to_simplex"));
    }
    // Fast path keeps already-projected vectors bit-identical. The slow path
    // below constructs outputs that pass this exact check.
    if v.iter().all(|&x| x >= 0.0) && v.iter().sum::<f64>() == 1.0 {
        return Ok(v.to_vec());
    }

    let m = v.len();
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite values compare"));
    let mut cumulative = 0.0;
    let mut rho = 0;
    let mut theta = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let t = (cumulative - 1.0) / (k + 1) as f64;
        if u - t > 0.0 {
            rho = k + 1;
            theta = t;
        }
    }
    debug_assert!(rho >= 1);

    let mut w = vec![0.0; m];
    // Last surviving index absorbs the rounding residual so that the
    // left-to-right sum of the output is exactly 1.0.
    let last = (0..m)
        .rev()
        .find(|&i| v[i] - theta > 0.0)
        .expect("simplex projection has nonempty support");
    let mut partial = 0.0;
    for i in 0..m {
        if i != last && v[i] - theta > 0.0 {
            w[i] = v[i] - theta;
            if i < last {
                partial += w[i];
            }
        }
    }
    w[last] = (1.0 - partial).max(0.0);
    Ok(w)
}

/// Geometry of a generated dataset; parsed from its CLI name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum BlobGeometry {
    /// Isotropic Gaussian clusters at seeded class centers.
    Blobs,
    /// Points on circle outlines of radius 1 around class centers.
    Circles,
    /// Points on plus-shaped outlines around class centers.
    Crosses,
    /// Even-indexed classes on circles, odd-indexed on crosses.
    CirclesCrosses,
}

impl BlobGeometry {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "blobs" => Ok(BlobGeometry::Blobs),
            "circles" | "circle" => Ok(BlobGeometry::Circles),
            "crosses" | "cross" => Ok(BlobGeometry::Crosses),
            "circles-crosses" => Ok(BlobGeometry::CirclesCrosses),
            other => Err(Error::UnknownGeometry(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BlobGeometry::Blobs => "blobs",
            BlobGeometry::Circles => "circles",
            BlobGeometry::Crosses => "crosses",
            BlobGeometry::CirclesCrosses => "circles-crosses",
        }
    }
}

/// Class center layout: a single class sits at the origin, multiple classes
/// are spaced evenly on a radius-3 circle (first two on the x axis).
fn class_center(class: usize, classes: usize, dim: usize) -> Array1<f64> {
    let mut center = Array1::zeros(dim);
    if classes > 1 {
        let angle = 2.0 * std::f64::consts::PI * class as f64 / classes as f64;
        center[0] = 3.0 * angle.cos();
        if dim > 1 {
            center[1] = 3.0 * angle.sin();
        }
    }
    center
}

/// Deterministic synthetic dataset: one uniformly weighted distribution per
/// class. Circle and cross geometries need `dim >= 2`.
pub fn make_blob_dataset(
    seed: Seed,
    classes: usize,
    points_per_class: usize,
    dim: usize,
    geometry: &str,
    noise: f64,
) -> Result<Vec<DiscreteDistribution>> {
    let geometry = BlobGeometry::parse(geometry)?;
    make_blob_dataset_counts(
        seed,
        &vec![points_per_class; classes.max(1)][..classes],
        dim,
        geometry,
        noise,
    )
}

/// Like [`make_blob_dataset`] but with an explicit per-class point count.
pub fn make_blob_dataset_counts(
    seed: Seed,
    points_per_class: &[usize],
    dim: usize,
    geometry: BlobGeometry,
    noise: f64,
) -> Result<Vec<DiscreteDistribution>> {
    let classes = points_per_class.len();
    if classes == 0 {
        return Err(Error::EmptySupport("no classes"));
    }
    if points_per_class.iter().any(|&n| n == 0) {
        return Err(Error::EmptySupport("class with zero points"));
    }
    if dim == 0 {
        return Err(Error::EmptySupport("zero-dimensional points"));
    }
    let needs_plane = !matches!(geometry, BlobGeometry::Blobs);
    if needs_plane && dim < 2 {
        return Err(Error::DimensionMismatch {
            context: "outline geometries need dim >= 2",
            left: dim,
            right: 2,
        });
    }
    if !noise.is_finite() || noise < 0.0 {
        return Err(Error::NonFiniteInput("noise"));
    }

    let mut out = Vec::with_capacity(classes);
    for (class, &n) in points_per_class.iter().enumerate() {
        let mut rng = seed.child(class as u64).rng();
        let center = class_center(class, classes, dim);
        let shape = match geometry {
            BlobGeometry::Blobs => BlobGeometry::Blobs,
            BlobGeometry::Circles => BlobGeometry::Circles,
            BlobGeometry::Crosses => BlobGeometry::Crosses,
            BlobGeometry::CirclesCrosses => {
                if class % 2 == 0 {
                    BlobGeometry::Circles
                } else {
                    BlobGeometry::Crosses
                }
            }
        };
        let mut points = Array2::zeros((n, dim));
        for i in 0..n {
            let mut p = center.clone();
            match shape {
                BlobGeometry::Blobs => {
                    for c in 0..dim {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        p[c] += z;
                    }
                }
                BlobGeometry::Circles => {
                    let angle = rng.random::<f64>() * 2.0 * std::f64::consts::PI;
                    p[0] += angle.cos();
                    p[1] += angle.sin();
                }
                BlobGeometry::Crosses => {
                    // Uniform over the two unit-length arms of a plus sign.
                    let t = rng.random::<f64>() * 2.0 - 1.0;
                    if rng.random::<bool>() {
                        p[0] += t;
                    } else {
                        p[1] += t;
                    }
                }
                BlobGeometry::CirclesCrosses => unreachable!(),
            }
            if noise > 0.0 {
                for c in 0..dim {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    p[c] += noise * z;
                }
            }
            points.row_mut(i).assign(&p);
        }
        out.push(DiscreteDistribution::uniform(points, Some(class as i64))?);
    }
    Ok(out)
}

/// 17-significant-digit scientific formatting; round-trips f64 exactly.
pub fn fmt_float(x: f64) -> String {
    format!("{:.16e}", x)
}

/// Serialize distributions to the point-set CSV format
/// (`label,weight,x0,...,x{d-1}`, row order preserved).
pub fn points_to_csv(dataset: &[DiscreteDistribution]) -> String {
    let dim = dataset.first().map_or(0, |d| d.dim());
    let mut out = String::from("label,weight");
    for c in 0..dim {
        let _ = write!(out, ",x{c}");
    }
    out.push('\n');
    for dist in dataset {
        for (row, &w) in dist.points().rows().into_iter().zip(dist.weights()) {
            let _ = write!(out, "{}", dist.label().unwrap_or(0));
            let _ = write!(out, ",{}", fmt_float(w));
            for &x in row.iter() {
                let _ = write!(out, ",{}", fmt_float(x));
            }
            out.push('\n');
        }
    }
    out
}

pub fn write_points_csv(path: &Path, dataset: &[DiscreteDistribution]) -> Result<()> {
    std::fs::write(path, points_to_csv(dataset))
        .map_err(|e| Error::io(path.display().to_string(), e))
}

/// Parse the point-set CSV format. The weight column is optional; rows with
/// the same label form one distribution, in first-appearance order.
pub fn read_points_csv(path: &Path) -> Result<Vec<DiscreteDistribution>> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_points_csv(&text, &path.display().to_string())
}

pub fn parse_points_csv(text: &str, origin: &str) -> Result<Vec<DiscreteDistribution>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(origin, "empty file"))?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    if columns.first() != Some(&"label") {
        return Err(Error::parse(origin, "first column must be `label`"));
    }
    let has_weight = columns.get(1) == Some(&"weight");
    let coord_start = if has_weight { 2 } else { 1 };
    let dim = columns.len() - coord_start;
    if dim == 0 {
        return Err(Error::parse(origin, "no coordinate columns"));
    }

    // Group rows by label, preserving first-appearance order.
    let mut order: Vec<i64> = Vec::new();
    let mut groups: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != columns.len() {
            return Err(Error::parse(
                origin,
                format!("line {}: expected {} fields", lineno + 1, columns.len()),
            ));
        }
        let label: i64 = fields[0]
            .parse()
            .map_err(|_| Error::parse(origin, format!("line {}: bad label", lineno + 1)))?;
        let weight: f64 = if has_weight {
            fields[1].parse().map_err(|_| {
                Error::parse(origin, format!("line {}: bad weight", lineno + 1))
            })?
        } else {
            f64::NAN // placeholder; replaced by uniform below
        };
        let idx = match order.iter().position(|&l| l == label) {
            Some(i) => i,
            None => {
                order.push(label);
                groups.push((Vec::new(), Vec::new()));
                order.len() - 1
            }
        };
        for f in &fields[coord_start..] {
            let x: f64 = f.parse().map_err(|_| {
                Error::parse(origin, format!("line {}: bad coordinate", lineno + 1))
            })?;
            groups[idx].0.push(x);
        }
        groups[idx].1.push(weight);
    }
    if order.is_empty() {
        return Err(Error::parse(origin, "no data rows"));
    }

    let mut out = Vec::with_capacity(order.len());
    for (label, (coords, weights)) in order.into_iter().zip(groups) {
        let n = weights.len();
        let points = Array2::from_shape_vec((n, dim), coords)
            .map_err(|e| Error::parse(origin, e.to_string()))?;
        let dist = if has_weight {
            DiscreteDistribution::new(points, Array1::from_vec(weights), Some(label))?
        } else {
            DiscreteDistribution::uniform(points, Some(label))?
        };
        out.push(dist);
    }
    Ok(out)
}

/// Pool several distributions into one, giving each group equal total mass.
pub fn pool_equal_mass(groups: &[DiscreteDistribution]) -> Result<DiscreteDistribution> {
    if groups.is_empty() {
        return Err(Error::EmptySupport("no groups to pool"));
    }
    let dim = groups[0].dim();
    let total: usize = groups.iter().map(|g| g.len()).sum();
    let mut points = Array2::zeros((total, dim));
    let mut weights = Array1::zeros(total);
    let share = 1.0 / groups.len() as f64;
    let mut row = 0;
    for g in groups {
        if g.dim() != dim {
            return Err(Error::DimensionMismatch {
                context: "pooled groups",
                left: g.dim(),
                right: dim,
            });
        }
        for (p, &w) in g.points().rows().into_iter().zip(g.weights()) {
            points.row_mut(row).assign(&p);
            weights[row] = w * share;
            row += 1;
        }
    }
    DiscreteDistribution::new(points, weights, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn validate_accepts_normalized_weights() {
        let d = DiscreteDistribution::new(
            array![[0.0], [1.0]],
            array![0.5, 0.5],
            None,
        )
        .unwrap();
        assert_eq!(d.len(), 2);
        assert_abs_diff_eq!(d.weights().sum(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn validate_rejects_negative_weight() {
        let err = DiscreteDistribution::new(array![[0.0], [1.0]], array![0.5, -0.1], None)
            .unwrap_err();
        assert!(matches!(err, Error::NegativeWeight { index: 1, .. }));
    }

    #[test]
    fn validate_rejects_bad_weight_sum() {
        let err = DiscreteDistribution::new(array![[0.0], [1.0]], array![0.3, 0.3], None)
            .unwrap_err();
        assert!(matches!(err, Error::WeightSumOutOfTolerance { .. }));
    }

    #[test]
    fn validate_rejects_empty_and_nonfinite() {
        let err =
            DiscreteDistribution::new(Array2::zeros((0, 2)), Array1::zeros(0), None).unwrap_err();
        assert!(matches!(err, Error::EmptySupport(_)));
        let err = DiscreteDistribution::new(array![[f64::NAN]], array![1.0], None).unwrap_err();
        assert!(matches!(err, Error::NonFiniteCoordinate { .. }));
    }

    #[test]
    fn validate_renormalizes_near_one() {
        let d = DiscreteDistribution::new(
            array![[0.0], [1.0]],
            array![0.5, 0.5 + 5e-7],
            None,
        )
        .unwrap();
        assert_abs_diff_eq!(d.weights().sum(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project_to_simplex(&[1.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        let w = project_to_simplex(&[0.5, 0.8]).unwrap();
        assert_abs_diff_eq!(w[0], 0.35, epsilon = 1e-12);
        assert_abs_diff_eq!(w[1], 0.65, epsilon = 1e-12);
        let w = project_to_simplex(&[-3.0, -3.0]).unwrap();
        assert_abs_diff_eq!(w[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(w[1], 0.5, epsilon = 1e-15);
    }

    /// Independent oracle: minimize ‖w − v‖ over the 1-simplex by dense grid
    /// search with successive refinement down to 1e-6.
    fn grid_search_simplex_2d(v: [f64; 2]) -> [f64; 2] {
        let mut lo = 0.0_f64;
        let mut hi = 1.0_f64;
        let mut best = 0.0;
        for _ in 0..8 {
            let mut best_cost = f64::INFINITY;
            let steps = 1000;
            for k in 0..=steps {
                let w0 = lo + (hi - lo) * k as f64 / steps as f64;
                let w1 = 1.0 - w0;
                let cost = (w0 - v[0]).powi(2) + (w1 - v[1]).powi(2);
                if cost < best_cost {
                    best_cost = cost;
                    best = w0;
                }
            }
            let span = (hi - lo) / steps as f64;
            lo = (best - 2.0 * span).max(0.0);
            hi = (best + 2.0 * span).min(1.0);
        }
        [best, 1.0 - best]
    }

    #[test]
    fn projection_matches_grid_search_oracle() {
        let oracle = grid_search_simplex_2d([0.5, 0.8]);
        let w = project_to_simplex(&[0.5, 0.8]).unwrap();
        assert_abs_diff_eq!(w[0], oracle[0], epsilon = 1e-6);
        assert_abs_diff_eq!(w[1], oracle[1], epsilon = 1e-6);
    }

    #[test]
    fn projection_idempotent_and_on_simplex() {
        let mut rng = Seed(42).rng();
        for _ in 0..1000 {
            let m = rng.random_range(1..=12);
            let v: Vec<f64> = (0..m).map(|_| rng.random::<f64>() * 8.0 - 4.0).collect();
            let w = project_to_simplex(&v).unwrap();
            assert!(w.iter().all(|&x| x >= 0.0));
            assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            let w2 = project_to_simplex(&w).unwrap();
            assert_eq!(w, w2, "projection must be exactly idempotent");
        }
    }

    #[test]
    fn projection_rejects_nonfinite() {
        assert!(matches!(
            project_to_simplex(&[f64::NAN, 0.0]),
            Err(Error::NonFiniteInput(_))
        ));
    }

    #[test]
    fn blob_dataset_deterministic() {
        let a = make_blob_dataset(Seed(7), 2, 50, 2, "circles-crosses", 0.05).unwrap();
        let b = make_blob_dataset(Seed(7), 2, 50, 2, "circles-crosses", 0.05).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn blob_dataset_counts_and_weights() {
        let data = make_blob_dataset(Seed(3), 2, 50, 2, "blobs", 0.1).unwrap();
        assert_eq!(data.len(), 2);
        for d in &data {
            assert_eq!(d.len(), 50);
            for &w in d.weights() {
                assert_abs_diff_eq!(w, 0.02, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn circle_points_on_unit_circle_when_noiseless() {
        let data = make_blob_dataset(Seed(5), 1, 100, 2, "circles", 0.0).unwrap();
        for p in data[0].points().rows() {
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            assert_abs_diff_eq!(r, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn unknown_geometry_rejected() {
        assert!(matches!(
            make_blob_dataset(Seed(0), 1, 1, 2, "hexagons", 0.0),
            Err(Error::UnknownGeometry(_))
        ));
    }

    #[test]
    fn csv_round_trip_preserves_values() {
        let data = make_blob_dataset(Seed(11), 3, 7, 2, "blobs", 0.2).unwrap();
        let text = points_to_csv(&data);
        let back = parse_points_csv(&text, "test").unwrap();
        assert_eq!(data.len(), back.len());
        for (a, b) in data.iter().zip(&back) {
            assert_eq!(a.label(), b.label());
            assert_eq!(a.points(), b.points());
            assert_eq!(a.weights(), b.weights());
        }
    }

    #[test]
    fn csv_without_weight_column_is_uniform() {
        let text = "label,x0,x1\n0,1.0,2.0\n0,3.0,4.0\n";
        let data = parse_points_csv(text, "test").unwrap();
        assert_eq!(data.len(), 1);
        assert_abs_diff_eq!(data[0].weights()[0], 0.5, epsilon = 1e-15);
    }

    proptest! {
        /// Any accepted input yields a distribution satisfying the type
        /// invariants; anything else is rejected with an error.
        #[test]
        fn validation_never_returns_invalid(
            raw in proptest::collection::vec(-1.0f64..2.0, 1..20),
        ) {
            let n = raw.len();
            let points = Array2::from_shape_fn((n, 2), |(i, j)| (i * 2 + j) as f64);
            let weights = Array1::from_vec(raw);
            if let Ok(d) = DiscreteDistribution::new(points, weights, None) {
                prop_assert!((d.weights().sum() - 1.0).abs() <= WEIGHT_SUM_INVARIANT_TOL);
                prop_assert!(d.weights().iter().all(|&w| w >= 0.0));
                prop_assert!(d.len() >= 1);
            }
        }

        #[test]
        fn projection_invariants_hold(
            v in proptest::collection::vec(-10.0f64..10.0, 1..16),
        ) {
            let w = project_to_simplex(&v).unwrap();
            prop_assert!(w.iter().all(|&x| x >= 0.0));
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            let w2 = project_to_simplex(&w).unwrap();
            prop_assert_eq!(w, w2);
        }
    }
}
