//! Pairwise comparison matrices and the sparse observations they are built from.
//!
//! Node ids are 0-based everywhere. A [`ComparisonSet`] holds the observed
//! entries, a [`DensePcm`] a full matrix (completed or user supplied) and a
//! [`ScoreVector`] the log-scale scores every solver produces.

use std::collections::HashSet;
use std::fmt;

use ndarray::{Array2, ArrayView2};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest log-ratio whose exponential is a finite, normal f64.
pub const MAX_LOG_RATIO: f64 = 709.0;

/// Default relative tolerance for the reciprocity check.
pub const DEFAULT_RECIPROCITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObservationMode {
    /// `value` is a positive ratio `a_ij`.
    Cardinal,
    /// `value` is the number of times `i` beat `j`.
    BinaryCounts,
}

/// One observed ordered pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

/// The observed sparse data: ordered pairs with a ratio or a win count.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonSet {
    n: usize,
    mode: ObservationMode,
    edges: Vec<Comparison>,
}

impl ComparisonSet {
    pub fn new(n: usize, mode: ObservationMode, edges: Vec<Comparison>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(edges.len());
        for e in &edges {
            if e.i >= n || e.j >= n {
                return Err(Error::InvalidInput(format!(
                    "pair ({}, {}) out of range for n = {n}",
                    e.i, e.j
                )));
            }
            if e.i == e.j {
                return Err(Error::InvalidInput(format!("self comparison at node {}", e.i)));
            }
            match mode {
                ObservationMode::Cardinal => {
                    if !(e.value.is_finite() && e.value > 0.0) {
                        return Err(Error::NonPositive {
                            i: e.i,
                            j: e.j,
                            value: e.value,
                        });
                    }
                }
                ObservationMode::BinaryCounts => {
                    if !(e.value.is_finite() && e.value >= 0.0 && e.value.fract() == 0.0) {
                        return Err(Error::InvalidInput(format!(
                            "win count for ({}, {}) must be a nonnegative integer, got {}",
                            e.i, e.j, e.value
                        )));
                    }
                }
            }
            if !seen.insert((e.i, e.j)) {
                return Err(Error::InvalidInput(format!(
                    "duplicate ordered pair ({}, {})",
                    e.i, e.j
                )));
            }
        }
        Ok(Self { n, mode, edges })
    }

    /// Cardinal observations from `(i, j, a_ij)` triples.
    pub fn cardinal<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let edges = edges
            .into_iter()
            .map(|(i, j, value)| Comparison { i, j, value })
            .collect();
        Self::new(n, ObservationMode::Cardinal, edges)
    }

    /// Win counts from `(i, j, wins_i, wins_j)` rows; each row becomes the two
    /// ordered entries `(i, j, wins_i)` and `(j, i, wins_j)`.
    pub fn counts<I>(n: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, u64, u64)>,
    {
        let mut edges = Vec::new();
        for (i, j, wi, wj) in rows {
            edges.push(Comparison { i, j, value: wi as f64 });
            edges.push(Comparison { i: j, j: i, value: wj as f64 });
        }
        Self::new(n, ObservationMode::BinaryCounts, edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> ObservationMode {
        self.mode
    }

    pub fn edges(&self) -> &[Comparison] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// A new set holding the edges at `indices` (same `n` and mode).
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            n: self.n,
            mode: self.mode,
            edges: indices.iter().map(|&k| self.edges[k]).collect(),
        }
    }

    /// Undirected pairs `(min, max)` carrying information, deduplicated and
    /// sorted. In count mode a pair counts only if some comparison happened.
    pub fn undirected_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs: Vec<(usize, usize)> = self
            .edges
            .iter()
            .filter(|e| self.mode == ObservationMode::Cardinal || e.value > 0.0)
            .map(|e| (e.i.min(e.j), e.i.max(e.j)))
            .collect();
        pairs.sort_unstable();
        pairs.dedup();
        pairs
    }

    pub(crate) fn require(&self, mode: ObservationMode, operation: &'static str) -> Result<()> {
        if self.mode == mode {
            Ok(())
        } else {
            Err(Error::WrongMode {
                operation,
                expected: match mode {
                    ObservationMode::Cardinal => "cardinal ratio",
                    ObservationMode::BinaryCounts => "win count",
                },
            })
        }
    }
}

/// A dense `n x n` positive matrix with unit diagonal.
///
/// The diagonal is forced to 1 on construction. Reciprocity is not enforced
/// here (raw model predictions are generally not reciprocal); use
/// [`validate`] to check it and [`reciprocal_projection`] to impose it.
#[derive(Debug, Clone, PartialEq)]
pub struct DensePcm {
    entries: Array2<f64>,
}

impl DensePcm {
    pub fn new(mut entries: Array2<f64>) -> Result<Self> {
        let (r, c) = entries.dim();
        if r != c || r == 0 {
            return Err(Error::InvalidInput(format!(
                "a PCM must be square and nonempty, got {r}x{c}"
            )));
        }
        entries.diag_mut().fill(1.0);
        Ok(Self { entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("rows must all have length n".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let entries = Array2::from_shape_vec((n, n), flat)
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        Self::new(entries)
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[[i, j]]
    }

    pub fn entries(&self) -> ArrayView2<'_, f64> {
        self.entries.view()
    }

    pub fn into_entries(self) -> Array2<f64> {
        self.entries
    }
}

/// Additive gauge of a score vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Gauge {
    ZeroMeanGlobal,
    /// Zero mean within each connected component; holds per-node labels.
    ZeroMeanPerComponent(Vec<usize>),
}

/// Latent log-scores `x`, gauge fixed by zero means.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    scores: Vec<f64>,
    gauge: Gauge,
}

impl ScoreVector {
    /// Center `scores` to global zero mean.
    pub fn centered(mut scores: Vec<f64>) -> Self {
        if !scores.is_empty() {
            let mean = scores.iter().sum::<f64>() / scores.len() as f64;
            scores.iter_mut().for_each(|s| *s -= mean);
        }
        Self {
            scores,
            gauge: Gauge::ZeroMeanGlobal,
        }
    }

    /// Center `scores` within each group of `labels`. A single group yields
    /// the global gauge.
    pub fn centered_per_component(mut scores: Vec<f64>, labels: Vec<usize>) -> Self {
        let count = labels.iter().max().map_or(0, |m| m + 1);
        if count <= 1 {
            return Self::centered(scores);
        }
        crate::graph::center_per_group(&mut scores, &labels, count);
        Self {
            scores,
            gauge: Gauge::ZeroMeanPerComponent(labels),
        }
    }

    pub fn n(&self) -> usize {
        self.scores.len()
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn gauge(&self) -> &Gauge {
        &self.gauge
    }

    /// Predicted log-ratio `x_i - x_j`.
    pub fn log_ratio(&self, i: usize, j: usize) -> f64 {
        self.scores[i] - self.scores[j]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Violation {
    NonPositive { i: usize, j: usize, value: f64 },
    NonUnitDiagonal { i: usize, value: f64 },
    /// `a_ij * a_ji` deviates from 1 beyond the tolerance (reported once, `i < j`).
    Reciprocity { i: usize, j: usize, product: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::NonPositive { i, j, value } => {
                write!(f, "entry ({i}, {j}) = {value} is not positive")
            }
            Violation::NonUnitDiagonal { i, value } => {
                write!(f, "diagonal entry ({i}, {i}) = {value} is not 1")
            }
            Violation::Reciprocity { i, j, product } => {
                write!(f, "reciprocity violated at ({i}, {j}): a_ij * a_ji = {product}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check positivity, unit diagonal and reciprocity of a PCM.
pub fn validate(pcm: &DensePcm, tol: f64) -> ValidationReport {
    validate_entries(pcm.entries(), tol)
}

/// [`validate`] on a raw square array, whose diagonal may differ from 1.
pub fn validate_entries(a: ArrayView2<'_, f64>, tol: f64) -> ValidationReport {
    let n = a.nrows();
    let mut violations = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let v = a[[i, j]];
            if !(v > 0.0 && v.is_finite()) {
                violations.push(Violation::NonPositive { i, j, value: v });
            }
        }
        let d = a[[i, i]];
        if d != 1.0 {
            violations.push(Violation::NonUnitDiagonal { i, value: d });
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let product = a[[i, j]] * a[[j, i]];
            if !((product - 1.0).abs() <= tol) {
                violations.push(Violation::Reciprocity { i, j, product });
            }
        }
    }
    ValidationReport { violations }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalEigen {
    pub lambda_max: f64,
    /// Principal right eigenvector normalized to sum 1.
    pub weights: Vec<f64>,
    pub iterations: usize,
}

/// Perron eigenpair of a positive matrix by power iteration from the
/// uniform vector. Converged when `|A w - lambda w|_inf <= tol * lambda`.
pub fn principal_eigen(pcm: &DensePcm, max_iter: usize, tol: f64) -> Result<PrincipalEigen> {
    let a = pcm.entries();
    let n = pcm.n();
    let mut w = vec![1.0 / n as f64; n];
    let mut aw = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for iteration in 1..=max_iter {
        for (i, out) in aw.iter_mut().enumerate() {
            *out = a.row(i).iter().zip(&w).map(|(x, y)| x * y).sum();
        }
        // w sums to one, so the Rayleigh-like estimate is the sum of A w.
        let lambda: f64 = aw.iter().sum();
        residual = aw
            .iter()
            .zip(&w)
            .map(|(x, y)| (x - lambda * y).abs())
            .fold(0.0, f64::max);
        if residual <= tol * lambda {
            return Ok(PrincipalEigen {
                lambda_max: lambda,
                weights: w,
                iterations: iteration,
            });
        }
        for (wi, x) in w.iter_mut().zip(&aw) {
            *wi = x / lambda;
        }
    }
    Err(Error::EigenNotConverged {
        iterations: max_iter,
        residual,
    })
}

/// Saaty's random consistency index for `n <= 15`.
pub fn random_index(n: usize) -> Option<f64> {
    const RI: [f64; 15] = [
        0.0, 0.0, 0.58, 0.90, 1.12, 1.24, 1.32, 1.41, 1.45, 1.49, 1.51, 1.48, 1.56, 1.57, 1.59,
    ];
    n.checked_sub(1).and_then(|k| RI.get(k).copied())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub n: usize,
    pub lambda_max: f64,
    pub ci: f64,
    /// `None` when the random index is not tabulated (`n > 15`).
    pub cr: Option<f64>,
    pub ri_used: Option<f64>,
    pub max_triangle_residual: f64,
}

/// Above this size the triangle scan samples triples instead of enumerating.
const EXHAUSTIVE_TRIANGLE_LIMIT: usize = 256;
const SAMPLED_TRIANGLES: usize = 200_000;

pub fn consistency_report(pcm: &DensePcm) -> Result<ConsistencyReport> {
    let n = pcm.n();
    let eig = principal_eigen(pcm, 10_000, 1e-10)?;
    let ci = if n <= 2 {
        0.0
    } else {
        (eig.lambda_max - n as f64) / (n as f64 - 1.0)
    };
    let ri = random_index(n);
    let cr = ri.map(|ri| if ri > 0.0 { ci / ri } else { 0.0 });
    Ok(ConsistencyReport {
        n,
        lambda_max: eig.lambda_max,
        ci,
        cr,
        ri_used: ri,
        max_triangle_residual: max_triangle_residual(pcm),
    })
}

fn max_triangle_residual(pcm: &DensePcm) -> f64 {
    let n = pcm.n();
    if n < 3 {
        return 0.0;
    }
    let triples = if n <= EXHAUSTIVE_TRIANGLE_LIMIT {
        let mut t = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    t.push((i, j, k));
                }
            }
        }
        t
    } else {
        sample_triples(n, SAMPLED_TRIANGLES, &mut ChaCha8Rng::seed_from_u64(0))
    };
    triangle_residuals(pcm, &triples).into_iter().fold(0.0, f64::max)
}

/// Uniformly random triples of distinct nodes (`n >= 3`).
pub fn sample_triples<R: rand::Rng>(n: usize, count: usize, rng: &mut R) -> Vec<(usize, usize, usize)> {
    if n < 3 {
        return Vec::new();
    }
    (0..count)
        .map(|_| {
            let v = sample(rng, n, 3);
            (v.index(0), v.index(1), v.index(2))
        })
        .collect()
}

/// `exp(x_i - x_j)` for every pair: the consistent completion of a score vector.
pub fn complete_from_scores(x: &ScoreVector) -> Result<DensePcm> {
    complete_from_log_scores(x.scores())
}

pub(crate) fn complete_from_log_scores(x: &[f64]) -> Result<DensePcm> {
    let n = x.len();
    if let Some(bad) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("score {bad} is not finite")));
    }
    // The spread check names the extreme pair before anything is allocated.
    let (imax, imin) = extreme_indices(x);
    if n > 0 && x[imax] - x[imin] > MAX_LOG_RATIO {
        return Err(Error::Overflow {
            i: imax,
            j: imin,
            log_ratio: x[imax] - x[imin],
        });
    }
    let mut a = Array2::from_elem((n, n), 1.0);
    for i in 0..n {
        for j in i + 1..n {
            let v = (x[i] - x[j]).exp();
            a[[i, j]] = v;
            a[[j, i]] = 1.0 / v;
        }
    }
    DensePcm::new(a)
}

fn extreme_indices(x: &[f64]) -> (usize, usize) {
    let mut imax = 0;
    let mut imin = 0;
    for (k, v) in x.iter().enumerate() {
        if *v > x[imax] {
            imax = k;
        }
        if *v < x[imin] {
            imin = k;
        }
    }
    (imax, imin)
}

/// Replace each pair `(a_ij, a_ji)` by the nearest reciprocal pair,
/// `sqrt(a_ij / a_ji)` and its inverse; the diagonal is 1.
pub fn reciprocal_projection(pcm: &DensePcm) -> Result<DensePcm> {
    let a = pcm.entries();
    let n = pcm.n();
    let mut out = Array2::from_elem((n, n), 1.0);
    for i in 0..n {
        for j in i + 1..n {
            let (aij, aji) = (a[[i, j]], a[[j, i]]);
            for (r, c, v) in [(i, j, aij), (j, i, aji)] {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::NonPositive { i: r, j: c, value: v });
                }
            }
            let t = (aij / aji).sqrt();
            out[[i, j]] = t;
            out[[j, i]] = 1.0 / t;
        }
    }
    DensePcm::new(out)
}

/// `|log a_ij + log a_jk - log a_ik|` for each triple.
pub fn triangle_residuals(pcm: &DensePcm, triples: &[(usize, usize, usize)]) -> Vec<f64> {
    let a = pcm.entries();
    triples
        .iter()
        .map(|&(i, j, k)| (a[[i, j]].ln() + a[[j, k]].ln() - a[[i, k]].ln()).abs())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn matrix_a() -> DensePcm {
        DensePcm::from_rows(&[
            vec![1.0, 2.0, 4.0],
            vec![0.5, 1.0, 2.0],
            vec![0.25, 0.5, 1.0],
        ])
        .unwrap()
    }

    fn matrix_b() -> DensePcm {
        DensePcm::from_rows(&[
            vec![1.0, 3.0, 4.0],
            vec![1.0 / 3.0, 1.0, 2.0],
            vec![0.25, 0.5, 1.0],
        ])
        .unwrap()
    }

    #[test]
    fn comparison_set_rejects_bad_input() {
        assert!(ComparisonSet::cardinal(2, [(0, 2, 1.0)]).is_err());
        assert!(ComparisonSet::cardinal(2, [(1, 1, 1.0)]).is_err());
        assert!(ComparisonSet::cardinal(2, [(0, 1, 0.0)]).is_err());
        assert!(ComparisonSet::cardinal(2, [(0, 1, f64::INFINITY)]).is_err());
        assert!(ComparisonSet::cardinal(2, [(0, 1, 2.0), (0, 1, 3.0)]).is_err());
        // Opposite directions are distinct ordered pairs.
        assert!(ComparisonSet::cardinal(2, [(0, 1, 2.0), (1, 0, 0.5)]).is_ok());
        let bad_count = ComparisonSet::new(
            2,
            ObservationMode::BinaryCounts,
            vec![Comparison { i: 0, j: 1, value: 1.5 }],
        );
        assert!(bad_count.is_err());
    }

    #[test]
    fn dense_forces_unit_diagonal() {
        let p = DensePcm::from_rows(&[vec![7.0, 2.0], vec![0.5, 3.0]]).unwrap();
        assert_eq!(p.get(0, 0), 1.0);
        assert_eq!(p.get(1, 1), 1.0);
        assert!(DensePcm::from_rows(&[vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn validate_examples() {
        let ones = DensePcm::new(Array2::from_elem((3, 3), 1.0)).unwrap();
        assert!(validate(&ones, DEFAULT_RECIPROCITY_TOL).is_valid());
        assert!(validate(&matrix_b(), DEFAULT_RECIPROCITY_TOL).is_valid());

        let mut b = matrix_b().into_entries();
        b[[1, 0]] = 0.5;
        let report = validate(&DensePcm::new(b).unwrap(), DEFAULT_RECIPROCITY_TOL);
        assert_eq!(report.violations.len(), 1);
        match report.violations[0] {
            Violation::Reciprocity { i, j, product } => {
                assert_eq!((i, j), (0, 1));
                assert_abs_diff_eq!(product, 1.5, epsilon = 1e-15);
            }
            other => panic!("unexpected violation {other:?}"),
        }
    }

    #[test]
    fn validate_entries_reports_raw_diagonal_and_sign() {
        let a = ndarray::arr2(&[[2.0, -1.0], [-1.0, 1.0]]);
        let report = validate_entries(a.view(), 1e-9);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::NonUnitDiagonal { i: 0, .. })));
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::NonPositive { i: 0, j: 1, .. })));
    }

    #[test]
    fn rounded_human_input_passes_with_loose_tolerance() {
        let p = DensePcm::from_rows(&[vec![1.0, 3.0], vec![0.33, 1.0]]).unwrap();
        assert!(!validate(&p, DEFAULT_RECIPROCITY_TOL).is_valid());
        assert!(validate(&p, 0.02).is_valid());
    }

    #[test]
    fn eigen_of_b_matches_worked_example() {
        let e = principal_eigen(&matrix_b(), 10_000, 1e-10).unwrap();
        assert_abs_diff_eq!(e.lambda_max, 3.0183, epsilon = 1e-3);
        for (w, expected) in e.weights.iter().zip([0.6250, 0.2385, 0.1365]) {
            assert_abs_diff_eq!(*w, expected, epsilon = 1e-3);
        }
    }

    #[test]
    fn eigen_of_consistent_matrices() {
        let e = principal_eigen(&matrix_a(), 10_000, 1e-10).unwrap();
        assert_abs_diff_eq!(e.lambda_max, 3.0, epsilon = 1e-9);
        for (w, expected) in e.weights.iter().zip([2.0 / 3.5, 1.0 / 3.5, 0.5 / 3.5]) {
            assert_abs_diff_eq!(*w, expected, epsilon = 1e-9);
        }
        let two = DensePcm::from_rows(&[vec![1.0, 4.0], vec![0.25, 1.0]]).unwrap();
        let e = principal_eigen(&two, 10_000, 1e-10).unwrap();
        assert_abs_diff_eq!(e.lambda_max, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.weights[0], 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(e.weights[1], 0.2, epsilon = 1e-12);
    }

    #[test]
    fn eigen_reports_non_convergence() {
        match principal_eigen(&matrix_b(), 1, 1e-15) {
            Err(Error::EigenNotConverged { iterations: 1, residual }) => assert!(residual > 0.0),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn consistency_of_b() {
        let r = consistency_report(&matrix_b()).unwrap();
        assert_abs_diff_eq!(r.ci, 0.00915, epsilon = 1e-3);
        assert_abs_diff_eq!(r.cr.unwrap(), 0.0158, epsilon = 1e-3);
        assert_eq!(r.ri_used, Some(0.58));
        assert_abs_diff_eq!(r.max_triangle_residual, 1.5f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn consistency_of_consistent_and_small() {
        let r = consistency_report(&matrix_a()).unwrap();
        assert_abs_diff_eq!(r.ci, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(r.cr.unwrap(), 0.0, epsilon = 1e-9);
        let two = DensePcm::from_rows(&[vec![1.0, 7.0], vec![1.0 / 7.0, 1.0]]).unwrap();
        let r = consistency_report(&two).unwrap();
        assert_eq!(r.ci, 0.0);
        assert_eq!(r.cr, Some(0.0));
    }

    #[test]
    fn cr_unavailable_above_table() {
        let x: Vec<f64> = (0..16).map(|k| 0.1 * k as f64).collect();
        let p = complete_from_scores(&ScoreVector::centered(x)).unwrap();
        let r = consistency_report(&p).unwrap();
        assert!(r.cr.is_none());
        assert_abs_diff_eq!(r.ci, 0.0, epsilon = 1e-9);
        assert_eq!(random_index(10), Some(1.49));
        assert_eq!(random_index(0), None);
    }

    #[test]
    fn completion_examples() {
        let x = ScoreVector::centered(
            [120.0f64, 40.0, 8.0, 4.0, 1.0].iter().map(|v| v.ln()).collect(),
        );
        let p = complete_from_scores(&x).unwrap();
        for (k, expected) in [1.0, 3.0, 15.0, 30.0, 120.0].iter().enumerate() {
            assert_abs_diff_eq!(p.get(0, k), *expected, epsilon = 1e-6);
        }
        let zero = complete_from_scores(&ScoreVector::centered(vec![0.0; 4])).unwrap();
        assert!(zero.entries().iter().all(|&v| v == 1.0));
        let pair = complete_from_scores(&ScoreVector::centered(vec![3f64.ln(), 0.0])).unwrap();
        assert_abs_diff_eq!(pair.get(0, 1), 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pair.get(1, 0), 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn completion_overflow_names_pair() {
        let x = ScoreVector::centered(vec![0.0, 400.0, -400.0]);
        match complete_from_scores(&x) {
            Err(Error::Overflow { i, j, .. }) => assert_eq!((i, j), (1, 2)),
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    #[test]
    fn projection_examples() {
        let b = matrix_b();
        assert_eq!(reciprocal_projection(&b).unwrap().entries(), b.entries());

        let raw = DensePcm::from_rows(&[vec![1.0, 2.0], vec![0.4, 1.0]]).unwrap();
        let p = reciprocal_projection(&raw).unwrap();
        assert_abs_diff_eq!(p.get(0, 1), 5f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(p.get(0, 1), 2.23607, epsilon = 1e-5);
        assert_eq!(p.get(1, 0), 1.0 / p.get(0, 1));

        let bad = DensePcm::from_rows(&[vec![1.0, -2.0], vec![0.4, 1.0]]).unwrap();
        assert!(matches!(
            reciprocal_projection(&bad),
            Err(Error::NonPositive { i: 0, j: 1, .. })
        ));
    }

    #[test]
    fn triangle_examples() {
        let t = [(0, 1, 2), (2, 0, 1)];
        for r in triangle_residuals(&matrix_a(), &t) {
            assert_abs_diff_eq!(r, 0.0, epsilon = 1e-15);
        }
        let r = triangle_residuals(&matrix_b(), &[(0, 1, 2)]);
        assert_abs_diff_eq!(r[0], 1.5f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(r[0], 0.40546, epsilon = 1e-5);
    }

    fn scores_strategy() -> impl Strategy<Value = Vec<f64>> {
        (2usize..9).prop_flat_map(|n| prop::collection::vec(-5.0f64..5.0, n))
    }

    proptest! {
        #[test]
        fn completion_is_consistent(x in scores_strategy()) {
            let p = complete_from_scores(&ScoreVector::centered(x.clone())).unwrap();
            let n = x.len();
            let mut triples = Vec::new();
            for i in 0..n { for j in 0..n { for k in 0..n {
                if i != j && j != k && i != k { triples.push((i, j, k)); }
            }}}
            for r in triangle_residuals(&p, &triples) {
                prop_assert!(r <= 1e-9);
            }
            prop_assert!(validate(&p, DEFAULT_RECIPROCITY_TOL).is_valid());
            let report = consistency_report(&p).unwrap();
            prop_assert!(report.ci.abs() <= 1e-6);
            prop_assert!(report.lambda_max >= n as f64 - 1e-9);
        }

        #[test]
        fn projection_is_idempotent(entries in prop::collection::vec(0.01f64..100.0, 16)) {
            let raw = DensePcm::new(Array2::from_shape_vec((4, 4), entries).unwrap()).unwrap();
            let once = reciprocal_projection(&raw).unwrap();
            let twice = reciprocal_projection(&once).unwrap();
            prop_assert!(validate(&once, DEFAULT_RECIPROCITY_TOL).is_valid());
            for (a, b) in once.entries().iter().zip(twice.entries().iter()) {
                prop_assert!((a.ln() - b.ln()).abs() <= 1e-12);
            }
        }

        #[test]
        fn eigenvector_is_scale_free(x in scores_strategy(), shift in -3.0f64..3.0) {
            // Shifting every score multiplies the true weights by a constant.
            let shifted: Vec<f64> = x.iter().map(|v| v + shift).collect();
            let p = complete_from_log_scores(&x).unwrap();
            let q = complete_from_log_scores(&shifted).unwrap();
            let e = principal_eigen(&p, 10_000, 1e-10).unwrap();
            let f = principal_eigen(&q, 10_000, 1e-10).unwrap();
            let total: f64 = x.iter().map(|v| v.exp()).sum();
            for k in 0..x.len() {
                prop_assert!((e.weights[k] - f.weights[k]).abs() <= 1e-9);
                prop_assert!((e.weights[k] - x[k].exp() / total).abs() <= 1e-9);
            }
        }
    }
}
