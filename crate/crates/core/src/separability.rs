//! Threshold predicates and their Boolean cascades, the single-functional
//! separability census, Monte Carlo experiments over it, and constructive builders
//! for two-neuron and k-neuron separators.
//!
//! All comparisons are exact in double precision. Thresholds are computed with the
//! same [`dot`] kernel that evaluates predicates, so a point used to place a
//! threshold lies exactly on it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds;
use crate::error::{Result, SepError};
use crate::io::{ExperimentCell, ExperimentConfig, ExperimentReport};
use crate::linalg::{dot, norm};
use crate::sampling::{derive_stream, sample, DistributionKind, DistributionSpec, FeatureMatrix, SeedSpec};

/// One threshold neuron: `<w, x> >= theta` when closed, `<w, x> > theta` when open.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPredicate")]
pub struct LinearPredicate {
    #[serde(rename = "w")]
    weights: Vec<f64>,
    #[serde(rename = "theta")]
    threshold: f64,
    closed: bool,
}

#[derive(Deserialize)]
struct RawPredicate {
    w: Vec<f64>,
    theta: f64,
    closed: bool,
}

impl TryFrom<RawPredicate> for LinearPredicate {
    type Error = SepError;

    fn try_from(raw: RawPredicate) -> Result<Self> {
        LinearPredicate::new(raw.w, raw.theta, raw.closed)
    }
}

impl LinearPredicate {
    pub fn new(weights: Vec<f64>, threshold: f64, closed: bool) -> Result<Self> {
        if weights.is_empty() {
            return Err(SepError::domain("predicate weights must be non-empty"));
        }
        if weights.iter().chain([&threshold]).any(|v| !v.is_finite()) {
            return Err(SepError::domain("predicate weights and threshold must be finite"));
        }
        if weights.iter().all(|w| *w == 0.0) {
            return Err(SepError::domain("predicate weights must not all be zero"));
        }
        Ok(LinearPredicate { weights, threshold, closed })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> bool {
        let v = dot(&self.weights, x);
        if self.closed {
            v >= self.threshold
        } else {
            v > self.threshold
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<bool> {
        if x.len() != self.dim() {
            return Err(SepError::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(self.eval_unchecked(x))
    }

    /// The complementary predicate: open becomes closed (and back) with `(-w, -theta)`.
    pub fn negate(&self) -> LinearPredicate {
        LinearPredicate {
            weights: self.weights.iter().map(|w| -w).collect(),
            threshold: -self.threshold,
            closed: !self.closed,
        }
    }
}

/// Free-function form of [`LinearPredicate::eval`].
pub fn eval_predicate(p: &LinearPredicate, x: &[f64]) -> Result<bool> {
    p.eval(x)
}

/// AND of one or more predicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawClause")]
pub struct ConjunctionClause {
    predicates: Vec<LinearPredicate>,
}

#[derive(Deserialize)]
struct RawClause {
    predicates: Vec<LinearPredicate>,
}

impl TryFrom<RawClause> for ConjunctionClause {
    type Error = SepError;

    fn try_from(raw: RawClause) -> Result<Self> {
        ConjunctionClause::new(raw.predicates)
    }
}

impl ConjunctionClause {
    pub fn new(predicates: Vec<LinearPredicate>) -> Result<Self> {
        let Some(first) = predicates.first() else {
            return Err(SepError::domain("a clause needs at least one predicate"));
        };
        let dim = first.dim();
        if let Some(p) = predicates.iter().find(|p| p.dim() != dim) {
            return Err(SepError::DimensionMismatch { expected: dim, got: p.dim() });
        }
        Ok(ConjunctionClause { predicates })
    }

    pub fn single(p: LinearPredicate) -> Self {
        ConjunctionClause { predicates: vec![p] }
    }

    pub fn predicates(&self) -> &[LinearPredicate] {
        &self.predicates
    }

    pub fn len(&self) -> usize {
        self.predicates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predicates.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.predicates[0].dim()
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> bool {
        self.predicates.iter().all(|p| p.eval_unchecked(x))
    }

    pub fn eval(&self, x: &[f64]) -> Result<bool> {
        if x.len() != self.dim() {
            return Err(SepError::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(self.eval_unchecked(x))
    }
}

/// OR of conjunctive clauses. The empty cascade is false everywhere.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "RawCascade")]
pub struct CascadePredicate {
    clauses: Vec<ConjunctionClause>,
}

#[derive(Deserialize)]
struct RawCascade {
    clauses: Vec<ConjunctionClause>,
}

impl TryFrom<RawCascade> for CascadePredicate {
    type Error = SepError;

    fn try_from(raw: RawCascade) -> Result<Self> {
        CascadePredicate::new(raw.clauses)
    }
}

impl CascadePredicate {
    pub fn new(clauses: Vec<ConjunctionClause>) -> Result<Self> {
        if let Some(first) = clauses.first() {
            let dim = first.dim();
            if let Some(c) = clauses.iter().find(|c| c.dim() != dim) {
                return Err(SepError::DimensionMismatch { expected: dim, got: c.dim() });
            }
        }
        Ok(CascadePredicate { clauses })
    }

    pub fn empty() -> Self {
        CascadePredicate::default()
    }

    pub fn clauses(&self) -> &[ConjunctionClause] {
        &self.clauses
    }

    /// Input dimension, or `None` for the empty cascade.
    pub fn dim(&self) -> Option<usize> {
        self.clauses.first().map(ConjunctionClause::dim)
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> bool {
        self.clauses.iter().any(|c| c.eval_unchecked(x))
    }

    pub fn eval(&self, x: &[f64]) -> Result<bool> {
        match self.dim() {
            Some(d) if d != x.len() => Err(SepError::DimensionMismatch { expected: d, got: x.len() }),
            _ => Ok(self.eval_unchecked(x)),
        }
    }

    /// Disjunction of `self` and `other`.
    pub fn or(mut self, other: CascadePredicate) -> Result<Self> {
        self.clauses.extend(other.clauses);
        CascadePredicate::new(self.clauses)
    }
}

pub fn eval_cascade(c: &CascadePredicate, x: &[f64]) -> Result<bool> {
    c.eval(x)
}

/// `l_y(x) = <y, x> - |y|^2` as a closed predicate: true on `y` itself and on every
/// point that fails to be separated from `y`.
pub fn cap_functional(y: &[f64]) -> Result<LinearPredicate> {
    if y.iter().all(|v| *v == 0.0) {
        return Err(SepError::domain("cap functional needs a non-zero query point"));
    }
    LinearPredicate::new(y.to_vec(), dot(y, y), true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusResult {
    pub separable_count: usize,
    /// `N / (M - 1)`; may exceed 1 for very small samples.
    pub f1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_point: Option<Vec<bool>>,
}

const CENSUS_BLOCK: usize = 64;

/// Row maxima of the Gram matrix `X X^T` with the diagonal excluded, computed over
/// the upper triangle in square tiles.
fn gram_offdiag_row_max(x: &FeatureMatrix) -> Vec<f64> {
    let m = x.rows();
    let blocks = m.div_ceil(CENSUS_BLOCK);
    let span = |b: usize| b * CENSUS_BLOCK..((b + 1) * CENSUS_BLOCK).min(m);
    (0..blocks)
        .into_par_iter()
        .fold(
            || vec![f64::NEG_INFINITY; m],
            |mut acc, bi| {
                for bj in bi..blocks {
                    for i in span(bi) {
                        let ri = x.row(i);
                        let start = if bi == bj { i + 1 } else { span(bj).start };
                        let mut best_i = acc[i];
                        for j in start..span(bj).end {
                            let g = dot(ri, x.row(j));
                            best_i = best_i.max(g);
                            if g > acc[j] {
                                acc[j] = g;
                            }
                        }
                        acc[i] = best_i;
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![f64::NEG_INFINITY; m],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(u, v)| *u = u.max(v));
                a
            },
        )
}

/// Counts rows `y` with `<y, x> < |y|^2` strictly for every other row `x`, using the
/// off-diagonal row maxima of the Gram matrix against its diagonal.
pub fn census(sample: &FeatureMatrix) -> Result<CensusResult> {
    let m = sample.rows();
    if m < 2 {
        return Err(SepError::domain("census needs at least two points"));
    }
    let row_max = gram_offdiag_row_max(sample);
    let per_point: Vec<bool> = sample
        .iter_rows()
        .zip(&row_max)
        .map(|(y, &mx)| mx < dot(y, y))
        .collect();
    let separable_count = per_point.iter().filter(|s| **s).count();
    Ok(CensusResult {
        separable_count,
        f1: separable_count as f64 / (m as f64 - 1.0),
        per_point: Some(per_point),
    })
}

fn median(sorted: &[f64]) -> f64 {
    let k = sorted.len();
    if k % 2 == 1 {
        sorted[k / 2]
    } else {
        0.5 * (sorted[k / 2 - 1] + sorted[k / 2])
    }
}

fn cell_seed(master: u64, kind: DistributionKind, n: usize) -> SeedSpec {
    let tag = match kind {
        DistributionKind::Ball => 1u64,
        DistributionKind::Cube => 2,
        DistributionKind::Gaussian => 3,
        DistributionKind::Ellipsoid => 4,
    };
    derive_stream(SeedSpec::new(master), (tag << 32) | n as u64)
}

/// Runs the census on `repeats` independent samples for every `(distribution, n)`.
///
/// Repeat `r` of a cell always draws from the same derived stream, so the report is
/// independent of scheduling and of the order of `distributions` and `n_list`.
pub fn mc_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let mut cells = Vec::new();
    for &kind in &config.distributions {
        for &n in &config.n_list {
            cells.push((kind, n, DistributionSpec::new(kind, n)?));
        }
    }
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..config.repeats).map(move |r| (c, r)))
        .collect();
    let f1s = jobs
        .par_iter()
        .map(|&(c, r)| {
            let (kind, n, ref spec) = cells[c];
            let seed = derive_stream(cell_seed(config.seed, kind, n), r as u64);
            let x = sample(spec, config.m, seed)?;
            Ok(census(&x)?.f1)
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut out = Vec::with_capacity(cells.len());
    for (c, (kind, n, _)) in cells.iter().enumerate() {
        let values = f1s[c * config.repeats..(c + 1) * config.repeats].to_vec();
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        let theory_ball = match kind {
            DistributionKind::Ball => Some(bounds::p1_lower_bound_max(*n, config.m as f64)?.value),
            _ => None,
        };
        out.push(ExperimentCell {
            distribution: *kind,
            n: *n,
            f1_min: sorted[0],
            f1_median: median(&sorted),
            f1_max: sorted[sorted.len() - 1],
            f1_values: values,
            theory_ball,
        });
    }
    Ok(ExperimentReport::new(config.clone(), out))
}

fn check_query(y: &[f64], others: &FeatureMatrix) -> Result<()> {
    if y.len() != others.cols() {
        return Err(SepError::DimensionMismatch { expected: others.cols(), got: y.len() });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(SepError::domain("query point must be finite"));
    }
    Ok(())
}

fn verify_clause(clause: &ConjunctionClause, y: &[f64], others: &FeatureMatrix) -> bool {
    clause.eval_unchecked(y) && others.iter_rows().all(|x| !clause.eval_unchecked(x))
}

/// Householder reflection `H = I - 2 v v^T / (v^T v)` mapping `u / |u|` onto a
/// multiple of `e_1`; coordinates `2..n` of `H x` span the orthogonal complement of `u`.
struct Complement {
    v: Vec<f64>,
    vv: f64,
}

impl Complement {
    fn new(u: &[f64]) -> Self {
        let len = norm(u);
        let mut v: Vec<f64> = u.iter().map(|x| x / len).collect();
        v[0] += if v[0] >= 0.0 { 1.0 } else { -1.0 };
        let vv = dot(&v, &v);
        Complement { v, vv }
    }

    fn reflect(&self, x: &[f64]) -> Vec<f64> {
        let s = 2.0 * dot(&self.v, x) / self.vv;
        x.iter().zip(&self.v).map(|(xi, vi)| xi - s * vi).collect()
    }

    fn project(&self, x: &[f64]) -> Vec<f64> {
        let mut z = self.reflect(x);
        z.remove(0);
        z
    }

    fn lift(&self, w: &[f64]) -> Vec<f64> {
        let mut z = Vec::with_capacity(w.len() + 1);
        z.push(0.0);
        z.extend_from_slice(w);
        self.reflect(&z)
    }
}

/// Regularised Fisher direction between the point `y` and the cloud `s`.
fn fisher_direction(y: &[f64], s: &[Vec<f64>]) -> Option<Vec<f64>> {
    let d = y.len();
    let flat: Vec<f64> = s.iter().flatten().copied().collect();
    let mean = crate::linalg::column_means(&flat, s.len(), d);
    let cov = crate::linalg::covariance(&flat, s.len(), d, &mean);
    let trace = cov.trace();
    let ridge = if trace > 0.0 { 1e-3 * trace / d as f64 } else { 1.0 };
    let a = cov + nalgebra::DMatrix::<f64>::identity(d, d) * ridge;
    let diff = nalgebra::DVector::from_iterator(d, y.iter().zip(&mean).map(|(a, b)| a - b));
    let w = a.cholesky()?.solve(&diff);
    Some(w.iter().copied().collect())
}

/// Minimum-norm `w` with `<w, y - s_i> = 1` for every `s_i`, when the differences are
/// linearly independent.
fn exact_direction(y: &[f64], s: &[Vec<f64>]) -> Option<Vec<f64>> {
    let d = y.len();
    let k = s.len();
    if k > d {
        return None;
    }
    let rows = nalgebra::DMatrix::from_row_iterator(
        k,
        d,
        s.iter().flat_map(|si| y.iter().zip(si).map(|(a, b)| a - b)),
    );
    let gram = &rows * rows.transpose();
    let alpha = gram.lu().solve(&nalgebra::DVector::from_element(k, 1.0))?;
    let w = rows.transpose() * alpha;
    Some(w.iter().copied().collect())
}

/// Two-neuron separator: the cap functional of `y`, followed when needed by a second
/// functional orthogonal to it that removes the points left inside the cap.
pub fn build_two_neuron(y: &[f64], others: &FeatureMatrix) -> Result<ConjunctionClause> {
    check_query(y, others)?;
    let first = cap_functional(y)?;
    let survivors: Vec<&[f64]> = others.iter_rows().filter(|x| first.eval_unchecked(x)).collect();
    if survivors.is_empty() {
        return Ok(ConjunctionClause::single(first));
    }
    let n = y.len();
    if n < 2 {
        return Err(SepError::NotSeparable("no orthogonal complement in one dimension".into()));
    }

    let basis = Complement::new(y);
    let y_proj = basis.project(y);
    let s_proj: Vec<Vec<f64>> = survivors.iter().map(|s| basis.project(s)).collect();

    let candidates = [
        fisher_direction(&y_proj, &s_proj),
        if survivors.len() < n { exact_direction(&y_proj, &s_proj) } else { None },
    ];
    for w_proj in candidates.into_iter().flatten() {
        if w_proj.iter().any(|v| !v.is_finite()) || w_proj.iter().all(|v| *v == 0.0) {
            continue;
        }
        let w = basis.lift(&w_proj);
        let theta = dot(&w, y);
        let Ok(second) = LinearPredicate::new(w, theta, true) else {
            continue;
        };
        let clause = ConjunctionClause { predicates: vec![first.clone(), second] };
        if verify_clause(&clause, y, others) {
            return Ok(clause);
        }
    }
    Err(SepError::NotSeparable(format!(
        "no orthogonal second functional separates the {} points inside the cap",
        survivors.len()
    )))
}

/// Greedy k-neuron separator: repeatedly takes the farthest point not yet excluded and
/// adds the perpendicular-bisector predicate between it and `y` (closed towards `y`).
pub fn build_conjunction_separator(y: &[f64], others: &FeatureMatrix, max_k: usize) -> Result<ConjunctionClause> {
    check_query(y, others)?;
    if others.iter_rows().any(|x| x == y) {
        return Err(SepError::domain("query point coincides with a row of the set"));
    }
    let mut uncovered: Vec<usize> = (0..others.rows()).collect();
    let mut predicates = Vec::new();
    while !uncovered.is_empty() {
        if predicates.len() == max_k {
            return Err(SepError::NotSeparable(format!(
                "{} points remain after {max_k} predicates",
                uncovered.len()
            )));
        }
        let far = *uncovered
            .iter()
            .max_by(|&&a, &&b| {
                let da = dist2(y, others.row(a));
                let db = dist2(y, others.row(b));
                da.total_cmp(&db).then(b.cmp(&a))
            })
            .expect("non-empty");
        let z = others.row(far);
        let w: Vec<f64> = y.iter().zip(z).map(|(a, b)| a - b).collect();
        let mid: Vec<f64> = y.iter().zip(z).map(|(a, b)| 0.5 * (a + b)).collect();
        let theta = dot(&w, &mid);
        let p = LinearPredicate::new(w, theta, true)?;
        if !p.eval_unchecked(y) || p.eval_unchecked(z) {
            return Err(SepError::NotSeparable("query and a point are too close to bisect".into()));
        }
        uncovered.retain(|&i| p.eval_unchecked(others.row(i)));
        predicates.push(p);
    }
    let clause = ConjunctionClause::new(predicates)?;
    debug_assert!(verify_clause(&clause, y, others));
    Ok(clause)
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
