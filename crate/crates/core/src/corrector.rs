//! One-trial correctors for a legacy classifier: PCA whitening, spherical-cap and
//! Fisher cap models, the two-neuron corrector, a hinge-loss baseline, cascade
//! assembly and evaluation.
//!
//! A model flags `x` (suppresses the legacy decision) when its cascade is true on the
//! whitened image of `x`.

use std::collections::BTreeMap;

use nalgebra::{DVector, SymmetricEigen};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Result, SepError};
use crate::linalg::{column_means, covariance, dot, norm};
use crate::sampling::{FeatureMatrix, SeedSpec};
use crate::separability::{build_two_neuron, CascadePredicate, ConjunctionClause, LinearPredicate};

pub const DEFAULT_COND_FLOOR: f64 = 1e-10;
const ORTHONORMAL_TOL: f64 = 1e-8;

/// `x -> scale * (basis (x - mean))`, a projection onto `k` principal directions,
/// optionally rescaled to unit variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWhitening")]
pub struct WhiteningModel {
    mean: Vec<f64>,
    basis: Vec<Vec<f64>>,
    scale: Vec<f64>,
}

#[derive(Deserialize)]
struct RawWhitening {
    mean: Vec<f64>,
    basis: Vec<Vec<f64>>,
    scale: Vec<f64>,
}

impl TryFrom<RawWhitening> for WhiteningModel {
    type Error = SepError;

    fn try_from(raw: RawWhitening) -> Result<Self> {
        WhiteningModel::new(raw.mean, raw.basis, raw.scale)
    }
}

impl WhiteningModel {
    pub fn new(mean: Vec<f64>, basis: Vec<Vec<f64>>, scale: Vec<f64>) -> Result<Self> {
        let n = mean.len();
        let k = basis.len();
        if n == 0 || k == 0 {
            return Err(SepError::domain("whitening needs n >= 1 and k >= 1"));
        }
        if k > n {
            return Err(SepError::domain(format!("k = {k} exceeds the input dimension {n}")));
        }
        if scale.len() != k {
            return Err(SepError::DimensionMismatch { expected: k, got: scale.len() });
        }
        if let Some(row) = basis.iter().find(|r| r.len() != n) {
            return Err(SepError::DimensionMismatch { expected: n, got: row.len() });
        }
        if mean.iter().chain(basis.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(SepError::domain("whitening contains non-finite values"));
        }
        if scale.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(SepError::domain("whitening scale entries must be positive and finite"));
        }
        for i in 0..k {
            for j in 0..=i {
                let target = if i == j { 1.0 } else { 0.0 };
                if (dot(&basis[i], &basis[j]) - target).abs() > ORTHONORMAL_TOL {
                    return Err(SepError::domain("whitening basis rows are not orthonormal"));
                }
            }
        }
        Ok(WhiteningModel { mean, basis, scale })
    }

    /// The raw space itself.
    pub fn identity(n: usize) -> Result<Self> {
        WhiteningModel::centering(vec![0.0; n])
    }

    /// Translation by `-mean` only.
    pub fn centering(mean: Vec<f64>) -> Result<Self> {
        let n = mean.len();
        let basis = (0..n)
            .map(|i| {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                e
            })
            .collect();
        WhiteningModel::new(mean, basis, vec![1.0; n])
    }

    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn k(&self) -> usize {
        self.basis.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(SepError::DimensionMismatch { expected: self.input_dim(), got: x.len() });
        }
        Ok(self.transform_unchecked(x))
    }

    fn transform_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let centered: Vec<f64> = x.iter().zip(&self.mean).map(|(a, b)| a - b).collect();
        self.basis.iter().zip(&self.scale).map(|(b, s)| s * dot(b, &centered)).collect()
    }

    pub fn transform_matrix(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        if x.cols() != self.input_dim() {
            return Err(SepError::DimensionMismatch { expected: self.input_dim(), got: x.cols() });
        }
        let data: Vec<f64> = x
            .data()
            .par_chunks_exact(x.cols())
            .flat_map_iter(|row| self.transform_unchecked(row))
            .collect();
        FeatureMatrix::new(x.rows(), self.k(), data)
    }

    /// Pulls a k-space direction back to input space: `basis^T (scale * w)`.
    pub fn pull_back(&self, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.input_dim()];
        for ((b, s), wi) in self.basis.iter().zip(&self.scale).zip(w) {
            out.iter_mut().zip(b).for_each(|(o, bj)| *o += s * wi * bj);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaFit {
    pub mean: Vec<f64>,
    /// Descending, clamped at zero.
    pub eigenvalues: Vec<f64>,
    /// Unit eigenvectors as rows, in eigenvalue order.
    pub basis: Vec<Vec<f64>>,
}

/// Eigendecomposition of the sample covariance (divisor `M - 1`). Each eigenvector is
/// signed so that its largest-magnitude entry is positive.
pub fn fit_pca(data: &FeatureMatrix) -> Result<PcaFit> {
    let (m, n) = (data.rows(), data.cols());
    if m < 2 {
        return Err(SepError::domain("PCA needs at least two rows"));
    }
    let mean = column_means(data.data(), m, n);
    let cov = covariance(data.data(), m, n, &mean);
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let basis = order
        .iter()
        .map(|&i| {
            let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
            let pivot = v
                .iter()
                .copied()
                .fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
            if pivot < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            v
        })
        .collect();
    Ok(PcaFit { mean, eigenvalues, basis })
}

fn check_spectrum(eigenvalues: &[f64]) -> Result<f64> {
    if eigenvalues.is_empty() {
        return Err(SepError::domain("empty spectrum"));
    }
    if eigenvalues.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
        return Err(SepError::domain("eigenvalues must be finite and non-negative"));
    }
    let total: f64 = eigenvalues.iter().sum();
    if total == 0.0 {
        return Err(SepError::domain("spectrum is identically zero"));
    }
    Ok(total)
}

/// Leading components whose share of the variance strictly exceeds the expected
/// broken-stick fragment `b_i = (1/p) sum_{j=i..p} 1/j`, stopping at the first failure.
pub fn broken_stick_count(eigenvalues: &[f64]) -> Result<usize> {
    let total = check_spectrum(eigenvalues)?;
    let p = eigenvalues.len();
    let mut tail = vec![0.0; p + 1];
    for j in (1..=p).rev() {
        tail[j - 1] = tail[j] + 1.0 / j as f64;
    }
    Ok(eigenvalues
        .iter()
        .enumerate()
        .take_while(|(i, l)| *l / total > tail[*i] / p as f64)
        .count())
}

/// Number of eigenvalues strictly above the mean eigenvalue.
pub fn kaiser_count(eigenvalues: &[f64]) -> Result<usize> {
    let total = check_spectrum(eigenvalues)?;
    let mean = total / eigenvalues.len() as f64;
    Ok(eigenvalues.iter().filter(|l| **l > mean).count())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentRule {
    BrokenStick,
    Kaiser,
    Fixed(usize),
}

impl ComponentRule {
    pub fn select(&self, eigenvalues: &[f64]) -> Result<usize> {
        match *self {
            ComponentRule::BrokenStick => broken_stick_count(eigenvalues),
            ComponentRule::Kaiser => kaiser_count(eigenvalues),
            ComponentRule::Fixed(k) => Ok(k),
        }
    }
}

pub fn build_whitening(data: &FeatureMatrix, rule: ComponentRule, whiten: bool) -> Result<WhiteningModel> {
    build_whitening_with_floor(data, rule, whiten, DEFAULT_COND_FLOOR)
}

/// Fits PCA on `data` and keeps the components chosen by `rule`. Every retained
/// eigenvalue must be positive and at least `cond_floor * lambda_1`.
pub fn build_whitening_with_floor(
    data: &FeatureMatrix,
    rule: ComponentRule,
    whiten: bool,
    cond_floor: f64,
) -> Result<WhiteningModel> {
    if !(cond_floor.is_finite() && cond_floor >= 0.0) {
        return Err(SepError::domain("condition floor must be finite and non-negative"));
    }
    let pca = fit_pca(data)?;
    let k = rule.select(&pca.eigenvalues)?;
    if k == 0 {
        return Err(SepError::domain("component rule retained no components"));
    }
    if k > data.cols() {
        return Err(SepError::domain(format!("k = {k} exceeds the dimension {}", data.cols())));
    }
    let lead = pca.eigenvalues[0];
    let max_k = pca
        .eigenvalues
        .iter()
        .take_while(|l| **l > 0.0 && **l >= cond_floor * lead)
        .count();
    if k > max_k {
        return Err(SepError::IllConditioned { requested: k, max_k });
    }
    let scale = if whiten {
        pca.eigenvalues[..k].iter().map(|l| 1.0 / l.sqrt()).collect()
    } else {
        vec![1.0; k]
    };
    let mut basis = pca.basis;
    basis.truncate(k);
    WhiteningModel::new(pca.mean, basis, scale)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectorKind {
    SphericalCap,
    FisherSingle,
    FisherMulti,
    TwoNeuron,
    SvmBaseline,
    /// OR of models of different kinds.
    Cascade,
}

impl CorrectorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CorrectorKind::SphericalCap => "spherical_cap",
            CorrectorKind::FisherSingle => "fisher_single",
            CorrectorKind::FisherMulti => "fisher_multi",
            CorrectorKind::TwoNeuron => "two_neuron",
            CorrectorKind::SvmBaseline => "svm_baseline",
            CorrectorKind::Cascade => "cascade",
        }
    }
}

pub type Metadata = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel")]
pub struct CorrectorModel {
    kind: CorrectorKind,
    whitening: WhiteningModel,
    cascade: CascadePredicate,
    #[serde(default)]
    metadata: Metadata,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    kind: CorrectorKind,
    whitening: WhiteningModel,
    cascade: CascadePredicate,
    #[serde(default)]
    metadata: Metadata,
}

impl TryFrom<RawModel> for CorrectorModel {
    type Error = SepError;

    fn try_from(raw: RawModel) -> Result<Self> {
        CorrectorModel::new(raw.kind, raw.whitening, raw.cascade, raw.metadata)
    }
}

impl CorrectorModel {
    pub fn new(
        kind: CorrectorKind,
        whitening: WhiteningModel,
        cascade: CascadePredicate,
        metadata: Metadata,
    ) -> Result<Self> {
        if let Some(d) = cascade.dim() {
            if d != whitening.k() {
                return Err(SepError::DimensionMismatch { expected: whitening.k(), got: d });
            }
        }
        Ok(CorrectorModel { kind, whitening, cascade, metadata })
    }

    pub fn kind(&self) -> CorrectorKind {
        self.kind
    }

    pub fn whitening(&self) -> &WhiteningModel {
        &self.whitening
    }

    pub fn cascade(&self) -> &CascadePredicate {
        &self.cascade
    }

    pub fn metadata(&self) -> &Metadata {
        &self.metadata
    }

    pub fn input_dim(&self) -> usize {
        self.whitening.input_dim()
    }

    /// True when `x` is flagged as a mistake.
    pub fn apply(&self, x: &[f64]) -> Result<bool> {
        let z = self.whitening.transform(x)?;
        if self.cascade.clauses().is_empty() {
            return Ok(false);
        }
        self.cascade.eval(&z)
    }

    pub fn apply_matrix(&self, x: &FeatureMatrix) -> Result<Vec<bool>> {
        if x.cols() != self.input_dim() {
            return Err(SepError::DimensionMismatch { expected: self.input_dim(), got: x.cols() });
        }
        x.data().par_chunks_exact(x.cols()).map(|row| self.apply(row)).collect()
    }
}

fn unit_cap_model(
    kind: CorrectorKind,
    whitening: WhiteningModel,
    w: Vec<f64>,
    anchor: &[f64],
    metadata: Metadata,
) -> Result<CorrectorModel> {
    let len = norm(&w);
    if !(len > 0.0 && len.is_finite()) {
        return Err(SepError::domain("degenerate direction: query coincides with the centre"));
    }
    let u: Vec<f64> = w.iter().map(|v| v / len).collect();
    let theta = dot(&u, anchor);
    let predicate = LinearPredicate::new(u, theta, true)?;
    let cascade = CascadePredicate::new(vec![ConjunctionClause::single(predicate)])?;
    CorrectorModel::new(kind, whitening, cascade, metadata)
}

/// Spherical cap about `center`: flags `x` when `<y'/|y'|, x - center> >= <y'/|y'|, y'>`
/// with `y' = query - center`.
pub fn spherical_cap_about(center: &[f64], query: &[f64]) -> Result<CorrectorModel> {
    if center.len() != query.len() {
        return Err(SepError::DimensionMismatch { expected: center.len(), got: query.len() });
    }
    let whitening = WhiteningModel::centering(center.to_vec())?;
    let shifted = whitening.transform(query)?;
    let metadata = Metadata::from([("query_norm".to_string(), json!(norm(&shifted)))]);
    unit_cap_model(CorrectorKind::SphericalCap, whitening, shifted.clone(), &shifted, metadata)
}

/// Spherical cap centred on the mean of `positives`.
pub fn spherical_cap_corrector(positives: &FeatureMatrix, query: &[f64]) -> Result<CorrectorModel> {
    let mean = column_means(positives.data(), positives.rows(), positives.cols());
    let mut model = spherical_cap_about(&mean, query)?;
    model.metadata.insert("positives".into(), json!(positives.rows()));
    Ok(model)
}

fn member_index(positives: &FeatureMatrix, query: &[f64]) -> Option<usize> {
    positives.iter_rows().position(|r| r == query)
}

/// Fisher cap for one query in the whitened space of `whitening`. The centre is the
/// whitened mean of the positives, leaving the query out when it is one of them.
pub fn fisher_corrector_single(
    positives: &FeatureMatrix,
    query: &[f64],
    whitening: &WhiteningModel,
) -> Result<CorrectorModel> {
    let n = whitening.input_dim();
    if positives.cols() != n {
        return Err(SepError::DimensionMismatch { expected: n, got: positives.cols() });
    }
    let m = positives.rows();
    let mut center = column_means(positives.data(), m, n);
    let member = member_index(positives, query);
    if member.is_some() {
        if m < 2 {
            return Err(SepError::domain("leave-one-out mean needs at least two positives"));
        }
        let k = m as f64;
        center.iter_mut().zip(query).for_each(|(c, y)| *c = (*c * k - y) / (k - 1.0));
    }
    // whitening is affine, so the image of the mean is the mean of the images; when the
    // whitening was fitted on the same positives this centre is exactly zero
    let c = whitening.transform(&center)?;
    let y = whitening.transform(query)?;
    let w: Vec<f64> = y.iter().zip(&c).map(|(a, b)| a - b).collect();
    let metadata = Metadata::from([
        ("positives".to_string(), json!(m)),
        ("leave_one_out".to_string(), json!(member.is_some())),
        ("k".to_string(), json!(whitening.k())),
    ]);
    unit_cap_model(CorrectorKind::FisherSingle, whitening.clone(), w, &y, metadata)
}

/// Pooled-covariance Fisher model `w = (S_tp + S_fp)^-1 (mean_fp - mean_tp)` in whitened
/// space, thresholded at the smallest trash projection so every trash row is flagged.
pub fn fisher_corrector_multi(
    positives: &FeatureMatrix,
    trash: &FeatureMatrix,
    whitening: &WhiteningModel,
) -> Result<CorrectorModel> {
    let k = whitening.k();
    let tp = whitening.transform_matrix(positives)?;
    let fp = whitening.transform_matrix(trash)?;
    let tp_mean = column_means(tp.data(), tp.rows(), k);
    let fp_mean = column_means(fp.data(), fp.rows(), k);
    let pooled = covariance(tp.data(), tp.rows(), k, &tp_mean) + covariance(fp.data(), fp.rows(), k, &fp_mean);
    let diff = DVector::from_iterator(k, fp_mean.iter().zip(&tp_mean).map(|(a, b)| a - b));
    let chol = pooled.cholesky().ok_or_else(|| {
        SepError::Singular(format!("pooled covariance is singular at k = {k}; retain fewer components"))
    })?;
    let w: Vec<f64> = chol.solve(&diff).iter().copied().collect();
    let len = norm(&w);
    if !(len > 0.0 && len.is_finite()) {
        return Err(SepError::domain("positive and trash means coincide"));
    }
    let u: Vec<f64> = w.iter().map(|v| v / len).collect();
    let theta = fp.iter_rows().map(|t| dot(&u, t)).fold(f64::INFINITY, f64::min);
    let predicate = LinearPredicate::new(u, theta, true)?;
    let cascade = CascadePredicate::new(vec![ConjunctionClause::single(predicate)])?;
    let metadata = Metadata::from([
        ("positives".to_string(), json!(tp.rows())),
        ("trash".to_string(), json!(fp.rows())),
        ("k".to_string(), json!(k)),
    ]);
    CorrectorModel::new(CorrectorKind::FisherMulti, whitening.clone(), cascade, metadata)
}

/// Two-neuron corrector for one query in whitened space.
pub fn two_neuron_corrector(
    positives: &FeatureMatrix,
    query: &[f64],
    whitening: &WhiteningModel,
) -> Result<CorrectorModel> {
    let tp = whitening.transform_matrix(positives)?;
    let y = whitening.transform(query)?;
    let clause = build_two_neuron(&y, &tp)?;
    let metadata = Metadata::from([
        ("positives".to_string(), json!(tp.rows())),
        ("neurons".to_string(), json!(clause.len())),
    ]);
    let cascade = CascadePredicate::new(vec![clause])?;
    CorrectorModel::new(CorrectorKind::TwoNeuron, whitening.clone(), cascade, metadata)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub epochs: usize,
    pub step: f64,
    pub regularization: f64,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig { epochs: 50, step: 0.1, regularization: 1e-4, seed: 0 }
    }
}

/// Hinge-loss linear classifier (trash = +1) trained by stochastic subgradient steps
/// with class-balanced sampling, step `step / (1 + lambda * step * t)` and an
/// unregularised bias. Training accuracy is recorded in the metadata.
pub fn svm_baseline(
    positives: &FeatureMatrix,
    trash: &FeatureMatrix,
    whitening: &WhiteningModel,
    config: &SvmConfig,
) -> Result<CorrectorModel> {
    if config.epochs == 0 || !(config.step > 0.0 && config.step.is_finite()) || !(config.regularization >= 0.0) {
        return Err(SepError::domain("svm needs epochs >= 1, step > 0 and regularization >= 0"));
    }
    let k = whitening.k();
    let tp = whitening.transform_matrix(positives)?;
    let fp = whitening.transform_matrix(trash)?;
    let mut rng = SeedSpec::new(config.seed).rng();
    let mut w = vec![0.0; k];
    let mut b = 0.0;
    let steps = config.epochs * (tp.rows() + fp.rows());
    for t in 0..steps {
        let (x, label) = if rng.random::<bool>() {
            (fp.row(rng.random_range(0..fp.rows())), 1.0)
        } else {
            (tp.row(rng.random_range(0..tp.rows())), -1.0)
        };
        let eta = config.step / (1.0 + config.regularization * config.step * t as f64);
        let margin = label * (dot(&w, x) + b);
        let shrink = 1.0 - eta * config.regularization;
        w.iter_mut().for_each(|v| *v *= shrink);
        if margin < 1.0 {
            w.iter_mut().zip(x).for_each(|(v, xi)| *v += eta * label * xi);
            b += eta * label;
        }
    }
    if w.iter().any(|v| !v.is_finite()) || !b.is_finite() {
        return Err(SepError::NonConvergence("weights diverged".into()));
    }
    if w.iter().all(|v| *v == 0.0) {
        return Err(SepError::NonConvergence("weights collapsed to zero".into()));
    }
    let predicate = LinearPredicate::new(w, -b, true)?;
    let correct = fp.iter_rows().filter(|x| predicate.eval_unchecked(x)).count()
        + tp.iter_rows().filter(|x| !predicate.eval_unchecked(x)).count();
    let accuracy = correct as f64 / (tp.rows() + fp.rows()) as f64;
    let cascade = CascadePredicate::new(vec![ConjunctionClause::single(predicate)])?;
    let metadata = Metadata::from([
        ("positives".to_string(), json!(tp.rows())),
        ("trash".to_string(), json!(fp.rows())),
        ("training_accuracy".to_string(), json!(accuracy)),
        ("epochs".to_string(), json!(config.epochs)),
        ("step".to_string(), json!(config.step)),
        ("regularization".to_string(), json!(config.regularization)),
        ("seed".to_string(), json!(config.seed)),
    ]);
    CorrectorModel::new(CorrectorKind::SvmBaseline, whitening.clone(), cascade, metadata)
}

/// OR of the given models, which must share one whitening.
pub fn assemble_cascade(models: &[CorrectorModel]) -> Result<CorrectorModel> {
    let Some(first) = models.first() else {
        return Err(SepError::domain("cannot assemble an empty list of models"));
    };
    let mut cascade = CascadePredicate::empty();
    for m in models {
        if m.whitening != first.whitening {
            return Err(SepError::Incompatible("models use different whitening transforms".into()));
        }
        cascade = cascade.or(m.cascade.clone())?;
    }
    let kind = if models.iter().all(|m| m.kind == first.kind) { first.kind } else { CorrectorKind::Cascade };
    let metadata = Metadata::from([
        ("constituents".to_string(), json!(models.iter().map(|m| m.kind.as_str()).collect::<Vec<_>>())),
    ]);
    CorrectorModel::new(kind, first.whitening.clone(), cascade, metadata)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Positive,
    Trash,
}

impl Label {
    pub fn as_str(&self) -> &'static str {
        match self {
            Label::Positive => "positive",
            Label::Trash => "trash",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: FeatureMatrix,
    labels: Vec<Label>,
}

impl LabeledDataset {
    pub fn new(features: FeatureMatrix, labels: Vec<Label>) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(SepError::DimensionMismatch { expected: features.rows(), got: labels.len() });
        }
        Ok(LabeledDataset { features, labels })
    }

    pub fn from_parts(positives: &FeatureMatrix, trash: &FeatureMatrix) -> Result<Self> {
        if positives.cols() != trash.cols() {
            return Err(SepError::DimensionMismatch { expected: positives.cols(), got: trash.cols() });
        }
        let mut data = positives.data().to_vec();
        data.extend_from_slice(trash.data());
        let mut labels = vec![Label::Positive; positives.rows()];
        labels.extend(std::iter::repeat_n(Label::Trash, trash.rows()));
        LabeledDataset::new(FeatureMatrix::new(labels.len(), positives.cols(), data)?, labels)
    }

    pub fn features(&self) -> &FeatureMatrix {
        &self.features
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    fn indices_of(&self, label: Label) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == label).collect()
    }

    /// Rows labelled `label`; errors when there are none.
    pub fn subset(&self, label: Label) -> Result<FeatureMatrix> {
        let idx = self.indices_of(label);
        if idx.is_empty() {
            return Err(SepError::domain(format!("dataset has no {} rows", label.as_str())));
        }
        self.features.select_rows(&idx)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tp_total: usize,
    pub tp_removed: usize,
    pub fp_total: usize,
    pub fp_removed: usize,
    /// `tp_removed / tp_total`, or 0 when there are no positives.
    pub tp_removal_rate: f64,
    pub fp_removal_rate: f64,
}

fn rate(removed: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        removed as f64 / total as f64
    }
}

pub fn evaluate(model: &CorrectorModel, data: &LabeledDataset) -> Result<Metrics> {
    let flags = model.apply_matrix(&data.features)?;
    let (mut tp_total, mut tp_removed, mut fp_total, mut fp_removed) = (0, 0, 0, 0);
    for (flag, label) in flags.iter().zip(&data.labels) {
        match label {
            Label::Positive => {
                tp_total += 1;
                tp_removed += *flag as usize;
            }
            Label::Trash => {
                fp_total += 1;
                fp_removed += *flag as usize;
            }
        }
    }
    Ok(Metrics {
        tp_total,
        tp_removed,
        fp_total,
        fp_removed,
        tp_removal_rate: rate(tp_removed, tp_total),
        fp_removal_rate: rate(fp_removed, fp_total),
    })
}
