//! Seeded samplers for the unit ball, the cube `[-1, 1]^n`, the standard Gaussian
//! and axis-aligned ellipsoids.
//!
//! Each `(master_seed, stream_id)` pair selects an independent ChaCha8 stream, so a
//! Monte Carlo repeat can be regenerated on any worker without touching the others.

use rand::distr::{Distribution, Open01, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SepError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionKind {
    Ball,
    Cube,
    Gaussian,
    Ellipsoid,
}

impl DistributionKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DistributionKind::Ball => "ball",
            DistributionKind::Cube => "cube",
            DistributionKind::Gaussian => "gaussian",
            DistributionKind::Ellipsoid => "ellipsoid",
        }
    }
}

impl std::str::FromStr for DistributionKind {
    type Err = SepError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ball" => Ok(DistributionKind::Ball),
            "cube" => Ok(DistributionKind::Cube),
            "gaussian" => Ok(DistributionKind::Gaussian),
            "ellipsoid" => Ok(DistributionKind::Ellipsoid),
            other => Err(SepError::domain(format!("unknown distribution '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSpec {
    pub kind: DistributionKind,
    pub n: usize,
    /// Semi-axes `c_i`, present only for [`DistributionKind::Ellipsoid`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub semi_axes: Option<Vec<f64>>,
}

impl DistributionSpec {
    pub fn new(kind: DistributionKind, n: usize) -> Result<Self> {
        if kind == DistributionKind::Ellipsoid {
            return Err(SepError::domain("an ellipsoid needs semi-axes; use DistributionSpec::ellipsoid"));
        }
        let spec = DistributionSpec { kind, n, semi_axes: None };
        spec.validate()?;
        Ok(spec)
    }

    pub fn ellipsoid(semi_axes: Vec<f64>) -> Result<Self> {
        let spec = DistributionSpec {
            kind: DistributionKind::Ellipsoid,
            n: semi_axes.len(),
            semi_axes: Some(semi_axes),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(SepError::domain("dimension n must be at least 1"));
        }
        match (&self.kind, &self.semi_axes) {
            (DistributionKind::Ellipsoid, Some(axes)) => {
                if axes.len() != self.n {
                    return Err(SepError::DimensionMismatch { expected: self.n, got: axes.len() });
                }
                if let Some(bad) = axes.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
                    return Err(SepError::domain(format!("semi-axes must be positive and finite, got {bad}")));
                }
                Ok(())
            }
            (DistributionKind::Ellipsoid, None) => Err(SepError::domain("ellipsoid requires semi_axes")),
            (_, Some(_)) => Err(SepError::domain("semi_axes are only valid for an ellipsoid")),
            (_, None) => Ok(()),
        }
    }
}

/// `rows x cols` matrix of finite reals stored row-major; one sample vector per row.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(SepError::domain(format!("matrix must be non-empty, got {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(SepError::DimensionMismatch { expected: rows * cols, got: data.len() });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(SepError::domain(format!(
                "non-finite entry at row {}, column {}",
                i / cols,
                i % cols
            )));
        }
        Ok(FeatureMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(SepError::DimensionMismatch { expected: cols, got: r.len() });
            }
            data.extend_from_slice(r);
        }
        FeatureMatrix::new(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.cols)
    }

    /// Rows at `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            if i >= self.rows {
                return Err(SepError::domain(format!("row index {i} out of range")));
            }
            data.extend_from_slice(self.row(i));
        }
        FeatureMatrix::new(indices.len(), self.cols, data)
    }

    /// Applies `f` to every row, producing a matrix with `out_cols` columns.
    pub fn map_rows(&self, out_cols: usize, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self> {
        let mut data = Vec::with_capacity(self.rows * out_cols);
        for row in self.iter_rows() {
            let mapped = f(row);
            if mapped.len() != out_cols {
                return Err(SepError::DimensionMismatch { expected: out_cols, got: mapped.len() });
            }
            data.extend(mapped);
        }
        FeatureMatrix::new(self.rows, out_cols, data)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64) -> Self {
        SeedSpec { master_seed, stream_id: 0 }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

// splitmix64 finaliser; a bijection on u64
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child stream `index` of `seed`. For a fixed parent the map `index -> stream_id` is
/// injective, so sibling streams never collide.
pub fn derive_stream(seed: SeedSpec, index: u64) -> SeedSpec {
    let base = mix64(seed.stream_id ^ 0x6a09_e667_f3bc_c909);
    let stream_id = mix64(base.wrapping_add(index.wrapping_mul(0x9e37_79b9_7f4a_7c15)));
    SeedSpec { master_seed: seed.master_seed, stream_id }
}

fn unit_ball_row<R: rand::Rng>(rng: &mut R, n: usize, out: &mut [f64]) {
    loop {
        let mut norm2 = 0.0;
        for v in out.iter_mut() {
            let g: f64 = StandardNormal.sample(rng);
            *v = g;
            norm2 += g * g;
        }
        if norm2 > 0.0 {
            let u: f64 = Open01.sample(rng);
            let radius = u.powf(1.0 / n as f64);
            let s = radius / norm2.sqrt();
            out.iter_mut().for_each(|v| *v *= s);
            return;
        }
    }
}

/// Draws `m` i.i.d. rows from `dist` using the stream selected by `seed`.
pub fn sample(dist: &DistributionSpec, m: usize, seed: SeedSpec) -> Result<FeatureMatrix> {
    dist.validate()?;
    if m == 0 {
        return Err(SepError::domain("sample size m must be at least 1"));
    }
    let n = dist.n;
    let mut rng = seed.rng();
    let mut data = vec![0.0; m * n];
    match dist.kind {
        DistributionKind::Ball => {
            for row in data.chunks_exact_mut(n) {
                unit_ball_row(&mut rng, n, row);
            }
        }
        DistributionKind::Ellipsoid => {
            let axes = dist.semi_axes.as_deref().expect("validated");
            for row in data.chunks_exact_mut(n) {
                unit_ball_row(&mut rng, n, row);
                row.iter_mut().zip(axes).for_each(|(v, c)| *v *= c);
            }
        }
        DistributionKind::Cube => {
            let u = Uniform::new_inclusive(-1.0, 1.0).expect("valid range");
            data.iter_mut().for_each(|v| *v = u.sample(&mut rng));
        }
        DistributionKind::Gaussian => {
            data.iter_mut().for_each(|v| *v = StandardNormal.sample(&mut rng));
        }
    }
    FeatureMatrix::new(m, n, data)
}
