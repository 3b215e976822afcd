//! Generators for the three simulation designs.
//!
//! Every design evaluates functions on the cell-midpoint grid
//! `t_k = (k − 1/2)/K`, uses the point-evaluation scheme, and is a pure
//! function of its [`SimConfig`] (the seed drives a ChaCha8 stream).

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::blockmat::{BlockLayout, Scheme};
use crate::error::{Error, Result};
use crate::estimate::SampleSet;
use crate::graph::GraphEstimate;
use crate::linalg::SymEigen;

/// Number of Fourier scores per node in the first design.
pub const SETUP1_RANK: usize = 10;
/// Rank of the smooth component in the third design.
pub const SETUP3_RANK: usize = 5;
/// Hurst exponent of the rough component in the third design.
pub const SETUP3_HURST: f64 = 0.2;
/// Smallest innovation eigenvalue `1/l²` kept in the second design.
pub const SETUP2_EIGEN_FLOOR: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Setup {
    /// Fourier scores with an AR(2) block precision matrix.
    One,
    /// Functional AR(2) through restrictions to the ends of the domain.
    Two,
    /// Smooth independent signal plus fBm shared within triplets.
    Three,
}

impl TryFrom<u8> for Setup {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Setup::One),
            2 => Ok(Setup::Two),
            3 => Ok(Setup::Three),
            other => Err(Error::InvalidConfig(format!("setup must be 1, 2 or 3, got {other}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub setup: Setup,
    pub n: usize,
    pub p: usize,
    /// Grid size `K` per node.
    pub grid: usize,
    pub seed: u64,
    /// Measurement noise standard deviation, used by the third design only.
    pub noise_sd: f64,
}

impl SimConfig {
    pub fn new(setup: Setup, n: usize, p: usize, grid: usize, seed: u64) -> Self {
        Self {
            setup,
            n,
            p,
            grid,
            seed,
            noise_sd: (0.2f64).sqrt(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfig("n must be at least 1".into()));
        }
        if self.p == 0 {
            return Err(Error::InvalidConfig("p must be at least 1".into()));
        }
        if self.grid < 2 {
            return Err(Error::InvalidConfig("grid must be at least 2".into()));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::InvalidConfig("noise_sd must be finite and >= 0".into()));
        }
        match self.setup {
            Setup::One => {
                if self.p < 3 {
                    return Err(Error::InvalidConfig("setup 1 needs p >= 3".into()));
                }
                if self.grid < SETUP1_RANK {
                    return Err(Error::InvalidConfig(format!("setup 1 needs grid >= {SETUP1_RANK}")));
                }
            }
            Setup::Two => {}
            Setup::Three => {
                if !self.p.is_multiple_of(3) {
                    return Err(Error::InvalidConfig("p must be divisible by 3".into()));
                }
            }
        }
        Ok(())
    }

    pub fn layout(&self) -> Result<BlockLayout> {
        BlockLayout::uniform(self.p, self.grid, Scheme::Points)
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

#[derive(Clone, Debug)]
pub struct SimDraw {
    pub samples: SampleSet,
    pub truth: GraphEstimate,
}

/// Cell midpoints `(k − 1/2)/K`, `k = 1..K`.
pub fn grid(k: usize) -> Vec<f64> {
    (0..k).map(|i| (i as f64 + 0.5) / k as f64).collect()
}

/// The first `r` L²-orthonormal Fourier functions on `[0, 1]` evaluated on
/// [`grid`]: `1, √2 sin(2πt), √2 cos(2πt), √2 sin(4πt), …`. Row `l` holds
/// `e_{l+1}`.
pub fn fourier_basis(k: usize, r: usize) -> DMatrix<f64> {
    assert!(r >= 1 && k >= 2, "need r >= 1 and K >= 2");
    let t = grid(k);
    DMatrix::from_fn(r, k, |l, c| {
        if l == 0 {
            return 1.0;
        }
        let freq = l.div_ceil(2) as f64;
        let arg = 2.0 * PI * freq * t[c];
        if l % 2 == 1 {
            SQRT_2 * arg.sin()
        } else {
            SQRT_2 * arg.cos()
        }
    })
}

/// Graph on `p` nodes with edges `|i − j| ≤ width`.
pub fn band_graph(p: usize, width: usize) -> GraphEstimate {
    let mut g = GraphEstimate::empty(p);
    for i in 0..p {
        for j in (i + 1)..p.min(i + width + 1) {
            g.set_edge(i, j, true);
        }
    }
    g
}

/// Cliques over consecutive triplets `{3k, 3k+1, 3k+2}` (0-based).
pub fn triplet_graph(p: usize) -> GraphEstimate {
    let mut g = GraphEstimate::empty(p);
    for i in 0..p {
        for j in (i + 1)..p {
            if i / 3 == j / 3 {
                g.set_edge(i, j, true);
            }
        }
    }
    g
}

/// Draws `N(0, C)` vectors through `C = E Λ Eᵀ`, with negative round-off
/// eigenvalues floored at zero so semi-definite covariances are accepted.
pub struct GaussianSampler {
    factor: DMatrix<f64>,
}

impl GaussianSampler {
    pub fn new(cov: &DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != cov.ncols() {
            return Err(Error::DimensionMismatch {
                expected: cov.nrows(),
                found: cov.ncols(),
            });
        }
        if crate::blockmat::relative_asymmetry(cov) > 1e-10 {
            return Err(Error::InvalidInput("covariance is not symmetric".into()));
        }
        let eig = SymEigen::new(cov)?;
        let scale = eig.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if eig.min_value() < -1e-8 * scale {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: eig.min_value(),
            });
        }
        let n = cov.nrows();
        let factor = DMatrix::from_fn(n, n, |i, j| eig.vector(j)[i] * eig.values()[j].max(0.0).sqrt());
        Ok(Self { factor })
    }

    pub fn dim(&self) -> usize {
        self.factor.nrows()
    }

    pub fn sample(&self, rng: &mut impl rand::Rng) -> DVector<f64> {
        let z = DVector::from_fn(self.dim(), |_, _| StandardNormal.sample(rng));
        &self.factor * z
    }
}

fn standard_normals(rng: &mut ChaCha8Rng, len: usize) -> DVector<f64> {
    DVector::from_fn(len, |_, _| StandardNormal.sample(rng))
}

/// Block precision matrix of the first design (`p·r × p·r`, `r = 10`) and
/// its AR(2) band graph.
pub fn setup1_precision(p: usize) -> Result<(DMatrix<f64>, GraphEstimate)> {
    if p < 3 {
        return Err(Error::InvalidConfig("setup 1 needs p >= 3".into()));
    }
    let r = SETUP1_RANK;
    let mut q = DMatrix::zeros(p * r, p * r);
    for i in 0..p {
        for l in 0..r {
            let score = (l + 1) as f64;
            q[(i * r + l, i * r + l)] = score / 10.0;
            // couplings only on the last five scores
            let coupled = if l >= 5 { score } else { 0.0 };
            for (lag, factor) in [(1, 0.4), (2, 0.2)] {
                if i >= lag {
                    let j = i - lag;
                    let v = factor * coupled / 10.0;
                    q[(i * r + l, j * r + l)] = v;
                    q[(j * r + l, i * r + l)] = v;
                }
            }
        }
    }
    if q.clone().cholesky().is_none() {
        let min = SymEigen::new(&q)?.min_value();
        return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
    }
    Ok((q, band_graph(p, 2)))
}

/// Scores `δ ~ N(0, Q^{-1})` of the first design, one row per sample.
pub fn simulate_setup1_scores(config: &SimConfig) -> Result<DMatrix<f64>> {
    config.validate()?;
    let (q, _) = setup1_precision(config.p)?;
    let mut cov = q
        .cholesky()
        .ok_or(Error::NotPositiveDefinite { min_eigenvalue: 0.0 })?
        .inverse();
    crate::linalg::symmetrize_in_place(&mut cov);
    let sampler = GaussianSampler::new(&cov)?;
    let mut rng = config.rng();
    let mut scores = DMatrix::zeros(config.n, sampler.dim());
    for k in 0..config.n {
        scores.row_mut(k).copy_from(&sampler.sample(&mut rng).transpose());
    }
    Ok(scores)
}

pub fn simulate_setup1(config: &SimConfig) -> Result<SimDraw> {
    config.validate()?;
    let scores = simulate_setup1_scores(config)?;
    let basis = fourier_basis(config.grid, SETUP1_RANK);
    let (p, k, r) = (config.p, config.grid, SETUP1_RANK);
    let mut data = DMatrix::zeros(config.n, p * k);
    for s in 0..config.n {
        for node in 0..p {
            let delta = scores.view((s, node * r), (1, r));
            let curve = delta * &basis;
            data.view_mut((s, node * k), (1, k)).copy_from(&curve);
        }
    }
    Ok(SimDraw {
        samples: SampleSet::new(config.layout()?, data)?,
        truth: band_graph(p, 2),
    })
}

/// Indicator of `[lo, hi]` on the grid.
pub fn restriction_mask(grid: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    grid.iter()
        .map(|&t| if t >= lo && t <= hi { 1.0 } else { 0.0 })
        .collect()
}

/// Innovation rank of the second design: the largest `l` with
/// `1/l² ≥ 1e-6`, capped at `K`.
pub fn setup2_rank(k: usize) -> usize {
    let by_floor = (1.0 / SETUP2_EIGEN_FLOOR).sqrt().floor() as usize;
    by_floor.min(k)
}

/// Second design together with its innovations `Z` (same shape as the data).
pub fn simulate_setup2_parts(config: &SimConfig) -> Result<(SimDraw, DMatrix<f64>)> {
    config.validate()?;
    let (n, p, k) = (config.n, config.p, config.grid);
    let r = setup2_rank(k);
    let basis = fourier_basis(k, r);
    let sd = DVector::from_fn(r, |l, _| 1.0 / (l + 1) as f64);
    let t = grid(k);
    let first = DVector::from_vec(restriction_mask(&t, 0.0, 0.1));
    let last = DVector::from_vec(restriction_mask(&t, 0.9, 1.0));

    let mut rng = config.rng();
    let mut innovations = DMatrix::zeros(n, p * k);
    let mut data = DMatrix::zeros(n, p * k);
    for s in 0..n {
        let mut nodes: Vec<DVector<f64>> = Vec::with_capacity(p);
        for node in 0..p {
            let xi = standard_normals(&mut rng, r).component_mul(&sd);
            let z = basis.tr_mul(&xi);
            innovations.view_mut((s, node * k), (1, k)).copy_from(&z.transpose());
            let mut x = z;
            if node >= 1 {
                x += nodes[node - 1].component_mul(&first) * 0.4;
            }
            if node >= 2 {
                x += nodes[node - 2].component_mul(&last) * 0.2;
            }
            data.view_mut((s, node * k), (1, k)).copy_from(&x.transpose());
            nodes.push(x);
        }
    }
    let draw = SimDraw {
        samples: SampleSet::new(config.layout()?, data)?,
        truth: band_graph(p, 2),
    };
    Ok((draw, innovations))
}

pub fn simulate_setup2(config: &SimConfig) -> Result<SimDraw> {
    simulate_setup2_parts(config).map(|(d, _)| d)
}

/// Fractional Brownian motion kernel `½(|t|^{2H} + |s|^{2H} − |t − s|^{2H})`.
pub fn fbm_covariance(grid: &[f64], hurst: f64) -> DMatrix<f64> {
    let h2 = 2.0 * hurst;
    let k = grid.len();
    DMatrix::from_fn(k, k, |i, j| {
        let (t, s) = (grid[i], grid[j]);
        0.5 * (t.abs().powf(h2) + s.abs().powf(h2) - (t - s).abs().powf(h2))
    })
}

/// The three additive components of a third-design draw, each `n × pK`.
#[derive(Clone, Debug)]
pub struct Setup3Parts {
    /// Smooth rank-5 component before the factor 3.
    pub z: DMatrix<f64>,
    /// Rough component, identical within each triplet.
    pub w: DMatrix<f64>,
    pub noise: DMatrix<f64>,
}

pub fn simulate_setup3_parts(config: &SimConfig) -> Result<(SimDraw, Setup3Parts)> {
    config.validate()?;
    let (n, p, k) = (config.n, config.p, config.grid);
    let basis = fourier_basis(k, SETUP3_RANK);
    let fbm = GaussianSampler::new(&fbm_covariance(&grid(k), SETUP3_HURST))?;

    let mut rng = config.rng();
    let mut z = DMatrix::zeros(n, p * k);
    let mut w = DMatrix::zeros(n, p * k);
    let mut noise = DMatrix::zeros(n, p * k);
    for s in 0..n {
        for node in 0..p {
            let curve = basis.tr_mul(&standard_normals(&mut rng, SETUP3_RANK));
            z.view_mut((s, node * k), (1, k)).copy_from(&curve.transpose());
        }
        for triplet in 0..p / 3 {
            let path = fbm.sample(&mut rng).transpose();
            for node in 3 * triplet..3 * triplet + 3 {
                w.view_mut((s, node * k), (1, k)).copy_from(&path);
            }
        }
        let e = standard_normals(&mut rng, p * k) * config.noise_sd;
        noise.row_mut(s).copy_from(&e.transpose());
    }
    let data = &z * 3.0 + &w + &noise;
    let draw = SimDraw {
        samples: SampleSet::new(config.layout()?, data)?,
        truth: triplet_graph(p),
    };
    Ok((draw, Setup3Parts { z, w, noise }))
}

pub fn simulate_setup3(config: &SimConfig) -> Result<SimDraw> {
    simulate_setup3_parts(config).map(|(d, _)| d)
}

pub fn simulate(config: &SimConfig) -> Result<SimDraw> {
    match config.setup {
        Setup::One => simulate_setup1(config),
        Setup::Two => simulate_setup2(config),
        Setup::Three => simulate_setup3(config),
    }
}

/// Operator traces (quadrature weight `1/K`) of the smooth part `9 Σ_Z`,
/// the rough part `Σ_W` and the white noise of one third-design node.
pub fn setup3_trace_shares(k: usize, noise_sd: f64) -> [f64; 3] {
    let basis = fourier_basis(k, SETUP3_RANK);
    let w = 1.0 / k as f64;
    let smooth = 9.0 * w * basis.iter().map(|v| v * v).sum::<f64>();
    let rough = w * fbm_covariance(&grid(k), SETUP3_HURST).trace();
    [smooth, rough, noise_sd * noise_sd]
}
