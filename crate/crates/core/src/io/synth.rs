use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, Axis};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::LoadedMatrix;
use crate::error::{Error, Result};
use crate::matcore::{DenseMat, LowRankGenerator, MatrixSource, SparseMat};
use crate::rng;

/// Fully parameterized synthetic matrix.
///
/// Text form is `name:key=value,...`, e.g.
/// `lowrank:m=2000,n=1500,r=50,noise=0.01,seed=1`. `noise` and `seed`
/// default to zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "recipe", rename_all = "snake_case")]
pub enum Recipe {
    /// `G₁G₂ᵀ + σN` with standard normal factors; `noise` is relative, so
    /// `σ = noise · ‖G₁G₂ᵀ‖_F / √(mn)`.
    Lowrank {
        m: usize,
        n: usize,
        r: usize,
        noise: f64,
        seed: u64,
    },
    /// Noise-free `G₁G₂ᵀ` with each entry kept independently with
    /// probability `density`.
    SparseLowrank {
        m: usize,
        n: usize,
        r: usize,
        density: f64,
        seed: u64,
    },
    /// `exp(−γ‖xᵢ − xⱼ‖²)` over `n` standard normal points in `d` dimensions.
    RbfPsd { n: usize, d: usize, gamma: f64, seed: u64 },
    /// Like `Lowrank`, but factor rows are drawn around `clusters` random
    /// centers with standard deviation `spread`.
    ClusteredLowrank {
        m: usize,
        n: usize,
        r: usize,
        clusters: usize,
        spread: f64,
        noise: f64,
        seed: u64,
    },
}

fn gaussian(rows: usize, cols: usize, rng: &mut rng::Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.sample::<f64, _>(StandardNormal))
}

fn clustered(rows: usize, r: usize, clusters: usize, spread: f64, rng: &mut rng::Rng) -> Array2<f64> {
    let centers = gaussian(clusters, r, rng);
    let labels: Vec<usize> = (0..rows).map(|_| rng.random_range(0..clusters)).collect();
    centers.select(Axis(0), &labels) + gaussian(rows, r, rng) * spread
}

/// `σ` such that the noise carries `noise` times the signal energy.
fn relative_sigma(left: &Array2<f64>, right: &Array2<f64>, noise: f64) -> f64 {
    if noise == 0.0 {
        return 0.0;
    }
    let (m, n) = (left.nrows() as f64, right.nrows() as f64);
    // ‖L Rᵀ‖_F² = trace((LᵀL)(RᵀR))
    let energy = (left.t().dot(left) * right.t().dot(right)).sum();
    noise * (energy.max(0.0) / (m * n)).sqrt()
}

impl Recipe {
    pub fn shape(&self) -> (usize, usize) {
        match *self {
            Recipe::Lowrank { m, n, .. }
            | Recipe::SparseLowrank { m, n, .. }
            | Recipe::ClusteredLowrank { m, n, .. } => (m, n),
            Recipe::RbfPsd { n, .. } => (n, n),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, Recipe::SparseLowrank { .. })
    }

    pub fn is_psd(&self) -> bool {
        matches!(self, Recipe::RbfPsd { .. })
    }

    fn check(&self) -> Result<()> {
        let (m, n) = self.shape();
        if m == 0 || n == 0 {
            return Err(Error::invalid("synthetic matrix must have positive dimensions"));
        }
        let ok = match *self {
            Recipe::Lowrank { r, noise, .. } => r >= 1 && noise.is_finite() && noise >= 0.0,
            Recipe::SparseLowrank { r, density, .. } => r >= 1 && density > 0.0 && density <= 1.0,
            Recipe::RbfPsd { d, gamma, .. } => d >= 1 && gamma.is_finite() && gamma > 0.0,
            Recipe::ClusteredLowrank {
                r,
                clusters,
                spread,
                noise,
                ..
            } => r >= 1 && clusters >= 1 && spread.is_finite() && spread >= 0.0 && noise.is_finite() && noise >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid synthetic recipe `{self}`")))
        }
    }

    /// Entry-on-demand form of the factored recipes; `None` for the others.
    pub fn generator(&self) -> Result<Option<LowRankGenerator>> {
        self.check()?;
        Ok(match *self {
            Recipe::Lowrank { m, n, r, noise, seed } => {
                let mut g = rng::seeded(seed);
                let left = gaussian(m, r, &mut g);
                let right = gaussian(n, r, &mut g);
                Some(LowRankGenerator {
                    sigma: relative_sigma(&left, &right, noise),
                    left,
                    right,
                    seed: rng::derive(seed, 1),
                })
            }
            Recipe::ClusteredLowrank {
                m,
                n,
                r,
                clusters,
                spread,
                noise,
                seed,
            } => {
                let mut g = rng::seeded(seed);
                let left = clustered(m, r, clusters, spread, &mut g);
                let right = clustered(n, r, clusters, spread, &mut g);
                Some(LowRankGenerator {
                    sigma: relative_sigma(&left, &right, noise),
                    left,
                    right,
                    seed: rng::derive(seed, 1),
                })
            }
            _ => None,
        })
    }

    pub fn generate(&self) -> Result<LoadedMatrix> {
        self.check()?;
        match *self {
            Recipe::Lowrank { .. } | Recipe::ClusteredLowrank { .. } => {
                let g = self.generator()?.expect("factored recipe");
                let src = MatrixSource::generator(g);
                Ok(LoadedMatrix::Dense(src.read_full()))
            }
            Recipe::SparseLowrank { m, n, r, density, seed } => {
                let mut g = rng::seeded(seed);
                let left = gaussian(m, r, &mut g);
                let right = gaussian(n, r, &mut g);
                let mask_seed = rng::derive(seed, 2);
                let threshold = (density * u64::MAX as f64) as u64;
                let mut triplets = Vec::new();
                for i in 0..m {
                    for j in 0..n {
                        let h = rng::mix64(mask_seed ^ rng::mix64(((i as u64) << 32) ^ j as u64));
                        if h < threshold || density >= 1.0 {
                            let v = left.row(i).dot(&right.row(j));
                            if v != 0.0 {
                                triplets.push((i, j, v));
                            }
                        }
                    }
                }
                Ok(LoadedMatrix::Sparse(SparseMat::from_triplets(m, n, triplets)?))
            }
            Recipe::RbfPsd { n, d, gamma, seed } => {
                let x = gaussian(n, d, &mut rng::seeded(seed));
                let sq: Vec<f64> = x.rows().into_iter().map(|r| r.dot(&r)).collect();
                let gram = x.dot(&x.t());
                let k = Array2::from_shape_fn((n, n), |(i, j)| {
                    if i == j {
                        1.0
                    } else {
                        (-gamma * (sq[i] + sq[j] - 2.0 * gram[[i, j]]).max(0.0)).exp()
                    }
                });
                // Symmetrize so that rounding never breaks exact symmetry.
                let k = (&k + &k.t()) * 0.5;
                Ok(LoadedMatrix::Dense(DenseMat::from_array(k)?))
            }
        }
    }

    /// Source over the recipe: generator-backed for factored recipes when
    /// `lazy` is set, materialized otherwise.
    pub fn source(&self, lazy: bool) -> Result<MatrixSource> {
        if lazy {
            if let Some(g) = self.generator()? {
                return Ok(MatrixSource::generator(g));
            }
        }
        Ok(self.generate()?.into_source())
    }
}

impl fmt::Display for Recipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Recipe::Lowrank { m, n, r, noise, seed } => {
                write!(f, "lowrank:m={m},n={n},r={r},noise={noise},seed={seed}")
            }
            Recipe::SparseLowrank { m, n, r, density, seed } => {
                write!(f, "sparse_lowrank:m={m},n={n},r={r},density={density},seed={seed}")
            }
            Recipe::RbfPsd { n, d, gamma, seed } => write!(f, "rbf_psd:n={n},d={d},gamma={gamma},seed={seed}"),
            Recipe::ClusteredLowrank {
                m,
                n,
                r,
                clusters,
                spread,
                noise,
                seed,
            } => write!(
                f,
                "clustered_lowrank:m={m},n={n},r={r},clusters={clusters},spread={spread},noise={noise},seed={seed}"
            ),
        }
    }
}

struct Params {
    recipe: String,
    map: BTreeMap<String, String>,
}

impl Params {
    fn take<T: FromStr>(&mut self, key: &str, default: Option<T>) -> Result<T> {
        match self.map.remove(key) {
            Some(v) => v
                .parse()
                .map_err(|_| Error::invalid(format!("{}: bad value `{v}` for `{key}`", self.recipe))),
            None => default.ok_or_else(|| Error::invalid(format!("{}: missing `{key}`", self.recipe))),
        }
    }

    fn done(self) -> Result<()> {
        match self.map.keys().next() {
            Some(k) => Err(Error::invalid(format!("{}: unknown parameter `{k}`", self.recipe))),
            None => Ok(()),
        }
    }
}

impl FromStr for Recipe {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut map = BTreeMap::new();
        for part in rest.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("expected key=value, got `{part}`")))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        let name = name.trim().replace('-', "_");
        let mut p = Params {
            recipe: name.clone(),
            map,
        };
        let recipe = match name.as_str() {
            "lowrank" => Recipe::Lowrank {
                m: p.take("m", None)?,
                n: p.take("n", None)?,
                r: p.take("r", None)?,
                noise: p.take("noise", Some(0.0))?,
                seed: p.take("seed", Some(0))?,
            },
            "sparse_lowrank" => Recipe::SparseLowrank {
                m: p.take("m", None)?,
                n: p.take("n", None)?,
                r: p.take("r", None)?,
                density: p.take("density", None)?,
                seed: p.take("seed", Some(0))?,
            },
            "rbf_psd" => Recipe::RbfPsd {
                n: p.take("n", None)?,
                d: p.take("d", Some(5))?,
                gamma: p.take("gamma", Some(0.5))?,
                seed: p.take("seed", Some(0))?,
            },
            "clustered_lowrank" => Recipe::ClusteredLowrank {
                m: p.take("m", None)?,
                n: p.take("n", None)?,
                r: p.take("r", None)?,
                clusters: p.take("clusters", None)?,
                spread: p.take("spread", None)?,
                noise: p.take("noise", Some(0.0))?,
                seed: p.take("seed", Some(0))?,
            },
            other => {
                return Err(Error::invalid(format!(
                    "unknown recipe `{other}` (expected lowrank, sparse_lowrank, rbf_psd or clustered_lowrank)"
                )))
            }
        };
        p.done()?;
        recipe.check()?;
        Ok(recipe)
    }
}
