use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{emit::real17, load_matrix, Recipe};
use crate::error::{Error, Result};
use crate::matcore::{relative_error, MatrixSource, RankSpec, Sketch};
use crate::pipeline::{cabs_run, pilot_run, CabsConfig, FollowupVariant, RankSelection};
use crate::rng;
use crate::samplers::{uniform_indices, WeightFn, DEFAULT_KMEANS_ITERS};
use crate::sketchers::{
    nystrom, pseudo_skeleton, random_projection_sketch, sketch_cur, RandomProjectionConfig, SampledTriple,
    SKETCH_CUR_MULTIPLIER,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataKind {
    Dense,
    Sparse,
    Psd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    File(PathBuf),
    Synthetic(Recipe),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: String,
    pub source: DataSource,
    pub kind: DataKind,
}

impl DatasetSpec {
    pub fn synthetic(name: impl Into<String>, recipe: Recipe) -> Self {
        let kind = if recipe.is_sparse() {
            DataKind::Sparse
        } else if recipe.is_psd() {
            DataKind::Psd
        } else {
            DataKind::Dense
        };
        Self {
            name: name.into(),
            source: DataSource::Synthetic(recipe),
            kind,
        }
    }

    /// 2000 x 1500, rank 50, 1% noise.
    pub fn dense_default(seed: u64) -> Self {
        Self::synthetic(
            "dense",
            Recipe::Lowrank {
                m: 2000,
                n: 1500,
                r: 50,
                noise: 0.01,
                seed,
            },
        )
    }

    /// 4000 x 3000 at 0.5% density, rank 20.
    pub fn sparse_default(seed: u64) -> Self {
        Self::synthetic(
            "sparse",
            Recipe::SparseLowrank {
                m: 4000,
                n: 3000,
                r: 20,
                density: 0.005,
                seed,
            },
        )
    }

    /// 1000 x 1000 RBF kernel of 5-dimensional points.
    pub fn psd_default(seed: u64) -> Self {
        Self::synthetic(
            "psd",
            Recipe::RbfPsd {
                n: 1000,
                d: 5,
                gamma: 0.5,
                seed,
            },
        )
    }

    pub fn load(&self) -> Result<MatrixSource> {
        match &self.source {
            DataSource::File(path) => Ok(load_matrix(path)?.into_source()),
            DataSource::Synthetic(recipe) => recipe.source(false),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    PseudoSkeleton,
    SketchCur,
    Pilot,
    CabsWkmeans,
    CabsLeverage,
    CabsHardThreshold,
    Nystrom,
    RandomProjection,
}

/// Registered method names.
pub const METHODS: &[(&str, Method)] = &[
    ("pseudo-skeleton", Method::PseudoSkeleton),
    ("sketch-cur", Method::SketchCur),
    ("pilot", Method::Pilot),
    ("cabs-wkmeans", Method::CabsWkmeans),
    ("cabs-leverage", Method::CabsLeverage),
    ("cabs-hard-threshold", Method::CabsHardThreshold),
    ("nystrom", Method::Nystrom),
    ("random-projection", Method::RandomProjection),
];

/// Oversampling and power iterations of the random projection baseline.
const PROJECTION_OVERSAMPLING: usize = 5;
const PROJECTION_POWER_ITERS: usize = 1;

impl Method {
    pub fn name(self) -> &'static str {
        METHODS.iter().find(|(_, m)| *m == self).expect("registered").0
    }

    /// Whether the method reads the whole matrix.
    pub fn is_quadratic(self) -> bool {
        matches!(self, Method::RandomProjection)
    }

    /// Runs the method with `k` samples (or target rank) per side.
    pub fn run(
        self,
        source: &MatrixSource,
        k: usize,
        seed: u64,
        weight_fn: WeightFn,
        kmeans_iters: usize,
    ) -> Result<Sketch> {
        let (m, n) = source.shape();
        let uniform = || -> Result<_> {
            Ok((
                uniform_indices(m, k, rng::derive(seed, 0))?,
                uniform_indices(n, k, rng::derive(seed, 1))?,
            ))
        };
        let cabs = |variant| -> Result<Sketch> {
            let cfg = CabsConfig {
                variant,
                weight_fn,
                kmeans_iters,
                ..CabsConfig::new(k, seed)
            };
            Ok(cabs_run(source, &cfg)?.followup.sketch)
        };
        match self {
            Method::PseudoSkeleton => {
                let (rows, cols) = uniform()?;
                pseudo_skeleton(&SampledTriple::sample(source, &rows, &cols)?, RankSpec::Auto)
            }
            Method::SketchCur => {
                let (rows, cols) = uniform()?;
                sketch_cur(source, &rows, &cols, SKETCH_CUR_MULTIPLIER, rng::derive(seed, 2))?.into_sketch()
            }
            Method::Pilot => Ok(pilot_run(source, k, RankSelection::Auto, seed)?.sketch),
            Method::CabsWkmeans => cabs(FollowupVariant::Wkmeans),
            Method::CabsLeverage => cabs(FollowupVariant::Leverage),
            Method::CabsHardThreshold => cabs(FollowupVariant::HardThreshold),
            Method::Nystrom => {
                if m != n {
                    return Err(Error::invalid("nystrom needs a square matrix"));
                }
                let idx = uniform_indices(m, k, rng::derive(seed, 0))?;
                nystrom(&SampledTriple::sample(source, &idx, &idx)?, RankSpec::Auto)
            }
            Method::RandomProjection => random_projection_sketch(
                source,
                RandomProjectionConfig::new(k, PROJECTION_OVERSAMPLING, PROJECTION_POWER_ITERS)?,
                seed,
            ),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        METHODS
            .iter()
            .find(|(name, _)| *name == key)
            .map(|&(_, m)| m)
            .ok_or_else(|| Error::UnknownMethod {
                name: s.to_string(),
                registry: METHODS.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", "),
            })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub method: String,
    /// `k / √(mn)`.
    #[serde(rename = "rate", with = "real17")]
    pub sampling_rate: f64,
    pub k: usize,
    pub seed: u64,
    #[serde(with = "real17")]
    pub rel_error: f64,
    #[serde(with = "real17")]
    pub wall_time_ms: f64,
    pub rows_touched: usize,
    pub cols_touched: usize,
    pub all_access: bool,
}

/// `max(1, round(rate · √(mn)))`.
pub fn k_for_rate(rate: f64, m: usize, n: usize) -> usize {
    ((rate * ((m as f64) * (n as f64)).sqrt()).round() as usize).max(1)
}

/// Every `(method, rate, repeat)` combination on one dataset.
///
/// Repeat `i` uses the seed `derive(seed, i)` for every method and rate, so
/// methods are compared on the same draws. Wall time covers the method call
/// only; the error is evaluated afterwards on a separate access log.
/// Records come back sorted by `(method, rate, seed)`.
pub fn bench_run(
    spec: &DatasetSpec,
    methods: &[impl AsRef<str>],
    rates: &[f64],
    repeats: usize,
    seed: u64,
) -> Result<Vec<BenchRecord>> {
    let methods: Vec<Method> = methods.iter().map(|m| m.as_ref().parse()).collect::<Result<_>>()?;
    if let Some(bad) = rates.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
        return Err(Error::invalid(format!("sampling rate {bad} must be positive")));
    }
    let source = spec.load()?;
    let (m, n) = source.shape();
    let weight_fn = WeightFn::default_for(spec.kind == DataKind::Sparse);
    let mut records = Vec::with_capacity(methods.len() * rates.len() * repeats);
    for &method in &methods {
        for &rate in rates {
            let k = k_for_rate(rate, m, n);
            for repeat in 0..repeats {
                let run_seed = rng::derive(seed, repeat as u64);
                let src = source.fresh();
                let start = Instant::now();
                let sketch = method.run(&src, k, run_seed, weight_fn, DEFAULT_KMEANS_ITERS)?;
                let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
                let log = src.access();
                let rel_error = relative_error(&source.fresh(), &sketch)?;
                records.push(BenchRecord {
                    method: method.name().to_string(),
                    sampling_rate: k as f64 / ((m as f64) * (n as f64)).sqrt(),
                    k,
                    seed: run_seed,
                    rel_error,
                    wall_time_ms,
                    rows_touched: if log.all { m } else { log.rows_touched() },
                    cols_touched: if log.all { n } else { log.cols_touched() },
                    all_access: log.all,
                });
            }
        }
    }
    records.sort_by(|a, b| {
        a.method
            .cmp(&b.method)
            .then(a.sampling_rate.total_cmp(&b.sampling_rate))
            .then(a.seed.cmp(&b.seed))
    });
    Ok(records)
}
