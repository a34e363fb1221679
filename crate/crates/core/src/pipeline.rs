//! The two-round cascade: a uniform pilot sketch whose embeddings steer the
//! follow-up sample.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{frob_norm, DenseMat, IndexSet, MatrixSource, RankSpec, Select, Sketch};
use crate::rng;
use crate::samplers::{
    encoding_error, hard_threshold_select, leverage_sample, nearest_assignment, uniform_indices, weighted_kmeans,
    weights_from_embedding, EmbeddingPair, WeightFn, DEFAULT_KMEANS_ITERS,
};
use crate::sketchers::{orthogonalize, stabilized_sketch, SampledTriple};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FollowupVariant {
    #[default]
    Wkmeans,
    Leverage,
    HardThreshold,
}

impl FollowupVariant {
    pub fn name(self) -> &'static str {
        match self {
            FollowupVariant::Wkmeans => "wkmeans",
            FollowupVariant::Leverage => "leverage",
            FollowupVariant::HardThreshold => "hard-threshold",
        }
    }
}

impl fmt::Display for FollowupVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FollowupVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "wkmeans" | "kmeans" => Ok(FollowupVariant::Wkmeans),
            "leverage" => Ok(FollowupVariant::Leverage),
            "hard-threshold" | "threshold" => Ok(FollowupVariant::HardThreshold),
            _ => Err(Error::invalid(format!(
                "unknown follow-up variant `{s}` (expected wkmeans, leverage or hard-threshold)"
            ))),
        }
    }
}

/// How many singular triplets of `W` each sketching round keeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankSelection {
    #[default]
    Auto,
    Fixed(usize),
    /// Pick the rank by error on a small held-out block of `k1 x k1` entries.
    Validate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CabsConfig {
    pub k1: usize,
    pub k2: usize,
    pub variant: FollowupVariant,
    pub weight_fn: WeightFn,
    pub kmeans_iters: usize,
    pub rank: RankSelection,
    pub seed: u64,
}

impl CabsConfig {
    /// Equal pilot and follow-up sizes, constant weights, five Lloyd steps.
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k1: k,
            k2: k,
            variant: FollowupVariant::Wkmeans,
            weight_fn: WeightFn::Constant,
            kmeans_iters: DEFAULT_KMEANS_ITERS,
            rank: RankSelection::Auto,
            seed,
        }
    }

    pub fn validate(&self, m: usize, n: usize) -> Result<()> {
        if self.k1 == 0 || self.k2 == 0 {
            return Err(Error::invalid("k1 and k2 must be at least 1"));
        }
        if self.kmeans_iters == 0 {
            return Err(Error::invalid("kmeans_iters must be at least 1"));
        }
        let most = m.min(n);
        for k in [self.k1, self.k2] {
            if k > most {
                return Err(Error::TooManySamples {
                    requested: k,
                    available: most,
                });
            }
        }
        Ok(())
    }
}

/// One sampling-and-sketching round.
#[derive(Clone, Debug, PartialEq)]
pub struct Stage {
    pub sketch: Sketch,
    pub rows: IndexSet,
    pub cols: IndexSet,
    pub w: DenseMat,
    /// Rank requested from the sketcher (after validation, if any).
    pub rank: RankSpec,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StageTimings {
    pub sampling: Duration,
    pub sketching: Duration,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CabsStats {
    /// Unweighted row and column encoding errors of the pilot sample,
    /// measured in the pilot embedding.
    pub pilot_encoding: (f64, f64),
    /// The same for the follow-up sample, in the same embedding.
    pub followup_encoding: (f64, f64),
    pub pilot_time: StageTimings,
    pub followup_time: StageTimings,
}

#[derive(Clone, Debug)]
pub struct CabsOutcome {
    pub pilot: Stage,
    pub followup: Stage,
    pub embedding: EmbeddingPair,
    pub stats: CabsStats,
}

/// Runs pilot sampling, pilot sketching, follow-up sampling and follow-up
/// sketching. Only the sampled rows and columns (and, with
/// [`RankSelection::Validate`], one extra holdout sample) are read.
pub fn cabs_run(source: &MatrixSource, cfg: &CabsConfig) -> Result<CabsOutcome> {
    let (m, n) = source.shape();
    cfg.validate(m, n)?;

    let t0 = Instant::now();
    let pilot_rows = uniform_indices(m, cfg.k1, rng::derive(cfg.seed, 0))?;
    let pilot_cols = uniform_indices(n, cfg.k1, rng::derive(cfg.seed, 1))?;
    let holdout = match cfg.rank {
        RankSelection::Validate => Some(draw_holdout(m, n, cfg.k1, &pilot_rows, &pilot_cols, cfg.seed)?),
        _ => None,
    };
    let pilot_sampling = t0.elapsed();

    let t0 = Instant::now();
    let pilot = sketch_stage(source, pilot_rows, pilot_cols, cfg.rank, holdout.as_ref())?;
    let pilot_sketching = t0.elapsed();

    let t0 = Instant::now();
    let embedding = EmbeddingPair::from_sketch(&pilot.sketch);
    let (rows, cols) = followup_sample(&pilot.sketch, &embedding, cfg).map_err(|e| Error::Followup {
        variant: cfg.variant.name(),
        source: Box::new(e),
    })?;
    let followup_sampling = t0.elapsed();

    let t0 = Instant::now();
    let followup = sketch_stage(source, rows, cols, cfg.rank, holdout.as_ref())?;
    let followup_sketching = t0.elapsed();

    let stats = CabsStats {
        pilot_encoding: stage_encoding(&embedding, &pilot)?,
        followup_encoding: stage_encoding(&embedding, &followup)?,
        pilot_time: StageTimings {
            sampling: pilot_sampling,
            sketching: pilot_sketching,
        },
        followup_time: StageTimings {
            sampling: followup_sampling,
            sketching: followup_sketching,
        },
    };
    Ok(CabsOutcome {
        pilot,
        followup,
        embedding,
        stats,
    })
}

/// Uniform pilot round only.
pub fn pilot_run(source: &MatrixSource, k: usize, rank: RankSelection, seed: u64) -> Result<Stage> {
    let (m, n) = source.shape();
    let rows = uniform_indices(m, k, rng::derive(seed, 0))?;
    let cols = uniform_indices(n, k, rng::derive(seed, 1))?;
    let holdout = match rank {
        RankSelection::Validate => Some(draw_holdout(m, n, k, &rows, &cols, seed)?),
        _ => None,
    };
    sketch_stage(source, rows, cols, rank, holdout.as_ref())
}

fn draw_holdout(
    m: usize,
    n: usize,
    k: usize,
    rows: &IndexSet,
    cols: &IndexSet,
    seed: u64,
) -> Result<(IndexSet, IndexSet)> {
    let pick = |domain: usize, taken: &IndexSet, stream: u64| -> Result<IndexSet> {
        let free: Vec<usize> = (0..domain).filter(|&i| !taken.contains(i)).collect();
        let want = k.min(free.len());
        let at = uniform_indices(free.len(), want, rng::derive(seed, stream))?;
        IndexSet::new(at.iter().map(|p| free[p]).collect(), domain)
    };
    Ok((pick(m, rows, 6)?, pick(n, cols, 7)?))
}

fn sketch_stage(
    source: &MatrixSource,
    rows: IndexSet,
    cols: IndexSet,
    rank: RankSelection,
    holdout: Option<&(IndexSet, IndexSet)>,
) -> Result<Stage> {
    let (m, n) = source.shape();
    let triple = SampledTriple::sample(source, &rows, &cols)?;
    let spec = match (rank, holdout) {
        (RankSelection::Auto, _) => RankSpec::Auto,
        (RankSelection::Fixed(r), _) => RankSpec::Fixed(r),
        (RankSelection::Validate, Some((hr, hc))) => {
            let hr = hr.without(&rows);
            let hc = hc.without(&cols);
            let r = validate_rank(source, &triple, &hr, &hc, |t, spec| stabilized_sketch(t, m, n, spec))?;
            RankSpec::Fixed(r)
        }
        (RankSelection::Validate, None) => return Err(Error::invalid("rank validation needs a holdout sample")),
    };
    let sketch = stabilized_sketch(&triple, m, n, spec)?;
    Ok(Stage {
        sketch,
        rows,
        cols,
        w: triple.w,
        rank: spec,
    })
}

fn followup_sample(pilot: &Sketch, emb: &EmbeddingPair, cfg: &CabsConfig) -> Result<(IndexSet, IndexSet)> {
    let seed = cfg.seed;
    match cfg.variant {
        FollowupVariant::Wkmeans => {
            let rows = weighted_kmeans(
                emb.p.view(),
                cfg.k2,
                &cfg.weight_fn,
                cfg.kmeans_iters,
                rng::derive(seed, 2),
            )?;
            let cols = weighted_kmeans(
                emb.q.view(),
                cfg.k2,
                &cfg.weight_fn,
                cfg.kmeans_iters,
                rng::derive(seed, 3),
            )?;
            Ok((rows.representatives.sorted(), cols.representatives.sorted()))
        }
        FollowupVariant::Leverage => {
            let o = orthogonalize(pilot)?;
            Ok((
                leverage_sample(o.u().view(), cfg.k2, rng::derive(seed, 4))?,
                leverage_sample(o.v().view(), cfg.k2, rng::derive(seed, 5))?,
            ))
        }
        FollowupVariant::HardThreshold => Ok((
            hard_threshold_select(&weights_from_embedding(emb.p.view(), &cfg.weight_fn), cfg.k2)?,
            hard_threshold_select(&weights_from_embedding(emb.q.view(), &cfg.weight_fn), cfg.k2)?,
        )),
    }
}

fn stage_encoding(emb: &EmbeddingPair, stage: &Stage) -> Result<(f64, f64)> {
    let side = |x: &Array2<f64>, reps: &IndexSet| -> Result<f64> {
        let assignment = nearest_assignment(x.view(), reps)?;
        encoding_error(x.view(), reps, &assignment, &WeightFn::Constant)
    };
    Ok((side(&emb.p, &stage.rows)?, side(&emb.q, &stage.cols)?))
}

/// Chooses the rank of `sketcher(t, ·)` that best reproduces the holdout
/// block `A[holdout_rows, holdout_cols]`.
///
/// The sketch is computed once at full rank and truncated, so the sweep
/// costs one small product per candidate. Candidates run over
/// `1..=min(k_r, k_c)`; errors within `1e-12` of the block norm of the
/// minimum count as ties and the lowest rank wins.
pub fn validate_rank<F>(
    source: &MatrixSource,
    t: &SampledTriple,
    holdout_rows: &IndexSet,
    holdout_cols: &IndexSet,
    sketcher: F,
) -> Result<usize>
where
    F: Fn(&SampledTriple, RankSpec) -> Result<Sketch>,
{
    if holdout_rows.is_empty() || holdout_cols.is_empty() {
        return Err(Error::invalid("holdout sample is empty"));
    }
    if holdout_rows.iter().any(|i| t.row_idx.contains(i)) || holdout_cols.iter().any(|j| t.col_idx.contains(j)) {
        return Err(Error::invalid("holdout overlaps the sampled rows or columns"));
    }
    let block = source.extract(Select::Only(holdout_rows), Select::Only(holdout_cols))?;
    let k = t.row_idx.len().min(t.col_idx.len());
    if k <= 1 {
        return Ok(1);
    }
    let full = sketcher(t, RankSpec::Fixed(k))?;
    let us = full.us().select(Axis(0), holdout_rows.as_slice());
    let v = full.v().select(Axis(0), holdout_cols.as_slice());
    let errors: Vec<f64> = (1..=k)
        .map(|r| {
            let r = r.min(full.rank());
            let approx = us.slice(ndarray::s![.., ..r]).dot(&v.slice(ndarray::s![.., ..r]).t());
            frob_norm(&(&approx - &block.view()))
        })
        .collect();
    let best = errors.iter().copied().fold(f64::INFINITY, f64::min);
    let slack = 1e-12 * frob_norm(&block);
    Ok(errors.iter().position(|&e| e <= best + slack).expect("non-empty sweep") + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::relative_error;
    use crate::sketchers::pseudo_skeleton;
    use ndarray::Array2;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn gaussian(m: usize, n: usize, seed: u64) -> Array2<f64> {
        let mut rng = rng::seeded(seed);
        Array2::from_shape_simple_fn((m, n), || rng.sample::<f64, _>(StandardNormal))
    }

    fn source(a: Array2<f64>) -> MatrixSource {
        MatrixSource::dense(DenseMat::from_array(a).unwrap())
    }

    #[test]
    fn variant_names_round_trip() {
        for v in [
            FollowupVariant::Wkmeans,
            FollowupVariant::Leverage,
            FollowupVariant::HardThreshold,
        ] {
            assert_eq!(v.to_string().parse::<FollowupVariant>().unwrap(), v);
        }
        assert!("random".parse::<FollowupVariant>().is_err());
    }

    #[test]
    fn config_checks() {
        let mut cfg = CabsConfig::new(5, 0);
        assert!(cfg.validate(10, 10).is_ok());
        cfg.k2 = 11;
        assert!(matches!(cfg.validate(10, 20), Err(Error::TooManySamples { .. })));
        cfg.k2 = 0;
        assert!(cfg.validate(10, 20).is_err());
    }

    #[test]
    fn embedding_reproduces_pilot() {
        let src = source(gaussian(50, 6, 1).dot(&gaussian(6, 40, 2)) + gaussian(50, 40, 3) * 0.01);
        let out = cabs_run(&src, &CabsConfig::new(8, 4)).unwrap();
        let pq = out.embedding.p.dot(&out.embedding.q.t());
        let diff = frob_norm(&(pq - out.pilot.sketch.reconstruct()));
        assert!(diff <= 1e-12 * frob_norm(&out.pilot.sketch.reconstruct()));
    }

    #[test]
    fn runs_are_deterministic_and_access_bounded() {
        let src = source(gaussian(60, 5, 5).dot(&gaussian(5, 45, 6)) + gaussian(60, 45, 7) * 0.05);
        for variant in [
            FollowupVariant::Wkmeans,
            FollowupVariant::Leverage,
            FollowupVariant::HardThreshold,
        ] {
            for rank in [RankSelection::Auto, RankSelection::Validate] {
                let cfg = CabsConfig {
                    variant,
                    rank,
                    ..CabsConfig::new(7, 9)
                };
                let a = src.fresh();
                let b = src.fresh();
                let x = cabs_run(&a, &cfg).unwrap();
                let y = cabs_run(&b, &cfg).unwrap();
                assert_eq!(x.pilot, y.pilot);
                assert_eq!(x.followup, y.followup);
                assert_eq!(x.stats.pilot_encoding, y.stats.pilot_encoding);
                let log = a.access();
                assert!(!log.all);
                assert!(log.rows_touched() <= 2 * (cfg.k1 + cfg.k2));
                assert!(log.cols_touched() <= 2 * (cfg.k1 + cfg.k2));
            }
        }
    }

    #[test]
    fn constant_weight_threshold_takes_lowest_indices() {
        let src = source(gaussian(20, 3, 8).dot(&gaussian(3, 15, 9)));
        let cfg = CabsConfig {
            variant: FollowupVariant::HardThreshold,
            ..CabsConfig::new(4, 1)
        };
        let out = cabs_run(&src, &cfg).unwrap();
        assert_eq!(out.followup.rows.as_slice(), &[0, 1, 2, 3]);
        assert_eq!(out.followup.cols.as_slice(), &[0, 1, 2, 3]);
    }

    #[test]
    fn followup_failure_names_the_variant() {
        // Pilot rows all zero: P collapses to a single point.
        let mut a = Array2::zeros((10, 10));
        a[[0, 0]] = 1.0;
        let src = source(a);
        let cfg = CabsConfig::new(3, 2);
        match cabs_run(&src, &cfg) {
            Err(Error::Followup { variant, .. }) => assert_eq!(variant, "wkmeans"),
            other => panic!("expected follow-up failure, got {other:?}"),
        }
    }

    #[test]
    fn validation_examples() {
        let a = gaussian(30, 3, 10).dot(&gaussian(3, 25, 11));
        let src = source(a);
        let rows = IndexSet::new(vec![0, 4, 8, 12, 16, 20], 30).unwrap();
        let cols = IndexSet::new(vec![1, 5, 9, 13, 17, 21], 25).unwrap();
        let t = SampledTriple::sample(&src, &rows, &cols).unwrap();
        let hr = IndexSet::new(vec![2, 3, 25, 29], 30).unwrap();
        let hc = IndexSet::new(vec![0, 2, 22, 24], 25).unwrap();
        let r = validate_rank(&src, &t, &hr, &hc, pseudo_skeleton).unwrap();
        assert_eq!(r, 3);
        let one = SampledTriple::sample(
            &src,
            &IndexSet::new(vec![0], 30).unwrap(),
            &IndexSet::new(vec![1], 25).unwrap(),
        )
        .unwrap();
        assert_eq!(validate_rank(&src, &one, &hr, &hc, pseudo_skeleton).unwrap(), 1);
        let empty = IndexSet::new(vec![], 30).unwrap();
        assert!(validate_rank(&src, &t, &empty, &hc, pseudo_skeleton).is_err());
    }

    #[test]
    fn exact_rank_pilot_captures_subspace() {
        let src = source(gaussian(40, 4, 12).dot(&gaussian(4, 30, 13)));
        let stage = pilot_run(&src, 4, RankSelection::Auto, 2).unwrap();
        assert_eq!(stage.sketch.rank(), 4);
        let e = relative_error(&src, &stage.sketch).unwrap();
        assert!(e.is_finite());
    }
}
