use std::sync::Arc;

use ndarray::{Array1, Array2, Axis};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::offsets::TruncatedNormal;
use super::transcript::{commentary_text, TEAMS};
use super::{SynthConfig, EDGE_MARGIN_S};
use crate::error::Result;
use crate::model::{CommentaryItem, FrameFeatureSequence, MatchRecord};
use crate::numerics::{MlpHead, ProjectionHeads};
use crate::seeds::derive_seed;

/// What the generator planted: the hidden map and where each commentary's
/// true frame (and its replay, if any) sits.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruthMap {
    /// `d × d` orthonormal; the true frame of commentary `c` is `normalize(M·c + σε)`.
    pub map: Arc<Array2<f64>>,
    pub planted: Vec<usize>,
    pub replays: Vec<Option<usize>>,
}

impl GroundTruthMap {
    /// `max |MᵀM − I|`
    pub fn orthonormality_error(&self) -> f64 {
        let g = self.map.t().dot(&*self.map);
        g.indexed_iter()
            .map(|((i, j), v)| (v - if i == j { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max)
    }

    /// Heads that realise the true map exactly: the text head computes `M·c`
    /// and the visual head the identity (`x = relu(x) − relu(−x)`).
    pub fn perfect_heads(&self) -> ProjectionHeads<f32> {
        let d = self.map.nrows();
        let eye = Array2::<f64>::eye(d);
        let split = |a: &Array2<f64>| {
            let mut w1 = Array2::zeros((d, 2 * d));
            w1.slice_mut(ndarray::s![.., ..d]).assign(a);
            w1.slice_mut(ndarray::s![.., d..]).assign(&a.mapv(|x| -x));
            w1
        };
        let mut w2 = Array2::zeros((2 * d, d));
        w2.slice_mut(ndarray::s![..d, ..]).assign(&eye);
        w2.slice_mut(ndarray::s![d.., ..]).assign(&eye.mapv(|x| -x));
        let head = |w1: Array2<f64>| MlpHead {
            w1,
            b1: Array1::zeros(2 * d),
            w2: w2.clone(),
            b2: Array1::zeros(d),
        };
        ProjectionHeads {
            // rows are embeddings, so x·Mᵀ = (M·x)ᵀ
            text: head(split(&self.map.t().to_owned())),
            visual: head(split(&eye)),
            seed: 0,
        }
        .cast()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticMatch {
    pub record: MatchRecord,
    pub truth: GroundTruthMap,
}

pub struct Generator {
    cfg: SynthConfig,
    map: Arc<Array2<f64>>,
    offsets: TruncatedNormal,
}

fn gaussian_unit<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Array1<f64> {
    let v = Array1::from_shape_simple_fn(d, || rng.sample::<f64, _>(StandardNormal));
    let n = v.dot(&v).sqrt();
    v / n
}

/// Random orthonormal matrix by modified Gram–Schmidt on Gaussian columns.
fn random_orthonormal(d: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = Array2::from_shape_simple_fn((d, d), || rng.sample::<f64, _>(StandardNormal));
    for j in 0..d {
        for i in 0..j {
            let qi = q.column(i).to_owned();
            let r = qi.dot(&q.column(j));
            q.column_mut(j).scaled_add(-r, &qi);
        }
        let n = q.column(j).dot(&q.column(j)).sqrt();
        q.column_mut(j).mapv_inplace(|x| x / n);
    }
    q
}

impl Generator {
    pub fn new(cfg: SynthConfig) -> Result<Self> {
        cfg.validate()?;
        let offsets = cfg.offset_model()?;
        let map = Arc::new(random_orthonormal(cfg.d, derive_seed(cfg.seed, "map", 0)));
        Ok(Self { cfg, map, offsets })
    }

    pub fn config(&self) -> &SynthConfig {
        &self.cfg
    }

    pub fn offsets(&self) -> &TruncatedNormal {
        &self.offsets
    }

    /// Seed of the `index`-th match of a dataset.
    pub fn match_seed(&self, index: usize) -> u64 {
        derive_seed(self.cfg.seed, "match", index as u64)
    }

    /// A pure function of the config and `match_seed`.
    pub fn generate_match(&self, match_seed: u64) -> SyntheticMatch {
        let cfg = &self.cfg;
        let d = cfg.d;
        let mut rng = ChaCha8Rng::seed_from_u64(match_seed);

        let first = EDGE_MARGIN_S.ceil() as usize;
        let slots = (cfg.duration_s - 2.0 * EDGE_MARGIN_S).floor() as usize + 1;
        let mut anchors: Vec<usize> = index::sample(&mut rng, slots, cfg.commentaries_per_match)
            .into_iter()
            .map(|i| first + i)
            .collect();
        anchors.sort_unstable();

        let picked = index::sample(&mut rng, TEAMS.len(), 2);
        let teams = [TEAMS[picked.index(0)], TEAMS[picked.index(1)]];

        let n = cfg.duration_s.floor() as usize + 1;
        let timestamps: Vec<f64> = (0..n).map(|j| j as f64).collect();
        let mut features = Array2::<f32>::zeros((n, d));
        for mut row in features.axis_iter_mut(Axis(0)) {
            row.assign(&gaussian_unit(&mut rng, d).mapv(|x| x as f32));
        }

        let mut commentaries = Vec::with_capacity(anchors.len());
        let mut replays = vec![None; anchors.len()];
        for (i, &frame) in anchors.iter().enumerate() {
            let text = commentary_text(&mut rng, &teams);
            let c = gaussian_unit(&mut rng, d);
            let eps = Array1::from_shape_simple_fn(d, || {
                rng.sample::<f64, _>(StandardNormal) / (d as f64).sqrt()
            });
            let mut v = self.map.dot(&c) + eps * cfg.noise_sigma;
            v /= v.dot(&v).sqrt();
            features.row_mut(frame).assign(&v.mapv(|x| x as f32));

            if rng.random_bool(cfg.replay_prob) {
                let target = frame + rng.random_range(15..=25);
                let free = target < n
                    && anchors.binary_search(&target).is_err()
                    && !replays.contains(&Some(target));
                if free {
                    let copy = features.row(frame).to_owned();
                    features.row_mut(target).assign(&copy);
                    replays[i] = Some(target);
                }
            }

            let t_gt = timestamps[frame];
            let delta = self.offsets.sample(&mut rng);
            let mut item = CommentaryItem::new(text, (t_gt + delta).max(0.0));
            item.t_gt = Some(t_gt);
            item.embedding = Some(c.iter().map(|x| *x as f32).collect());
            commentaries.push(item);
        }

        let record = MatchRecord {
            match_id: format!("synth-{match_seed:016x}"),
            half: 1,
            duration_s: cfg.duration_s,
            commentaries,
            frames: FrameFeatureSequence::new(timestamps, features, 1.0)
                .expect("generated frames are valid"),
            asr_path: None,
            feature_path: None,
        };
        SyntheticMatch {
            record,
            truth: GroundTruthMap {
                map: Arc::clone(&self.map),
                planted: anchors,
                replays,
            },
        }
    }
}
