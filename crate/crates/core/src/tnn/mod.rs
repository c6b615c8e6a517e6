//! Triplet network over Cluster-CCA projections.
//!
//! The anchor branch embeds the anchor modality; a single shared pair
//! branch embeds both positives and negatives from the other modality.
//! Training minimises the mean hinge `max(d(a,p) − d(a,n) + α, 0)` over the
//! triplets of each batch that still carry loss.

mod adam;
mod metric;
mod mlp;

use std::fs;
use std::path::Path;

use log::warn;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use adam::{adam_step, AdamConfig, Moments};
pub use metric::{cosine_distance, euclidean_distance, triplet_loss, Distance};
pub use mlp::{Activation, Layer, Mlp, MlpCache, MlpSpec};

use crate::dataset::FeatureView;
use crate::error::{Error, Result};
use crate::mining::{
    make_balanced_batches, select_batch_all, select_batch_hard, select_batch_semi_hard,
    select_random, MiningStrategy, TripletBatch, DEFAULT_RANDOM_PER_ANCHOR,
};
use crate::seed;

const INIT_STREAM: u64 = 1;
const DROPOUT_STREAM: u64 = 2;
const BATCH_STREAM: u64 = 1_000;
const RANDOM_MINING_STREAM: u64 = 2_000_000;

/// Retrieval direction; the query modality feeds the anchor branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "audio2visual")]
    Audio2Visual,
    #[serde(rename = "visual2audio")]
    Visual2Audio,
}

impl Direction {
    pub const BOTH: [Direction; 2] = [Direction::Audio2Visual, Direction::Visual2Audio];

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Audio2Visual => "audio2visual",
            Direction::Visual2Audio => "visual2audio",
        }
    }

    /// `(anchor view, pair view)` given the audio (x) and visual (y) views.
    pub fn split<'a, T>(self, audio: &'a T, visual: &'a T) -> (&'a T, &'a T) {
        match self {
            Direction::Audio2Visual => (audio, visual),
            Direction::Visual2Audio => (visual, audio),
        }
    }
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "audio2visual" => Ok(Direction::Audio2Visual),
            "visual2audio" => Ok(Direction::Visual2Audio),
            other => Err(Error::InvalidInput(format!(
                "unknown direction {other:?}, expected audio2visual or visual2audio"
            ))),
        }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Anchor,
    Pair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub margin: f64,
    pub epochs: usize,
    /// Number of category-balanced batches per epoch.
    pub batch_count: usize,
    pub learning_rate: f64,
    pub mining: MiningStrategy,
    pub distance: Distance,
    pub seed: u64,
    pub dropout_rate: f64,
    /// Triplets per anchor for the `random` strategy.
    pub random_per_anchor: usize,
    pub audio_hidden: Vec<usize>,
    pub visual_hidden: Vec<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            margin: 0.5,
            epochs: 20,
            batch_count: 32,
            learning_rate: 1e-3,
            mining: MiningStrategy::BatchAll,
            distance: Distance::Cosine,
            seed: 0,
            dropout_rate: 0.2,
            random_per_anchor: DEFAULT_RANDOM_PER_ANCHOR,
            audio_hidden: vec![100, 100, 100],
            visual_hidden: vec![200, 200, 200],
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let margin_ok = match self.distance {
            Distance::Cosine => self.margin > 0.0 && self.margin < 2.0,
            Distance::Euclidean => self.margin > 0.0 && self.margin.is_finite(),
        };
        if !margin_ok {
            return Err(Error::InvalidInput(format!(
                "margin {} out of range for {:?} distance",
                self.margin, self.distance
            )));
        }
        if self.batch_count == 0 {
            return Err(Error::InvalidInput("batch_count must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidInput("learning_rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::InvalidInput("dropout_rate must be in [0, 1)".into()));
        }
        if self.random_per_anchor == 0 {
            return Err(Error::InvalidInput("random_per_anchor must be at least 1".into()));
        }
        Ok(())
    }

    /// Layer widths `(anchor, pair)` for a direction; hidden widths follow the branch modality.
    pub fn branch_widths(
        &self,
        direction: Direction,
        anchor_input: usize,
        pair_input: usize,
        output: usize,
    ) -> (Vec<usize>, Vec<usize>) {
        let widths = |input: usize, hidden: &[usize]| {
            std::iter::once(input)
                .chain(hidden.iter().copied())
                .chain(std::iter::once(output))
                .collect::<Vec<_>>()
        };
        let (anchor_hidden, pair_hidden) = direction.split(&self.audio_hidden, &self.visual_hidden);
        (widths(anchor_input, anchor_hidden), widths(pair_input, pair_hidden))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TnnModel {
    pub direction: Direction,
    pub anchor: Mlp,
    /// Shared by positives and negatives.
    pub pair: Mlp,
    pub train_config: Option<TrainConfig>,
}

/// Parameter gradients for both branches, laid out like the model.
#[derive(Debug, Clone, PartialEq)]
pub struct TnnGrads {
    pub anchor: Vec<Layer>,
    pub pair: Vec<Layer>,
}

impl TnnGrads {
    pub fn max_abs(&self) -> f64 {
        self.anchor
            .iter()
            .chain(&self.pair)
            .map(|l| l.weights.amax().max(l.bias.amax()))
            .fold(0.0, f64::max)
    }
}

impl TnnModel {
    pub fn new(direction: Direction, anchor_spec: MlpSpec, pair_spec: MlpSpec, rng: &mut impl Rng) -> Result<Self> {
        Ok(TnnModel {
            direction,
            anchor: Mlp::init(anchor_spec, rng)?,
            pair: Mlp::init(pair_spec, rng)?,
            train_config: None,
        })
    }

    fn branch(&self, branch: Branch) -> &Mlp {
        match branch {
            Branch::Anchor => &self.anchor,
            Branch::Pair => &self.pair,
        }
    }

    pub fn zero_grads(&self) -> TnnGrads {
        TnnGrads {
            anchor: self.anchor.layers.iter().map(Layer::zeros_like).collect(),
            pair: self.pair.layers.iter().map(Layer::zeros_like).collect(),
        }
    }

    /// All parameters as mutable slices, in a fixed order.
    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for layer in self.anchor.layers.iter_mut().chain(self.pair.layers.iter_mut()) {
            out.push(layer.weights.as_mut_slice());
            out.push(layer.bias.as_mut_slice());
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.anchor
            .layers
            .iter()
            .chain(&self.pair.layers)
            .all(|l| l.weights.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(&TnnModelJson::from(self))?;
        fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let json: TnnModelJson = serde_json::from_str(&text)
            .map_err(|e| Error::load(path, format!("bad TNN model: {e}")))?;
        json.try_into().map_err(|e: Error| Error::load(path, e.to_string()))
    }
}

/// Per-branch optimiser state.
#[derive(Debug, Clone)]
pub struct AdamState {
    moments: Vec<Moments>,
    step: u64,
}

impl AdamState {
    pub fn new(model: &TnnModel) -> Self {
        let moments = model
            .anchor
            .layers
            .iter()
            .chain(&model.pair.layers)
            .flat_map(|l| [Moments::new(l.weights.len()), Moments::new(l.bias.len())])
            .collect();
        AdamState { moments, step: 0 }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn apply(&mut self, model: &mut TnnModel, grads: &TnnGrads, cfg: &AdamConfig) {
        self.step += 1;
        let grad_slices: Vec<&[f64]> = grads
            .anchor
            .iter()
            .chain(&grads.pair)
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
            .collect();
        for ((params, g), state) in model.params_mut().into_iter().zip(grad_slices).zip(&mut self.moments) {
            adam_step(params, g, state, cfg, self.step);
        }
    }
}

// ---------------------------------------------------------------------------
// Forward / backward

/// Embeddings and caches for a set of anchor rows and a set of pair rows.
///
/// Triplets refer to rows by sample id; ids are kept sorted for lookup.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    anchor_ids: Vec<usize>,
    pair_ids: Vec<usize>,
    pub anchor_emb: DMatrix<f64>,
    pub pair_emb: DMatrix<f64>,
    anchor_cache: MlpCache,
    pair_cache: MlpCache,
}

fn sorted_unique(ids: &[usize]) -> Vec<usize> {
    let mut v = ids.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

impl ForwardPass {
    /// Run the anchor branch on `anchor_view[anchor_ids]` and the pair branch on `pair_view[pair_ids]`.
    pub fn run(
        model: &TnnModel,
        anchor_view: &FeatureView,
        pair_view: &FeatureView,
        anchor_ids: &[usize],
        pair_ids: &[usize],
        train: bool,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let anchor_ids = sorted_unique(anchor_ids);
        let pair_ids = sorted_unique(pair_ids);
        let a_in = anchor_view.matrix().select_rows(&anchor_ids);
        let p_in = pair_view.matrix().select_rows(&pair_ids);
        Self::from_inputs(model, &a_in, &p_in, anchor_ids, pair_ids, train, rng)
    }

    fn from_inputs(
        model: &TnnModel,
        a_in: &DMatrix<f64>,
        p_in: &DMatrix<f64>,
        anchor_ids: Vec<usize>,
        pair_ids: Vec<usize>,
        train: bool,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let (anchor_emb, anchor_cache) = model.anchor.forward(a_in, train, rng)?;
        let (pair_emb, pair_cache) = model.pair.forward(p_in, train, rng)?;
        Ok(ForwardPass {
            anchor_ids,
            pair_ids,
            anchor_emb,
            pair_emb,
            anchor_cache,
            pair_cache,
        })
    }

    pub fn anchor_ids(&self) -> &[usize] {
        &self.anchor_ids
    }

    pub fn pair_ids(&self) -> &[usize] {
        &self.pair_ids
    }

    fn slot(ids: &[usize], id: usize, what: &str) -> Result<usize> {
        ids.binary_search(&id)
            .map_err(|_| Error::InvalidInput(format!("{what} id {id} not in the forward pass")))
    }

    /// Anchor × pair distance matrix between the embeddings.
    pub fn distances(&self, distance: Distance) -> DMatrix<f64> {
        let rows: Vec<Vec<f64>> = row_vectors(&self.anchor_emb);
        let cols: Vec<Vec<f64>> = row_vectors(&self.pair_emb);
        // embeddings are sigmoid outputs, never zero, so eval cannot fail here
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| {
            distance.eval(&rows[i], &cols[j]).unwrap_or(1.0)
        })
    }
}

fn row_vectors(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Embeddings of one (anchor, positive, negative) triple and the cache to backpropagate it.
#[derive(Debug, Clone)]
pub struct TripletForward {
    pub emb_a: Vec<f64>,
    pub emb_p: Vec<f64>,
    pub emb_n: Vec<f64>,
    pub cache: ForwardPass,
}

impl TripletForward {
    /// The single triplet this pass covers, in the pass's id space.
    pub fn triplet(&self) -> TripletBatch {
        TripletBatch {
            anchor_ids: vec![0],
            positive_ids: vec![0],
            negative_ids: vec![1],
        }
    }
}

/// Forward one triple: the anchor through the anchor branch, positive and
/// negative through the shared pair branch.
pub fn forward(
    model: &TnnModel,
    anchor: &[f64],
    pos: &[f64],
    neg: &[f64],
    train: bool,
    rng: &mut impl Rng,
) -> Result<TripletForward> {
    if pos.len() != neg.len() {
        return Err(Error::DimensionMismatch("positive and negative widths differ".into()));
    }
    let a_in = DMatrix::from_row_slice(1, anchor.len(), anchor);
    let mut p_in = DMatrix::zeros(2, pos.len());
    p_in.row_mut(0).copy_from_slice(pos);
    p_in.row_mut(1).copy_from_slice(neg);
    let pass = ForwardPass::from_inputs(model, &a_in, &p_in, vec![0], vec![0, 1], train, rng)?;
    Ok(TripletForward {
        emb_a: pass.anchor_emb.row(0).iter().copied().collect(),
        emb_p: pass.pair_emb.row(0).iter().copied().collect(),
        emb_n: pass.pair_emb.row(1).iter().copied().collect(),
        cache: pass,
    })
}

#[derive(Debug, Clone)]
pub struct BackwardResult {
    /// Mean hinge over the active triplets (zero if none).
    pub loss: f64,
    /// Sum of hinge values over all triplets.
    pub loss_sum: f64,
    pub active: usize,
    pub total: usize,
    pub grads: TnnGrads,
}

/// Exact gradients of the mean hinge over the active triplets.
///
/// Zero-loss triplets are dropped before averaging, so a batch with no
/// active triplet yields all-zero gradients.
pub fn backward(
    model: &TnnModel,
    pass: &ForwardPass,
    triplets: &TripletBatch,
    margin: f64,
    distance: Distance,
) -> Result<BackwardResult> {
    let na = pass.anchor_ids.len();
    let np = pass.pair_ids.len();
    let dist = pass.distances(distance);

    // coef[(a, j)]: multiplier of d(a, j) in the averaged loss
    let mut coef = DMatrix::<f64>::zeros(na, np);
    let mut loss_sum = 0.0;
    let mut active = Vec::new();
    for (a, p, n) in triplets.iter() {
        let ia = ForwardPass::slot(&pass.anchor_ids, a, "anchor")?;
        let ip = ForwardPass::slot(&pass.pair_ids, p, "positive")?;
        let in_ = ForwardPass::slot(&pass.pair_ids, n, "negative")?;
        let h = metric::hinge(dist[(ia, ip)], dist[(ia, in_)], margin);
        loss_sum += h;
        if h > 0.0 {
            active.push((ia, ip, in_, h));
        }
    }
    let mut grads = model.zero_grads();
    if active.is_empty() {
        return Ok(BackwardResult {
            loss: 0.0,
            loss_sum,
            active: 0,
            total: triplets.len(),
            grads,
        });
    }
    let scale = 1.0 / active.len() as f64;
    let loss = active.iter().map(|t| t.3).sum::<f64>() * scale;
    for &(ia, ip, in_, _) in &active {
        coef[(ia, ip)] += scale;
        coef[(ia, in_)] -= scale;
    }

    let k_out = pass.anchor_emb.ncols();
    let mut d_anchor = DMatrix::zeros(na, k_out);
    let mut d_pair = DMatrix::zeros(np, pass.pair_emb.ncols());
    let anchors = row_vectors(&pass.anchor_emb);
    let pairs = row_vectors(&pass.pair_emb);
    for i in 0..na {
        for j in 0..np {
            let c = coef[(i, j)];
            if c == 0.0 {
                continue;
            }
            let (_, ga, gp) = distance.with_grad(&anchors[i], &pairs[j]);
            for (k, (x, y)) in ga.iter().zip(&gp).enumerate() {
                d_anchor[(i, k)] += c * x;
                d_pair[(j, k)] += c * y;
            }
        }
    }
    grads.anchor = model.anchor.backward(&pass.anchor_cache, &d_anchor);
    grads.pair = model.pair.backward(&pass.pair_cache, &d_pair);
    Ok(BackwardResult {
        loss,
        loss_sum,
        active: active.len(),
        total: triplets.len(),
        grads,
    })
}

// ---------------------------------------------------------------------------
// Training

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean hinge over every triplet seen in the epoch.
    pub mean_loss: f64,
    pub active_triplets: usize,
    pub total_triplets: usize,
    pub updates: usize,
    pub skipped_batches: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: TnnModel,
    pub history: Vec<EpochStats>,
    pub warnings: Vec<String>,
}

/// Train one direction on K-dimensional projections `x` (audio) and `y` (visual).
///
/// Each epoch re-deals the samples into balanced batches; each batch is
/// embedded with the current parameters, mined, and followed by one Adam step
/// if any mined triplet carries loss.
pub fn train(
    x: &FeatureView,
    y: &FeatureView,
    labels: &[usize],
    direction: Direction,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    if x.rows() != y.rows() || x.rows() != labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "train inputs have {}, {} and {} rows",
            x.rows(),
            y.rows(),
            labels.len()
        )));
    }
    let (anchor_view, pair_view) = direction.split(x, y);
    let output = anchor_view.cols();
    let (aw, pw) = config.branch_widths(direction, anchor_view.cols(), pair_view.cols(), output);
    let mut init_rng = seed::rng(seed::derive(config.seed, INIT_STREAM));
    let mut model = TnnModel::new(
        direction,
        MlpSpec::new(aw, config.dropout_rate)?,
        MlpSpec::new(pw, config.dropout_rate)?,
        &mut init_rng,
    )?;
    model.train_config = Some(config.clone());

    let adam_cfg = AdamConfig {
        learning_rate: config.learning_rate,
        ..AdamConfig::default()
    };
    let mut adam = AdamState::new(&model);
    let mut dropout_rng = seed::rng(seed::derive(config.seed, DROPOUT_STREAM));
    let mut history = Vec::with_capacity(config.epochs);
    let mut warnings = Vec::new();

    for epoch in 0..config.epochs {
        let batches = make_balanced_batches(
            labels,
            config.batch_count,
            seed::derive(config.seed, BATCH_STREAM + epoch as u64),
        )?;
        let random_pool = match config.mining {
            MiningStrategy::Random => Some(select_random(
                labels,
                config.random_per_anchor,
                seed::derive(config.seed, RANDOM_MINING_STREAM + epoch as u64),
            )?),
            _ => None,
        };
        let mut stats = EpochStats {
            epoch,
            mean_loss: 0.0,
            active_triplets: 0,
            total_triplets: 0,
            updates: 0,
            skipped_batches: 0,
        };
        let mut loss_sum = 0.0;
        for (b, batch) in batches.iter().enumerate() {
            let (pass, triplets) = match &random_pool {
                None => {
                    let pass = ForwardPass::run(&model, anchor_view, pair_view, batch, batch, true, &mut dropout_rng)?;
                    let triplets = match config.mining {
                        MiningStrategy::BatchAll => select_batch_all(batch, labels),
                        MiningStrategy::BatchHard => {
                            select_batch_hard(batch, labels, &pass.distances(config.distance))?
                        }
                        MiningStrategy::BatchSemiHard => select_batch_semi_hard(
                            batch,
                            labels,
                            &pass.distances(config.distance),
                            config.margin,
                        )?,
                        MiningStrategy::Random => unreachable!("handled by the random pool"),
                    };
                    (pass, triplets)
                }
                Some(pool) => {
                    let mut triplets = TripletBatch::default();
                    for (a, p, n) in pool.iter() {
                        if batch.binary_search(&a).is_ok() {
                            triplets.push(a, p, n);
                        }
                    }
                    let pair_ids: Vec<usize> =
                        triplets.positive_ids.iter().chain(&triplets.negative_ids).copied().collect();
                    let pass = ForwardPass::run(&model, anchor_view, pair_view, batch, &pair_ids, true, &mut dropout_rng)?;
                    (pass, triplets)
                }
            };
            if triplets.is_empty() {
                let msg = format!("epoch {epoch} batch {b}: no valid triplet, skipped");
                warn!("{msg}");
                warnings.push(msg);
                stats.skipped_batches += 1;
                continue;
            }
            let result = backward(&model, &pass, &triplets, config.margin, config.distance)?;
            loss_sum += result.loss_sum;
            stats.total_triplets += result.total;
            stats.active_triplets += result.active;
            if result.active == 0 {
                continue;
            }
            adam.apply(&mut model, &result.grads, &adam_cfg);
            stats.updates += 1;
        }
        if !model.is_finite() {
            return Err(Error::Numerical(format!("non-finite parameters after epoch {epoch}")));
        }
        stats.mean_loss = if stats.total_triplets > 0 {
            loss_sum / stats.total_triplets as f64
        } else {
            0.0
        };
        history.push(stats);
    }
    Ok(TrainOutcome {
        model,
        history,
        warnings,
    })
}

/// Inference embedding of every row through one branch, dropout disabled.
pub fn embed(model: &TnnModel, view: &FeatureView, branch: Branch) -> Result<FeatureView> {
    // the rng is never drawn from when train is false
    let mut rng = seed::rng(0);
    let (out, _) = model.branch(branch).forward(view.matrix(), false, &mut rng)?;
    FeatureView::new(out)
}

// ---------------------------------------------------------------------------
// JSON

#[derive(Serialize, Deserialize)]
struct LayerJson {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct BranchJson {
    spec: MlpSpec,
    layers: Vec<LayerJson>,
}

#[derive(Serialize, Deserialize)]
struct TnnModelJson {
    direction: Direction,
    anchor: BranchJson,
    pair: BranchJson,
    train_config: Option<TrainConfig>,
}

impl From<&Mlp> for BranchJson {
    fn from(m: &Mlp) -> Self {
        BranchJson {
            spec: m.spec.clone(),
            layers: m
                .layers
                .iter()
                .map(|l| LayerJson {
                    rows: l.weights.nrows(),
                    cols: l.weights.ncols(),
                    weights: l.weights.row_iter().flat_map(|r| r.iter().copied().collect::<Vec<_>>()).collect(),
                    bias: l.bias.iter().copied().collect(),
                })
                .collect(),
        }
    }
}

impl TryFrom<BranchJson> for Mlp {
    type Error = Error;

    fn try_from(b: BranchJson) -> Result<Self> {
        b.spec.validate()?;
        if b.layers.len() + 1 != b.spec.layer_widths.len() {
            return Err(Error::DimensionMismatch("layer count disagrees with spec".into()));
        }
        let mut layers = Vec::with_capacity(b.layers.len());
        for (l, (layer, w)) in b.layers.into_iter().zip(b.spec.layer_widths.windows(2)).enumerate() {
            if layer.rows != w[0] || layer.cols != w[1] || layer.weights.len() != w[0] * w[1] || layer.bias.len() != w[1] {
                return Err(Error::DimensionMismatch(format!("layer {l} shape disagrees with spec")));
            }
            layers.push(Layer {
                weights: DMatrix::from_row_slice(layer.rows, layer.cols, &layer.weights),
                bias: DVector::from_vec(layer.bias),
            });
        }
        Ok(Mlp { spec: b.spec, layers })
    }
}

impl From<&TnnModel> for TnnModelJson {
    fn from(m: &TnnModel) -> Self {
        TnnModelJson {
            direction: m.direction,
            anchor: (&m.anchor).into(),
            pair: (&m.pair).into(),
            train_config: m.train_config.clone(),
        }
    }
}

impl TryFrom<TnnModelJson> for TnnModel {
    type Error = Error;

    fn try_from(j: TnnModelJson) -> Result<Self> {
        let model = TnnModel {
            direction: j.direction,
            anchor: j.anchor.try_into()?,
            pair: j.pair.try_into()?,
            train_config: j.train_config,
        };
        if !model.is_finite() {
            return Err(Error::InvalidInput("non-finite parameter in model".into()));
        }
        Ok(model)
    }
}
