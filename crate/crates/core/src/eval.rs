//! Cosine retrieval, average precision, PRC and cross-validated reporting.

use std::fs;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::cca::{self, CcaMode, CcaModel};
use crate::dataset::{FeatureView, FoldAssignment, PairedDataset};
use crate::error::{Error, Result};
use crate::seed;
use crate::tnn::{self, cosine_distance, Branch, Direction, TnnModel, TrainConfig};

/// Number of points on the interpolated recall grid.
pub const PRC_POINTS: usize = 101;

/// Gallery ranked for one query, most similar first.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub query_id: usize,
    pub gallery_ids: Vec<usize>,
    pub scores: Vec<f64>,
    pub relevant: Vec<bool>,
}

impl RankedList {
    pub fn relevant_count(&self) -> usize {
        self.relevant.iter().filter(|&&r| r).count()
    }
}

/// Rank every gallery row by cosine similarity to `query`.
///
/// Ties keep ascending gallery order. A zero gallery row scores 0.
pub fn retrieve(
    query_id: usize,
    query: &[f64],
    gallery: &FeatureView,
    query_label: usize,
    gallery_labels: &[usize],
) -> Result<RankedList> {
    if query.len() != gallery.cols() {
        return Err(Error::DimensionMismatch(format!(
            "query has {} dims, gallery {}",
            query.len(),
            gallery.cols()
        )));
    }
    if gallery_labels.len() != gallery.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} gallery labels for {} rows",
            gallery_labels.len(),
            gallery.rows()
        )));
    }
    if query.iter().all(|&v| v == 0.0) {
        return Err(Error::InvalidInput(format!("query {query_id} is a zero vector")));
    }
    let scores: Vec<f64> = (0..gallery.rows())
        .map(|j| {
            let row = gallery.row(j);
            if row.iter().all(|&v| v == 0.0) {
                Ok(0.0)
            } else {
                cosine_distance(query, &row).map(|d| 1.0 - d)
            }
        })
        .collect::<Result<_>>()?;
    let mut order: Vec<usize> = (0..gallery.rows()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    Ok(RankedList {
        query_id,
        relevant: order.iter().map(|&j| gallery_labels[j] == query_label).collect(),
        scores: order.iter().map(|&j| scores[j]).collect(),
        gallery_ids: order,
    })
}

/// AP over the full list; 0 when nothing is relevant.
pub fn average_precision(relevant: &[bool]) -> f64 {
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, _) in relevant.iter().enumerate().filter(|(_, &r)| r) {
        hits += 1;
        sum += hits as f64 / (rank + 1) as f64;
    }
    if hits == 0 {
        0.0
    } else {
        sum / hits as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapResult {
    pub map: f64,
    pub query_aps: Vec<f64>,
    pub zero_relevant_queries: usize,
    pub lists: Vec<RankedList>,
}

/// Rank `gallery` for every row of `queries` and average the APs.
pub fn mean_average_precision(
    queries: &FeatureView,
    gallery: &FeatureView,
    query_labels: &[usize],
    gallery_labels: &[usize],
) -> Result<MapResult> {
    if query_labels.len() != queries.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} query labels for {} rows",
            query_labels.len(),
            queries.rows()
        )));
    }
    let lists = (0..queries.rows())
        .map(|i| retrieve(i, &queries.row(i), gallery, query_labels[i], gallery_labels))
        .collect::<Result<Vec<_>>>()?;
    let mut zero = 0;
    let query_aps: Vec<f64> = lists
        .iter()
        .map(|l| {
            if l.relevant_count() == 0 {
                zero += 1;
            }
            average_precision(&l.relevant)
        })
        .collect();
    if zero > 0 {
        warn!("{zero} queries have no relevant gallery item and score AP 0");
    }
    let map = if query_aps.is_empty() {
        0.0
    } else {
        query_aps.iter().sum::<f64>() / query_aps.len() as f64
    };
    Ok(MapResult {
        map,
        query_aps,
        zero_relevant_queries: zero,
        lists,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrcPoint {
    pub recall: f64,
    pub precision: f64,
}

pub fn recall_grid() -> Vec<f64> {
    (0..PRC_POINTS).map(|i| i as f64 / (PRC_POINTS - 1) as f64).collect()
}

/// Interpolated precision of one list on the recall grid, or `None` without relevant items.
fn interpolated_precision(relevant: &[bool]) -> Option<Vec<f64>> {
    let total = relevant.iter().filter(|&&r| r).count();
    if total == 0 {
        return None;
    }
    // best[r] = max precision over cutoffs whose hit count is at least r
    let mut best = vec![0.0f64; total + 1];
    let mut hits = 0;
    for (rank, &r) in relevant.iter().enumerate() {
        if r {
            hits += 1;
        }
        let p = hits as f64 / (rank + 1) as f64;
        best[hits] = best[hits].max(p);
    }
    for h in (0..total).rev() {
        best[h] = best[h].max(best[h + 1]);
    }
    // grid point i needs the smallest hit count h with h / total >= i / (PRC_POINTS - 1)
    let steps = PRC_POINTS - 1;
    Some(
        (0..PRC_POINTS)
            .map(|i| best[(i * total).div_ceil(steps)])
            .collect(),
    )
}

/// Query-averaged interpolated PRC. Lists without relevant items are skipped.
pub fn precision_recall_curve(lists: &[RankedList]) -> Vec<PrcPoint> {
    let mut acc = vec![0.0; PRC_POINTS];
    let mut used = 0usize;
    for curve in lists.iter().filter_map(|l| interpolated_precision(&l.relevant)) {
        used += 1;
        for (a, p) in acc.iter_mut().zip(curve) {
            *a += p;
        }
    }
    recall_grid()
        .into_iter()
        .zip(acc)
        .map(|(recall, s)| PrcPoint {
            recall,
            precision: if used == 0 { 0.0 } else { s / used as f64 },
        })
        .collect()
}

pub fn write_prc_csv(path: impl AsRef<Path>, prc: &[PrcPoint]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::load(path, e.to_string()))?;
    let io = |e: csv::Error| Error::load(path, e.to_string());
    w.write_record(["recall", "precision"]).map_err(io)?;
    for p in prc {
        w.write_record([format!("{:?}", p.recall), format!("{:?}", p.precision)])
            .map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// Cross-validation

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryAp {
    pub fold: usize,
    /// Row index in the full dataset.
    pub query_id: usize,
    pub ap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalReport {
    pub direction: Direction,
    pub map: f64,
    pub fold_maps: Vec<f64>,
    pub fold_map_mean: f64,
    pub query_aps: Vec<QueryAp>,
    pub prc: Vec<PrcPoint>,
    pub zero_relevant_queries: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValReport {
    pub audio2visual: RetrievalReport,
    pub visual2audio: RetrievalReport,
}

impl CrossValReport {
    pub fn direction(&self, d: Direction) -> &RetrievalReport {
        match d {
            Direction::Audio2Visual => &self.audio2visual,
            Direction::Visual2Audio => &self.visual2audio,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self)?;
        fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }
}

/// What to fit per fold. Without `tnn` the CCA projections are ranked directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub mode: CcaMode,
    pub k: usize,
    pub reg: Option<f64>,
    pub tnn: Option<TrainConfig>,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            mode: CcaMode::ClusterCca,
            k: cca::DEFAULT_COMPONENTS,
            reg: None,
            tnn: Some(TrainConfig::default()),
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn cluster_cca_only(self) -> Self {
        PipelineConfig {
            mode: CcaMode::ClusterCca,
            tnn: None,
            ..self
        }
    }

    pub fn cca_only(self) -> Self {
        PipelineConfig {
            mode: CcaMode::Cca,
            tnn: None,
            ..self
        }
    }
}

/// Training seed for one fold and direction, derived from the run seed.
pub fn train_seed(run_seed: u64, fold: usize, direction: Direction) -> u64 {
    let dir = match direction {
        Direction::Audio2Visual => 0,
        Direction::Visual2Audio => 1,
    };
    seed::derive(run_seed, 10_000 + 2 * fold as u64 + dir)
}

/// Training and held-out subsets for one fold.
pub fn fold_split(ds: &PairedDataset, folds: &FoldAssignment, fold: usize) -> Result<(PairedDataset, PairedDataset)> {
    if folds.fold_of.len() != ds.len() {
        return Err(Error::DimensionMismatch(format!(
            "fold assignment covers {} rows, dataset has {}",
            folds.fold_of.len(),
            ds.len()
        )));
    }
    if fold >= folds.k {
        return Err(Error::InvalidInput(format!("fold {fold} out of range 0..{}", folds.k)));
    }
    Ok((ds.subset(&folds.train_indices(fold))?, ds.subset(&folds.test_indices(fold))?))
}

/// Train the triplet network for one direction on CCA-projected training data.
pub fn train_direction(
    projected_train: &PairedDataset,
    direction: Direction,
    config: &TrainConfig,
    seed: u64,
) -> Result<tnn::TrainOutcome> {
    let cfg = TrainConfig {
        seed,
        ..config.clone()
    };
    tnn::train(
        &projected_train.view_x,
        &projected_train.view_y,
        &projected_train.labels,
        direction,
        &cfg,
    )
}

/// Held-out retrieval for one direction: anchor-modality queries against the
/// other modality's gallery, both drawn from `projected_test`.
pub fn evaluate_direction(
    projected_test: &PairedDataset,
    direction: Direction,
    model: Option<&TnnModel>,
) -> Result<MapResult> {
    let (q, g) = direction.split(&projected_test.view_x, &projected_test.view_y);
    let (q, g) = match model {
        Some(m) => {
            if m.direction != direction {
                return Err(Error::InvalidInput(format!(
                    "model trained for {} used for {direction}",
                    m.direction
                )));
            }
            (tnn::embed(m, q, Branch::Anchor)?, tnn::embed(m, g, Branch::Pair)?)
        }
        None => (q.clone(), g.clone()),
    };
    mean_average_precision(&q, &g, &projected_test.labels, &projected_test.labels)
}

/// Everything a cross-validated run produced.
#[derive(Debug, Clone)]
pub struct CrossValRun {
    pub report: CrossValReport,
    pub cca_models: Vec<CcaModel>,
    /// Indexed `[fold][direction]` in `Direction::BOTH` order; empty without TNN.
    pub tnn_models: Vec<Vec<TnnModel>>,
    pub warnings: Vec<String>,
}

/// Fit, train and evaluate every fold, held-out queries against the held-out gallery.
pub fn crossval_evaluate(ds: &PairedDataset, folds: &FoldAssignment, config: &PipelineConfig) -> Result<CrossValRun> {
    if let Some(t) = &config.tnn {
        t.validate()?;
    }
    let mut cca_models = Vec::with_capacity(folds.k);
    let mut tnn_models = Vec::new();
    let mut warnings = Vec::new();
    let mut per_dir: Vec<Vec<(usize, Vec<usize>, MapResult)>> = vec![Vec::new(), Vec::new()];
    for fold in 0..folds.k {
        let (train, test) = fold_split(ds, folds, fold)?;
        let model = cca::fit(&train, config.mode, config.k, config.reg)?;
        let ptrain = model.project_dataset(&train)?;
        let ptest = model.project_dataset(&test)?;
        let mut fold_models = Vec::new();
        for (d, direction) in Direction::BOTH.into_iter().enumerate() {
            let tnn_model = match &config.tnn {
                Some(t) => {
                    let out = train_direction(&ptrain, direction, t, train_seed(config.seed, fold, direction))?;
                    warnings.extend(out.warnings.into_iter().map(|w| format!("fold {fold} {direction}: {w}")));
                    Some(out.model)
                }
                None => None,
            };
            let result = evaluate_direction(&ptest, direction, tnn_model.as_ref())?;
            per_dir[d].push((fold, folds.test_indices(fold), result));
            fold_models.extend(tnn_model);
        }
        cca_models.push(model);
        if config.tnn.is_some() {
            tnn_models.push(fold_models);
        }
    }
    let mut reports = Direction::BOTH
        .into_iter()
        .zip(per_dir)
        .map(|(d, folds)| assemble_report(d, folds));
    let report = CrossValReport {
        audio2visual: reports.next().expect("two directions"),
        visual2audio: reports.next().expect("two directions"),
    };
    for r in [&report.audio2visual, &report.visual2audio] {
        if r.zero_relevant_queries > 0 {
            warnings.push(format!(
                "{}: {} queries without relevant items",
                r.direction, r.zero_relevant_queries
            ));
        }
    }
    Ok(CrossValRun {
        report,
        cca_models,
        tnn_models,
        warnings,
    })
}

/// Merge per-fold results; query APs are ordered by dataset row.
pub fn assemble_report(direction: Direction, folds: Vec<(usize, Vec<usize>, MapResult)>) -> RetrievalReport {
    let fold_maps: Vec<f64> = folds.iter().map(|(_, _, r)| r.map).collect();
    let mut query_aps = Vec::new();
    let mut lists = Vec::new();
    let mut zero = 0;
    for (fold, ids, r) in folds {
        zero += r.zero_relevant_queries;
        query_aps.extend(r.query_aps.iter().zip(&ids).map(|(&ap, &query_id)| QueryAp { fold, query_id, ap }));
        lists.extend(r.lists);
    }
    query_aps.sort_by_key(|q| q.query_id);
    let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
    let aps: Vec<f64> = query_aps.iter().map(|q| q.ap).collect();
    RetrievalReport {
        direction,
        map: mean(&aps),
        fold_map_mean: mean(&fold_maps),
        fold_maps,
        query_aps,
        prc: precision_recall_curve(&lists),
        zero_relevant_queries: zero,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{kfold_split, synth_clustered, SynthSpec};
    use rand::seq::SliceRandom;
    use rand::Rng;

    fn brute_ap(relevant: &[bool]) -> f64 {
        let total = relevant.iter().filter(|&&r| r).count();
        if total == 0 {
            return 0.0;
        }
        let mut sum = 0.0;
        for r in 0..relevant.len() {
            if relevant[r] {
                let mut hits = 0;
                for q in 0..=r {
                    if relevant[q] {
                        hits += 1;
                    }
                }
                sum += hits as f64 / (r + 1) as f64;
            }
        }
        sum / total as f64
    }

    fn flags(v: &[u8]) -> Vec<bool> {
        v.iter().map(|&b| b == 1).collect()
    }

    #[test]
    fn ap_hand_cases() {
        assert_eq!(average_precision(&flags(&[1, 1, 1])), 1.0);
        assert_eq!(average_precision(&flags(&[0, 0, 0])), 0.0);
        assert!((average_precision(&flags(&[1, 0, 1])) - 5.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn ap_matches_brute_force() {
        let mut rng = seed::rng(1);
        for _ in 0..200 {
            let n = rng.random_range(1..=100);
            let f: Vec<bool> = (0..n).map(|_| rng.random_bool(0.3)).collect();
            assert_eq!(average_precision(&f), brute_ap(&f));
        }
    }

    #[test]
    fn retrieve_ranks_self_first_and_breaks_ties_by_id() {
        let g = FeatureView::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0], vec![0.0, 2.0], vec![1.0, 1.0]]).unwrap();
        let l = retrieve(0, &[1.0, 0.0], &g, 1, &[0, 1, 1, 0]).unwrap();
        assert_eq!(l.gallery_ids, vec![1, 3, 0, 2]);
        assert_eq!(l.relevant, vec![true, false, false, true]);
        assert!(l.scores.windows(2).all(|w| w[0] >= w[1]));

        let ortho = FeatureView::from_rows(&[vec![0.0, 1.0], vec![0.0, -3.0], vec![0.0, 0.5]]).unwrap();
        let l = retrieve(0, &[2.0, 0.0], &ortho, 0, &[0, 0, 0]).unwrap();
        assert_eq!(l.gallery_ids, vec![0, 1, 2]);
        assert!(l.scores.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn retrieve_errors() {
        let g = FeatureView::from_rows(&[vec![0.0, 1.0]]).unwrap();
        assert!(matches!(retrieve(0, &[0.0, 0.0], &g, 0, &[0]), Err(Error::InvalidInput(_))));
        assert!(retrieve(0, &[1.0], &g, 0, &[0]).is_err());
        assert!(retrieve(0, &[1.0, 0.0], &g, 0, &[0, 1]).is_err());
    }

    #[test]
    fn map_cases() {
        let q = FeatureView::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let r = mean_average_precision(&q, &q, &[0, 1], &[0, 1]).unwrap();
        assert_eq!(r.map, 1.0);
        // second query: relevant item ranked second of two
        let g = FeatureView::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let r = mean_average_precision(&q, &g, &[0, 0], &[0, 1]).unwrap();
        assert_eq!(r.query_aps, vec![1.0, 0.5]);
        assert_eq!(r.map, 0.75);
        let r = mean_average_precision(&q, &g, &[0, 2], &[0, 1]).unwrap();
        assert_eq!(r.zero_relevant_queries, 1);
    }

    #[test]
    fn random_labels_give_chance_map() {
        let mut rng = seed::rng(11);
        let n = 2000;
        let v = FeatureView::new(nalgebra::DMatrix::from_fn(n, 8, |_, _| rng.random_range(-1.0..1.0))).unwrap();
        let mut labels: Vec<usize> = (0..n).map(|i| i % 10).collect();
        labels.shuffle(&mut rng);
        let r = mean_average_precision(&v, &v.clone(), &labels, &labels).unwrap();
        assert!((r.map - 0.1).abs() < 0.02, "{}", r.map);
    }

    fn list(relevant: Vec<bool>) -> RankedList {
        RankedList {
            query_id: 0,
            gallery_ids: (0..relevant.len()).collect(),
            scores: vec![0.0; relevant.len()],
            relevant,
        }
    }

    #[test]
    fn prc_cases() {
        let perfect = precision_recall_curve(&[list(flags(&[1, 1, 0, 0]))]);
        assert_eq!(perfect.len(), PRC_POINTS);
        assert!(perfect.iter().all(|p| p.precision == 1.0));
        assert_eq!(perfect[0].recall, 0.0);
        assert_eq!(perfect[100].recall, 1.0);
        assert!(perfect.windows(2).all(|w| w[0].recall < w[1].recall));

        let one = precision_recall_curve(&[list(flags(&[1, 0]))]);
        assert!(one.iter().all(|p| p.precision == 1.0));

        let late = precision_recall_curve(&[list(flags(&[0, 1, 0, 1]))]);
        assert_eq!(late[50].precision, 0.5);
        assert_eq!(late[51].precision, 0.5);
        assert_eq!(late[100].precision, 0.5);
        let mixed = precision_recall_curve(&[list(flags(&[1, 0, 0, 1]))]);
        assert_eq!(mixed[50].precision, 1.0);
        assert_eq!(mixed[51].precision, 0.5);
    }

    #[test]
    fn prc_csv_has_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("prc.csv");
        write_prc_csv(&path, &precision_recall_curve(&[list(flags(&[1, 0]))])).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("recall,precision"));
        assert_eq!(lines.next(), Some("0.0,1.0"));
        assert_eq!(text.lines().count(), PRC_POINTS + 1);
    }

    fn small_ds(classes: usize, seed: u64) -> PairedDataset {
        synth_clustered(&SynthSpec {
            class_count: classes,
            samples_per_class: 20,
            latent_dim: 4,
            dim_x: 6,
            dim_y: 5,
            noise_sigma: 0.5,
            seed,
            ..SynthSpec::default()
        })
        .unwrap()
    }

    #[test]
    fn crossval_structure_and_determinism() {
        let ds = small_ds(3, 1);
        let folds = kfold_split(&ds, 5, 2).unwrap();
        let cfg = PipelineConfig {
            k: 3,
            tnn: Some(TrainConfig {
                epochs: 2,
                batch_count: 2,
                audio_hidden: vec![8],
                visual_hidden: vec![8],
                ..TrainConfig::default()
            }),
            ..PipelineConfig::default()
        };
        let a = crossval_evaluate(&ds, &folds, &cfg).unwrap();
        let b = crossval_evaluate(&ds, &folds, &cfg).unwrap();
        assert_eq!(a.report, b.report);
        for d in Direction::BOTH {
            let r = a.report.direction(d);
            assert_eq!(r.direction, d);
            assert_eq!(r.fold_maps.len(), 5);
            assert_eq!(r.query_aps.len(), ds.len());
            assert!(r.query_aps.windows(2).all(|w| w[0].query_id < w[1].query_id));
            assert!((0.0..=1.0).contains(&r.map));
        }
        assert_eq!(a.tnn_models.len(), 5);
        assert_eq!(a.tnn_models[0][1].direction, Direction::Visual2Audio);
    }

    #[test]
    fn single_class_scores_one() {
        let ds = small_ds(1, 3);
        let folds = kfold_split(&ds, 5, 0).unwrap();
        let cfg = PipelineConfig {
            k: 3,
            ..PipelineConfig::default()
        }
        .cluster_cca_only();
        let run = crossval_evaluate(&ds, &folds, &cfg).unwrap();
        assert_eq!(run.report.audio2visual.map, 1.0);
        assert_eq!(run.report.visual2audio.map, 1.0);
        assert!(run.tnn_models.is_empty());
    }

    #[test]
    fn direction_mismatch_is_rejected() {
        let ds = small_ds(2, 4);
        let out = train_direction(
            &ds,
            Direction::Audio2Visual,
            &TrainConfig {
                epochs: 0,
                ..TrainConfig::default()
            },
            0,
        );
        // raw views have different widths, so training in their own space is still valid
        let model = out.unwrap().model;
        assert!(evaluate_direction(&ds, Direction::Visual2Audio, Some(&model)).is_err());
    }
}
