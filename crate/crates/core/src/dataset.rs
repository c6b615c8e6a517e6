//! Paired two-view datasets.
//!
//! A [`PairedDataset`] holds two row-aligned feature views (conventionally
//! `view_x` is audio and `view_y` is visual) plus one category label per
//! pair. This module also provides CSV/JSON persistence, a synthetic
//! generator whose canonical correlations are known in closed form, and
//! category-balanced k-fold assignment.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Dense N×D matrix of finite features, one sample per row.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureView(DMatrix<f64>);

impl FeatureView {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::InvalidInput(format!(
                "feature view must be non-empty, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        if let Some((r, c)) = first_non_finite(&data) {
            return Err(Error::InvalidInput(format!("non-finite value at ({r}, {c})")));
        }
        Ok(FeatureView(data))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::DimensionMismatch(format!(
                "row {bad} has {} columns, expected {d}",
                rows[bad].len()
            )));
        }
        Self::new(DMatrix::from_fn(n, d, |i, j| rows[i][j]))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.0.row(i).iter().copied().collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows()).map(|i| self.row(i)).collect()
    }

    /// Rows at `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> FeatureView {
        FeatureView(self.0.select_rows(indices))
    }
}

fn first_non_finite(m: &DMatrix<f64>) -> Option<(usize, usize)> {
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if !m[(r, c)].is_finite() {
                return Some((r, c));
            }
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairedDataset {
    pub view_x: FeatureView,
    pub view_y: FeatureView,
    pub labels: Vec<usize>,
    pub class_count: usize,
}

impl PairedDataset {
    pub fn new(
        view_x: FeatureView,
        view_y: FeatureView,
        labels: Vec<usize>,
        class_count: usize,
    ) -> Result<Self> {
        if view_x.rows() != view_y.rows() || view_x.rows() != labels.len() {
            return Err(Error::DimensionMismatch(format!(
                "row count mismatch: view_x {}, view_y {}, labels {}",
                view_x.rows(),
                view_y.rows(),
                labels.len()
            )));
        }
        check_labels(&labels, class_count)?;
        Ok(PairedDataset {
            view_x,
            view_y,
            labels,
            class_count,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of samples in each class.
    pub fn class_sizes(&self) -> Vec<usize> {
        class_sizes(&self.labels, self.class_count)
    }

    /// The pairs at `indices`. Fails if some class ends up unrepresented.
    pub fn subset(&self, indices: &[usize]) -> Result<PairedDataset> {
        PairedDataset::new(
            self.view_x.select_rows(indices),
            self.view_y.select_rows(indices),
            indices.iter().map(|&i| self.labels[i]).collect(),
            self.class_count,
        )
    }
}

pub(crate) fn class_sizes(labels: &[usize], class_count: usize) -> Vec<usize> {
    let mut sizes = vec![0; class_count];
    for &l in labels {
        sizes[l] += 1;
    }
    sizes
}

fn check_labels(labels: &[usize], class_count: usize) -> Result<()> {
    if class_count == 0 {
        return Err(Error::InvalidInput("class_count must be at least 1".into()));
    }
    if let Some((row, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= class_count) {
        return Err(Error::InvalidInput(format!(
            "unknown class index {l} at row {row} (class_count {class_count})"
        )));
    }
    let sizes = class_sizes(labels, class_count);
    if let Some(empty) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::InvalidInput(format!("class {empty} has no samples")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Persistence

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub view_x: PathBuf,
    pub view_y: PathBuf,
    pub labels: PathBuf,
    pub class_count: usize,
}

pub fn load_dataset(manifest_path: impl AsRef<Path>) -> Result<PairedDataset> {
    let manifest_path = manifest_path.as_ref();
    let text = fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| Error::load(manifest_path, format!("bad manifest: {e}")))?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));

    let x_path = base.join(&manifest.view_x);
    let y_path = base.join(&manifest.view_y);
    let l_path = base.join(&manifest.labels);
    let view_x = read_feature_csv(&x_path)?;
    let view_y = read_feature_csv(&y_path)?;
    let labels = read_label_csv(&l_path)?;

    if view_x.rows() != view_y.rows() || view_x.rows() != labels.len() {
        return Err(Error::load(
            manifest_path,
            format!(
                "row count mismatch: view_x {}, view_y {}, labels {}",
                view_x.rows(),
                view_y.rows(),
                labels.len()
            ),
        ));
    }
    check_labels(&labels, manifest.class_count)
        .map_err(|e| Error::load(&l_path, e.to_string()))?;
    PairedDataset::new(view_x, view_y, labels, manifest.class_count)
}

/// Write `ds` into `dir` (created if missing) and return the manifest path.
pub fn save_dataset(ds: &PairedDataset, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest = Manifest {
        view_x: "view_x.csv".into(),
        view_y: "view_y.csv".into(),
        labels: "labels.csv".into(),
        class_count: ds.class_count,
    };
    write_feature_csv(&dir.join(&manifest.view_x), &ds.view_x)?;
    write_feature_csv(&dir.join(&manifest.view_y), &ds.view_y)?;
    write_label_csv(&dir.join(&manifest.labels), &ds.labels)?;
    let path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest)?;
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn csv_reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::load(path, e.to_string()))
}

fn read_feature_csv(path: &Path) -> Result<FeatureView> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, record) in csv_reader(path)?.records().enumerate() {
        let record = record.map_err(|e| Error::load(path, e.to_string()))?;
        let mut row = Vec::with_capacity(record.len());
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Error::load(path, format!("unparseable value {field:?} at ({r}, {c})"))
            })?;
            if !v.is_finite() {
                return Err(Error::load(path, format!("non-finite value at ({r}, {c})")));
            }
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::load(path, "empty feature file"));
    }
    FeatureView::from_rows(&rows).map_err(|e| Error::load(path, e.to_string()))
}

fn read_label_csv(path: &Path) -> Result<Vec<usize>> {
    let mut labels = Vec::new();
    for (r, record) in csv_reader(path)?.records().enumerate() {
        let record = record.map_err(|e| Error::load(path, e.to_string()))?;
        if record.len() != 1 {
            return Err(Error::load(
                path,
                format!("row {r}: expected one label, found {} fields", record.len()),
            ));
        }
        let l: usize = record[0]
            .parse()
            .map_err(|_| Error::load(path, format!("bad label {:?} at row {r}", &record[0])))?;
        labels.push(l);
    }
    Ok(labels)
}

fn write_feature_csv(path: &Path, view: &FeatureView) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| Error::io(path, e.into()))?;
    for i in 0..view.rows() {
        // `{:?}` is the shortest representation that parses back to the same bits.
        let fields: Vec<String> = view.matrix().row(i).iter().map(|v| format!("{v:?}")).collect();
        w.write_record(&fields).map_err(|e| Error::io(path, e.into()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_label_csv(path: &Path, labels: &[usize]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| Error::io(path, e.into()))?;
    for l in labels {
        w.write_record([l.to_string()]).map_err(|e| Error::io(path, e.into()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// Synthetic data

/// How the shared latent is embedded into each view.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatentMap {
    /// Gaussian matrices with entries of variance `1/latent_dim`.
    #[default]
    Random,
    /// Identity; requires `dim_x == dim_y == latent_dim`.
    Identity,
}

/// Parameters of the shared-latent linear-Gaussian generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub class_count: usize,
    pub samples_per_class: usize,
    pub latent_dim: usize,
    pub dim_x: usize,
    pub dim_y: usize,
    pub noise_sigma: f64,
    pub class_separation: f64,
    #[serde(default)]
    pub maps: LatentMap,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            class_count: 10,
            samples_per_class: 200,
            latent_dim: 24,
            dim_x: 32,
            dim_y: 64,
            noise_sigma: 1.0,
            class_separation: 3.0,
            maps: LatentMap::Random,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("class_count", self.class_count),
            ("samples_per_class", self.samples_per_class),
            ("latent_dim", self.latent_dim),
            ("dim_x", self.dim_x),
            ("dim_y", self.dim_y),
        ];
        for (name, v) in dims {
            if v == 0 {
                return Err(Error::InvalidInput(format!("{name} must be at least 1")));
            }
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidInput("noise_sigma must be finite and >= 0".into()));
        }
        if !(self.class_separation >= 0.0 && self.class_separation.is_finite()) {
            return Err(Error::InvalidInput(
                "class_separation must be finite and >= 0".into(),
            ));
        }
        if self.maps == LatentMap::Identity
            && (self.dim_x != self.latent_dim || self.dim_y != self.latent_dim)
        {
            return Err(Error::InvalidInput(
                "identity maps need dim_x == dim_y == latent_dim".into(),
            ));
        }
        Ok(())
    }
}

/// Draw `x = Px (m_c + z) + σ εx`, `y = Py (m_c + z) + σ εy`.
///
/// `m_c` has norm `class_separation`, `z` and `ε` are unit Gaussians. Samples
/// are emitted class by class. Output is a pure function of `spec`.
pub fn synth_clustered(spec: &SynthSpec) -> Result<PairedDataset> {
    spec.validate()?;
    let mut rng = seed::rng(spec.seed);
    let latent = spec.latent_dim;

    let mut gaussian = |rows: usize, cols: usize, scale: f64| {
        DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal) * scale)
    };
    let (px, py) = match spec.maps {
        LatentMap::Random => {
            let s = 1.0 / (latent as f64).sqrt();
            (gaussian(spec.dim_x, latent, s), gaussian(spec.dim_y, latent, s))
        }
        LatentMap::Identity => (DMatrix::identity(latent, latent), DMatrix::identity(latent, latent)),
    };

    let mut means = gaussian(spec.class_count, latent, 1.0);
    for mut row in means.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row *= spec.class_separation / norm;
        }
    }

    let n = spec.class_count * spec.samples_per_class;
    let labels: Vec<usize> = (0..spec.class_count)
        .flat_map(|c| std::iter::repeat_n(c, spec.samples_per_class))
        .collect();
    let z = gaussian(n, latent, 1.0);
    let mut shared = z;
    for (i, &c) in labels.iter().enumerate() {
        for j in 0..latent {
            shared[(i, j)] += means[(c, j)];
        }
    }
    let ex = gaussian(n, spec.dim_x, spec.noise_sigma);
    let ey = gaussian(n, spec.dim_y, spec.noise_sigma);

    let x = &shared * px.transpose() + ex;
    let y = &shared * py.transpose() + ey;
    PairedDataset::new(FeatureView::new(x)?, FeatureView::new(y)?, labels, spec.class_count)
}

// ---------------------------------------------------------------------------
// Folds

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub fold_of: Vec<usize>,
    pub k: usize,
}

impl FoldAssignment {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] != fold).collect()
    }
}

/// Category-balanced k-fold assignment.
///
/// Each class is shuffled with `seed` and dealt round-robin over the folds;
/// the dealing position carries over between classes so fold sizes stay
/// balanced as well.
pub fn kfold_split(ds: &PairedDataset, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::InvalidInput(format!("fold count must be >= 2, got {k}")));
    }
    let sizes = ds.class_sizes();
    if let Some((c, &s)) = sizes.iter().enumerate().find(|(_, &s)| s < k) {
        return Err(Error::InvalidInput(format!(
            "class {c} has {s} samples, fewer than the {k} folds"
        )));
    }
    let mut rng = seed::rng(seed);
    let mut fold_of = vec![0; ds.len()];
    let mut next = 0;
    for c in 0..ds.class_count {
        let mut members: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels[i] == c).collect();
        members.shuffle(&mut rng);
        for i in members {
            fold_of[i] = next % k;
            next += 1;
        }
    }
    Ok(FoldAssignment { fold_of, k })
}

// ---------------------------------------------------------------------------
// Centering

pub fn column_means(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows() as f64;
    DVector::from_iterator(m.ncols(), m.column_iter().map(|c| c.sum() / n))
}

/// Subtract `mean` from every row.
pub fn subtract_row(m: &DMatrix<f64>, mean: &DVector<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        col.add_scalar_mut(-mean[j]);
    }
    out
}

/// Remove the global per-column mean from both views.
pub fn center_views(ds: &PairedDataset) -> (PairedDataset, DVector<f64>, DVector<f64>) {
    let mean_x = column_means(ds.view_x.matrix());
    let mean_y = column_means(ds.view_y.matrix());
    let centered = PairedDataset {
        view_x: FeatureView(subtract_row(ds.view_x.matrix(), &mean_x)),
        view_y: FeatureView(subtract_row(ds.view_y.matrix(), &mean_y)),
        labels: ds.labels.clone(),
        class_count: ds.class_count,
    };
    (centered, mean_x, mean_y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> PairedDataset {
        PairedDataset::new(
            FeatureView::from_rows(&[
                vec![1.0, 2.0, 3.0],
                vec![-0.5, 0.25, 1e-300],
                vec![0.1, 0.2, 0.3],
                vec![7.0, -8.0, 9.5],
            ])
            .unwrap(),
            FeatureView::from_rows(&[
                vec![1.0, 0.0],
                vec![0.0, 1.0],
                vec![std::f64::consts::PI, -2.5],
                vec![1e10, 3.0],
            ])
            .unwrap(),
            vec![0, 1, 1, 0],
            2,
        )
        .unwrap()
    }

    #[test]
    fn save_then_load_is_identity() {
        let dir = tempfile::tempdir().unwrap();
        let ds = tiny();
        let manifest = save_dataset(&ds, dir.path().join("fresh")).unwrap();
        let back = load_dataset(&manifest).unwrap();
        assert_eq!(back.len(), 4);
        assert_eq!(back.class_count, 2);
        assert_eq!(back, ds);
    }

    #[test]
    fn label_row_mismatch_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = save_dataset(&tiny(), dir.path()).unwrap();
        fs::write(dir.path().join("labels.csv"), "0\n1\n1\n").unwrap();
        let err = load_dataset(&manifest).unwrap_err().to_string();
        assert!(err.contains("row count mismatch"), "{err}");
    }

    #[test]
    fn non_finite_entry_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = save_dataset(&tiny(), dir.path()).unwrap();
        fs::write(dir.path().join("view_y.csv"), "1,0\n0,1\n3,NaN\n1,3\n").unwrap();
        let err = load_dataset(&manifest).unwrap_err().to_string();
        assert!(err.contains("non-finite value at (2, 1)"), "{err}");
    }

    #[test]
    fn unknown_class_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = save_dataset(&tiny(), dir.path()).unwrap();
        fs::write(dir.path().join("labels.csv"), "0\n1\n2\n0\n").unwrap();
        let err = load_dataset(&manifest).unwrap_err().to_string();
        assert!(err.contains("unknown class index 2"), "{err}");
    }

    #[test]
    fn unwritable_target_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let err = save_dataset(&tiny(), blocker.join("sub")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }), "{err:?}");
    }

    #[test]
    fn synth_is_deterministic_and_seed_sensitive() {
        let spec = SynthSpec {
            class_count: 3,
            samples_per_class: 10,
            seed: 11,
            ..SynthSpec::default()
        };
        let a = synth_clustered(&spec).unwrap();
        let b = synth_clustered(&spec).unwrap();
        assert_eq!(a, b);
        let c = synth_clustered(&SynthSpec { seed: 12, ..spec }).unwrap();
        assert_ne!(a.view_x, c.view_x);
    }

    #[test]
    fn synth_rejects_bad_spec() {
        let bad = SynthSpec {
            latent_dim: 0,
            ..SynthSpec::default()
        };
        assert!(synth_clustered(&bad).is_err());
        let bad = SynthSpec {
            noise_sigma: -1.0,
            ..SynthSpec::default()
        };
        assert!(synth_clustered(&bad).is_err());
        let bad = SynthSpec {
            maps: LatentMap::Identity,
            ..SynthSpec::default()
        };
        assert!(synth_clustered(&bad).is_err());
    }

    /// Independent oracle: sample Pearson correlation of the two 1-D views.
    #[test]
    fn synth_one_dimensional_correlation_matches_analytic_value() {
        let spec = SynthSpec {
            class_count: 1,
            samples_per_class: 2000,
            latent_dim: 1,
            dim_x: 1,
            dim_y: 1,
            noise_sigma: 1.0,
            class_separation: 0.0,
            maps: LatentMap::Identity,
            seed: 5,
        };
        let ds = synth_clustered(&spec).unwrap();
        let x: Vec<f64> = ds.view_x.matrix().iter().copied().collect();
        let y: Vec<f64> = ds.view_y.matrix().iter().copied().collect();
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
        let r = sxy / (sxx * syy).sqrt();
        assert!((r - 0.5).abs() < 0.05, "r = {r}");
    }

    fn labelled(labels: Vec<usize>, class_count: usize) -> PairedDataset {
        let n = labels.len();
        let v = FeatureView::new(DMatrix::from_fn(n, 1, |i, _| i as f64)).unwrap();
        PairedDataset::new(v.clone(), v, labels, class_count).unwrap()
    }

    #[test]
    fn kfold_exact_division() {
        let ds = labelled((0..100).map(|i| i % 10).collect(), 10);
        let folds = kfold_split(&ds, 5, 3).unwrap();
        for f in 0..5 {
            let test = folds.test_indices(f);
            assert_eq!(test.len(), 20);
            let sizes = class_sizes(&test.iter().map(|&i| ds.labels[i]).collect::<Vec<_>>(), 10);
            assert!(sizes.iter().all(|&s| s == 2), "{sizes:?}");
        }
    }

    #[test]
    fn kfold_uneven_class_is_balanced_within_one() {
        let ds = labelled(vec![0; 11], 1);
        let folds = kfold_split(&ds, 5, 9).unwrap();
        for f in 0..5 {
            let n = folds.test_indices(f).len();
            assert!(n == 2 || n == 3, "fold {f} has {n}");
        }
    }

    #[test]
    fn kfold_rejects_small_class() {
        let mut labels = vec![0; 10];
        labels.extend([1, 1, 1]);
        let ds = labelled(labels, 2);
        assert!(kfold_split(&ds, 5, 0).is_err());
        assert!(kfold_split(&ds, 1, 0).is_err());
    }

    #[test]
    fn centering() {
        let ds = tiny();
        let (c, mx, _) = center_views(&ds);
        for col in c.view_x.matrix().column_iter() {
            assert!(col.sum().abs() < 1e-10);
        }
        assert!((mx[0] - (1.0 - 0.5 + 0.1 + 7.0) / 4.0).abs() < 1e-15);

        // already centred data is left alone
        let (again, m2, _) = center_views(&c);
        assert!(m2.iter().all(|v| v.abs() < 1e-12));
        assert!((again.view_x.matrix() - c.view_x.matrix()).amax() < 1e-12);

        // repeated row collapses to zero
        let rep = FeatureView::from_rows(&vec![vec![3.0, -1.0]; 4]).unwrap();
        let ds = PairedDataset::new(rep.clone(), rep, vec![0; 4], 1).unwrap();
        let (c, _, _) = center_views(&ds);
        assert!(c.view_x.matrix().iter().all(|&v| v == 0.0));
    }
}
