//! Canonical correlation analysis and its cluster-paired variant.
//!
//! Both solvers share one path: whiten the regularised auto-covariances,
//! take the SVD of the whitened cross-covariance, and map the top singular
//! vectors back to the input coordinates. Cluster-CCA differs only in how the
//! covariance triple is assembled: every (x, y) pair that shares a category
//! counts as a correspondence, which is computed from per-class sums instead
//! of materialising the pairs.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::{center_views, class_sizes, subtract_row, FeatureView, PairedDataset};
use crate::error::{Error, Result};
use crate::linalg::{self, from_rows, to_rows};

/// Number of canonical components used throughout the pipeline.
pub const DEFAULT_COMPONENTS: usize = 10;

/// Correlations may exceed one by this much before it is treated as a failure.
const CORRELATION_SLACK: f64 = 1e-8;

/// Relative ridge used when no explicit `reg` is given: `reg = 1e-4 · trace(C) / D`.
const AUTO_RIDGE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceTriple {
    pub cxx: DMatrix<f64>,
    pub cyy: DMatrix<f64>,
    pub cxy: DMatrix<f64>,
}

/// Which view a projection applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CcaMode {
    Cca,
    #[default]
    ClusterCca,
}

impl std::str::FromStr for CcaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cca" => Ok(CcaMode::Cca),
            "cluster-cca" => Ok(CcaMode::ClusterCca),
            other => Err(Error::InvalidInput(format!(
                "unknown mode {other:?}, expected cca or cluster-cca"
            ))),
        }
    }
}

/// Ridge actually added to each auto-covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ridge {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CcaModel {
    /// D_x × K projection directions.
    pub wx: DMatrix<f64>,
    /// D_y × K projection directions.
    pub wy: DMatrix<f64>,
    /// Canonical correlations, non-increasing, in [0, 1].
    pub correlations: Vec<f64>,
    pub mean_x: DVector<f64>,
    pub mean_y: DVector<f64>,
    pub k: usize,
    pub reg: Ridge,
}

fn check_same_rows(x: &FeatureView, y: &FeatureView) -> Result<()> {
    if x.rows() != y.rows() {
        return Err(Error::DimensionMismatch(format!(
            "views have {} and {} rows",
            x.rows(),
            y.rows()
        )));
    }
    Ok(())
}

/// Plain second moments `(1/N) Σ x xᵀ` etc. of already-centred views.
pub fn compute_covariances(x: &FeatureView, y: &FeatureView) -> Result<CovarianceTriple> {
    check_same_rows(x, y)?;
    let n = x.rows() as f64;
    let (xm, ym) = (x.matrix(), y.matrix());
    Ok(CovarianceTriple {
        cxx: xm.tr_mul(xm) / n,
        cyy: ym.tr_mul(ym) / n,
        cxy: xm.tr_mul(ym) / n,
    })
}

/// Cluster-paired second moments.
///
/// With `n_c` pairs in class `c` and `L = Σ_c n_c²`:
/// `C'xx = (1/L) Σ_c n_c Σ_i x_i xᵢᵀ`, `C'yy` likewise and
/// `C'xy = (1/L) Σ_c (Σ_i x_i)(Σ_j y_j)ᵀ`. Cost is O(N·D²).
pub fn compute_cluster_covariances(
    x: &FeatureView,
    y: &FeatureView,
    labels: &[usize],
    class_count: usize,
) -> Result<CovarianceTriple> {
    check_same_rows(x, y)?;
    if labels.len() != x.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {} rows",
            labels.len(),
            x.rows()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= class_count) {
        return Err(Error::InvalidInput(format!("label {bad} >= class_count {class_count}")));
    }
    let sizes = class_sizes(labels, class_count);
    if let Some(c) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::InvalidInput(format!("cluster {c} is empty")));
    }
    let pairs: f64 = sizes.iter().map(|&s| (s * s) as f64).sum();

    let (xm, ym) = (x.matrix(), y.matrix());
    let mut sum_x = DMatrix::zeros(class_count, xm.ncols());
    let mut sum_y = DMatrix::zeros(class_count, ym.ncols());
    let mut wxm = xm.clone();
    let mut wym = ym.clone();
    for (i, &c) in labels.iter().enumerate() {
        let mut sx = sum_x.row_mut(c);
        sx += xm.row(i);
        let mut sy = sum_y.row_mut(c);
        sy += ym.row(i);
        let w = sizes[c] as f64;
        wxm.row_mut(i).scale_mut(w);
        wym.row_mut(i).scale_mut(w);
    }
    Ok(CovarianceTriple {
        cxx: wxm.tr_mul(xm) / pairs,
        cyy: wym.tr_mul(ym) / pairs,
        cxy: sum_x.tr_mul(&sum_y) / pairs,
    })
}

fn auto_ridge(c: &DMatrix<f64>) -> f64 {
    AUTO_RIDGE * c.trace() / c.nrows() as f64
}

/// Solve the regularised CCA eigenproblem by SVD of the whitened cross-covariance.
///
/// `reg = None` selects `1e-4 · trace(C)/D` per view. Projection columns are
/// scaled to unit variance under `cxx` / `cyy`; the means are left at zero.
pub fn solve_cca(cov: &CovarianceTriple, k: usize, reg: Option<f64>) -> Result<CcaModel> {
    let (dx, dy) = (cov.cxx.nrows(), cov.cyy.nrows());
    if cov.cxx.ncols() != dx || cov.cyy.ncols() != dy || cov.cxy.shape() != (dx, dy) {
        return Err(Error::DimensionMismatch("inconsistent covariance shapes".into()));
    }
    if k == 0 || k > dx.min(dy) {
        return Err(Error::InvalidInput(format!(
            "component count {k} must be in 1..={}",
            dx.min(dy)
        )));
    }
    if let Some(r) = reg {
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::InvalidInput(format!("reg must be finite and >= 0, got {r}")));
        }
    }
    let ridge = Ridge {
        x: reg.unwrap_or_else(|| auto_ridge(&cov.cxx)),
        y: reg.unwrap_or_else(|| auto_ridge(&cov.cyy)),
    };
    let cxx = &cov.cxx + DMatrix::identity(dx, dx) * ridge.x;
    let cyy = &cov.cyy + DMatrix::identity(dy, dy) * ridge.y;
    let whiten_x = linalg::inv_sqrt_spd(&cxx, "regularised C_xx")?;
    let whiten_y = linalg::inv_sqrt_spd(&cyy, "regularised C_yy")?;

    let t = &whiten_x * &cov.cxy * &whiten_y;
    let (u, singular, v) = linalg::thin_svd(&t)?;

    let mut wx = DMatrix::zeros(dx, k);
    let mut wy = DMatrix::zeros(dy, k);
    let mut correlations = Vec::with_capacity(k);
    for (col, &s) in singular.iter().take(k).enumerate() {
        if !s.is_finite() || s > 1.0 + CORRELATION_SLACK {
            return Err(Error::Numerical(format!(
                "canonical correlation {s} outside [0, 1]"
            )));
        }
        correlations.push(s.clamp(0.0, 1.0));
        wx.set_column(col, &(&whiten_x * u.column(col)));
        wy.set_column(col, &(&whiten_y * v.column(col)));
    }

    for col in 0..k {
        let a = wx.column(col).clone_owned();
        let b = wy.column(col).clone_owned();
        let vx = a.dot(&(&cov.cxx * &a));
        let vy = b.dot(&(&cov.cyy * &b));
        if vx > 0.0 {
            wx.column_mut(col).scale_mut(1.0 / vx.sqrt());
        }
        if vy > 0.0 {
            wy.column_mut(col).scale_mut(1.0 / vy.sqrt());
        }
    }
    orient_columns(&mut wx, &mut wy);

    Ok(CcaModel {
        wx,
        wy,
        correlations,
        mean_x: DVector::zeros(dx),
        mean_y: DVector::zeros(dy),
        k,
        reg: ridge,
    })
}

/// Flip each column pair so the largest-magnitude entry of the x column is positive.
fn orient_columns(wx: &mut DMatrix<f64>, wy: &mut DMatrix<f64>) {
    for col in 0..wx.ncols() {
        let c = wx.column(col);
        let pivot = c.iter().copied().fold(0.0f64, |best, v| if v.abs() > best.abs() { v } else { best });
        if pivot < 0.0 {
            wx.column_mut(col).neg_mut();
            wy.column_mut(col).neg_mut();
        }
    }
}

/// Rescale projection columns to unit variance over the (centred) training views.
fn normalize_to_data(model: &mut CcaModel, x: &FeatureView, y: &FeatureView) {
    for (w, view) in [(&mut model.wx, x), (&mut model.wy, y)] {
        let proj = view.matrix() * &*w;
        let n = view.rows() as f64;
        for col in 0..w.ncols() {
            let var = proj.column(col).norm_squared() / n;
            if var > 0.0 {
                w.column_mut(col).scale_mut(1.0 / var.sqrt());
            }
        }
    }
}

fn fit_with(
    ds: &PairedDataset,
    k: usize,
    reg: Option<f64>,
    covariances: impl Fn(&PairedDataset) -> Result<CovarianceTriple>,
) -> Result<CcaModel> {
    let (centered, mean_x, mean_y) = center_views(ds);
    let cov = covariances(&centered)?;
    let mut model = solve_cca(&cov, k, reg)?;
    normalize_to_data(&mut model, &centered.view_x, &centered.view_y);
    model.mean_x = mean_x;
    model.mean_y = mean_y;
    Ok(model)
}

pub fn fit_cca(ds: &PairedDataset, k: usize, reg: Option<f64>) -> Result<CcaModel> {
    fit_with(ds, k, reg, |c| compute_covariances(&c.view_x, &c.view_y))
}

pub fn fit_cluster_cca(ds: &PairedDataset, k: usize, reg: Option<f64>) -> Result<CcaModel> {
    fit_with(ds, k, reg, |c| {
        compute_cluster_covariances(&c.view_x, &c.view_y, &c.labels, c.class_count)
    })
}

pub fn fit(ds: &PairedDataset, mode: CcaMode, k: usize, reg: Option<f64>) -> Result<CcaModel> {
    match mode {
        CcaMode::Cca => fit_cca(ds, k, reg),
        CcaMode::ClusterCca => fit_cluster_cca(ds, k, reg),
    }
}

impl CcaModel {
    /// `(view − mean) · w` for the chosen side.
    pub fn project(&self, view: &FeatureView, side: Side) -> Result<FeatureView> {
        let (w, mean) = match side {
            Side::X => (&self.wx, &self.mean_x),
            Side::Y => (&self.wy, &self.mean_y),
        };
        if view.cols() != w.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "{side:?} projection expects {} columns, got {}",
                w.nrows(),
                view.cols()
            )));
        }
        FeatureView::new(subtract_row(view.matrix(), mean) * w)
    }

    /// Project both views of a dataset, keeping its labels.
    pub fn project_dataset(&self, ds: &PairedDataset) -> Result<PairedDataset> {
        PairedDataset::new(
            self.project(&ds.view_x, Side::X)?,
            self.project(&ds.view_y, Side::Y)?,
            ds.labels.clone(),
            ds.class_count,
        )
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(&CcaModelJson::from(self))?;
        fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let json: CcaModelJson = serde_json::from_str(&text)
            .map_err(|e| Error::load(path, format!("bad CCA model: {e}")))?;
        json.try_into().map_err(|e: Error| Error::load(path, e.to_string()))
    }
}

#[derive(Serialize, Deserialize)]
struct CcaModelJson {
    k: usize,
    reg: Ridge,
    correlations: Vec<f64>,
    mean_x: Vec<f64>,
    mean_y: Vec<f64>,
    wx: Vec<Vec<f64>>,
    wy: Vec<Vec<f64>>,
}

impl From<&CcaModel> for CcaModelJson {
    fn from(m: &CcaModel) -> Self {
        CcaModelJson {
            k: m.k,
            reg: m.reg,
            correlations: m.correlations.clone(),
            mean_x: m.mean_x.iter().copied().collect(),
            mean_y: m.mean_y.iter().copied().collect(),
            wx: to_rows(&m.wx),
            wy: to_rows(&m.wy),
        }
    }
}

impl TryFrom<CcaModelJson> for CcaModel {
    type Error = Error;

    fn try_from(j: CcaModelJson) -> Result<Self> {
        let wx = from_rows(&j.wx, j.k)?;
        let wy = from_rows(&j.wy, j.k)?;
        if wx.ncols() != j.k
            || wy.ncols() != j.k
            || j.correlations.len() != j.k
            || j.mean_x.len() != wx.nrows()
            || j.mean_y.len() != wy.nrows()
        {
            return Err(Error::DimensionMismatch("CCA model fields disagree on shape".into()));
        }
        Ok(CcaModel {
            wx,
            wy,
            correlations: j.correlations,
            mean_x: DVector::from_vec(j.mean_x),
            mean_y: DVector::from_vec(j.mean_y),
            k: j.k,
            reg: j.reg,
        })
    }
}
