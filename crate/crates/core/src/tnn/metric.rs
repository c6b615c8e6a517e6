//! Distances between embeddings and their gradients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Distance {
    #[default]
    Cosine,
    Euclidean,
}

impl std::str::FromStr for Distance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(Distance::Cosine),
            "euclidean" => Ok(Distance::Euclidean),
            other => Err(Error::InvalidInput(format!(
                "unknown distance {other:?}, expected cosine or euclidean"
            ))),
        }
    }
}

fn check_dims(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "vectors of length {} and {}",
            x.len(),
            y.len()
        )));
    }
    Ok(())
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Cosine of the angle given the squared norms; both must be nonzero.
///
/// `sqrt(xx·yy)` rather than `‖x‖·‖y‖` makes identical and opposite vectors
/// give exactly ±1.
fn cosine(xy: f64, xx: f64, yy: f64) -> f64 {
    let denom = (xx * yy).sqrt();
    let denom = if denom.is_normal() { denom } else { xx.sqrt() * yy.sqrt() };
    xy / denom
}

/// `1 − x·y / (‖x‖‖y‖)`, clamped to [0, 2].
pub fn cosine_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    check_dims(x, y)?;
    let (xx, yy) = (dot(x, x), dot(y, y));
    if xx == 0.0 || yy == 0.0 {
        return Err(Error::InvalidInput("cosine distance of a zero vector".into()));
    }
    Ok((1.0 - cosine(dot(x, y), xx, yy)).clamp(0.0, 2.0))
}

pub fn euclidean_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    check_dims(x, y)?;
    Ok(x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
}

impl Distance {
    pub fn eval(self, x: &[f64], y: &[f64]) -> Result<f64> {
        match self {
            Distance::Cosine => cosine_distance(x, y),
            Distance::Euclidean => euclidean_distance(x, y),
        }
    }

    /// Distance plus its gradients with respect to `x` and `y`.
    ///
    /// Degenerate points (a zero vector for cosine, `x == y` for Euclidean)
    /// get zero gradients.
    pub(crate) fn with_grad(self, x: &[f64], y: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        match self {
            Distance::Cosine => {
                let (xx, yy) = (dot(x, x), dot(y, y));
                if xx == 0.0 || yy == 0.0 {
                    return (1.0, vec![0.0; x.len()], vec![0.0; y.len()]);
                }
                let (nx, ny) = (xx.sqrt(), yy.sqrt());
                let inv = 1.0 / (nx * ny);
                let s = cosine(dot(x, y), xx, yy);
                let gx = x
                    .iter()
                    .zip(y)
                    .map(|(a, b)| -(b * inv - s * a / (nx * nx)))
                    .collect();
                let gy = x
                    .iter()
                    .zip(y)
                    .map(|(a, b)| -(a * inv - s * b / (ny * ny)))
                    .collect();
                ((1.0 - s).clamp(0.0, 2.0), gx, gy)
            }
            Distance::Euclidean => {
                let d = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                if d == 0.0 {
                    return (0.0, vec![0.0; x.len()], vec![0.0; y.len()]);
                }
                let gx: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - b) / d).collect();
                let gy = gx.iter().map(|g| -g).collect();
                (d, gx, gy)
            }
        }
    }
}

/// Hinge `max(d_ap − d_an + margin, 0)` for one triplet of embeddings.
pub fn triplet_loss(
    emb_a: &[f64],
    emb_p: &[f64],
    emb_n: &[f64],
    margin: f64,
    distance: Distance,
) -> Result<f64> {
    let d_ap = distance.eval(emb_a, emb_p)?;
    let d_an = distance.eval(emb_a, emb_n)?;
    Ok(hinge(d_ap, d_an, margin))
}

pub(crate) fn hinge(d_ap: f64, d_an: f64, margin: f64) -> f64 {
    (d_ap - d_an + margin).max(0.0)
}
