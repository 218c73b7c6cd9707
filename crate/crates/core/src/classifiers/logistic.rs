//! L2-regularized, class-weighted logistic regression.
//!
//! Minimizes
//!
//! ```text
//! F(β, b) = ½‖β‖² + C · Σ_i w_{y_i} · log(1 + exp(−ỹ_i (βᵀx_i + b)))
//! ```
//!
//! with labels `ỹ ∈ {−1, +1}` (Anomalous = +1) and an unpenalized
//! intercept. The optimizer is a deterministic full-batch L-BFGS (memory 10)
//! with Armijo backtracking, stopping when the gradient infinity-norm falls
//! below the tolerance or at the iteration cap. Inputs are standardized by a
//! [`Standardizer`] fitted on the training rows and stored in the model.

use serde::{Deserialize, Serialize};

use crate::dataset::ClassLabel;
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, Standardizer};

use super::{check_two_classes, ClassWeights, LogisticConfig, TrainedModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub standardizer: Standardizer,
}

impl LogisticModel {
    fn decision(&self, standardized_row: &[f64]) -> f64 {
        dot(&self.coefficients, standardized_row) + self.intercept
    }

    /// Modeled P(Anomalous) for one raw row.
    pub fn probability(&self, row: &[f64]) -> Result<f64> {
        let mut buf = Vec::with_capacity(row.len());
        self.standardizer.transform_row(row, &mut buf)?;
        Ok(sigmoid(self.decision(&buf)))
    }

    pub fn predict(&self, rows: &FeatureMatrix) -> Result<Vec<ClassLabel>> {
        let mut buf = Vec::with_capacity(self.standardizer.dim());
        rows.rows()
            .map(|row| {
                self.standardizer.transform_row(row, &mut buf)?;
                // probability ≥ 0.5 ⇔ decision ≥ 0
                Ok(if self.decision(&buf) >= 0.0 {
                    ClassLabel::Anomalous
                } else {
                    ClassLabel::Nominal
                })
            })
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^u) without overflow.
fn log1p_exp(u: f64) -> f64 {
    if u > 0.0 {
        u + (-u).exp().ln_1p()
    } else {
        u.exp().ln_1p()
    }
}

fn signed_label(l: ClassLabel) -> f64 {
    match l {
        ClassLabel::Anomalous => 1.0,
        ClassLabel::Nominal => -1.0,
    }
}

/// Training objective and its gradient at `theta = [β…, b]`, evaluated on
/// the rows of `x` as given (no standardization is applied here).
pub fn objective_and_gradient(
    x: &FeatureMatrix,
    weights: &ClassWeights,
    c: f64,
    theta: &[f64],
) -> Result<(f64, Vec<f64>)> {
    let d = x.dim();
    if theta.len() != d + 1 {
        return Err(Error::Dimension {
            expected: d + 1,
            actual: theta.len(),
        });
    }
    let (beta, intercept) = theta.split_at(d);
    let b = intercept[0];
    let mut f = 0.5 * dot(beta, beta);
    let mut grad = vec![0.0; d + 1];
    grad[..d].copy_from_slice(beta);
    for (row, &label) in x.rows().zip(x.labels()) {
        let y = signed_label(label);
        let cw = c * weights.weight(label);
        let z = dot(beta, row) + b;
        f += cw * log1p_exp(-y * z);
        let coef = -cw * y * sigmoid(-y * z);
        for (g, &xi) in grad[..d].iter_mut().zip(row) {
            *g += coef * xi;
        }
        grad[d] += coef;
    }
    Ok((f, grad))
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// L-BFGS with Armijo backtracking; returns the minimizer of
/// [`objective_and_gradient`] starting from zero.
fn minimize(
    x: &FeatureMatrix,
    weights: &ClassWeights,
    cfg: &LogisticConfig,
) -> Result<Vec<f64>> {
    const MEMORY: usize = 10;
    const ARMIJO: f64 = 1e-4;

    let d = x.dim();
    let mut theta = vec![0.0; d + 1];
    let (mut f, mut g) = objective_and_gradient(x, weights, cfg.c, &theta)?;
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut rho_hist: Vec<f64> = Vec::new();

    for _ in 0..cfg.max_iterations {
        if inf_norm(&g) <= cfg.tolerance {
            break;
        }
        // Two-loop recursion for the quasi-Newton direction.
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(s_hist.len());
        for ((s, yv), &rho) in s_hist.iter().zip(&y_hist).zip(&rho_hist).rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(yv) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        if let (Some(s), Some(yv)) = (s_hist.last(), y_hist.last()) {
            let gamma = dot(s, yv) / dot(yv, yv);
            for qi in &mut q {
                *qi *= gamma;
            }
        }
        for (((s, yv), &rho), &a) in s_hist
            .iter()
            .zip(&y_hist)
            .zip(&rho_hist)
            .zip(alphas.iter().rev())
        {
            let beta = rho * dot(yv, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (a - beta) * si;
            }
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut g_dot_d = dot(&g, &dir);
        if g_dot_d >= 0.0 {
            dir = g.iter().map(|v| -v).collect();
            g_dot_d = dot(&g, &dir);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand: Vec<f64> = theta
                .iter()
                .zip(&dir)
                .map(|(t, d)| t + step * d)
                .collect();
            let (fc, gc) = objective_and_gradient(x, weights, cfg.c, &cand)?;
            if fc <= f + ARMIJO * step * g_dot_d {
                accepted = Some((cand, fc, gc));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, fc, gc)) = accepted else {
            break; // line search stalled at numerical precision
        };

        let s: Vec<f64> = cand.iter().zip(&theta).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = gc.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        if sy > 1e-12 {
            if s_hist.len() == MEMORY {
                s_hist.remove(0);
                y_hist.remove(0);
                rho_hist.remove(0);
            }
            rho_hist.push(1.0 / sy);
            s_hist.push(s);
            y_hist.push(yv);
        }
        theta = cand;
        f = fc;
        g = gc;
    }
    Ok(theta)
}

pub fn train_logistic(
    data: &FeatureMatrix,
    weights: &ClassWeights,
    cfg: &LogisticConfig,
) -> Result<TrainedModel> {
    check_two_classes(data.labels())?;
    if cfg.c <= 0.0 || cfg.tolerance <= 0.0 || cfg.max_iterations == 0 {
        return Err(Error::Config("invalid logistic regression config".into()));
    }
    let standardizer = Standardizer::fit(data)?;
    let standardized = standardizer.transform(data)?;
    let theta = minimize(&standardized, weights, cfg)?;
    let d = data.dim();
    Ok(TrainedModel::Logistic(LogisticModel {
        coefficients: theta[..d].to_vec(),
        intercept: theta[d],
        standardizer,
    }))
}
