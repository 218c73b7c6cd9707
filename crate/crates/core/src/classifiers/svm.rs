//! Soft-margin support vector classifier with an RBF kernel.
//!
//! Solves the dual
//!
//! ```text
//! min ½ Σ α_s α_t y_s y_t K(x_s, x_t) − Σ α_t
//! s.t. Σ y_t α_t = 0,  0 ≤ α_t ≤ C·w_{y_t}
//! ```
//!
//! by deterministic sequential pairwise optimization: at each step the
//! maximal violating pair is selected and optimized analytically. The solver
//! stops when the KKT violation `m(α) − M(α)` drops below the tolerance and
//! errors out (carrying the violation) if the update cap is reached first.
//!
//! The kernel coefficient follows the "scale" rule `γ = 1 / (d · var)` with
//! `var` the variance of all entries of the matrix actually fed to the
//! solver, i.e. after standardization.

use serde::{Deserialize, Serialize};

use crate::dataset::ClassLabel;
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, Standardizer};

use super::{check_two_classes, ClassWeights, SvmConfig, TrainedModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    /// Support vectors in the standardized feature space.
    pub support_vectors: Vec<Vec<f64>>,
    /// `α_i · y_i` per support vector (nonzero).
    pub dual_coefs: Vec<f64>,
    pub rho: f64,
    pub gamma: f64,
    /// Box-constraint inputs, kept so `C_i = c · weight(y_i)` can be
    /// reconstructed for feasibility checks.
    pub c: f64,
    pub weights: ClassWeights,
    pub standardizer: Standardizer,
}

impl SvmModel {
    fn kernel(&self, a: &[f64], b: &[f64]) -> f64 {
        rbf(self.gamma, a, b)
    }

    /// Signed distance `Σ α_t y_t K(x_t, x) − ρ` for a standardized row.
    fn decision_standardized(&self, row: &[f64]) -> f64 {
        let sum: f64 = self
            .support_vectors
            .iter()
            .zip(&self.dual_coefs)
            .map(|(sv, coef)| coef * self.kernel(sv, row))
            .sum();
        sum - self.rho
    }

    pub fn decision(&self, row: &[f64]) -> Result<f64> {
        let mut buf = Vec::with_capacity(row.len());
        self.standardizer.transform_row(row, &mut buf)?;
        Ok(self.decision_standardized(&buf))
    }

    pub fn predict(&self, rows: &FeatureMatrix) -> Result<Vec<ClassLabel>> {
        let mut buf = Vec::with_capacity(self.standardizer.dim());
        rows.rows()
            .map(|row| {
                self.standardizer.transform_row(row, &mut buf)?;
                // sign maps {+1 → Anomalous, −1 → Nominal}; 0 → Anomalous
                Ok(if self.decision_standardized(&buf) >= 0.0 {
                    ClassLabel::Anomalous
                } else {
                    ClassLabel::Nominal
                })
            })
            .collect()
    }

    /// Dual objective `Σ α − ½ Σ Σ α_s α_t y_s y_t K_st` of the stored
    /// solution. Entries with α = 0 contribute nothing, so support vectors
    /// suffice.
    pub fn dual_objective(&self) -> f64 {
        let linear: f64 = self.dual_coefs.iter().map(|c| c.abs()).sum();
        let mut quad = 0.0;
        for i in 0..self.support_vectors.len() {
            for j in i..self.support_vectors.len() {
                let term = self.dual_coefs[i]
                    * self.dual_coefs[j]
                    * self.kernel(&self.support_vectors[i], &self.support_vectors[j]);
                // off-diagonal terms appear twice in the double sum
                quad += if i == j { term } else { 2.0 * term };
            }
        }
        linear - 0.5 * quad
    }
}

pub(crate) fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * sq).exp()
}

/// `γ = 1 / (d · var)` over all matrix entries (population variance).
fn gamma_scale(m: &FeatureMatrix) -> f64 {
    let n = (m.n_rows() * m.dim()) as f64;
    let mut sum = 0.0;
    for row in m.rows() {
        sum += row.iter().sum::<f64>();
    }
    let mean = sum / n;
    let mut var = 0.0;
    for row in m.rows() {
        for &v in row {
            var += (v - mean) * (v - mean);
        }
    }
    var /= n;
    if var > 0.0 {
        1.0 / (m.dim() as f64 * var)
    } else {
        1.0 / m.dim() as f64
    }
}

struct SmoProblem {
    kernel: Vec<f64>, // n×n, row-major
    y: Vec<f64>,
    upper: Vec<f64>, // C_i = C · w_{y_i}
    n: usize,
    tolerance: f64,
    max_updates: usize,
}

struct SmoSolution {
    alphas: Vec<f64>,
    rho: f64,
}

impl SmoProblem {
    fn k(&self, i: usize, j: usize) -> f64 {
        self.kernel[i * self.n + j]
    }

    /// Maximal-violating-pair SMO. Gradient of the dual objective is
    /// maintained incrementally; each pair is optimized analytically along
    /// the feasible direction and clipped to its box.
    fn solve(&self) -> Result<SmoSolution> {
        let n = self.n;
        let mut alphas = vec![0.0f64; n];
        // G_t = y_t Σ_s α_s y_s K_st − 1; at α = 0, G = −1.
        let mut grad = vec![-1.0f64; n];

        let mut updates = 0;
        loop {
            // working-set selection over I_up / I_low
            let mut m_val = f64::NEG_INFINITY;
            let mut m_idx = None;
            let mut big_m_val = f64::INFINITY;
            let mut big_m_idx = None;
            for t in 0..n {
                let v = -self.y[t] * grad[t];
                let up = (self.y[t] > 0.0 && alphas[t] < self.upper[t])
                    || (self.y[t] < 0.0 && alphas[t] > 0.0);
                let low = (self.y[t] > 0.0 && alphas[t] > 0.0)
                    || (self.y[t] < 0.0 && alphas[t] < self.upper[t]);
                if up && v > m_val {
                    m_val = v;
                    m_idx = Some(t);
                }
                if low && v < big_m_val {
                    big_m_val = v;
                    big_m_idx = Some(t);
                }
            }
            let violation = m_val - big_m_val;
            if violation <= self.tolerance {
                break;
            }
            if updates >= self.max_updates {
                return Err(Error::SvmConvergence {
                    violation,
                    iterations: updates,
                });
            }
            let (i, j) = match (m_idx, big_m_idx) {
                (Some(i), Some(j)) => (i, j),
                _ => break, // fully bounded in one direction: KKT-satisfied
            };

            // Move along d_i = y_i, d_j = −y_j (keeps Σ y α fixed):
            //   φ'(0) = y_i G_i − y_j G_j,  φ'' = K_ii + K_jj − 2 K_ij
            let slope = self.y[i] * grad[i] - self.y[j] * grad[j];
            let curv = self.k(i, i) + self.k(j, j) - 2.0 * self.k(i, j);
            // Feasible step range for t > 0.
            let hi_i = if self.y[i] > 0.0 {
                self.upper[i] - alphas[i]
            } else {
                alphas[i]
            };
            let hi_j = if self.y[j] > 0.0 {
                alphas[j]
            } else {
                self.upper[j] - alphas[j]
            };
            let step_max = hi_i.min(hi_j);
            let step = if curv > 1e-12 {
                (-slope / curv).min(step_max)
            } else {
                step_max
            };

            let old_i = alphas[i];
            let old_j = alphas[j];
            alphas[i] = (old_i + self.y[i] * step).clamp(0.0, self.upper[i]);
            alphas[j] = (old_j - self.y[j] * step).clamp(0.0, self.upper[j]);
            let delta_i = alphas[i] - old_i;
            let delta_j = alphas[j] - old_j;
            for (t, g) in grad.iter_mut().enumerate() {
                *g += self.y[t]
                    * (self.y[i] * self.k(t, i) * delta_i + self.y[j] * self.k(t, j) * delta_j);
            }
            updates += 1;
        }

        Ok(SmoSolution {
            rho: self.calculate_rho(&alphas, &grad),
            alphas,
        })
    }

    /// KKT multiplier of the equality constraint: the mean of `y_t G_t` over
    /// free support vectors, or the midpoint of the feasibility interval.
    fn calculate_rho(&self, alphas: &[f64], grad: &[f64]) -> f64 {
        let mut upper_bound = f64::INFINITY;
        let mut lower_bound = f64::NEG_INFINITY;
        let mut sum_free = 0.0;
        let mut n_free = 0usize;
        for t in 0..self.n {
            let yg = self.y[t] * grad[t];
            if alphas[t] <= 0.0 {
                if self.y[t] > 0.0 {
                    upper_bound = upper_bound.min(yg);
                } else {
                    lower_bound = lower_bound.max(yg);
                }
            } else if alphas[t] >= self.upper[t] {
                if self.y[t] > 0.0 {
                    lower_bound = lower_bound.max(yg);
                } else {
                    upper_bound = upper_bound.min(yg);
                }
            } else {
                n_free += 1;
                sum_free += yg;
            }
        }
        if n_free > 0 {
            sum_free / n_free as f64
        } else {
            0.5 * (upper_bound + lower_bound)
        }
    }
}

pub fn train_svc(
    data: &FeatureMatrix,
    weights: &ClassWeights,
    cfg: &SvmConfig,
) -> Result<TrainedModel> {
    check_two_classes(data.labels())?;
    if cfg.c <= 0.0 || cfg.tolerance <= 0.0 || cfg.max_passes == 0 {
        return Err(Error::Config("invalid SVM config".into()));
    }
    let standardizer = Standardizer::fit(data)?;
    let standardized = standardizer.transform(data)?;
    let gamma = gamma_scale(&standardized);
    let n = standardized.n_rows();

    let mut kernel = vec![0.0f64; n * n];
    for i in 0..n {
        for j in i..n {
            let v = rbf(gamma, standardized.row(i), standardized.row(j));
            kernel[i * n + j] = v;
            kernel[j * n + i] = v;
        }
    }
    let y: Vec<f64> = standardized
        .labels()
        .iter()
        .map(|l| match l {
            ClassLabel::Anomalous => 1.0,
            ClassLabel::Nominal => -1.0,
        })
        .collect();
    let upper: Vec<f64> = standardized
        .labels()
        .iter()
        .map(|&l| cfg.c * weights.weight(l))
        .collect();

    let problem = SmoProblem {
        kernel,
        y: y.clone(),
        upper,
        n,
        tolerance: cfg.tolerance,
        max_updates: cfg.max_passes,
    };
    let solution = problem.solve()?;

    let mut support_vectors = Vec::new();
    let mut dual_coefs = Vec::new();
    for (i, (&alpha, &label)) in solution.alphas.iter().zip(&y).enumerate() {
        if alpha > 0.0 {
            support_vectors.push(standardized.row(i).to_vec());
            dual_coefs.push(alpha * label);
        }
    }
    Ok(TrainedModel::Svm(SvmModel {
        support_vectors,
        dual_coefs,
        rho: solution.rho,
        gamma,
        c: cfg.c,
        weights: *weights,
        standardizer,
    }))
}
