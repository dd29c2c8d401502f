use log::warn;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IrlsParams {
    /// Penalty `ridge * |theta_1..d|^2`; the intercept is never penalized.
    pub ridge: f64,
    /// Convergence threshold on the Euclidean norm of the penalized gradient.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for IrlsParams {
    fn default() -> Self {
        IrlsParams {
            ridge: 1e-6,
            tol: 1e-8,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrlsFit {
    /// Intercept first.
    pub theta: Vec<f64>,
    pub iterations: usize,
    /// Unpenalized binomial deviance.
    pub deviance: f64,
    pub gradient_norm: f64,
    pub converged: bool,
    /// Ridge actually used (raised when the Newton system was singular).
    pub ridge: f64,
}

const MAX_RIDGE: f64 = 1e-2;

/// Per-column shift/scale standardization of a row-major design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    /// Column means and population standard deviations; constant columns get
    /// scale 1.
    pub fn fit(design: &[f64], d: usize) -> Self {
        let n = design.len().checked_div(d).unwrap_or(0);
        let mut shift = vec![0.0; d];
        let mut scale = vec![1.0; d];
        if n == 0 {
            return Standardizer { shift, scale };
        }
        for row in design.chunks_exact(d) {
            for (s, v) in shift.iter_mut().zip(row) {
                *s += v;
            }
        }
        shift.iter_mut().for_each(|s| *s /= n as f64);
        let mut var = vec![0.0; d];
        for row in design.chunks_exact(d) {
            for j in 0..d {
                var[j] += (row[j] - shift[j]).powi(2);
            }
        }
        for j in 0..d {
            let sd = (var[j] / n as f64).sqrt();
            scale[j] = if sd > 1e-12 { sd } else { 1.0 };
        }
        Standardizer { shift, scale }
    }

    pub fn apply_row(&self, row: &[f64], out: &mut [f64]) {
        for j in 0..row.len() {
            out[j] = (row[j] - self.shift[j]) / self.scale[j];
        }
    }

    pub fn apply(&self, design: &[f64]) -> Vec<f64> {
        let d = self.shift.len();
        let mut out = vec![0.0; design.len()];
        if d == 0 {
            return out;
        }
        for (row, dst) in design.chunks_exact(d).zip(out.chunks_exact_mut(d)) {
            self.apply_row(row, dst);
        }
        out
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

struct Problem<'a> {
    design: &'a [f64],
    d: usize,
    z: &'a [bool],
}

impl Problem<'_> {
    fn rows(&self) -> impl Iterator<Item = (&[f64], bool)> + '_ {
        // chunks_exact(0) panics, so the intercept-only case gets empty rows.
        let n = self.z.len();
        (0..n).map(move |i| (&self.design[i * self.d..(i + 1) * self.d], self.z[i]))
    }

    fn eta(theta: &[f64], x: &[f64]) -> f64 {
        theta[0] + theta[1..].iter().zip(x).map(|(t, v)| t * v).sum::<f64>()
    }

    fn log_likelihood(&self, theta: &[f64]) -> f64 {
        self.rows()
            .map(|(x, z)| {
                let eta = Self::eta(theta, x);
                if z {
                    -softplus(-eta)
                } else {
                    -softplus(eta)
                }
            })
            .sum()
    }

    fn objective(&self, theta: &[f64], ridge: f64) -> f64 {
        self.log_likelihood(theta) - ridge * theta[1..].iter().map(|t| t * t).sum::<f64>()
    }

    /// Penalized gradient and negative Hessian (the Fisher information plus
    /// the ridge term).
    fn derivatives(&self, theta: &[f64], ridge: f64) -> (DVector<f64>, DMatrix<f64>) {
        let k = self.d + 1;
        let mut grad = DVector::zeros(k);
        let mut info = DMatrix::zeros(k, k);
        let mut xa = vec![1.0; k];
        for (x, z) in self.rows() {
            xa[1..].copy_from_slice(x);
            let p = sigmoid(Self::eta(theta, x));
            let r = if z { 1.0 - p } else { -p };
            let w = p * (1.0 - p);
            for a in 0..k {
                grad[a] += r * xa[a];
                let wa = w * xa[a];
                for b in a..k {
                    info[(a, b)] += wa * xa[b];
                }
            }
        }
        for a in 0..k {
            for b in 0..a {
                info[(a, b)] = info[(b, a)];
            }
        }
        for j in 1..k {
            grad[j] -= 2.0 * ridge * theta[j];
            info[(j, j)] += 2.0 * ridge;
        }
        (grad, info)
    }
}

/// Fit a ridge-penalized logistic regression by Newton/IRLS with step halving.
///
/// `design` is row-major `n x d` without the intercept column; callers are
/// expected to have standardized it. Non-convergence is not an error: the
/// best iterate is returned with `converged = false`.
pub fn irls_fit(design: &[f64], d: usize, z: &[bool], params: &IrlsParams) -> Result<IrlsFit> {
    let n = z.len();
    if design.len() != n * d {
        return Err(Error::data(format!(
            "design has {} values, expected {n} x {d}",
            design.len()
        )));
    }
    let n1 = z.iter().filter(|&&v| v).count();
    let n0 = n - n1;
    if n1 == 0 || n0 == 0 {
        return Err(Error::data(format!(
            "logistic fit needs both classes, got {n1} positives and {n0} negatives"
        )));
    }
    if !(params.ridge >= 0.0) || !(params.tol > 0.0) {
        return Err(Error::config("ridge must be >= 0 and tol > 0"));
    }
    let problem = Problem { design, d, z };
    let mut ridge = params.ridge;
    let mut theta = vec![0.0; d + 1];
    theta[0] = (n1 as f64 / n0 as f64).ln();

    let mut iterations = 0;
    let mut converged = false;
    let mut gradient_norm;
    loop {
        let (grad, info) = problem.derivatives(&theta, ridge);
        gradient_norm = grad.norm();
        if gradient_norm <= params.tol {
            converged = true;
            break;
        }
        if iterations >= params.max_iter {
            break;
        }
        iterations += 1;
        let step = match info.clone().cholesky() {
            Some(chol) => chol.solve(&grad),
            None => {
                let raised = if ridge > 0.0 { ridge * 10.0 } else { 1e-8 };
                if raised > MAX_RIDGE {
                    return Err(Error::Numerical(format!(
                        "logistic Newton system singular even with ridge {ridge:e}"
                    )));
                }
                warn!("singular Newton system; raising ridge to {raised:e}");
                ridge = raised;
                continue;
            }
        };
        let current = problem.objective(&theta, ridge);
        let slack = 1e-12 * (1.0 + current.abs());
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let cand: Vec<f64> = theta
                .iter()
                .zip(step.iter())
                .map(|(t, s)| t + scale * s)
                .collect();
            let value = problem.objective(&cand, ridge);
            if value.is_finite() && value >= current - slack {
                accepted = Some(cand);
                break;
            }
            scale *= 0.5;
        }
        match accepted {
            Some(cand) => theta = cand,
            // No ascent direction left at machine precision.
            None => break,
        }
    }
    if !converged {
        warn!(
            "logistic fit did not converge after {iterations} iterations (gradient norm {gradient_norm:e})"
        );
    }
    let deviance = -2.0 * problem.log_likelihood(&theta);
    Ok(IrlsFit {
        theta,
        iterations,
        deviance,
        gradient_norm,
        converged,
        ridge,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Maximizer of `k ln p + (n-k) ln(1-p)` by ternary search, independent of
    /// any closed form.
    fn cell_mle(k: f64, n: f64) -> f64 {
        let ll = |p: f64| k * p.ln() + (n - k) * (1.0 - p).ln();
        let (mut lo, mut hi) = (1e-9, 1.0 - 1e-9);
        for _ in 0..200 {
            let a = lo + (hi - lo) / 3.0;
            let b = hi - (hi - lo) / 3.0;
            if ll(a) < ll(b) {
                lo = a;
            } else {
                hi = b;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn intercept_only_closed_form() {
        let z: Vec<bool> = (0..12).map(|i| i < 3).collect();
        let fit = irls_fit(&[], 0, &z, &IrlsParams::default()).unwrap();
        assert!(fit.converged);
        assert!((fit.theta[0] - (3.0f64 / 9.0).ln()).abs() < 1e-6);
        assert!((fit.theta[0] + 1.09861).abs() < 1e-5);
    }

    #[test]
    fn saturated_binary_feature() {
        // 12 bright rows with 3 positives, 112 dark rows with 21 positives.
        let mut x = Vec::new();
        let mut z = Vec::new();
        for i in 0..12 {
            x.push(1.0);
            z.push(i < 3);
        }
        for i in 0..112 {
            x.push(0.0);
            z.push(i < 21);
        }
        let std = Standardizer::fit(&x, 1);
        let xs = std.apply(&x);
        let fit = irls_fit(&xs, 1, &z, &IrlsParams::default()).unwrap();
        assert!(fit.converged);
        let p =
            |raw: f64| sigmoid(fit.theta[0] + fit.theta[1] * (raw - std.shift[0]) / std.scale[0]);
        let oracle_bright = cell_mle(3.0, 12.0);
        let oracle_dark = cell_mle(21.0, 112.0);
        assert!((oracle_bright - 0.25).abs() < 1e-7);
        assert!((oracle_dark - 0.1875).abs() < 1e-7);
        assert!((p(1.0) - oracle_bright).abs() < 1e-6, "{}", p(1.0));
        assert!((p(0.0) - oracle_dark).abs() < 1e-6, "{}", p(0.0));
    }

    #[test]
    fn intercept_score_equation_holds() {
        let x: Vec<f64> = (0..200).map(|i| ((i * 37) % 101) as f64 / 10.0).collect();
        let z: Vec<bool> = (0..200).map(|i| (i * 13) % 7 < 2 || x[i] > 8.0).collect();
        let std = Standardizer::fit(&x, 1);
        let xs = std.apply(&x);
        let fit = irls_fit(&xs, 1, &z, &IrlsParams::default()).unwrap();
        assert!(fit.converged);
        let mean_p = xs
            .iter()
            .map(|v| sigmoid(fit.theta[0] + fit.theta[1] * v))
            .sum::<f64>()
            / 200.0;
        let frac = z.iter().filter(|&&v| v).count() as f64 / 200.0;
        assert!((mean_p - frac).abs() < 1e-6);
    }

    #[test]
    fn separable_data_converges_under_ridge() {
        let x: Vec<f64> = (0..40).map(|i| i as f64 - 19.5).collect();
        let z: Vec<bool> = x.iter().map(|&v| v > 0.0).collect();
        let xs = Standardizer::fit(&x, 1).apply(&x);
        let fit = irls_fit(&xs, 1, &z, &IrlsParams::default()).unwrap();
        assert!(fit.converged, "{fit:?}");
        assert!(fit.theta.iter().all(|t| t.is_finite()));
        assert!(fit.deviance.is_finite());
        assert!(fit.theta[1] > 5.0);
    }

    #[test]
    fn one_class_is_rejected() {
        assert!(irls_fit(&[1.0, 2.0], 1, &[true, true], &IrlsParams::default()).is_err());
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let x: Vec<f64> = (0..40).map(|i| i as f64 - 19.5).collect();
        let z: Vec<bool> = x.iter().map(|&v| v > 0.0).collect();
        let params = IrlsParams {
            max_iter: 2,
            ..Default::default()
        };
        let fit = irls_fit(&x, 1, &z, &params).unwrap();
        assert!(!fit.converged);
        assert_eq!(fit.iterations, 2);
    }
}
