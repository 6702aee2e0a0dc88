//! Weighted Fréchet mean by iterated tangent-space averaging.
//!
//! The mean of points `h_t` with weights `w̃_t` minimises
//! `Σ_t w̃_t · d²(z, h_t)`. Starting from `μ⁰ = h₁`, each step maps the
//! points into the tangent space at the current iterate, averages, and maps
//! back:
//!
//! ```text
//! μ^{k+1} = exp_{μ^k}( Σ_t w̃_t · log_{μ^k}(h_t) )
//! ```
//!
//! Iteration stops when the tangent update norm drops below `tol` or after
//! `max_iters` steps; a non-converged result is returned with the flag set
//! rather than silently. The whole iteration stays inside the autodiff
//! graph, truncated at the iterate count actually executed.

use super::Geometry;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone)]
pub struct FrechetConfig {
    /// Stop when the max tangent-update norm falls below this.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for FrechetConfig {
    fn default() -> Self {
        FrechetConfig {
            tol: 1e-6,
            max_iters: 100,
        }
    }
}

pub struct FrechetResult {
    /// `(d,)` for unbatched input, `(B, d)` for batched.
    pub mean: Tensor,
    pub iterations: usize,
    pub converged: bool,
    /// Weighted objective `Σ w̃ d²` after each executed iteration, starting
    /// with the value at the initial iterate.
    pub objective_trace: Vec<f64>,
}

/// Weighted Fréchet mean over the point axis.
///
/// `points` is `(T, d)` or `(B, T, d)` (ambient `d` for Lorentz); `weights`
/// is `(T,)` or `(B, T)`, nonnegative, each row summing to 1 within 1e-6.
pub fn frechet_mean(
    points: &Tensor,
    weights: &Tensor,
    geom: &Geometry,
    cfg: &FrechetConfig,
) -> Result<FrechetResult> {
    let batched = points.shape().len() == 3;
    let (points, weights) = if batched {
        (points.clone(), weights.clone())
    } else {
        if points.shape().len() != 2 {
            return Err(Error::Contract(format!(
                "frechet_mean expects (T,d) or (B,T,d) points, got {:?}",
                points.shape()
            )));
        }
        let mut ps = vec![1];
        ps.extend_from_slice(points.shape());
        let mut ws = vec![1];
        ws.extend_from_slice(weights.shape());
        (points.reshape(&ps)?, weights.reshape(&ws)?)
    };
    let (b, t, d) = (points.shape()[0], points.shape()[1], points.shape()[2]);
    if t == 0 {
        return Err(Error::Contract("frechet_mean needs at least one point".into()));
    }
    if weights.shape() != [b, t] {
        return Err(Error::Shape {
            op: "frechet_mean",
            left: points.shape().to_vec(),
            right: weights.shape().to_vec(),
        });
    }
    {
        let w = weights.data();
        for row in 0..b {
            let r = &w[row * t..(row + 1) * t];
            if r.iter().any(|v| *v < 0.0) {
                return Err(Error::Contract("frechet_mean weights must be nonnegative".into()));
            }
            let s: f64 = r.iter().sum();
            if (s - 1.0).abs() > 1e-6 {
                return Err(Error::Contract(format!(
                    "frechet_mean weights must sum to 1, got {s}"
                )));
            }
        }
    }

    let w3 = weights.reshape(&[b, t, 1])?;
    let first = points.slice(1, 0, 1)?.reshape(&[b, d])?;

    // identical points need no iteration
    let degenerate = {
        let p = points.data();
        (0..b).all(|row| {
            let base = &p[row * t * d..row * t * d + d];
            (1..t).all(|k| {
                let q = &p[(row * t + k) * d..(row * t + k) * d + d];
                base.iter().zip(q).all(|(a, c)| a == c)
            })
        })
    };
    if degenerate {
        let mean = if batched { first } else { first.reshape(&[d])? };
        return Ok(FrechetResult {
            mean,
            iterations: 0,
            converged: true,
            objective_trace: vec![0.0],
        });
    }

    let objective = |mu: &Tensor| -> Result<f64> {
        let mu3 = mu.reshape(&[b, 1, d])?;
        let d2 = geom.dist(&mu3, &points)?.square()?; // (B,T,1)
        Ok(d2.reshape(&[b, t])?.mul(&weights)?.sum_all()?.item())
    };

    let mut mu = first;
    let mut trace = vec![objective(&mu)?];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iters {
        let mu3 = mu.reshape(&[b, 1, d])?;
        let tangents = geom.log_at(&mu3, &points)?; // (B,T,da)
        let step = tangents.mul(&w3)?.sum_axis(1, false)?; // (B,da)
        let step_norm = step
            .norm_last(false)?
            .data()
            .iter()
            .cloned()
            .fold(0.0f64, f64::max);
        mu = geom.exp_at(&mu, &step)?;
        iterations += 1;
        trace.push(objective(&mu)?);
        if step_norm < cfg.tol {
            converged = true;
            break;
        }
    }

    let mean = if batched { mu } else { mu.reshape(&[d])? };
    Ok(FrechetResult {
        mean,
        iterations,
        converged,
        objective_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::Curvature;
    use crate::tensor::DType;

    fn geom_c1() -> Geometry {
        Geometry::poincare(Curvature::fixed(1.0).unwrap())
    }

    fn pts(rows: &[&[f64]]) -> Tensor {
        let d = rows[0].len();
        let flat: Vec<f64> = rows.iter().flat_map(|r| r.iter().cloned()).collect();
        Tensor::from_vec(flat, &[rows.len(), d], DType::F64).unwrap()
    }

    #[test]
    fn single_point_is_its_own_mean() {
        let p = pts(&[&[0.3, -0.2]]);
        let w = Tensor::from_vec(vec![1.0], &[1], DType::F64).unwrap();
        let r = frechet_mean(&p, &w, &geom_c1(), &FrechetConfig::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.mean.to_vec(), vec![0.3, -0.2]);
    }

    #[test]
    fn degenerate_weights_select_first_point() {
        let p = pts(&[&[0.2, 0.0], &[0.6, 0.0]]);
        let w = Tensor::from_vec(vec![1.0, 0.0], &[2], DType::F64).unwrap();
        let r = frechet_mean(&p, &w, &geom_c1(), &FrechetConfig::default()).unwrap();
        assert!(r.converged);
        for (a, b) in r.mean.to_vec().iter().zip([0.2, 0.0]) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn identical_points_short_circuit() {
        let p = pts(&[&[0.1, 0.4], &[0.1, 0.4], &[0.1, 0.4]]);
        let w = Tensor::from_vec(vec![0.2, 0.5, 0.3], &[3], DType::F64).unwrap();
        let r = frechet_mean(&p, &w, &geom_c1(), &FrechetConfig::default()).unwrap();
        assert_eq!(r.iterations, 0);
        assert_eq!(r.mean.to_vec(), vec![0.1, 0.4]);
    }

    #[test]
    fn rejects_bad_weights() {
        let p = pts(&[&[0.2, 0.0], &[0.6, 0.0]]);
        let w = Tensor::from_vec(vec![0.9, 0.3], &[2], DType::F64).unwrap();
        assert!(frechet_mean(&p, &w, &geom_c1(), &FrechetConfig::default()).is_err());
        let w = Tensor::from_vec(vec![1.2, -0.2], &[2], DType::F64).unwrap();
        assert!(frechet_mean(&p, &w, &geom_c1(), &FrechetConfig::default()).is_err());
    }

    #[test]
    fn objective_is_non_increasing() {
        let p = pts(&[&[0.2, 0.1], &[0.6, -0.3], &[-0.4, 0.5], &[0.0, 0.7]]);
        let w = Tensor::from_vec(vec![0.1, 0.4, 0.3, 0.2], &[4], DType::F64).unwrap();
        let r = frechet_mean(&p, &w, &geom_c1(), &FrechetConfig::default()).unwrap();
        assert!(r.converged);
        for pair in r.objective_trace.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12, "objective increased: {:?}", r.objective_trace);
        }
    }

    #[test]
    fn flat_limit_matches_euclidean_weighted_mean() {
        // tiny curvature: log0-mapped points average linearly
        let c = Curvature::fixed(1e-6).unwrap();
        let geom = Geometry::poincare(c);
        let p = pts(&[&[0.2, 0.1], &[0.6, -0.3], &[-0.1, 0.5]]);
        let w = Tensor::from_vec(vec![0.5, 0.25, 0.25], &[3], DType::F64).unwrap();
        let r = frechet_mean(&p, &w, &geom, &FrechetConfig::default()).unwrap();
        let tangent = geom.log0(&p).unwrap();
        let expect = tangent
            .mul(&w.reshape(&[3, 1]).unwrap())
            .unwrap()
            .sum_axis(0, false)
            .unwrap();
        let got = geom.log0(&r.mean).unwrap();
        for (a, b) in got.to_vec().iter().zip(expect.to_vec()) {
            assert!((a - b).abs() < 1e-3, "{a} vs {b}");
        }
    }

    #[test]
    fn batched_mean_matches_per_row() {
        let geom = geom_c1();
        let rows = [
            vec![0.2, 0.1, 0.5, -0.2, -0.3, 0.4],
            vec![0.0, 0.6, 0.1, 0.1, 0.4, -0.5],
        ];
        let batched = Tensor::from_vec(
            rows.iter().flatten().cloned().collect(),
            &[2, 3, 2],
            DType::F64,
        )
        .unwrap();
        let w = Tensor::from_vec(vec![0.3, 0.3, 0.4, 0.2, 0.5, 0.3], &[2, 3], DType::F64).unwrap();
        let r = frechet_mean(&batched, &w, &geom, &FrechetConfig::default()).unwrap();
        for row in 0..2 {
            let p = Tensor::from_vec(rows[row].clone(), &[3, 2], DType::F64).unwrap();
            let wr = w.slice(0, row, 1).unwrap().reshape(&[3]).unwrap();
            let single = frechet_mean(&p, &wr, &geom, &FrechetConfig::default()).unwrap();
            let got = &r.mean.to_vec()[row * 2..(row + 1) * 2];
            // batched iteration stops on the slowest row, so already-converged
            // rows take a few extra sub-tol steps
            for (a, b) in got.iter().zip(single.mean.to_vec()) {
                assert!((a - b).abs() < 1e-5);
            }
        }
    }
}
