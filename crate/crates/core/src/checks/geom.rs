//! Geometry property suite with independent oracles.
//!
//! The oracles here are deliberately *separate implementations*: the
//! arcosh-form ball distance, a dense grid search for the Fréchet mean, and
//! plain Euclidean averaging for the flat limit. The suite checks the
//! tensor kernel against them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::CheckResult;
use crate::manifold::{
    dist_lorentz, dist_poincare, exp_at, exp_origin, frechet_mean, log_at, log_origin,
    lorentz_inner, mobius_add, poincare_to_lorentz, riemannian_rescale, Curvature, FrechetConfig,
    Geometry,
};
use crate::tensor::{DType, Tensor};

fn rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x9e0)
}

fn random_tangent(rng: &mut ChaCha8Rng, n: usize, d: usize, scale: f64) -> Tensor {
    let data: Vec<f64> = (0..n * d).map(|_| (rng.gen::<f64>() - 0.5) * 2.0 * scale).collect();
    Tensor::from_vec(data, &[n, d], DType::F64).unwrap()
}

fn max_abs_diff(a: &Tensor, b: &Tensor) -> f64 {
    a.to_vec()
        .iter()
        .zip(b.to_vec())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Appendix-form ball distance at unit curvature:
/// `arcosh(1 + 2‖u−v‖² / ((1−‖u‖²)(1−‖v‖²)))` — an independent route used
/// as the oracle for the `tanh⁻¹` main formula.
pub fn arcosh_ball_distance(u: &[f64], v: &[f64]) -> f64 {
    let diff2: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
    let nu: f64 = u.iter().map(|a| a * a).sum();
    let nv: f64 = v.iter().map(|a| a * a).sum();
    (1.0 + 2.0 * diff2 / ((1.0 - nu) * (1.0 - nv))).acosh()
}

/// The full geometry property suite (64-bit).
pub fn geometry_suite() -> Vec<CheckResult> {
    let mut results = Vec::new();
    let mut r = rng();
    let curvatures = [0.5f64, 1.0, 1.5, 2.0];

    // exp/log roundtrips at the origin
    {
        let mut worst = 0.0f64;
        for &c in &curvatures {
            let ct = Tensor::scalar(c, DType::F64);
            let v = random_tangent(&mut r, 200, 5, 1.2);
            let back = log_origin(&exp_origin(&v, &ct).unwrap(), &ct).unwrap();
            worst = worst.max(max_abs_diff(&v, &back));
        }
        results.push(CheckResult::new(
            "exp0/log0 roundtrip",
            worst < 1e-6,
            format!("max err {worst:.2e} (tol 1e-6)"),
        ));
    }

    // exp/log roundtrips at random base points
    {
        let mut worst = 0.0f64;
        for &c in &curvatures {
            let ct = Tensor::scalar(c, DType::F64);
            let base = exp_origin(&random_tangent(&mut r, 200, 5, 0.8), &ct).unwrap();
            let v = random_tangent(&mut r, 200, 5, 0.9);
            let y = exp_at(&base, &v, &ct).unwrap();
            let back = log_at(&base, &y, &ct).unwrap();
            worst = worst.max(max_abs_diff(&v, &back));
        }
        results.push(CheckResult::new(
            "exp_at/log_at roundtrip",
            worst < 1e-6,
            format!("max err {worst:.2e} (tol 1e-6)"),
        ));
    }

    // unit-speed property: dist(0, exp0(v)) = ||v||
    {
        let mut worst = 0.0f64;
        for &c in &curvatures {
            let ct = Tensor::scalar(c, DType::F64);
            let v = random_tangent(&mut r, 500, 4, 1.5);
            let y = exp_origin(&v, &ct).unwrap();
            let origin = Tensor::zeros(&[500, 4], DType::F64);
            let d = dist_poincare(&origin, &y, &ct).unwrap().reshape(&[500]).unwrap();
            let n = v.norm_last(false).unwrap();
            worst = worst.max(max_abs_diff(&d, &n));
        }
        results.push(CheckResult::new(
            "dist(0, exp0(v)) = |v|",
            worst < 1e-6,
            format!("max err {worst:.2e} (tol 1e-6)"),
        ));
    }

    // main-text formula vs appendix arcosh form at c = 1
    {
        let ct = Tensor::scalar(1.0, DType::F64);
        let mut worst = 0.0f64;
        for _ in 0..500 {
            let u = exp_origin(&random_tangent(&mut r, 1, 4, 1.0), &ct).unwrap();
            let v = exp_origin(&random_tangent(&mut r, 1, 4, 1.0), &ct).unwrap();
            let main = dist_poincare(&u, &v, &ct).unwrap().item();
            let oracle = arcosh_ball_distance(&u.to_vec(), &v.to_vec());
            worst = worst.max((main - oracle).abs());
        }
        // spot value: u = 0, |v| = 0.5 -> ln 3 both ways
        let u0 = Tensor::zeros(&[1, 2], DType::F64);
        let v5 = Tensor::from_vec(vec![0.5, 0.0], &[1, 2], DType::F64).unwrap();
        let main = dist_poincare(&u0, &v5, &ct).unwrap().item();
        let oracle = arcosh_ball_distance(&[0.0, 0.0], &[0.5, 0.0]);
        let ln3 = 3.0f64.ln();
        let spot = (main - ln3).abs().max((oracle - ln3).abs());
        results.push(CheckResult::new(
            "tanh-inv vs arcosh distance (c=1)",
            worst < 1e-9 && spot < 1e-9,
            format!("max err {worst:.2e}, ln3 spot err {spot:.2e} (tol 1e-9)"),
        ));
    }

    // ball <-> hyperboloid isometry on 1000 random pairs
    {
        let mut worst = 0.0f64;
        for &c in &[0.5f64, 1.0, 2.0] {
            let ct = Tensor::scalar(c, DType::F64);
            let n = 334;
            let u = exp_origin(&random_tangent(&mut r, n, 4, 1.0), &ct).unwrap();
            let v = exp_origin(&random_tangent(&mut r, n, 4, 1.0), &ct).unwrap();
            let dp = dist_poincare(&u, &v, &ct).unwrap();
            let dl = dist_lorentz(
                &poincare_to_lorentz(&u, &ct).unwrap(),
                &poincare_to_lorentz(&v, &ct).unwrap(),
                &ct,
            )
            .unwrap();
            worst = worst.max(max_abs_diff(&dp, &dl));
        }
        results.push(CheckResult::new(
            "poincare/lorentz isometry (1002 pairs)",
            worst < 1e-6,
            format!("max err {worst:.2e} (tol 1e-6)"),
        ));
    }

    // Mobius left-cancellation: (-u) + (u + v) = v
    {
        let ct = Tensor::scalar(1.0, DType::F64);
        let u = exp_origin(&random_tangent(&mut r, 500, 4, 1.0), &ct).unwrap();
        let v = exp_origin(&random_tangent(&mut r, 500, 4, 1.0), &ct).unwrap();
        let w = mobius_add(&u.neg().unwrap(), &mobius_add(&u, &v, &ct).unwrap(), &ct).unwrap();
        let worst = max_abs_diff(&w, &v);
        results.push(CheckResult::new(
            "mobius left-cancellation",
            worst < 1e-6,
            format!("max err {worst:.2e} (tol 1e-6)"),
        ));
    }

    // identity and inverse
    {
        let ct = Tensor::scalar(1.0, DType::F64);
        let v = exp_origin(&random_tangent(&mut r, 200, 4, 1.0), &ct).unwrap();
        let zero = Tensor::zeros(&[200, 4], DType::F64);
        let id_err = max_abs_diff(&mobius_add(&zero, &v, &ct).unwrap(), &v);
        let inv = mobius_add(&v, &v.neg().unwrap(), &ct).unwrap();
        let inv_err = inv.to_vec().iter().fold(0.0f64, |m, x| m.max(x.abs()));
        results.push(CheckResult::new(
            "mobius identity and inverse",
            id_err < 1e-9 && inv_err < 1e-9,
            format!("identity {id_err:.2e}, inverse {inv_err:.2e}"),
        ));
    }

    // triangle inequality on 10^4 random triples
    {
        let mut worst = -f64::INFINITY;
        for &c in &[0.7f64, 1.0, 1.6] {
            let ct = Tensor::scalar(c, DType::F64);
            let n = 3334;
            let a = exp_origin(&random_tangent(&mut r, n, 3, 1.2), &ct).unwrap();
            let b = exp_origin(&random_tangent(&mut r, n, 3, 1.2), &ct).unwrap();
            let w = exp_origin(&random_tangent(&mut r, n, 3, 1.2), &ct).unwrap();
            let dab = dist_poincare(&a, &b, &ct).unwrap().to_vec();
            let dbw = dist_poincare(&b, &w, &ct).unwrap().to_vec();
            let daw = dist_poincare(&a, &w, &ct).unwrap().to_vec();
            for i in 0..n {
                worst = worst.max(daw[i] - dab[i] - dbw[i]);
            }
        }
        results.push(CheckResult::new(
            "triangle inequality (10002 triples)",
            worst <= 1e-9,
            format!("max violation {worst:.2e} (slack 1e-9)"),
        ));
    }

    // ball clipping invariant on operation outputs
    {
        let mut worst = 0.0f64;
        for &c in &curvatures {
            let ct = Tensor::scalar(c, DType::F64);
            let big = random_tangent(&mut r, 200, 4, 30.0);
            let y = exp_origin(&big, &ct).unwrap();
            let m = mobius_add(&y, &y, &ct).unwrap();
            for t in [&y, &m] {
                let norms = t.norm_last(false).unwrap().to_vec();
                for n in norms {
                    worst = worst.max(c.sqrt() * n);
                }
            }
        }
        results.push(CheckResult::new(
            "ball outputs stay clipped",
            worst <= 1.0 - 1e-5 + 1e-12,
            format!("max sqrt(c)|x| = {worst:.9}"),
        ));
    }

    // hyperboloid constraint after exp0 and the origin fixed point
    {
        let mut worst = 0.0f64;
        let mut origin_err = 0.0f64;
        for &c in &curvatures {
            let ct = Tensor::scalar(c, DType::F64);
            let x = crate::manifold::lorentz_exp0(&random_tangent(&mut r, 100, 4, 1.0), &ct).unwrap();
            let inner = lorentz_inner(&x, &x).unwrap().to_vec();
            for v in inner {
                worst = worst.max((v + 1.0 / c).abs());
            }
            let o = poincare_to_lorentz(&Tensor::zeros(&[1, 4], DType::F64), &ct).unwrap();
            let got = o.to_vec();
            origin_err = origin_err.max((got[0] - 1.0 / c.sqrt()).abs());
            origin_err = origin_err.max(got[1..].iter().fold(0.0f64, |m, x| m.max(x.abs())));
        }
        results.push(CheckResult::new(
            "hyperboloid constraint and origin",
            worst < 1e-5 && origin_err < 1e-12,
            format!("constraint err {worst:.2e}, origin err {origin_err:.2e}"),
        ));
    }

    // inverse-metric factor decreases monotonically towards the boundary
    {
        let ct = Tensor::scalar(1.0, DType::F64);
        let g = Tensor::from_vec(vec![1.0], &[1, 1], DType::F64).unwrap();
        let mut last = f64::INFINITY;
        let mut ok = true;
        for i in 0..20 {
            let radius = i as f64 * 0.049;
            let x = Tensor::from_vec(vec![radius], &[1, 1], DType::F64).unwrap();
            let f = riemannian_rescale(&g, &x, &ct).unwrap().item();
            ok &= f < last;
            last = f;
        }
        results.push(CheckResult::new(
            "metric rescale monotone in radius",
            ok,
            format!("factor at r=0.93: {last:.3e}"),
        ));
    }

    results
}

/// Fréchet-mean oracle suite: dense grid search, monotone objective, and
/// the flat (tiny-curvature) limit.
pub fn frechet_suite() -> Vec<CheckResult> {
    let mut results = Vec::new();
    let mut r = rng();

    // dense grid search on the 1-D two-point instance
    {
        let geom = Geometry::poincare(Curvature::fixed(1.0).unwrap());
        let (p1, p2) = (0.2f64, 0.6f64);
        let points = Tensor::from_vec(vec![p1, p2], &[2, 1], DType::F64).unwrap();
        let weights = Tensor::from_vec(vec![0.5, 0.5], &[2], DType::F64).unwrap();
        let res = frechet_mean(&points, &weights, &geom, &FrechetConfig::default()).unwrap();
        let got = res.mean.to_vec()[0];

        // oracle: scan 10^5 candidates along the geodesic segment
        let d1 = |z: f64, p: f64| {
            let num = (z - p) / (1.0 - z * p);
            2.0 * num.abs().atanh()
        };
        let mut best = (f64::INFINITY, 0.0);
        let n = 100_000;
        for i in 0..=n {
            let z = p1 + (p2 - p1) * i as f64 / n as f64;
            let obj = 0.5 * d1(z, p1).powi(2) + 0.5 * d1(z, p2).powi(2);
            if obj < best.0 {
                best = (obj, z);
            }
        }
        let err = (got - best.1).abs();
        results.push(CheckResult::new(
            "frechet vs grid-search oracle",
            res.converged && err < 1e-3,
            format!("mean {got:.6} vs grid {:.6}, err {err:.2e} (tol 1e-3)", best.1),
        ));
    }

    // objective non-increasing on random instances
    {
        let geom = Geometry::poincare(Curvature::fixed(1.0).unwrap());
        let mut ok = true;
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let pts = crate::manifold::exp_origin(
                &random_tangent(&mut r, 6, 3, 1.0),
                &Tensor::scalar(1.0, DType::F64),
            )
            .unwrap();
            let raw: Vec<f64> = (0..6).map(|_| r.gen::<f64>() + 0.1).collect();
            let total: f64 = raw.iter().sum();
            let w = Tensor::from_vec(raw.iter().map(|v| v / total).collect(), &[6], DType::F64).unwrap();
            let res = frechet_mean(&pts, &w, &geom, &FrechetConfig::default()).unwrap();
            for pair in res.objective_trace.windows(2) {
                let inc = pair[1] - pair[0];
                worst = worst.max(inc);
                ok &= inc <= 1e-12;
            }
        }
        results.push(CheckResult::new(
            "frechet objective non-increasing",
            ok,
            format!("max increase {worst:.2e}"),
        ));
    }

    // flat limit: tiny curvature matches the Euclidean weighted mean
    {
        let geom = Geometry::poincare(Curvature::fixed(1e-6).unwrap());
        let pts = random_tangent(&mut r, 5, 3, 0.5);
        let raw = [0.3, 0.25, 0.2, 0.15, 0.1];
        let w = Tensor::from_vec(raw.to_vec(), &[5], DType::F64).unwrap();
        let res = frechet_mean(&pts, &w, &geom, &FrechetConfig::default()).unwrap();
        // Euclidean oracle on the log-mapped points
        let tans = geom.log0(&pts).unwrap().to_vec();
        let mut expect = vec![0.0; 3];
        for (i, wi) in raw.iter().enumerate() {
            for j in 0..3 {
                expect[j] += wi * tans[i * 3 + j];
            }
        }
        let got = geom.log0(&res.mean).unwrap().to_vec();
        let err = got
            .iter()
            .zip(&expect)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        results.push(CheckResult::new(
            "frechet flat limit vs euclidean mean",
            err < 1e-3,
            format!("max err {err:.2e} (tol 1e-3)"),
        ));
    }

    // degenerate cases and the convergence flag
    {
        let geom = Geometry::poincare(Curvature::fixed(1.0).unwrap());
        let pts = Tensor::from_vec(vec![0.2, 0.0, 0.6, 0.0], &[2, 2], DType::F64).unwrap();
        let w10 = Tensor::from_vec(vec![1.0, 0.0], &[2], DType::F64).unwrap();
        let res = frechet_mean(&pts, &w10, &geom, &FrechetConfig::default()).unwrap();
        let deg_ok = res.converged && (res.mean.to_vec()[0] - 0.2).abs() < 1e-9;

        let w = Tensor::from_vec(vec![0.5, 0.5], &[2], DType::F64).unwrap();
        let strict = FrechetConfig { tol: 1e-12, max_iters: 1 };
        let res2 = frechet_mean(&pts, &w, &geom, &strict).unwrap();
        let flag_ok = !res2.converged && res2.iterations == 1;
        results.push(CheckResult::new(
            "frechet degenerate weights and convergence flag",
            deg_ok && flag_ok,
            format!("degenerate ok: {deg_ok}, flag ok: {flag_ok}"),
        ));
    }

    results
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checks::all_passed;

    #[test]
    fn geometry_suite_passes() {
        let results = geometry_suite();
        assert!(
            all_passed(&results),
            "{}",
            crate::checks::render_table(&results)
        );
    }

    #[test]
    fn frechet_suite_passes() {
        let results = frechet_suite();
        assert!(
            all_passed(&results),
            "{}",
            crate::checks::render_table(&results)
        );
    }
}
