//! Lorentz (hyperboloid) model with curvature `ĉ` as a scalar tensor.
//!
//! Points are ambient `(d+1)`-vectors with the time-like coordinate first,
//! living on the upper sheet `⟨x, x⟩_𝓛 = −1/ĉ`, `x₀ > 0`. At `ĉ = 1` the
//! formulas reduce to the classical unit hyperboloid; the curvature
//! generalisation keeps the model isometric to the `ĉ`-ball.

use super::{sqnorm_last, NORM_FLOOR};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

fn last_axis(t: &Tensor) -> usize {
    t.shape().len() - 1
}

fn split_time_space(x: &Tensor) -> Result<(Tensor, Tensor)> {
    let ax = last_axis(x);
    let d1 = x.shape()[ax];
    Ok((x.slice(ax, 0, 1)?, x.slice(ax, 1, d1 - 1)?))
}

fn cosh_t(x: &Tensor) -> Result<Tensor> {
    let e = x.exp()?;
    let inv = Tensor::scalar(1.0, x.dtype()).div(&e)?;
    e.add(&inv)?.mul_scalar(0.5)
}

fn sinh_t(x: &Tensor) -> Result<Tensor> {
    let e = x.exp()?;
    let inv = Tensor::scalar(1.0, x.dtype()).div(&e)?;
    e.sub(&inv)?.mul_scalar(0.5)
}

/// Lorentzian (Minkowski) inner product
/// `⟨x, y⟩_𝓛 = −x₀y₀ + Σᵢ xᵢyᵢ`, rowwise keepdim.
pub fn lorentz_inner(x: &Tensor, y: &Tensor) -> Result<Tensor> {
    let (dx, dy) = (x.shape()[last_axis(x)], y.shape()[last_axis(y)]);
    if dx != dy {
        return Err(Error::Shape {
            op: "lorentz_inner",
            left: x.shape().to_vec(),
            right: y.shape().to_vec(),
        });
    }
    let full = x.mul(y)?;
    let ax = last_axis(&full);
    let sum = full.sum_axis(ax, true)?;
    let (xt, _) = split_time_space(x)?;
    let (yt, _) = split_time_space(y)?;
    // subtract the time term twice: Σ − 2 x₀y₀ = −x₀y₀ + Σ spatial
    sum.sub(&xt.mul(&yt)?.mul_scalar(2.0)?)
}

/// Geodesic distance `d(x, y) = (1/√ĉ)·arccosh(−ĉ⟨x, y⟩_𝓛)`; the arccosh
/// argument is floored at 1.
pub fn dist_lorentz(x: &Tensor, y: &Tensor, c: &Tensor) -> Result<Tensor> {
    let beta = lorentz_inner(x, y)?.mul(c)?.neg()?.clamp_min(1.0)?;
    beta.acosh()?.div(&c.sqrt()?)
}

/// Renormalise onto the `ĉ`-hyperboloid: recompute
/// `x₀ = √(1/ĉ + ‖x_spatial‖²)` from the spatial part.
pub fn lorentz_project(x: &Tensor, c: &Tensor) -> Result<Tensor> {
    let (_, xs) = split_time_space(x)?;
    let inv_c = Tensor::scalar(1.0, x.dtype()).div(c)?;
    let x0 = sqnorm_last(&xs)?.add(&inv_c)?.sqrt()?;
    Tensor::concat(&[&x0, &xs], last_axis(x))
}

/// Exponential map at the hyperboloid origin `o = (1/√ĉ, 0, …, 0)` for a
/// `d`-dimensional spatial tangent vector:
/// `exp₀(v) = (cosh(√ĉ‖v‖)/√ĉ, sinh(√ĉ‖v‖)·v/(√ĉ‖v‖))`. Unit-speed:
/// `dist(o, exp₀(v)) = ‖v‖`.
pub fn lorentz_exp0(v: &Tensor, c: &Tensor) -> Result<Tensor> {
    let sqrt_c = c.sqrt()?;
    let n = v.norm_last(true)?;
    let theta = sqrt_c.mul(&n)?;
    let x0 = cosh_t(&theta)?.div(&sqrt_c)?;
    let coef = sinh_t(&theta)?.div(&sqrt_c.mul(&n.clamp_min(NORM_FLOOR)?)?)?;
    let xs = v.mul(&coef)?;
    lorentz_project(&Tensor::concat(&[&x0, &xs], last_axis(&xs))?, c)
}

/// Inverse of [`lorentz_exp0`]; returns the `d`-dimensional spatial tangent.
pub fn lorentz_log0(y: &Tensor, c: &Tensor) -> Result<Tensor> {
    let sqrt_c = c.sqrt()?;
    let (y0, ys) = split_time_space(y)?;
    let beta = sqrt_c.mul(&y0)?.clamp_min(1.0)?;
    let dist = beta.acosh()?.div(&sqrt_c)?;
    let ns = ys.norm_last(true)?.clamp_min(NORM_FLOOR)?;
    ys.mul(&dist.div(&ns)?)
}

/// Exponential map at a general base; `v` is an ambient tangent with
/// `⟨base, v⟩_𝓛 = 0`:
/// `exp_x(v) = cosh(√ĉ‖v‖_𝓛)·x + sinh(√ĉ‖v‖_𝓛)·v/(√ĉ‖v‖_𝓛)`.
pub fn lorentz_exp_at(base: &Tensor, v: &Tensor, c: &Tensor) -> Result<Tensor> {
    let sqrt_c = c.sqrt()?;
    // spacelike tangent: ⟨v,v⟩ ≥ 0 up to roundoff
    let n = lorentz_inner(v, v)?.clamp_min(0.0)?.sqrt()?;
    let theta = sqrt_c.mul(&n)?;
    let first = cosh_t(&theta)?.mul(base)?;
    let coef = sinh_t(&theta)?.div(&sqrt_c.mul(&n.clamp_min(NORM_FLOOR)?)?)?;
    lorentz_project(&first.add(&v.mul(&coef)?)?, c)
}

/// Inverse of [`lorentz_exp_at`]: projects `y` onto the tangent space at
/// `base` and scales it to the geodesic distance.
pub fn lorentz_log_at(base: &Tensor, y: &Tensor, c: &Tensor) -> Result<Tensor> {
    let beta = lorentz_inner(base, y)?.mul(c)?.neg()?.clamp_min(1.0)?;
    let dist = beta.acosh()?.div(&c.sqrt()?)?;
    let u = y.sub(&base.mul(&beta)?)?;
    let nu = lorentz_inner(&u, &u)?
        .clamp_min(0.0)?
        .sqrt()?
        .clamp_min(NORM_FLOOR)?;
    u.mul(&dist.div(&nu)?)
}

/// Ball → hyperboloid isometry for curvature `ĉ`:
/// `x₀ = (1 + ĉ‖p‖²) / (√ĉ (1 − ĉ‖p‖²))`, `x_spatial = 2p / (1 − ĉ‖p‖²)`.
pub fn poincare_to_lorentz(p: &Tensor, c: &Tensor) -> Result<Tensor> {
    let cp2 = c.mul(&sqnorm_last(p)?)?;
    let denom = cp2.neg()?.add_scalar(1.0)?;
    let x0 = cp2.add_scalar(1.0)?.div(&c.sqrt()?.mul(&denom)?)?;
    let xs = p.mul_scalar(2.0)?.div(&denom)?;
    lorentz_project(&Tensor::concat(&[&x0, &xs], last_axis(p))?, c)
}

/// Hyperboloid → ball isometry: `p = x_spatial / (√ĉ·x₀ + 1)`.
pub fn lorentz_to_poincare(x: &Tensor, c: &Tensor) -> Result<Tensor> {
    let (x0, xs) = split_time_space(x)?;
    let denom = c.sqrt()?.mul(&x0)?.add_scalar(1.0)?;
    super::poincare_project(&xs.div(&denom)?, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{dist_poincare, exp_origin};
    use crate::tensor::DType;

    fn t(data: &[f64]) -> Tensor {
        Tensor::from_vec(data.to_vec(), &[data.len()], DType::F64).unwrap()
    }

    fn c1() -> Tensor {
        Tensor::scalar(1.0, DType::F64)
    }

    #[test]
    fn origin_self_inner_is_minus_one() {
        let o = t(&[1.0, 0.0, 0.0]);
        assert!((lorentz_inner(&o, &o).unwrap().item() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn inner_hyperbolic_identity() {
        // x=(cosh a, sinh a), y=(cosh b, sinh b) -> -cosh(a-b)
        let (a, b) = (0.3f64, 1.0f64);
        let x = t(&[a.cosh(), a.sinh()]);
        let y = t(&[b.cosh(), b.sinh()]);
        let v = lorentz_inner(&x, &y).unwrap().item();
        assert!((v + (a - b).cosh()).abs() < 1e-12);
        assert!((v + 1.2551690056309432).abs() < 1e-10);
    }

    #[test]
    fn inner_is_symmetric() {
        let x = t(&[1.2, 0.3, 0.5]);
        let y = t(&[1.7, -0.8, 0.9]);
        let a = lorentz_inner(&x, &y).unwrap().item();
        let b = lorentz_inner(&y, &x).unwrap().item();
        assert_eq!(a, b);
    }

    #[test]
    fn inner_dimension_mismatch() {
        let x = t(&[1.0, 0.0, 0.0]);
        let y = t(&[1.0, 0.0]);
        assert!(matches!(
            lorentz_inner(&x, &y),
            Err(Error::Shape { op: "lorentz_inner", .. })
        ));
    }

    #[test]
    fn dist_self_is_zero() {
        // arccosh near 1 amplifies roundoff to ~sqrt(eps)
        let a = 0.4f64;
        let x = t(&[a.cosh(), a.sinh()]);
        assert!(dist_lorentz(&x, &x, &c1()).unwrap().item().abs() < 1e-7);
    }

    #[test]
    fn dist_on_geodesic_is_parameter_gap() {
        let (a, b) = (0.3f64, 1.0f64);
        let x = t(&[a.cosh(), a.sinh()]);
        let y = t(&[b.cosh(), b.sinh()]);
        let d = dist_lorentz(&x, &y, &c1()).unwrap().item();
        assert!((d - 0.7).abs() < 1e-12);
    }

    #[test]
    fn origin_maps_to_hyperboloid_origin() {
        for c in [0.5f64, 1.0, 2.0] {
            let ct = Tensor::scalar(c, DType::F64);
            let p = t(&[0.0, 0.0]);
            let x = poincare_to_lorentz(&p, &ct).unwrap();
            let got = x.to_vec();
            assert!((got[0] - 1.0 / c.sqrt()).abs() < 1e-12);
            assert!(got[1].abs() < 1e-12 && got[2].abs() < 1e-12);
        }
    }

    #[test]
    fn ball_hyperboloid_roundtrip() {
        for c in [0.5f64, 1.0, 2.0] {
            let ct = Tensor::scalar(c, DType::F64);
            let p = t(&[0.3, -0.2]);
            let x = poincare_to_lorentz(&p, &ct).unwrap();
            let back = lorentz_to_poincare(&x, &ct).unwrap();
            for (a, b) in p.to_vec().iter().zip(back.to_vec()) {
                assert!((a - b).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn isometry_agrees_with_ball_distance() {
        let c = Tensor::scalar(1.3, DType::F64);
        let u = exp_origin(&t(&[0.4, -0.7]), &c).unwrap();
        let v = exp_origin(&t(&[-0.1, 0.9]), &c).unwrap();
        let dp = dist_poincare(&u, &v, &c).unwrap().item();
        let lu = poincare_to_lorentz(&u, &c).unwrap();
        let lv = poincare_to_lorentz(&v, &c).unwrap();
        let dl = dist_lorentz(&lu, &lv, &c).unwrap().item();
        assert!((dp - dl).abs() < 1e-6, "{dp} vs {dl}");
    }

    #[test]
    fn exp0_lands_on_hyperboloid_and_log0_inverts() {
        for c in [0.5f64, 1.0, 1.5, 2.0] {
            let ct = Tensor::scalar(c, DType::F64);
            let v = t(&[0.6, -0.3, 0.2]);
            let x = lorentz_exp0(&v, &ct).unwrap();
            let constraint = lorentz_inner(&x, &x).unwrap().item();
            assert!((constraint + 1.0 / c).abs() < 1e-5);
            assert!(x.to_vec()[0] > 0.0);
            let back = lorentz_log0(&x, &ct).unwrap();
            for (a, b) in v.to_vec().iter().zip(back.to_vec()) {
                assert!((a - b).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn exp_at_zero_tangent_is_base() {
        let ct = c1();
        let base = lorentz_exp0(&t(&[0.5, 0.2]), &ct).unwrap();
        let v = t(&[0.0, 0.0, 0.0]);
        let y = lorentz_exp_at(&base, &v, &ct).unwrap();
        for (a, b) in base.to_vec().iter().zip(y.to_vec()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    use crate::error::Error;
}
