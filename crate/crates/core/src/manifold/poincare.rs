//! Poincaré ball operations with curvature `ĉ` as a scalar tensor.
//!
//! Points live on the last axis; every function broadcasts over leading
//! axes. The ball of curvature `ĉ` has radius `1/√ĉ`; outputs are clipped
//! to `(1 − 1e-5)/√ĉ`.

use super::{dot_last, sqnorm_last, ATANH_EPS, BALL_EPS, NORM_FLOOR};
use crate::error::Result;
use crate::tensor::Tensor;

/// Möbius gyrovector addition
/// `u ⊕_ĉ v = ((1 + 2ĉ⟨u,v⟩ + ĉ‖v‖²)u + (1 − ĉ‖u‖²)v) / (1 + 2ĉ⟨u,v⟩ + ĉ²‖u‖²‖v‖²)`,
/// re-clipped into the ball.
pub fn mobius_add(u: &Tensor, v: &Tensor, c: &Tensor) -> Result<Tensor> {
    let uu = sqnorm_last(u)?;
    let vv = sqnorm_last(v)?;
    let uv = dot_last(u, v)?;
    let c_uv2 = c.mul(&uv)?.mul_scalar(2.0)?;
    let coef_u = c_uv2.add(&c.mul(&vv)?)?.add_scalar(1.0)?;
    let coef_v = c.mul(&uu)?.neg()?.add_scalar(1.0)?;
    let denom = c_uv2
        .add(&c.square()?.mul(&uu)?.mul(&vv)?)?
        .add_scalar(1.0)?;
    let num = coef_u.mul(u)?.add(&coef_v.mul(v)?)?;
    poincare_project(&num.div(&denom)?, c)
}

/// Clip rows into the open ball: `√ĉ‖x‖ ≤ 1 − 1e-5` after projection.
pub fn poincare_project(x: &Tensor, c: &Tensor) -> Result<Tensor> {
    let max_norm = c.sqrt()?.clamp_min(NORM_FLOOR)?;
    let max_norm = Tensor::scalar(1.0 - BALL_EPS, x.dtype()).div(&max_norm)?;
    let norm = x.norm_last(true)?.clamp_min(NORM_FLOOR)?;
    let scale = max_norm.div(&norm)?.clamp_max(1.0)?;
    x.mul(&scale)
}

/// Exponential map at the origin: `exp₀(v) = tanh(√ĉ‖v‖/2) · v/(√ĉ‖v‖)`.
/// The zero vector maps to the origin.
pub fn exp_origin(v: &Tensor, c: &Tensor) -> Result<Tensor> {
    let sqrt_c = c.sqrt()?;
    let n = v.norm_last(true)?;
    let coef = sqrt_c
        .mul(&n)?
        .mul_scalar(0.5)?
        .tanh()?
        .div(&sqrt_c.mul(&n.clamp_min(NORM_FLOOR)?)?)?;
    poincare_project(&v.mul(&coef)?, c)
}

/// Inverse of [`exp_origin`]: `log₀(y) = (2/√ĉ)·atanh(√ĉ‖y‖) · y/‖y‖`.
/// Returns the zero vector for the origin.
pub fn log_origin(y: &Tensor, c: &Tensor) -> Result<Tensor> {
    let sqrt_c = c.sqrt()?;
    let n = y.norm_last(true)?;
    let arg = sqrt_c.mul(&n)?.clamp_max(1.0 - ATANH_EPS)?;
    let coef = arg
        .atanh()?
        .mul_scalar(2.0)?
        .div(&sqrt_c.mul(&n.clamp_min(NORM_FLOOR)?)?)?;
    y.mul(&coef)
}

/// Geodesic distance `d(u, v) = (2/√ĉ)·atanh(√ĉ‖(−u) ⊕_ĉ v‖)`, rowwise
/// keepdim.
pub fn dist_poincare(u: &Tensor, v: &Tensor, c: &Tensor) -> Result<Tensor> {
    let diff = mobius_add(&u.neg()?, v, c)?;
    let sqrt_c = c.sqrt()?;
    let arg = sqrt_c.mul(&diff.norm_last(true)?)?.clamp_max(1.0 - ATANH_EPS)?;
    arg.atanh()?.mul_scalar(2.0)?.div(&sqrt_c)
}

/// Exponential map at a general base point, unit-speed convention:
/// `exp_x(v) = x ⊕_ĉ (tanh(√ĉ‖v‖/2) · v/(√ĉ‖v‖))`, so that
/// `dist(x, exp_x(v)) = ‖v‖`. Reduces to [`exp_origin`] at `x = 0`.
pub fn exp_at(base: &Tensor, v: &Tensor, c: &Tensor) -> Result<Tensor> {
    let sqrt_c = c.sqrt()?;
    let n = v.norm_last(true)?;
    let coef = sqrt_c
        .mul(&n)?
        .mul_scalar(0.5)?
        .tanh()?
        .div(&sqrt_c.mul(&n.clamp_min(NORM_FLOOR)?)?)?;
    mobius_add(base, &v.mul(&coef)?, c)
}

/// Inverse of [`exp_at`]: `log_x(y) = dist(x, y) · z/‖z‖` with
/// `z = (−x) ⊕_ĉ y`.
pub fn log_at(base: &Tensor, y: &Tensor, c: &Tensor) -> Result<Tensor> {
    let z = mobius_add(&base.neg()?, y, c)?;
    let sqrt_c = c.sqrt()?;
    let n = z.norm_last(true)?;
    let arg = sqrt_c.mul(&n)?.clamp_max(1.0 - ATANH_EPS)?;
    let coef = arg
        .atanh()?
        .mul_scalar(2.0)?
        .div(&sqrt_c.mul(&n.clamp_min(NORM_FLOOR)?)?)?;
    z.mul(&coef)
}

/// Inverse-metric rescaling of a Euclidean gradient at a ball point:
/// `g ↦ g · (1 − ĉ‖x‖²)² / 4`.
pub fn riemannian_rescale(euclidean_grad: &Tensor, at: &Tensor, c: &Tensor) -> Result<Tensor> {
    let factor = c
        .mul(&sqnorm_last(at)?)?
        .neg()?
        .add_scalar(1.0)?
        .square()?
        .mul_scalar(0.25)?;
    euclidean_grad.mul(&factor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::DType;

    fn t(data: &[f64]) -> Tensor {
        Tensor::from_vec(data.to_vec(), &[data.len()], DType::F64).unwrap()
    }

    fn c1() -> Tensor {
        Tensor::scalar(1.0, DType::F64)
    }

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn mobius_left_identity() {
        let zero = t(&[0.0, 0.0]);
        let v = t(&[0.3, -0.2]);
        let s = mobius_add(&zero, &v, &c1()).unwrap();
        assert_close(&s.to_vec(), &v.to_vec(), 1e-12);
    }

    #[test]
    fn mobius_inverse() {
        let u = t(&[0.4, 0.1]);
        let s = mobius_add(&u, &u.neg().unwrap(), &c1()).unwrap();
        assert_close(&s.to_vec(), &[0.0, 0.0], 1e-12);
    }

    #[test]
    fn exp_origin_zero_vector_is_origin() {
        let v = t(&[0.0, 0.0, 0.0]);
        let y = exp_origin(&v, &c1()).unwrap();
        assert_close(&y.to_vec(), &[0.0, 0.0, 0.0], 0.0);
    }

    #[test]
    fn exp_origin_closed_form() {
        // c=1, v=(1,0): exp0(v) = (tanh(0.5), 0)
        let v = t(&[1.0, 0.0]);
        let y = exp_origin(&v, &c1()).unwrap();
        assert!((y.to_vec()[0] - 0.5f64.tanh()).abs() < 1e-12);
        assert!((y.to_vec()[0] - 0.4621171572600098).abs() < 1e-10);
        assert_eq!(y.to_vec()[1], 0.0);
    }

    #[test]
    fn log_origin_inverts_exp_example() {
        let y = t(&[0.5f64.tanh(), 0.0]);
        let v = log_origin(&y, &c1()).unwrap();
        assert_close(&v.to_vec(), &[1.0, 0.0], 1e-4);
    }

    #[test]
    fn log_origin_of_origin_is_zero() {
        let y = t(&[0.0, 0.0]);
        assert_close(&log_origin(&y, &c1()).unwrap().to_vec(), &[0.0, 0.0], 0.0);
    }

    #[test]
    fn dist_self_is_zero() {
        let u = t(&[0.3, 0.2]);
        let d = dist_poincare(&u, &u, &c1()).unwrap();
        assert!(d.item().abs() < 1e-12);
    }

    #[test]
    fn dist_origin_radius_half() {
        // c=1, u=0, |v|=0.5 -> 2 atanh(0.5) = ln 3
        let u = t(&[0.0, 0.0]);
        let v = t(&[0.5, 0.0]);
        let d = dist_poincare(&u, &v, &c1()).unwrap().item();
        assert!((d - 2.0 * 0.5f64.atanh()).abs() < 1e-12);
        assert!((d - 3.0f64.ln()).abs() < 1e-12);
        assert!((d - 1.0986122886681098).abs() < 1e-12);
    }

    #[test]
    fn exp_at_base_reduces_to_origin_map() {
        let base = t(&[0.0, 0.0]);
        let v = t(&[0.7, -0.4]);
        let a = exp_at(&base, &v, &c1()).unwrap();
        let b = exp_origin(&v, &c1()).unwrap();
        assert_close(&a.to_vec(), &b.to_vec(), 1e-12);
    }

    #[test]
    fn exp_at_zero_tangent_returns_base() {
        let base = t(&[0.2, 0.3]);
        let v = t(&[0.0, 0.0]);
        let y = exp_at(&base, &v, &c1()).unwrap();
        assert_close(&y.to_vec(), &base.to_vec(), 1e-12);
    }

    #[test]
    fn metric_rescale_at_origin_is_quarter() {
        let g = t(&[2.0, -4.0]);
        let x = t(&[0.0, 0.0]);
        let r = riemannian_rescale(&g, &x, &c1()).unwrap();
        assert_close(&r.to_vec(), &[0.5, -1.0], 1e-12);
    }

    #[test]
    fn metric_rescale_zero_grad_is_zero() {
        let g = t(&[0.0, 0.0]);
        let x = t(&[0.5, 0.1]);
        let r = riemannian_rescale(&g, &x, &c1()).unwrap();
        assert_close(&r.to_vec(), &[0.0, 0.0], 0.0);
    }

    #[test]
    fn metric_factor_monotone_decreasing_in_radius() {
        let g = t(&[1.0]);
        let mut last = f64::INFINITY;
        for r in [0.0, 0.2, 0.4, 0.6, 0.8, 0.95, 0.999] {
            let x = t(&[r]);
            let f = riemannian_rescale(&g, &x, &c1()).unwrap().item();
            assert!(f < last, "factor must decrease towards the boundary");
            last = f;
        }
        assert!(last < 1e-3); // -> 0 as ||x|| -> 1/sqrt(c)
    }

    #[test]
    fn projection_clips_into_ball() {
        let far = t(&[5.0, 0.0]);
        let p = poincare_project(&far, &c1()).unwrap();
        let n = p.norm_last(false).unwrap().item();
        assert!(n <= 1.0 - 1e-5 + 1e-12);
    }
}
