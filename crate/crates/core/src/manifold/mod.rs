//! Hyperbolic geometry kernel: adaptive Poincaré ball, Lorentz hyperboloid,
//! Möbius gyrovector operations, exponential/logarithmic maps, geodesic
//! distances, the ball↔hyperboloid isometry, and the weighted Fréchet mean.
//!
//! # Conventions
//!
//! All operations act on the **last axis** of a tensor (rows are points) and
//! broadcast over leading axes, so the same kernel serves single points,
//! frame sequences `(T, d)`, and batched pairwise grids `(B, B, d)`.
//!
//! Curvature enters every formula as a scalar tensor `ĉ = σ·c`, so when the
//! scale `σ = exp(log_scale)` is learnable, gradients flow into it through
//! every distance and map.
//!
//! ## Exponential map convention
//!
//! The origin map used here is
//!
//! ```text
//! exp₀(v) = tanh(√ĉ‖v‖ / 2) · v / (√ĉ‖v‖)
//! ```
//!
//! Note the factor 2 **inside** tanh. Some libraries omit it (placing a
//! conformal factor λ₀ = 2 in front instead); with this convention the map
//! is unit-speed: `dist(0, exp₀(v)) = ‖v‖` exactly, and `exp_at`/`log_at`
//! at a general base extend the same convention (`log_at(x, y)` has norm
//! `dist(x, y)`). Nothing downstream depends on the other convention.
//!
//! ## Numerical guards
//!
//! `atanh` arguments are clamped to `≤ 1 − 1e-7`, `arccosh` arguments are
//! floored at 1, and ball-valued outputs are clipped to radius
//! `(1 − 1e-5)/√ĉ`. The guards live here, where manifold semantics justify
//! the clipping, not inside the tensor primitives.

mod frechet;
mod lorentz;
mod poincare;
mod points;

pub use frechet::{frechet_mean, FrechetConfig, FrechetResult};
pub use lorentz::{
    dist_lorentz, lorentz_exp0, lorentz_exp_at, lorentz_inner, lorentz_log0, lorentz_log_at,
    lorentz_project, lorentz_to_poincare, poincare_to_lorentz,
};
pub use poincare::{
    dist_poincare, exp_at, exp_origin, log_at, log_origin, mobius_add, poincare_project,
    riemannian_rescale,
};
pub use points::{LorentzPoint, PoincarePoint};

use crate::error::{Error, Result};
use crate::tensor::{DType, Tensor};

pub(crate) const BALL_EPS: f64 = 1e-5;
pub(crate) const ATANH_EPS: f64 = 1e-7;
pub(crate) const NORM_FLOOR: f64 = 1e-15;

/// Adaptive curvature state `ĉ = σ·c` with fixed base `c > 0` and scale
/// `σ = exp(log_scale) > 0`, positive by construction.
#[derive(Clone)]
pub struct Curvature {
    base: f64,
    log_scale: Tensor,
    adaptive: bool,
}

impl Curvature {
    /// Fixed curvature `ĉ = c` (scale frozen at 1).
    pub fn fixed(c: f64) -> Result<Self> {
        Self::with_scale(c, 1.0, false)
    }

    /// Curvature with an explicit initial scale. When `learnable` is set the
    /// log-scale is a grad-tracked leaf optimised in flat space.
    pub fn with_scale(c: f64, initial_scale: f64, learnable: bool) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::Config(format!("base curvature must be positive, got {c}")));
        }
        if !(initial_scale > 0.0) || !initial_scale.is_finite() {
            return Err(Error::Config(format!(
                "initial curvature scale must be positive, got {initial_scale}"
            )));
        }
        let log_scale = if learnable {
            Tensor::param(vec![initial_scale.ln()], &[1], DType::F64)?
        } else {
            Tensor::from_vec(vec![initial_scale.ln()], &[1], DType::F64)?
        };
        Ok(Curvature {
            base: c,
            log_scale,
            adaptive: learnable,
        })
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn is_adaptive(&self) -> bool {
        self.adaptive
    }

    /// The learnable log-scale leaf (for optimizer registration).
    pub fn log_scale(&self) -> &Tensor {
        &self.log_scale
    }

    pub fn sigma(&self) -> f64 {
        self.log_scale.item().exp()
    }

    /// Effective curvature `ĉ = σ·c` as a scalar tensor in the graph.
    pub fn effective(&self) -> Result<Tensor> {
        self.log_scale.exp()?.mul_scalar(self.base)
    }

    pub fn effective_value(&self) -> f64 {
        let v = self.sigma() * self.base;
        debug_assert!(v > 0.0, "effective curvature must stay positive");
        v
    }
}

/// Which geometry the alignment head embeds into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ManifoldKind {
    Euclidean,
    Poincare,
    Lorentz,
}

/// A geometry: a manifold kind plus (for the hyperbolic kinds) its
/// curvature state. Euclidean carries no curvature — flat `c = 0` semantics.
#[derive(Clone)]
pub struct Geometry {
    kind: ManifoldKind,
    curvature: Option<Curvature>,
}

impl Geometry {
    pub fn euclidean() -> Self {
        Geometry {
            kind: ManifoldKind::Euclidean,
            curvature: None,
        }
    }

    pub fn poincare(curvature: Curvature) -> Self {
        Geometry {
            kind: ManifoldKind::Poincare,
            curvature: Some(curvature),
        }
    }

    pub fn lorentz(curvature: Curvature) -> Self {
        Geometry {
            kind: ManifoldKind::Lorentz,
            curvature: Some(curvature),
        }
    }

    pub fn kind(&self) -> ManifoldKind {
        self.kind
    }

    pub fn curvature(&self) -> Option<&Curvature> {
        self.curvature.as_ref()
    }

    fn c(&self) -> Result<Tensor> {
        self.curvature
            .as_ref()
            .expect("hyperbolic geometry carries curvature")
            .effective()
    }

    /// Ambient coordinate count for a `d`-dimensional tangent space.
    pub fn ambient_dim(&self, d: usize) -> usize {
        match self.kind {
            ManifoldKind::Lorentz => d + 1,
            _ => d,
        }
    }

    /// Map tangent vectors at the origin onto the manifold. Identity for
    /// Euclidean; `exp₀` for the ball; hyperboloid lift for Lorentz.
    pub fn exp0(&self, v: &Tensor) -> Result<Tensor> {
        match self.kind {
            ManifoldKind::Euclidean => Ok(v.clone()),
            ManifoldKind::Poincare => exp_origin(v, &self.c()?),
            ManifoldKind::Lorentz => lorentz_exp0(v, &self.c()?),
        }
    }

    /// Inverse of [`Geometry::exp0`].
    pub fn log0(&self, y: &Tensor) -> Result<Tensor> {
        match self.kind {
            ManifoldKind::Euclidean => Ok(y.clone()),
            ManifoldKind::Poincare => log_origin(y, &self.c()?),
            ManifoldKind::Lorentz => lorentz_log0(y, &self.c()?),
        }
    }

    /// Geodesic distance, rowwise over the last axis, keepdim (`(..., 1)`).
    pub fn dist(&self, u: &Tensor, v: &Tensor) -> Result<Tensor> {
        match self.kind {
            ManifoldKind::Euclidean => u.sub(v)?.norm_last(true),
            ManifoldKind::Poincare => dist_poincare(u, v, &self.c()?),
            ManifoldKind::Lorentz => dist_lorentz(u, v, &self.c()?),
        }
    }

    pub fn exp_at(&self, base: &Tensor, v: &Tensor) -> Result<Tensor> {
        match self.kind {
            ManifoldKind::Euclidean => base.add(v),
            ManifoldKind::Poincare => exp_at(base, v, &self.c()?),
            ManifoldKind::Lorentz => lorentz_exp_at(base, v, &self.c()?),
        }
    }

    pub fn log_at(&self, base: &Tensor, y: &Tensor) -> Result<Tensor> {
        match self.kind {
            ManifoldKind::Euclidean => y.sub(base),
            ManifoldKind::Poincare => log_at(base, y, &self.c()?),
            ManifoldKind::Lorentz => lorentz_log_at(base, y, &self.c()?),
        }
    }

    /// Clip / renormalise onto the manifold.
    pub fn project(&self, x: &Tensor) -> Result<Tensor> {
        match self.kind {
            ManifoldKind::Euclidean => Ok(x.clone()),
            ManifoldKind::Poincare => poincare_project(x, &self.c()?),
            ManifoldKind::Lorentz => lorentz_project(x, &self.c()?),
        }
    }
}

/// `⟨u, v⟩` over the last axis, keepdim.
pub(crate) fn dot_last(u: &Tensor, v: &Tensor) -> Result<Tensor> {
    let prod = u.mul(v)?;
    let last = prod.shape().len() - 1;
    prod.sum_axis(last, true)
}

/// `‖u‖²` over the last axis, keepdim.
pub(crate) fn sqnorm_last(u: &Tensor) -> Result<Tensor> {
    dot_last(u, u)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curvature_positivity_by_construction() {
        let c = Curvature::with_scale(1.0, 0.25, true).unwrap();
        assert!(c.effective_value() > 0.0);
        assert!((c.sigma() - 0.25).abs() < 1e-12);
        // even a large negative log-scale stays positive
        c.log_scale().set_data(vec![-30.0]).unwrap();
        assert!(c.effective_value() > 0.0);
    }

    #[test]
    fn curvature_rejects_nonpositive_base() {
        assert!(Curvature::fixed(0.0).is_err());
        assert!(Curvature::fixed(-1.0).is_err());
    }

    #[test]
    fn fixed_curvature_scale_is_frozen_unit() {
        let c = Curvature::fixed(1.5).unwrap();
        assert!(!c.is_adaptive());
        assert!(!c.log_scale().tracks_grad());
        assert_eq!(c.sigma(), 1.0);
        assert!((c.effective_value() - 1.5).abs() < 1e-12);
    }
}
