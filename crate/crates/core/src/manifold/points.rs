//! Typed single points on the two hyperbolic models. Construction enforces
//! the manifold invariant (ball interior / hyperboloid sheet); operations
//! delegate to the tensor kernel at 64-bit.

use super::{
    dist_lorentz, dist_poincare, exp_at, log_at, lorentz_inner, lorentz_project, mobius_add,
    poincare_project,
};
use crate::error::{Error, Result};
use crate::tensor::{DType, Tensor};

/// A point strictly inside the curvature-ĉ Poincaré ball.
#[derive(Clone, Debug)]
pub struct PoincarePoint {
    coords: Vec<f64>,
    curvature: f64,
}

impl PoincarePoint {
    /// Validates the ball invariant `√ĉ‖x‖ < 1`; points outside are
    /// rejected (clipping is a projection concern, not a constructor one).
    pub fn new(coords: Vec<f64>, curvature: f64) -> Result<Self> {
        if !(curvature > 0.0) {
            return Err(Error::Config(format!(
                "Poincaré point needs positive curvature, got {curvature}"
            )));
        }
        let norm = coords.iter().map(|v| v * v).sum::<f64>().sqrt();
        if curvature.sqrt() * norm >= 1.0 {
            return Err(Error::Domain {
                op: "poincare_point",
                value: curvature.sqrt() * norm,
                domain: "√ĉ‖x‖ < 1",
            });
        }
        Ok(PoincarePoint { coords, curvature })
    }

    /// Clips arbitrary coordinates into the ball, then constructs.
    pub fn project(coords: Vec<f64>, curvature: f64) -> Result<Self> {
        let ct = Tensor::scalar(curvature, DType::F64);
        let t = Tensor::from_vec(coords.clone(), &[coords.len()], DType::F64)?;
        let p = poincare_project(&t, &ct)?;
        PoincarePoint::new(p.to_vec(), curvature)
    }

    pub fn origin(dim: usize, curvature: f64) -> Self {
        PoincarePoint {
            coords: vec![0.0; dim],
            curvature,
        }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn curvature(&self) -> f64 {
        self.curvature
    }

    fn tensor(&self) -> Tensor {
        Tensor::from_vec(self.coords.clone(), &[self.coords.len()], DType::F64)
            .expect("validated coords")
    }

    fn c(&self) -> Tensor {
        Tensor::scalar(self.curvature, DType::F64)
    }

    fn check_compat(&self, other: &PoincarePoint) -> Result<()> {
        if self.curvature != other.curvature {
            return Err(Error::Contract(format!(
                "curvature mismatch: {} vs {}",
                self.curvature, other.curvature
            )));
        }
        if self.coords.len() != other.coords.len() {
            return Err(Error::Shape {
                op: "poincare_point",
                left: vec![self.coords.len()],
                right: vec![other.coords.len()],
            });
        }
        Ok(())
    }

    /// Möbius addition `self ⊕_ĉ other`.
    pub fn mobius_add(&self, other: &PoincarePoint) -> Result<PoincarePoint> {
        self.check_compat(other)?;
        let s = mobius_add(&self.tensor(), &other.tensor(), &self.c())?;
        Ok(PoincarePoint {
            coords: s.to_vec(),
            curvature: self.curvature,
        })
    }

    pub fn neg(&self) -> PoincarePoint {
        PoincarePoint {
            coords: self.coords.iter().map(|v| -v).collect(),
            curvature: self.curvature,
        }
    }

    pub fn dist(&self, other: &PoincarePoint) -> Result<f64> {
        self.check_compat(other)?;
        Ok(dist_poincare(&self.tensor(), &other.tensor(), &self.c())?.item())
    }

    /// Unit-speed exponential map from this base point.
    pub fn exp(&self, tangent: &[f64]) -> Result<PoincarePoint> {
        let v = Tensor::from_vec(tangent.to_vec(), &[tangent.len()], DType::F64)?;
        let y = exp_at(&self.tensor(), &v, &self.c())?;
        Ok(PoincarePoint {
            coords: y.to_vec(),
            curvature: self.curvature,
        })
    }

    /// Inverse of [`PoincarePoint::exp`].
    pub fn log(&self, target: &PoincarePoint) -> Result<Vec<f64>> {
        self.check_compat(target)?;
        Ok(log_at(&self.tensor(), &target.tensor(), &self.c())?.to_vec())
    }
}

/// A point on the upper sheet of the curvature-ĉ hyperboloid.
#[derive(Clone, Debug)]
pub struct LorentzPoint {
    coords: Vec<f64>,
    curvature: f64,
}

impl LorentzPoint {
    /// Validates `⟨x,x⟩_𝓛 = −1/ĉ` within 1e-5 and `x₀ > 0`.
    pub fn new(coords: Vec<f64>, curvature: f64) -> Result<Self> {
        if !(curvature > 0.0) {
            return Err(Error::Config(format!(
                "Lorentz point needs positive curvature, got {curvature}"
            )));
        }
        if coords.len() < 2 {
            return Err(Error::Contract(
                "Lorentz point needs at least 2 ambient coords".into(),
            ));
        }
        if coords[0] <= 0.0 {
            return Err(Error::Domain {
                op: "lorentz_point",
                value: coords[0],
                domain: "x₀ > 0",
            });
        }
        let inner = -coords[0] * coords[0]
            + coords[1..].iter().map(|v| v * v).sum::<f64>();
        if (inner + 1.0 / curvature).abs() > 1e-5 {
            return Err(Error::Domain {
                op: "lorentz_point",
                value: inner,
                domain: "⟨x,x⟩_𝓛 = −1/ĉ (±1e-5)",
            });
        }
        Ok(LorentzPoint { coords, curvature })
    }

    /// Renormalises arbitrary ambient coordinates onto the sheet, then
    /// constructs.
    pub fn project(coords: Vec<f64>, curvature: f64) -> Result<Self> {
        let ct = Tensor::scalar(curvature, DType::F64);
        let t = Tensor::from_vec(coords.clone(), &[coords.len()], DType::F64)?;
        let p = lorentz_project(&t, &ct)?;
        LorentzPoint::new(p.to_vec(), curvature)
    }

    pub fn origin(dim: usize, curvature: f64) -> Self {
        let mut coords = vec![0.0; dim + 1];
        coords[0] = 1.0 / curvature.sqrt();
        LorentzPoint { coords, curvature }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn curvature(&self) -> f64 {
        self.curvature
    }

    fn tensor(&self) -> Tensor {
        Tensor::from_vec(self.coords.clone(), &[self.coords.len()], DType::F64)
            .expect("validated coords")
    }

    pub fn inner(&self, other: &LorentzPoint) -> Result<f64> {
        Ok(lorentz_inner(&self.tensor(), &other.tensor())?.item())
    }

    pub fn dist(&self, other: &LorentzPoint) -> Result<f64> {
        if self.curvature != other.curvature {
            return Err(Error::Contract(format!(
                "curvature mismatch: {} vs {}",
                self.curvature, other.curvature
            )));
        }
        let c = Tensor::scalar(self.curvature, DType::F64);
        Ok(dist_lorentz(&self.tensor(), &other.tensor(), &c)?.item())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::BALL_EPS;

    #[test]
    fn ball_constructor_rejects_boundary() {
        assert!(PoincarePoint::new(vec![1.0, 0.0], 1.0).is_err());
        assert!(PoincarePoint::new(vec![0.999, 0.0], 1.0).is_ok());
        // tighter ball at higher curvature
        assert!(PoincarePoint::new(vec![0.9, 0.0], 4.0).is_err());
    }

    #[test]
    fn ball_projection_makes_valid_points() {
        let p = PoincarePoint::project(vec![10.0, -3.0], 1.0).unwrap();
        let n: f64 = p.coords().iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(n <= 1.0 - BALL_EPS + 1e-12);
    }

    #[test]
    fn hyperboloid_constructor_checks_sheet() {
        assert!(LorentzPoint::new(vec![1.0, 0.0], 1.0).is_ok());
        assert!(LorentzPoint::new(vec![2.0, 0.0], 1.0).is_err()); // off sheet
        assert!(LorentzPoint::new(vec![-1.0, 0.0], 1.0).is_err()); // lower sheet
        let a = 0.8f64;
        assert!(LorentzPoint::new(vec![a.cosh(), a.sinh()], 1.0).is_ok());
    }

    #[test]
    fn typed_mobius_left_cancellation() {
        let u = PoincarePoint::new(vec![0.3, -0.1], 1.0).unwrap();
        let v = PoincarePoint::new(vec![-0.2, 0.4], 1.0).unwrap();
        let w = u.neg().mobius_add(&u.mobius_add(&v).unwrap()).unwrap();
        for (a, b) in w.coords().iter().zip(v.coords()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn typed_exp_log_roundtrip() {
        let base = PoincarePoint::new(vec![0.2, 0.1], 1.5).unwrap();
        let tangent = [0.4, -0.3];
        let y = base.exp(&tangent).unwrap();
        let back = base.log(&y).unwrap();
        for (a, b) in tangent.iter().zip(back) {
            assert!((a - b).abs() < 1e-6);
        }
    }
}
