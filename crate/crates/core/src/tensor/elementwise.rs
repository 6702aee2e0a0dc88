//! Elementwise primitives: binary arithmetic with trailing-axis
//! broadcasting, unary maps, and clamping. Each primitive registers its
//! derivative with the graph.
//!
//! Domain checks are strict here (`atanh` of 1.0 is an error); callers that
//! need guarded evaluation near a boundary clamp first — the geometry module
//! does exactly that, keeping the clipping where manifold semantics justify
//! it.

use super::shape::{broadcast_apply, broadcast_shapes, reduce_grad_to_shape};
use super::Tensor;
use crate::error::{Error, Result};

impl Tensor {
    fn binary(
        &self,
        other: &Tensor,
        op: &'static str,
        f: impl Fn(f64, f64) -> f64 + 'static,
        dfa: impl Fn(f64, f64, f64) -> f64 + 'static,
        dfb: impl Fn(f64, f64, f64) -> f64 + 'static,
    ) -> Result<Tensor> {
        let out_shape = broadcast_shapes(op, self.shape(), other.shape())?;
        let out = broadcast_apply(
            &self.data(),
            self.shape(),
            &other.data(),
            other.shape(),
            &out_shape,
            &f,
        );
        let dtype = self.dtype().promote(other.dtype());
        let (a, b) = (self.clone(), other.clone());
        let shape_for_node = out_shape.clone();
        let node = self.binary_node(
            other,
            Box::new(move |g| {
                let av = a.data();
                let bv = b.data();
                let ga_full = broadcast_full(g, &shape_for_node, &av, a.shape(), &bv, b.shape(), &dfa);
                let gb_full = broadcast_full(g, &shape_for_node, &av, a.shape(), &bv, b.shape(), &dfb);
                vec![
                    reduce_grad_to_shape(&ga_full, &shape_for_node, a.shape()),
                    reduce_grad_to_shape(&gb_full, &shape_for_node, b.shape()),
                ]
            }),
        );
        Ok(Tensor::from_op(out, out_shape, dtype, node))
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.binary(other, "add", |x, y| x + y, |g, _, _| g, |g, _, _| g)
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.binary(other, "sub", |x, y| x - y, |g, _, _| g, |g, _, _| -g)
    }

    pub fn mul(&self, other: &Tensor) -> Result<Tensor> {
        self.binary(other, "mul", |x, y| x * y, |g, _, y| g * y, |g, x, _| g * x)
    }

    /// Elementwise division. Zero denominators follow IEEE semantics; guard
    /// upstream where a zero is possible.
    pub fn div(&self, other: &Tensor) -> Result<Tensor> {
        self.binary(
            other,
            "div",
            |x, y| x / y,
            |g, _, y| g / y,
            |g, x, y| -g * x / (y * y),
        )
    }

    fn unary(
        &self,
        op: &'static str,
        domain: Option<(&'static str, fn(f64) -> bool)>,
        f: impl Fn(f64) -> f64,
        // derivative as a function of (input, output)
        df: impl Fn(f64, f64) -> f64 + 'static,
    ) -> Result<Tensor> {
        let input = self.to_vec();
        if let Some((desc, ok)) = domain {
            if let Some(bad) = input.iter().find(|v| !ok(**v)) {
                return Err(Error::Domain {
                    op,
                    value: *bad,
                    domain: desc,
                });
            }
        }
        let out: Vec<f64> = input.iter().map(|v| f(*v)).collect();
        let saved_in = input;
        let saved_out = out.clone();
        let node = self.unary_node(Box::new(move |g| {
            vec![g
                .iter()
                .zip(saved_in.iter().zip(&saved_out))
                .map(|(gi, (x, y))| gi * df(*x, *y))
                .collect()]
        }));
        Ok(Tensor::from_op(out, self.shape().to_vec(), self.dtype(), node))
    }

    pub fn neg(&self) -> Result<Tensor> {
        self.unary("neg", None, |x| -x, |_, _| -1.0)
    }

    pub fn tanh(&self) -> Result<Tensor> {
        self.unary("tanh", None, f64::tanh, |_, y| 1.0 - y * y)
    }

    /// Inverse hyperbolic tangent; input must lie strictly inside (-1, 1).
    pub fn atanh(&self) -> Result<Tensor> {
        self.unary(
            "atanh",
            Some(("(-1, 1)", |x| x > -1.0 && x < 1.0)),
            f64::atanh,
            |x, _| 1.0 / (1.0 - x * x),
        )
    }

    /// Inverse hyperbolic cosine; input must be >= 1.
    pub fn acosh(&self) -> Result<Tensor> {
        self.unary(
            "arccosh",
            Some(("[1, inf)", |x| x >= 1.0)),
            f64::acosh,
            // derivative 1/sqrt(x^2-1); floored so a clamped boundary input
            // yields a large finite value instead of inf
            |x, _| 1.0 / (x * x - 1.0).max(1e-30).sqrt(),
        )
    }

    pub fn exp(&self) -> Result<Tensor> {
        self.unary("exp", None, f64::exp, |_, y| y)
    }

    pub fn log(&self) -> Result<Tensor> {
        self.unary(
            "log",
            Some(("(0, inf)", |x| x > 0.0)),
            f64::ln,
            |x, _| 1.0 / x,
        )
    }

    pub fn sqrt(&self) -> Result<Tensor> {
        self.unary(
            "sqrt",
            Some(("[0, inf)", |x| x >= 0.0)),
            f64::sqrt,
            |_, y| 0.5 / y,
        )
    }

    pub fn square(&self) -> Result<Tensor> {
        self.unary("square", None, |x| x * x, |x, _| 2.0 * x)
    }

    /// Elementwise clamp into `[lo, hi]`. Gradient passes through inside the
    /// range (inclusive) and is zero outside.
    pub fn clamp(&self, lo: f64, hi: f64) -> Result<Tensor> {
        self.unary(
            "clamp",
            None,
            move |x| x.clamp(lo, hi),
            move |x, _| if x >= lo && x <= hi { 1.0 } else { 0.0 },
        )
    }

    pub fn clamp_min(&self, lo: f64) -> Result<Tensor> {
        self.clamp(lo, f64::INFINITY)
    }

    pub fn clamp_max(&self, hi: f64) -> Result<Tensor> {
        self.clamp(f64::NEG_INFINITY, hi)
    }

    pub fn add_scalar(&self, c: f64) -> Result<Tensor> {
        self.unary("add_scalar", None, move |x| x + c, |_, _| 1.0)
    }

    pub fn mul_scalar(&self, c: f64) -> Result<Tensor> {
        self.unary("mul_scalar", None, move |x| x * c, move |_, _| c)
    }

    /// Logistic sigmoid, used for bounded learnable scalars.
    pub fn sigmoid(&self) -> Result<Tensor> {
        self.unary(
            "sigmoid",
            None,
            |x| 1.0 / (1.0 + (-x).exp()),
            |_, y| y * (1.0 - y),
        )
    }
}

fn broadcast_full(
    g: &[f64],
    out_shape: &[usize],
    a: &[f64],
    a_shape: &[usize],
    b: &[f64],
    b_shape: &[usize],
    df: &impl Fn(f64, f64, f64) -> f64,
) -> Vec<f64> {
    use super::shape::broadcast_strides;
    if a_shape == out_shape && b_shape == out_shape {
        return g
            .iter()
            .zip(a.iter().zip(b))
            .map(|(gi, (x, y))| df(*gi, *x, *y))
            .collect();
    }
    let ndim = out_shape.len();
    let sa = broadcast_strides(a_shape, ndim);
    let sb = broadcast_strides(b_shape, ndim);
    let mut out = Vec::with_capacity(g.len());
    let mut coords = vec![0usize; ndim];
    let (mut ia, mut ib) = (0usize, 0usize);
    for &gi in g {
        out.push(df(gi, a[ia], b[ib]));
        for d in (0..ndim).rev() {
            coords[d] += 1;
            ia += sa[d];
            ib += sb[d];
            if coords[d] < out_shape[d] {
                break;
            }
            coords[d] = 0;
            ia -= sa[d] * out_shape[d];
            ib -= sb[d] * out_shape[d];
        }
    }
    out
}
