//! Shape and broadcasting helpers (trailing-axis rules only).

use crate::error::{Error, Result};

/// Row-major strides for a shape.
pub fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * shape[i + 1];
    }
    s
}

/// Broadcast two shapes by aligning trailing axes; each aligned extent must
/// match or be 1 (missing leading axes count as 1).
pub fn broadcast_shapes(op: &'static str, a: &[usize], b: &[usize]) -> Result<Vec<usize>> {
    let ndim = a.len().max(b.len());
    let mut out = vec![0usize; ndim];
    for i in 0..ndim {
        let da = if i < ndim - a.len() { 1 } else { a[i - (ndim - a.len())] };
        let db = if i < ndim - b.len() { 1 } else { b[i - (ndim - b.len())] };
        if da != db && da != 1 && db != 1 {
            return Err(Error::Shape {
                op,
                left: a.to_vec(),
                right: b.to_vec(),
            });
        }
        out[i] = da.max(db);
    }
    Ok(out)
}

/// Strides of `shape` expanded to `out_ndim` axes, with zero stride on
/// broadcast (extent-1 or missing) axes.
pub fn broadcast_strides(shape: &[usize], out_ndim: usize) -> Vec<usize> {
    let own = strides(shape);
    let offset = out_ndim - shape.len();
    let mut s = vec![0usize; out_ndim];
    for i in 0..shape.len() {
        s[offset + i] = if shape[i] == 1 { 0 } else { own[i] };
    }
    s
}

/// Apply a binary function over broadcast operands, producing the flat
/// output buffer for `out_shape`.
pub fn broadcast_apply(
    a: &[f64],
    a_shape: &[usize],
    b: &[f64],
    b_shape: &[usize],
    out_shape: &[usize],
    f: impl Fn(f64, f64) -> f64,
) -> Vec<f64> {
    if a_shape == b_shape {
        return a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect();
    }
    let ndim = out_shape.len();
    let sa = broadcast_strides(a_shape, ndim);
    let sb = broadcast_strides(b_shape, ndim);
    let numel: usize = out_shape.iter().product();
    let mut out = Vec::with_capacity(numel);
    let mut coords = vec![0usize; ndim];
    let mut ia = 0usize;
    let mut ib = 0usize;
    for _ in 0..numel {
        out.push(f(a[ia], b[ib]));
        // increment odometer
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

/// Sum `grad` (of `grad_shape`) down to `target_shape` over the axes that
/// were broadcast. Inverse of broadcasting for gradient flow.
pub fn reduce_grad_to_shape(grad: &[f64], grad_shape: &[usize], target_shape: &[usize]) -> Vec<f64> {
    if grad_shape == target_shape {
        return grad.to_vec();
    }
    let ndim = grad_shape.len();
    let st = broadcast_strides(target_shape, ndim);
    let target_numel: usize = target_shape.iter().product();
    let mut out = vec![0.0; target_numel];
    let mut coords = vec![0usize; ndim];
    let mut it = 0usize;
    for &g in grad {
        out[it] += g;
        for d in (0..ndim).rev() {
            coords[d] += 1;
            it += st[d];
            if coords[d] < grad_shape[d] {
                break;
            }
            coords[d] = 0;
            it -= st[d] * grad_shape[d];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn broadcast_shapes_basic() {
        assert_eq!(broadcast_shapes("t", &[2, 3], &[3]).unwrap(), vec![2, 3]);
        assert_eq!(broadcast_shapes("t", &[4, 1, 3], &[2, 1]).unwrap(), vec![4, 2, 3]);
        assert!(broadcast_shapes("t", &[2, 3], &[4]).is_err());
    }

    #[test]
    fn broadcast_apply_and_reduce_roundtrip() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]; // (2,3)
        let b = [10.0, 20.0, 30.0]; // (3,)
        let out = broadcast_apply(&a, &[2, 3], &b, &[3], &[2, 3], |x, y| x + y);
        assert_eq!(out, vec![11.0, 22.0, 33.0, 14.0, 25.0, 36.0]);
        let g = vec![1.0; 6];
        let gb = reduce_grad_to_shape(&g, &[2, 3], &[3]);
        assert_eq!(gb, vec![2.0, 2.0, 2.0]);
    }
}
