//! Linear-algebra and structural primitives: matmul with leading-axis
//! batching, reductions, row softmax, norms, concat/slice/permute/reshape,
//! and embedding lookup.

use super::shape::strides;
use super::{DType, Tensor};
use crate::error::{Error, Result};

// C[m,n] += A[m,k] B[k,n]
fn mm_nn(a: &[f64], b: &[f64], c: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        let crow = &mut c[i * n..(i + 1) * n];
        for (p, &av) in arow.iter().enumerate() {
            let brow = &b[p * n..(p + 1) * n];
            for j in 0..n {
                crow[j] += av * brow[j];
            }
        }
    }
}

// C[m,k] += A[m,n] B[k,n]^T  (rows of A dotted with rows of B)
fn mm_nt(a: &[f64], b: &[f64], c: &mut [f64], m: usize, n: usize, k: usize) {
    for i in 0..m {
        let arow = &a[i * n..(i + 1) * n];
        for j in 0..k {
            let brow = &b[j * n..(j + 1) * n];
            let mut s = 0.0;
            for p in 0..n {
                s += arow[p] * brow[p];
            }
            c[i * k + j] += s;
        }
    }
}

// C[k,n] += A[m,k]^T G[m,n]
fn mm_tn(a: &[f64], g: &[f64], c: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let grow = &g[i * n..(i + 1) * n];
        let arow = &a[i * k..(i + 1) * k];
        for (p, &av) in arow.iter().enumerate() {
            let crow = &mut c[p * n..(p + 1) * n];
            for j in 0..n {
                crow[j] += av * grow[j];
            }
        }
    }
}

fn leading(shape: &[usize]) -> (&[usize], usize, usize) {
    let r = shape.len();
    (&shape[..r - 2], shape[r - 2], shape[r - 1])
}

impl Tensor {
    /// Matrix product over the last two axes. Leading axes must match
    /// exactly, or one operand may be rank-2 and is then reused for every
    /// batch of the other.
    pub fn matmul(&self, other: &Tensor) -> Result<Tensor> {
        if self.shape().len() < 2 || other.shape().len() < 2 {
            return Err(Error::Shape {
                op: "matmul",
                left: self.shape().to_vec(),
                right: other.shape().to_vec(),
            });
        }
        let (la, m, ka) = leading(self.shape());
        let (lb, kb, n) = leading(other.shape());
        if ka != kb || (!la.is_empty() && !lb.is_empty() && la != lb) {
            return Err(Error::Shape {
                op: "matmul",
                left: self.shape().to_vec(),
                right: other.shape().to_vec(),
            });
        }
        let batch_dims: Vec<usize> = if la.is_empty() { lb.to_vec() } else { la.to_vec() };
        let batch: usize = batch_dims.iter().product();
        let a_batched = !la.is_empty();
        let b_batched = !lb.is_empty();
        let k = ka;

        let mut out_shape = batch_dims.clone();
        out_shape.push(m);
        out_shape.push(n);
        let mut out = vec![0.0; batch * m * n];
        {
            let av = self.data();
            let bv = other.data();
            for bi in 0..batch {
                let ao = if a_batched { bi * m * k } else { 0 };
                let bo = if b_batched { bi * k * n } else { 0 };
                mm_nn(
                    &av[ao..ao + m * k],
                    &bv[bo..bo + k * n],
                    &mut out[bi * m * n..(bi + 1) * m * n],
                    m,
                    k,
                    n,
                );
            }
        }
        let dtype = self.dtype().promote(other.dtype());
        let (a, b) = (self.clone(), other.clone());
        let node = self.binary_node(
            other,
            Box::new(move |g| {
                let av = a.data();
                let bv = b.data();
                let mut da = vec![0.0; av.len()];
                let mut db = vec![0.0; bv.len()];
                for bi in 0..batch {
                    let go = bi * m * n;
                    let ao = if a_batched { bi * m * k } else { 0 };
                    let bo = if b_batched { bi * k * n } else { 0 };
                    // dA = G B^T ; dB = A^T G (accumulates over batch when broadcast)
                    mm_nt(
                        &g[go..go + m * n],
                        &bv[bo..bo + k * n],
                        &mut da[ao..ao + m * k],
                        m,
                        n,
                        k,
                    );
                    mm_tn(
                        &av[ao..ao + m * k],
                        &g[go..go + m * n],
                        &mut db[bo..bo + k * n],
                        m,
                        k,
                        n,
                    );
                }
                vec![da, db]
            }),
        );
        Ok(Tensor::from_op(out, out_shape, dtype, node))
    }

    /// Sum over one axis.
    pub fn sum_axis(&self, axis: usize, keepdim: bool) -> Result<Tensor> {
        let shape = self.shape().to_vec();
        if axis >= shape.len() {
            return Err(Error::Contract(format!(
                "sum_axis: axis {axis} out of range for shape {shape:?}"
            )));
        }
        let outer: usize = shape[..axis].iter().product();
        let extent = shape[axis];
        let inner: usize = shape[axis + 1..].iter().product();
        let mut out = vec![0.0; outer * inner];
        {
            let data = self.data();
            for o in 0..outer {
                for e in 0..extent {
                    let base = (o * extent + e) * inner;
                    let orow = &mut out[o * inner..(o + 1) * inner];
                    for (i, slot) in orow.iter_mut().enumerate() {
                        *slot += data[base + i];
                    }
                }
            }
        }
        let mut out_shape: Vec<usize> = shape.clone();
        if keepdim {
            out_shape[axis] = 1;
        } else {
            out_shape.remove(axis);
        }
        let node = self.unary_node(Box::new(move |g| {
            let mut dg = vec![0.0; outer * extent * inner];
            for o in 0..outer {
                let grow = &g[o * inner..(o + 1) * inner];
                for e in 0..extent {
                    let base = (o * extent + e) * inner;
                    dg[base..base + inner].copy_from_slice(grow);
                }
            }
            vec![dg]
        }));
        Ok(Tensor::from_op(out, out_shape, self.dtype(), node))
    }

    /// Sum of all elements, shape `[1]`.
    pub fn sum_all(&self) -> Result<Tensor> {
        let total: f64 = self.data().iter().sum();
        let numel = self.numel();
        let node = self.unary_node(Box::new(move |g| vec![vec![g[0]; numel]]));
        Ok(Tensor::from_op(vec![total], vec![1], self.dtype(), node))
    }

    pub fn mean_axis(&self, axis: usize, keepdim: bool) -> Result<Tensor> {
        let n = self.shape()[axis] as f64;
        self.sum_axis(axis, keepdim)?.mul_scalar(1.0 / n)
    }

    pub fn mean_all(&self) -> Result<Tensor> {
        let n = self.numel() as f64;
        self.sum_all()?.mul_scalar(1.0 / n)
    }

    /// Euclidean norm over the last axis. The gradient uses the convention
    /// `d‖x‖/dx = x / max(‖x‖, 1e-15)`, which is zero at the origin.
    pub fn norm_last(&self, keepdim: bool) -> Result<Tensor> {
        let shape = self.shape().to_vec();
        let d = *shape.last().ok_or_else(|| {
            Error::Contract("norm_last on rank-0 tensor".into())
        })?;
        let rows = self.numel() / d;
        let mut out = Vec::with_capacity(rows);
        {
            let data = self.data();
            for r in 0..rows {
                let row = &data[r * d..(r + 1) * d];
                out.push(row.iter().map(|v| v * v).sum::<f64>().sqrt());
            }
        }
        let mut out_shape = shape.clone();
        if keepdim {
            *out_shape.last_mut().unwrap() = 1;
        } else {
            out_shape.pop();
        }
        let saved = out.clone();
        let this = self.clone();
        let node = self.unary_node(Box::new(move |g| {
            let data = this.data();
            let mut dg = vec![0.0; data.len()];
            for r in 0..rows {
                let denom = saved[r].max(1e-15);
                let scale = g[r] / denom;
                for i in 0..d {
                    dg[r * d + i] = scale * data[r * d + i];
                }
            }
            vec![dg]
        }));
        Ok(Tensor::from_op(out, out_shape, self.dtype(), node))
    }

    /// Numerically stable softmax over the last axis; rows sum to 1.
    pub fn softmax_last(&self) -> Result<Tensor> {
        let d = *self.shape().last().unwrap_or(&1);
        let rows = self.numel() / d;
        let mut out = vec![0.0; self.numel()];
        {
            let data = self.data();
            for r in 0..rows {
                let row = &data[r * d..(r + 1) * d];
                let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let mut sum = 0.0;
                for (i, &v) in row.iter().enumerate() {
                    let e = (v - mx).exp();
                    out[r * d + i] = e;
                    sum += e;
                }
                for i in 0..d {
                    out[r * d + i] /= sum;
                }
            }
        }
        let saved = out.clone();
        let node = self.unary_node(Box::new(move |g| {
            let mut dg = vec![0.0; saved.len()];
            for r in 0..rows {
                let y = &saved[r * d..(r + 1) * d];
                let gr = &g[r * d..(r + 1) * d];
                let dot: f64 = y.iter().zip(gr).map(|(a, b)| a * b).sum();
                for i in 0..d {
                    dg[r * d + i] = y[i] * (gr[i] - dot);
                }
            }
            vec![dg]
        }));
        Ok(Tensor::from_op(out, self.shape().to_vec(), self.dtype(), node))
    }

    /// Softmax over an arbitrary axis (moves the axis to the back and back
    /// again through the graph).
    pub fn softmax(&self, axis: usize) -> Result<Tensor> {
        let r = self.shape().len();
        if axis == r - 1 {
            return self.softmax_last();
        }
        let mut axes: Vec<usize> = (0..r).collect();
        axes.remove(axis);
        axes.push(axis);
        let moved = self.permute(&axes)?.softmax_last()?;
        let mut inv: Vec<usize> = (0..r).collect();
        inv.remove(r - 1);
        inv.insert(axis, r - 1);
        moved.permute(&inv)
    }

    /// Stable log-softmax over the last axis.
    pub fn log_softmax_last(&self) -> Result<Tensor> {
        let d = *self.shape().last().unwrap_or(&1);
        let rows = self.numel() / d;
        let mut out = vec![0.0; self.numel()];
        {
            let data = self.data();
            for r in 0..rows {
                let row = &data[r * d..(r + 1) * d];
                let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let lse = row.iter().map(|v| (v - mx).exp()).sum::<f64>().ln() + mx;
                for i in 0..d {
                    out[r * d + i] = row[i] - lse;
                }
            }
        }
        let saved = out.clone();
        let node = self.unary_node(Box::new(move |g| {
            let mut dg = vec![0.0; saved.len()];
            for r in 0..rows {
                let gr = &g[r * d..(r + 1) * d];
                let gsum: f64 = gr.iter().sum();
                for i in 0..d {
                    dg[r * d + i] = gr[i] - saved[r * d + i].exp() * gsum;
                }
            }
            vec![dg]
        }));
        Ok(Tensor::from_op(out, self.shape().to_vec(), self.dtype(), node))
    }

    /// Concatenate along `axis`; shapes must agree on every other axis.
    pub fn concat(parts: &[&Tensor], axis: usize) -> Result<Tensor> {
        let first = parts.first().ok_or_else(|| {
            Error::Contract("concat of zero tensors".into())
        })?;
        let rank = first.shape().len();
        if axis >= rank {
            return Err(Error::Contract(format!(
                "concat: axis {axis} out of range for rank {rank}"
            )));
        }
        let mut axis_total = 0;
        for p in parts {
            if p.shape().len() != rank {
                return Err(Error::Shape {
                    op: "concat",
                    left: first.shape().to_vec(),
                    right: p.shape().to_vec(),
                });
            }
            for (i, (a, b)) in first.shape().iter().zip(p.shape()).enumerate() {
                if i != axis && a != b {
                    return Err(Error::Shape {
                        op: "concat",
                        left: first.shape().to_vec(),
                        right: p.shape().to_vec(),
                    });
                }
            }
            axis_total += p.shape()[axis];
        }
        let outer: usize = first.shape()[..axis].iter().product();
        let inner: usize = first.shape()[axis + 1..].iter().product();
        let mut out_shape = first.shape().to_vec();
        out_shape[axis] = axis_total;
        let mut out = Vec::with_capacity(outer * axis_total * inner);
        for o in 0..outer {
            for p in parts {
                let e = p.shape()[axis];
                let data = p.data();
                out.extend_from_slice(&data[o * e * inner..(o + 1) * e * inner]);
            }
        }
        let extents: Vec<usize> = parts.iter().map(|p| p.shape()[axis]).collect();
        let sizes: Vec<usize> = parts.iter().map(|p| p.numel()).collect();
        let dtype = parts
            .iter()
            .fold(DType::F32, |acc, p| acc.promote(p.dtype()));
        let owned: Vec<Tensor> = parts.iter().map(|p| (*p).clone()).collect();
        let node = Tensor::multi_node(
            owned,
            Box::new(move |g| {
                let mut grads: Vec<Vec<f64>> = sizes.iter().map(|s| vec![0.0; *s]).collect();
                let mut cursor = 0;
                for o in 0..outer {
                    for (pi, &e) in extents.iter().enumerate() {
                        let chunk = e * inner;
                        grads[pi][o * chunk..(o + 1) * chunk]
                            .copy_from_slice(&g[cursor..cursor + chunk]);
                        cursor += chunk;
                    }
                }
                grads
            }),
        );
        Ok(Tensor::from_op(out, out_shape, dtype, node))
    }

    /// Contiguous sub-range `[start, start+len)` along `axis`.
    pub fn slice(&self, axis: usize, start: usize, len: usize) -> Result<Tensor> {
        let shape = self.shape().to_vec();
        if axis >= shape.len() || start + len > shape[axis] {
            return Err(Error::Contract(format!(
                "slice: range {start}..{} out of bounds on axis {axis} of {shape:?}",
                start + len
            )));
        }
        let outer: usize = shape[..axis].iter().product();
        let extent = shape[axis];
        let inner: usize = shape[axis + 1..].iter().product();
        let mut out = Vec::with_capacity(outer * len * inner);
        {
            let data = self.data();
            for o in 0..outer {
                let base = (o * extent + start) * inner;
                out.extend_from_slice(&data[base..base + len * inner]);
            }
        }
        let mut out_shape = shape.clone();
        out_shape[axis] = len;
        let full = self.numel();
        let node = self.unary_node(Box::new(move |g| {
            let mut dg = vec![0.0; full];
            for o in 0..outer {
                let base = (o * extent + start) * inner;
                dg[base..base + len * inner].copy_from_slice(&g[o * len * inner..(o + 1) * len * inner]);
            }
            vec![dg]
        }));
        Ok(Tensor::from_op(out, out_shape, self.dtype(), node))
    }

    /// Reorder axes.
    pub fn permute(&self, axes: &[usize]) -> Result<Tensor> {
        let rank = self.shape().len();
        let mut seen = vec![false; rank];
        if axes.len() != rank || axes.iter().any(|&a| a >= rank || std::mem::replace(&mut seen[a], true)) {
            return Err(Error::Contract(format!(
                "permute: invalid axes {axes:?} for rank {rank}"
            )));
        }
        let out_shape: Vec<usize> = axes.iter().map(|&a| self.shape()[a]).collect();
        let out = permute_raw(&self.data(), self.shape(), axes);
        let mut inverse = vec![0usize; rank];
        for (i, &a) in axes.iter().enumerate() {
            inverse[a] = i;
        }
        let fwd_shape = out_shape.clone();
        let node = self.unary_node(Box::new(move |g| {
            vec![permute_raw(g, &fwd_shape, &inverse)]
        }));
        Ok(Tensor::from_op(out, out_shape, self.dtype(), node))
    }

    /// Swap the last two axes.
    pub fn transpose_last2(&self) -> Result<Tensor> {
        let r = self.shape().len();
        if r < 2 {
            return Err(Error::Contract("transpose_last2 needs rank >= 2".into()));
        }
        let mut axes: Vec<usize> = (0..r).collect();
        axes.swap(r - 2, r - 1);
        self.permute(&axes)
    }

    /// View with a new shape of equal element count.
    pub fn reshape(&self, new_shape: &[usize]) -> Result<Tensor> {
        let numel: usize = new_shape.iter().product();
        if numel != self.numel() {
            return Err(Error::Shape {
                op: "reshape",
                left: self.shape().to_vec(),
                right: new_shape.to_vec(),
            });
        }
        let node = self.unary_node(Box::new(move |g| vec![g.to_vec()]));
        Ok(Tensor::from_op(
            self.to_vec(),
            new_shape.to_vec(),
            self.dtype(),
            node,
        ))
    }

    /// Row lookup into a `(vocab, dim)` table; gradients scatter-add back
    /// into the table.
    pub fn embedding(&self, ids: &[usize]) -> Result<Tensor> {
        if self.shape().len() != 2 {
            return Err(Error::Contract(format!(
                "embedding table must be rank 2, got {:?}",
                self.shape()
            )));
        }
        let (vocab, dim) = (self.shape()[0], self.shape()[1]);
        if let Some(bad) = ids.iter().find(|&&i| i >= vocab) {
            return Err(Error::Data(format!(
                "token id {bad} out of vocabulary (size {vocab})"
            )));
        }
        let mut out = Vec::with_capacity(ids.len() * dim);
        {
            let data = self.data();
            for &i in ids {
                out.extend_from_slice(&data[i * dim..(i + 1) * dim]);
            }
        }
        let ids_saved = ids.to_vec();
        let table_numel = self.numel();
        let node = self.unary_node(Box::new(move |g| {
            let mut dg = vec![0.0; table_numel];
            for (row, &i) in ids_saved.iter().enumerate() {
                for j in 0..dim {
                    dg[i * dim + j] += g[row * dim + j];
                }
            }
            vec![dg]
        }));
        Ok(Tensor::from_op(out, vec![ids.len(), dim], self.dtype(), node))
    }

    /// Pick one element per row of the last axis: `out[r] = self[r, idx[r]]`.
    pub fn gather_last(&self, idx: &[usize]) -> Result<Tensor> {
        let d = *self.shape().last().unwrap_or(&1);
        let rows = self.numel() / d;
        if idx.len() != rows {
            return Err(Error::Contract(format!(
                "gather_last: {} indices for {} rows",
                idx.len(),
                rows
            )));
        }
        if let Some(bad) = idx.iter().find(|&&i| i >= d) {
            return Err(Error::Data(format!(
                "gather index {bad} out of range (last axis {d})"
            )));
        }
        let mut out = Vec::with_capacity(rows);
        {
            let data = self.data();
            for (r, &i) in idx.iter().enumerate() {
                out.push(data[r * d + i]);
            }
        }
        let mut out_shape = self.shape().to_vec();
        *out_shape.last_mut().unwrap() = 1;
        let idx_saved = idx.to_vec();
        let numel = self.numel();
        let node = self.unary_node(Box::new(move |g| {
            let mut dg = vec![0.0; numel];
            for (r, &i) in idx_saved.iter().enumerate() {
                dg[r * d + i] = g[r];
            }
            vec![dg]
        }));
        Ok(Tensor::from_op(out, out_shape, self.dtype(), node))
    }

    /// Stack equal-shaped tensors along a fresh leading axis.
    pub fn stack(parts: &[&Tensor]) -> Result<Tensor> {
        let reshaped: Vec<Tensor> = parts
            .iter()
            .map(|p| {
                let mut s = vec![1];
                s.extend_from_slice(p.shape());
                p.reshape(&s)
            })
            .collect::<Result<_>>()?;
        let refs: Vec<&Tensor> = reshaped.iter().collect();
        Tensor::concat(&refs, 0)
    }

    /// Index of the maximum along the last axis (ties break low). Not part
    /// of the differentiable graph.
    pub fn argmax_last(&self) -> Vec<usize> {
        let d = *self.shape().last().unwrap_or(&1);
        let rows = self.numel() / d;
        let data = self.data();
        (0..rows)
            .map(|r| {
                let row = &data[r * d..(r + 1) * d];
                let mut best = 0;
                for (i, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = i;
                    }
                }
                best
            })
            .collect()
    }
}

fn permute_raw(data: &[f64], shape: &[usize], axes: &[usize]) -> Vec<f64> {
    let rank = shape.len();
    let in_strides = strides(shape);
    let out_shape: Vec<usize> = axes.iter().map(|&a| shape[a]).collect();
    let mapped: Vec<usize> = axes.iter().map(|&a| in_strides[a]).collect();
    let numel: usize = shape.iter().product();
    let mut out = Vec::with_capacity(numel);
    let mut coords = vec![0usize; rank];
    let mut src = 0usize;
    for _ in 0..numel {
        out.push(data[src]);
        for d in (0..rank).rev() {
            coords[d] += 1;
            src += mapped[d];
            if coords[d] < out_shape[d] {
                break;
            }
            coords[d] = 0;
            src -= mapped[d] * out_shape[d];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(data: &[f64], shape: &[usize]) -> Tensor {
        Tensor::from_vec(data.to_vec(), shape, DType::F64).unwrap()
    }

    #[test]
    fn identity_matmul_preserves_input() {
        let x = t(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], &[2, 3]);
        let eye = t(&[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0], &[3, 3]);
        let y = x.matmul(&eye).unwrap();
        assert_eq!(y.to_vec(), x.to_vec());
    }

    #[test]
    fn matmul_inner_dim_mismatch() {
        let a = t(&[0.0; 6], &[2, 3]);
        let b = t(&[0.0; 8], &[4, 2]);
        assert!(matches!(a.matmul(&b), Err(Error::Shape { .. })));
    }

    #[test]
    fn batched_matmul_with_rank2_rhs() {
        // (2,2,3) @ (3,1)
        let a = t(&[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 2.0, 0.0, 0.0, 0.0, 2.0, 0.0], &[2, 2, 3]);
        let b = t(&[1.0, 10.0, 100.0], &[3, 1]);
        let y = a.matmul(&b).unwrap();
        assert_eq!(y.shape(), &[2, 2, 1]);
        assert_eq!(y.to_vec(), vec![1.0, 10.0, 2.0, 20.0]);
    }

    #[test]
    fn softmax_symmetry() {
        let x = t(&[0.0, 0.0], &[2]);
        let y = x.softmax_last().unwrap();
        assert_eq!(y.to_vec(), vec![0.5, 0.5]);
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let x = t(&[1.0, -2.0, 0.3, 4.0, 0.0, -1.0], &[2, 3]);
        let y = x.softmax_last().unwrap();
        for r in 0..2 {
            let s: f64 = y.to_vec()[r * 3..(r + 1) * 3].iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn norm_pythagorean() {
        let x = t(&[3.0, 4.0], &[2]);
        assert_eq!(x.norm_last(false).unwrap().item(), 5.0);
    }

    #[test]
    fn concat_and_slice_roundtrip() {
        let a = t(&[1.0, 2.0, 3.0, 4.0], &[2, 2]);
        let b = t(&[5.0, 6.0], &[1, 2]);
        let c = Tensor::concat(&[&a, &b], 0).unwrap();
        assert_eq!(c.shape(), &[3, 2]);
        let back = c.slice(0, 0, 2).unwrap();
        assert_eq!(back.to_vec(), a.to_vec());
        // off-axis mismatch
        let bad = t(&[0.0; 3], &[1, 3]);
        assert!(Tensor::concat(&[&a, &bad], 0).is_err());
    }

    #[test]
    fn permute_roundtrip_grad() {
        let x = Tensor::param((0..24).map(|v| v as f64).collect(), &[2, 3, 4], DType::F64).unwrap();
        let y = x.permute(&[2, 0, 1]).unwrap();
        assert_eq!(y.shape(), &[4, 2, 3]);
        let loss = y.mul(&y).unwrap().sum_all().unwrap();
        let grads = loss.backward().unwrap();
        let expect: Vec<f64> = (0..24).map(|v| 2.0 * v as f64).collect();
        assert_eq!(grads.get(&x).unwrap(), &expect);
    }

    #[test]
    fn embedding_rejects_out_of_vocab() {
        let table = Tensor::param(vec![0.0; 6], &[3, 2], DType::F64).unwrap();
        assert!(matches!(table.embedding(&[0, 3]), Err(Error::Data(_))));
    }

    #[test]
    fn embedding_grad_scatter_adds() {
        let table = Tensor::param(vec![0.0; 6], &[3, 2], DType::F64).unwrap();
        let rows = table.embedding(&[1, 1]).unwrap();
        let loss = rows.sum_all().unwrap();
        let grads = loss.backward().unwrap();
        assert_eq!(grads.get(&table).unwrap(), &vec![0.0, 0.0, 2.0, 2.0, 0.0, 0.0]);
    }

    #[test]
    fn sum_axis_keepdim_shapes() {
        let x = t(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], &[2, 3]);
        assert_eq!(x.sum_axis(1, true).unwrap().shape(), &[2, 1]);
        assert_eq!(x.sum_axis(1, false).unwrap().to_vec(), vec![6.0, 15.0]);
        assert_eq!(x.sum_axis(0, false).unwrap().to_vec(), vec![5.0, 7.0, 9.0]);
    }
}
