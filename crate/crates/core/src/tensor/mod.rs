//! Dense-tensor engine with reverse-mode automatic differentiation.
//!
//! Tensors are immutable row-major buffers of `f64` participating in a
//! dynamic computation graph. A tensor built with [`Tensor::param`] is a
//! grad-tracked leaf; operations on tracked tensors record graph edges, and
//! [`Tensor::backward`] walks the graph in reverse topological order,
//! accumulating gradients into every tracked leaf.
//!
//! Precision is configurable per tensor: with [`DType::F32`] every operation
//! result is rounded to the nearest `f32`-representable value before being
//! stored, so 32-bit training behaves like a true single-precision pipeline
//! while the engine keeps a single `f64` code path. Gradient buffers always
//! accumulate in `f64`.
//!
//! Calling `backward` twice without [`Tensor::zero_grad`] accumulates into
//! the existing gradients; this is intentional and relied on by gradient
//! accumulation tests.

mod elementwise;
mod linalg;
pub(crate) mod shape;

use std::cell::{Cell, Ref, RefCell};
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::rc::Rc;

use crate::error::{Error, Result};

/// Storage precision of a tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum DType {
    F32,
    F64,
}

impl DType {
    /// Binary ops promote to 64-bit when either side is 64-bit.
    pub fn promote(self, other: DType) -> DType {
        if self == DType::F64 || other == DType::F64 {
            DType::F64
        } else {
            DType::F32
        }
    }
}

thread_local! {
    static NEXT_ID: Cell<u64> = const { Cell::new(1) };
}

fn next_id() -> u64 {
    NEXT_ID.with(|c| {
        let id = c.get();
        c.set(id + 1);
        id
    })
}

/// Backward rule of a recorded operation: maps the output gradient to one
/// gradient buffer per parent, in parent order.
pub(crate) type BackwardFn = Box<dyn Fn(&[f64]) -> Vec<Vec<f64>>>;

pub(crate) struct Node {
    parents: Vec<Tensor>,
    backward: BackwardFn,
}

struct Inner {
    id: u64,
    shape: Vec<usize>,
    /// Interior mutability is reserved for leaf updates between steps
    /// (optimizer) — graph nodes never mutate data after construction.
    data: RefCell<Vec<f64>>,
    dtype: DType,
    requires_grad: bool,
    grad: RefCell<Option<Vec<f64>>>,
    node: Option<Node>,
}

/// Dense multi-dimensional float array with optional gradient tracking.
#[derive(Clone)]
pub struct Tensor(Rc<Inner>);

/// Gradients of grad-tracked leaves keyed by tensor id, as produced by
/// [`Tensor::backward`].
#[derive(Debug, Default)]
pub struct GradientMap(pub BTreeMap<u64, Vec<f64>>);

impl GradientMap {
    pub fn get(&self, t: &Tensor) -> Option<&Vec<f64>> {
        self.0.get(&t.id())
    }
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tensor")
            .field("id", &self.0.id)
            .field("shape", &self.0.shape)
            .field("dtype", &self.0.dtype)
            .field("requires_grad", &self.0.requires_grad)
            .finish()
    }
}

pub(crate) fn quantize(mut data: Vec<f64>, dtype: DType) -> Vec<f64> {
    if dtype == DType::F32 {
        for v in &mut data {
            *v = *v as f32 as f64;
        }
    }
    data
}

impl Tensor {
    fn build(
        data: Vec<f64>,
        shape: Vec<usize>,
        dtype: DType,
        requires_grad: bool,
        node: Option<Node>,
    ) -> Tensor {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Tensor(Rc::new(Inner {
            id: next_id(),
            shape,
            data: RefCell::new(data),
            dtype,
            requires_grad,
            grad: RefCell::new(None),
            node,
        }))
    }

    pub(crate) fn from_op(data: Vec<f64>, shape: Vec<usize>, dtype: DType, node: Option<Node>) -> Tensor {
        let data = quantize(data, dtype);
        Tensor::build(data, shape, dtype, false, node)
    }

    /// Constant (non-tracked) tensor from a flat buffer.
    pub fn from_vec(data: Vec<f64>, shape: &[usize], dtype: DType) -> Result<Tensor> {
        let numel: usize = shape.iter().product();
        if numel != data.len() {
            return Err(Error::Shape {
                op: "from_vec",
                left: shape.to_vec(),
                right: vec![data.len()],
            });
        }
        Ok(Tensor::build(quantize(data, dtype), shape.to_vec(), dtype, false, None))
    }

    /// Grad-tracked leaf (a trainable parameter).
    pub fn param(data: Vec<f64>, shape: &[usize], dtype: DType) -> Result<Tensor> {
        let numel: usize = shape.iter().product();
        if numel != data.len() {
            return Err(Error::Shape {
                op: "param",
                left: shape.to_vec(),
                right: vec![data.len()],
            });
        }
        Ok(Tensor::build(quantize(data, dtype), shape.to_vec(), dtype, true, None))
    }

    pub fn zeros(shape: &[usize], dtype: DType) -> Tensor {
        let numel = shape.iter().product();
        Tensor::build(vec![0.0; numel], shape.to_vec(), dtype, false, None)
    }

    pub fn full(shape: &[usize], value: f64, dtype: DType) -> Tensor {
        let numel = shape.iter().product();
        Tensor::build(quantize(vec![value; numel], dtype), shape.to_vec(), dtype, false, None)
    }

    /// Rank-1 scalar of shape `[1]`.
    pub fn scalar(value: f64, dtype: DType) -> Tensor {
        Tensor::full(&[1], value, dtype)
    }

    pub fn id(&self) -> u64 {
        self.0.id
    }

    pub fn shape(&self) -> &[usize] {
        &self.0.shape
    }

    pub fn numel(&self) -> usize {
        self.0.shape.iter().product()
    }

    pub fn dtype(&self) -> DType {
        self.0.dtype
    }

    pub fn requires_grad(&self) -> bool {
        self.0.requires_grad
    }

    /// True when this tensor participates in gradient flow (a tracked leaf
    /// or the output of an operation over tracked tensors).
    pub fn tracks_grad(&self) -> bool {
        self.0.requires_grad || self.0.node.is_some()
    }

    pub fn data(&self) -> Ref<'_, Vec<f64>> {
        self.0.data.borrow()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.data.borrow().clone()
    }

    /// Value of a single-element tensor.
    pub fn item(&self) -> f64 {
        debug_assert_eq!(self.numel(), 1, "item() on non-scalar tensor");
        self.0.data.borrow()[0]
    }

    /// Detached copy: same values, no graph edge, not grad-tracked.
    /// Gradients flowing through downstream consumers stop here.
    pub fn detach(&self) -> Tensor {
        Tensor::build(
            self.0.data.borrow().clone(),
            self.0.shape.clone(),
            self.0.dtype,
            false,
            None,
        )
    }

    pub fn grad(&self) -> Option<Vec<f64>> {
        self.0.grad.borrow().clone()
    }

    pub fn zero_grad(&self) {
        *self.0.grad.borrow_mut() = None;
    }

    /// In-place leaf update used by optimizers between steps. Values are
    /// re-quantized to the tensor's dtype.
    pub fn set_data(&self, data: Vec<f64>) -> Result<()> {
        if data.len() != self.numel() {
            return Err(Error::Shape {
                op: "set_data",
                left: self.0.shape.clone(),
                right: vec![data.len()],
            });
        }
        *self.0.data.borrow_mut() = quantize(data, self.0.dtype);
        Ok(())
    }

    /// Reverse-mode differentiation from a scalar loss.
    ///
    /// Accumulates into the `grad` slot of every grad-tracked leaf reachable
    /// from `self` and returns the same gradients keyed by leaf id. Repeated
    /// calls without `zero_grad` keep accumulating.
    pub fn backward(&self) -> Result<GradientMap> {
        if self.numel() != 1 {
            return Err(Error::Contract(format!(
                "backward requires a scalar loss, got shape {:?}",
                self.shape()
            )));
        }

        // Post-order DFS gives children-before-parents; we then walk it in
        // reverse so each node's output gradient is complete before use.
        let mut order: Vec<Tensor> = Vec::new();
        let mut visited: HashSet<u64> = HashSet::new();
        let mut stack: Vec<(Tensor, usize)> = vec![(self.clone(), 0)];
        while let Some((t, child_idx)) = stack.pop() {
            if child_idx == 0 && !visited.insert(t.id()) {
                continue;
            }
            let parents = t.0.node.as_ref().map(|n| n.parents.clone()).unwrap_or_default();
            if child_idx < parents.len() {
                let p = parents[child_idx].clone();
                stack.push((t, child_idx + 1));
                if !visited.contains(&p.id()) {
                    stack.push((p, 0));
                }
            } else {
                order.push(t);
            }
        }

        let mut flowing: HashMap<u64, Vec<f64>> = HashMap::new();
        flowing.insert(self.id(), vec![1.0]);
        let mut result = GradientMap::default();

        for t in order.into_iter().rev() {
            let Some(g) = flowing.remove(&t.id()) else {
                continue;
            };
            if let Some(node) = &t.0.node {
                let parent_grads = (node.backward)(&g);
                debug_assert_eq!(parent_grads.len(), node.parents.len());
                for (p, pg) in node.parents.iter().zip(parent_grads) {
                    if !p.tracks_grad() {
                        continue;
                    }
                    debug_assert_eq!(pg.len(), p.numel());
                    match flowing.entry(p.id()) {
                        std::collections::hash_map::Entry::Occupied(mut e) => {
                            for (a, b) in e.get_mut().iter_mut().zip(&pg) {
                                *a += *b;
                            }
                        }
                        std::collections::hash_map::Entry::Vacant(e) => {
                            e.insert(pg);
                        }
                    }
                }
            }
            if t.0.requires_grad {
                {
                    let mut slot = t.0.grad.borrow_mut();
                    match slot.as_mut() {
                        Some(acc) => {
                            for (a, b) in acc.iter_mut().zip(&g) {
                                *a += *b;
                            }
                        }
                        None => *slot = Some(g.clone()),
                    }
                }
                let entry = result.0.entry(t.id()).or_insert_with(|| vec![0.0; t.numel()]);
                for (a, b) in entry.iter_mut().zip(&g) {
                    *a += *b;
                }
            }
        }
        Ok(result)
    }

    pub(crate) fn unary_node(&self, backward: BackwardFn) -> Option<Node> {
        if self.tracks_grad() {
            Some(Node {
                parents: vec![self.clone()],
                backward,
            })
        } else {
            None
        }
    }

    pub(crate) fn binary_node(&self, other: &Tensor, backward: BackwardFn) -> Option<Node> {
        if self.tracks_grad() || other.tracks_grad() {
            Some(Node {
                parents: vec![self.clone(), other.clone()],
                backward,
            })
        } else {
            None
        }
    }

    pub(crate) fn multi_node(parents: Vec<Tensor>, backward: BackwardFn) -> Option<Node> {
        if parents.iter().any(Tensor::tracks_grad) {
            Some(Node { parents, backward })
        } else {
            None
        }
    }
}
