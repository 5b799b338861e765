//! Belief tables over node state spaces.
//!
//! Entries are linearized row-major over the scope order with the last node
//! varying fastest. A table is stored either densely or as a sorted list of
//! `(linear index, value)` pairs holding only the nonzero entries. Every
//! operation sums in increasing linear-index order, so both representations
//! produce bit-identical values.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Bytes per entry of a dense payload.
pub const DENSE_ENTRY_BYTES: usize = 8;
/// Bytes per `(index, value)` pair of a sparse payload.
pub const SPARSE_ENTRY_BYTES: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub enum Values {
    Dense(Vec<f64>),
    Sparse(Vec<(usize, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeliefTable {
    scope: Vec<usize>,
    shape: Vec<usize>,
    values: Values,
}

/// A set of states a node is known to be in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub node: usize,
    /// Allowed state indices, sorted and deduplicated.
    pub states: Vec<usize>,
}

impl Finding {
    pub fn new(node: usize, states: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut states: Vec<usize> = states.into_iter().collect();
        states.sort_unstable();
        states.dedup();
        if states.is_empty() {
            return Err(Error::EmptyFinding(node));
        }
        Ok(Finding { node, states })
    }

    /// A finding stating that `node` is in `state`.
    pub fn single(node: usize, state: usize) -> Self {
        Finding { node, states: vec![state] }
    }

    pub fn allows(&self, state: usize) -> bool {
        self.states.binary_search(&state).is_ok()
    }

    pub fn is_single(&self) -> bool {
        self.states.len() == 1
    }
}

fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * shape[i + 1];
    }
    s
}

/// Calls `f(linear, mapped)` for every linear index of `shape`, where `mapped`
/// is the linear index obtained by weighting each coordinate with `ms`.
fn for_each_mapped(shape: &[usize], ms: &[usize], mut f: impl FnMut(usize, usize)) {
    let len: usize = shape.iter().product();
    let k = shape.len();
    let mut coord = vec![0usize; k];
    let mut mapped = 0usize;
    for lin in 0..len {
        f(lin, mapped);
        let mut ax = k;
        while ax > 0 {
            ax -= 1;
            coord[ax] += 1;
            mapped += ms[ax];
            if coord[ax] < shape[ax] {
                break;
            }
            mapped -= ms[ax] * shape[ax];
            coord[ax] = 0;
        }
    }
}

fn map_index(mut lin: usize, shape: &[usize], ms: &[usize]) -> usize {
    let mut mapped = 0;
    for ax in (0..shape.len()).rev() {
        let d = shape[ax];
        mapped += (lin % d) * ms[ax];
        lin /= d;
    }
    mapped
}

enum Lookup<'a> {
    Dense(&'a [f64]),
    Sparse(&'a [(usize, f64)]),
}

impl Lookup<'_> {
    #[inline]
    fn get(&self, i: usize) -> f64 {
        match self {
            Lookup::Dense(v) => v[i],
            Lookup::Sparse(p) => match p.binary_search_by_key(&i, |e| e.0) {
                Ok(k) => p[k].1,
                Err(_) => 0.0,
            },
        }
    }
}

impl BeliefTable {
    fn check_scope(scope: &[usize], shape: &[usize]) -> Result<usize> {
        if scope.len() != shape.len() {
            return Err(Error::MalformedTable("scope and shape lengths differ"));
        }
        for (i, n) in scope.iter().enumerate() {
            if scope[..i].contains(n) {
                return Err(Error::MalformedTable("repeated node in scope"));
            }
        }
        if shape.contains(&0) {
            return Err(Error::MalformedTable("zero-sized axis"));
        }
        shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or(Error::MalformedTable("state space overflows usize"))
    }

    pub fn from_dense(scope: Vec<usize>, shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let len = Self::check_scope(&scope, &shape)?;
        if values.len() != len {
            return Err(Error::MalformedTable("dense length differs from state space"));
        }
        if values.iter().any(|&x| !(x.is_finite() && x >= 0.0)) {
            return Err(Error::MalformedTable("entries must be finite and nonnegative"));
        }
        Ok(BeliefTable { scope, shape, values: Values::Dense(values) })
    }

    pub fn from_sparse(scope: Vec<usize>, shape: Vec<usize>, pairs: Vec<(usize, f64)>) -> Result<Self> {
        let len = Self::check_scope(&scope, &shape)?;
        for (k, &(i, x)) in pairs.iter().enumerate() {
            if i >= len {
                return Err(Error::MalformedTable("sparse index out of range"));
            }
            if k > 0 && pairs[k - 1].0 >= i {
                return Err(Error::MalformedTable("sparse indices not strictly increasing"));
            }
            if !(x.is_finite() && x > 0.0) {
                return Err(Error::MalformedTable("sparse values must be finite and positive"));
            }
        }
        Ok(BeliefTable { scope, shape, values: Values::Sparse(pairs) })
    }

    /// A dense table of ones.
    pub fn ones(scope: Vec<usize>, shape: Vec<usize>) -> Result<Self> {
        let len = Self::check_scope(&scope, &shape)?;
        Ok(BeliefTable { scope, shape, values: Values::Dense(vec![1.0; len]) })
    }

    pub fn scalar(value: f64) -> Self {
        BeliefTable { scope: Vec::new(), shape: Vec::new(), values: Values::Dense(vec![value]) }
    }

    /// The conditional table of `node` given `parents`, scoped `(parents.., node)`.
    pub fn from_cpt(node: usize, parents: &[usize], cards: &[usize], cpt: &[f64]) -> Result<Self> {
        let mut scope = parents.to_vec();
        scope.push(node);
        let shape = scope.iter().map(|&i| cards[i]).collect();
        BeliefTable::from_dense(scope, shape, cpt.to_vec())
    }

    pub fn scope(&self) -> &[usize] {
        &self.scope
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &Values {
        &self.values
    }

    /// Size of the state space.
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.values, Values::Sparse(_))
    }

    pub fn nnz(&self) -> usize {
        match &self.values {
            Values::Dense(v) => v.iter().filter(|&&x| x != 0.0).count(),
            Values::Sparse(p) => p.len(),
        }
    }

    pub fn get(&self, index: usize) -> f64 {
        self.lookup().get(index)
    }

    fn lookup(&self) -> Lookup<'_> {
        match &self.values {
            Values::Dense(v) => Lookup::Dense(v),
            Values::Sparse(p) => Lookup::Sparse(p),
        }
    }

    pub fn to_dense_values(&self) -> Vec<f64> {
        match &self.values {
            Values::Dense(v) => v.clone(),
            Values::Sparse(p) => {
                let mut v = vec![0.0; self.len()];
                for &(i, x) in p {
                    v[i] = x;
                }
                v
            }
        }
    }

    /// Nonzero entries in index order.
    pub fn nonzeros(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (dense, sparse): (&[f64], &[(usize, f64)]) = match &self.values {
            Values::Dense(v) => (v, &[]),
            Values::Sparse(p) => (&[], p),
        };
        dense.iter().copied().enumerate().filter(|e| e.1 != 0.0).chain(sparse.iter().copied())
    }

    /// Position of `node` in the scope.
    pub fn axis(&self, node: usize) -> Option<usize> {
        self.scope.iter().position(|&n| n == node)
    }

    /// True when both tables hold the same entries, whatever their representation.
    pub fn same_values(&self, other: &BeliefTable) -> bool {
        self.scope == other.scope && self.shape == other.shape && self.nonzeros().eq(other.nonzeros())
    }

    /// Stride of each of our axes inside `sub`, 0 for axes `sub` lacks.
    fn mapped_strides(&self, sub_scope: &[usize], sub_shape: &[usize]) -> Result<Vec<usize>> {
        let sub_strides = strides(sub_shape);
        let mut ms = vec![0usize; self.scope.len()];
        for (k, &n) in sub_scope.iter().enumerate() {
            let ax = self.axis(n).ok_or(Error::NotInScope(n))?;
            if self.shape[ax] != sub_shape[k] {
                return Err(Error::ScopeMismatch(self.scope.clone(), sub_scope.to_vec()));
            }
            ms[ax] = sub_strides[k];
        }
        Ok(ms)
    }

    fn rebuild(&self, values: Values) -> BeliefTable {
        BeliefTable { scope: self.scope.clone(), shape: self.shape.clone(), values }
    }

    pub fn sum(&self) -> f64 {
        match &self.values {
            Values::Dense(v) => v.iter().fold(0.0, |a, &x| a + x),
            Values::Sparse(p) => p.iter().fold(0.0, |a, e| a + e.1),
        }
    }

    /// Sums out every node not in `keep`. The result keeps our scope order.
    pub fn marginalize(&self, keep: &[usize]) -> Result<BeliefTable> {
        for &n in keep {
            if self.axis(n).is_none() {
                return Err(Error::NotInScope(n));
            }
        }
        let mut scope = Vec::new();
        let mut shape = Vec::new();
        for (ax, &n) in self.scope.iter().enumerate() {
            if keep.contains(&n) {
                scope.push(n);
                shape.push(self.shape[ax]);
            }
        }
        let ms = self.mapped_strides(&scope, &shape)?;
        let out_len: usize = shape.iter().product();
        let mut out = vec![0.0; out_len];
        let values = match &self.values {
            Values::Dense(v) => {
                for_each_mapped(&self.shape, &ms, |lin, m| out[m] += v[lin]);
                Values::Dense(out)
            }
            Values::Sparse(p) => {
                for &(i, x) in p {
                    out[map_index(i, &self.shape, &ms)] += x;
                }
                Values::Sparse(out.into_iter().enumerate().filter(|e| e.1 != 0.0).collect())
            }
        };
        Ok(BeliefTable { scope, shape, values })
    }

    /// Pointwise product with `other`, whose scope must be a subset of ours.
    pub fn multiply(&self, other: &BeliefTable) -> Result<BeliefTable> {
        let ms = self
            .mapped_strides(&other.scope, &other.shape)
            .map_err(|_| Error::ScopeMismatch(self.scope.clone(), other.scope.clone()))?;
        let u = other.lookup();
        let values = match &self.values {
            Values::Dense(v) => {
                let mut out = vec![0.0; v.len()];
                if let (true, Lookup::Dense(w)) = (self.scope == other.scope, &u) {
                    for ((o, &a), &b) in out.iter_mut().zip(v).zip(w.iter()) {
                        *o = a * b;
                    }
                } else {
                    for_each_mapped(&self.shape, &ms, |lin, m| out[lin] = v[lin] * u.get(m));
                }
                Values::Dense(out)
            }
            Values::Sparse(p) => Values::Sparse(
                p.iter().map(|&(i, x)| (i, x * u.get(map_index(i, &self.shape, &ms)))).filter(|e| e.1 != 0.0).collect(),
            ),
        };
        Ok(self.rebuild(values))
    }

    /// Pointwise ratio with `0/0 = 0`. A nonzero entry over zero is an error.
    pub fn divide(&self, den: &BeliefTable) -> Result<BeliefTable> {
        if self.scope != den.scope || self.shape != den.shape {
            return Err(Error::ScopeMismatch(self.scope.clone(), den.scope.clone()));
        }
        let d = den.lookup();
        let ratio = |i: usize, x: f64| -> Result<f64> {
            if x == 0.0 {
                return Ok(0.0);
            }
            let y = d.get(i);
            if y == 0.0 {
                Err(Error::Inconsistent { index: i, value: x })
            } else {
                Ok(x / y)
            }
        };
        let values = match &self.values {
            Values::Dense(v) => {
                let mut out = Vec::with_capacity(v.len());
                for (i, &x) in v.iter().enumerate() {
                    out.push(ratio(i, x)?);
                }
                Values::Dense(out)
            }
            Values::Sparse(p) => {
                let mut out = Vec::with_capacity(p.len());
                for &(i, x) in p {
                    let r = ratio(i, x)?;
                    if r != 0.0 {
                        out.push((i, r));
                    }
                }
                Values::Sparse(out)
            }
        };
        Ok(self.rebuild(values))
    }

    /// Zeroes every entry whose state for `finding.node` is not allowed.
    pub fn enter_finding(&self, finding: &Finding) -> Result<BeliefTable> {
        let ax = self.axis(finding.node).ok_or(Error::NotInScope(finding.node))?;
        let card = self.shape[ax];
        let stride: usize = self.shape[ax + 1..].iter().product();
        let allowed: Vec<bool> = (0..card).map(|s| finding.allows(s)).collect();
        let keep = |i: usize| allowed[(i / stride) % card];
        let values = match &self.values {
            Values::Dense(v) => {
                Values::Dense(v.iter().enumerate().map(|(i, &x)| if keep(i) { x } else { 0.0 }).collect())
            }
            Values::Sparse(p) => Values::Sparse(p.iter().copied().filter(|e| keep(e.0)).collect()),
        };
        Ok(self.rebuild(values))
    }

    /// Zeroes every entry strictly below `delta`; returns the table and the removed mass.
    pub fn annihilate_below(&self, delta: f64) -> (BeliefTable, f64) {
        let mut removed = 0.0;
        let values = match &self.values {
            Values::Dense(v) => Values::Dense(
                v.iter()
                    .map(|&x| {
                        if x < delta {
                            removed += x;
                            0.0
                        } else {
                            x
                        }
                    })
                    .collect(),
            ),
            Values::Sparse(p) => Values::Sparse(
                p.iter()
                    .copied()
                    .filter(|&(_, x)| {
                        if x < delta {
                            removed += x;
                            false
                        } else {
                            true
                        }
                    })
                    .collect(),
            ),
        };
        (self.rebuild(values), removed)
    }

    /// Divides every entry by `by`.
    pub fn scaled_down(&self, by: f64) -> BeliefTable {
        let values = match &self.values {
            Values::Dense(v) => Values::Dense(v.iter().map(|&x| x / by).collect()),
            Values::Sparse(p) => Values::Sparse(p.iter().map(|&(i, x)| (i, x / by)).filter(|e| e.1 != 0.0).collect()),
        };
        self.rebuild(values)
    }

    /// The same table with every entry zero, keeping the representation kind.
    pub fn zeroed(&self) -> BeliefTable {
        let values = match &self.values {
            Values::Dense(v) => Values::Dense(vec![0.0; v.len()]),
            Values::Sparse(_) => Values::Sparse(Vec::new()),
        };
        self.rebuild(values)
    }

    /// Sparse when at most half the entries are nonzero, dense otherwise.
    pub fn compress(&self) -> BeliefTable {
        let nnz = self.nnz();
        if 2 * nnz <= self.len() {
            self.rebuild(Values::Sparse(self.nonzeros().collect()))
        } else {
            self.decompress()
        }
    }

    pub fn decompress(&self) -> BeliefTable {
        match &self.values {
            Values::Dense(_) => self.clone(),
            Values::Sparse(_) => self.rebuild(Values::Dense(self.to_dense_values())),
        }
    }

    /// Bytes occupied by the value payload in its current representation.
    pub fn payload_bytes(&self) -> usize {
        match &self.values {
            Values::Dense(v) => v.len() * DENSE_ENTRY_BYTES,
            Values::Sparse(p) => p.len() * SPARSE_ENTRY_BYTES,
        }
    }
}
