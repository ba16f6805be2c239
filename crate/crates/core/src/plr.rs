//! Piecewise linear regression over a binary space partition.
//!
//! A [`PlrTree`] splits an axis-aligned root box at cell midpoints, cycling
//! through the axes (the root splits axis 0). Each leaf stores an affine model
//! `c . [1, x]` fitted by least squares to the oracle sampled at the cell's
//! corners and center. Leaves with too few finite samples are blocked and
//! answer `+inf`.
//!
//! Nodes live in a flat preorder arena: the left child of an internal node is
//! always the next node, so only the right child index is stored.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracles::DistanceOracle;

/// Axis-aligned cell of the partition.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub depth: usize,
}

impl Cell {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::Contract(format!(
                "cell bounds must be non-empty and equal length, got {} and {}",
                lo.len(),
                hi.len()
            )));
        }
        if lo
            .iter()
            .zip(&hi)
            .any(|(l, h)| !(l < h) || !l.is_finite() || !h.is_finite())
        {
            return Err(Error::Contract(format!(
                "cell requires finite lo < hi, got {lo:?} and {hi:?}"
            )));
        }
        Ok(Self { lo, hi, depth: 0 })
    }

    pub fn unit(dim: usize) -> Self {
        Self {
            lo: vec![0.0; dim],
            hi: vec![1.0; dim],
            depth: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn split_axis(&self) -> usize {
        self.depth % self.dim()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| 0.5 * (l + h))
            .collect()
    }

    pub fn longest_edge(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| h - l)
            .fold(0.0, f64::max)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (l, h))| *v >= *l && *v <= *h)
    }

    fn halves(&self, axis: usize, split: f64) -> (Cell, Cell) {
        let mut left = self.clone();
        let mut right = self.clone();
        left.hi[axis] = split;
        right.lo[axis] = split;
        left.depth += 1;
        right.depth += 1;
        (left, right)
    }
}

/// Affine model `[bias, c_1, ..., c_n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients(pub Vec<f64>);

impl Coefficients {
    pub fn bias(&self) -> f64 {
        self.0[0]
    }

    pub fn slopes(&self) -> &[f64] {
        &self.0[1..]
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        eval_affine(&self.0, x)
    }
}

#[inline]
fn eval_affine(c: &[f64], x: &[f64]) -> f64 {
    match (c, x) {
        (&[b, a0, a1], &[x0, x1]) => b + (a0 * x0 + a1 * x1),
        _ => c[0] + c[1..].iter().zip(x).map(|(a, b)| a * b).sum::<f64>(),
    }
}

/// What a leaf holds.
#[derive(Debug, Clone, PartialEq)]
pub enum LeafPayload {
    Fitted(Coefficients),
    Blocked,
}

impl LeafPayload {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            LeafPayload::Fitted(c) => c.eval(x),
            LeafPayload::Blocked => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleScheme {
    #[default]
    CornersPlusCenter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildParams {
    pub max_depth: usize,
    /// Split when the center error exceeds this value.
    pub threshold: f64,
    #[serde(default)]
    pub sample_scheme: SampleScheme,
}

impl BuildParams {
    pub fn new(max_depth: usize, threshold: f64) -> Self {
        Self {
            max_depth,
            threshold,
            sample_scheme: SampleScheme::CornersPlusCenter,
        }
    }

    /// Depth 9 with a threshold of 1% of the root diagonal.
    pub fn default_for(root: &Cell) -> Self {
        let diag = root
            .lo
            .iter()
            .zip(&root.hi)
            .map(|(l, h)| (h - l) * (h - l))
            .sum::<f64>()
            .sqrt();
        Self::new(9, 0.01 * diag)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Node {
    Internal { axis: u8, split: f64, right: u32 },
    Leaf { coef: u32 },
    Blocked,
}

/// Immutable PLR tree.
#[derive(Debug, Clone)]
pub struct PlrTree {
    dim: usize,
    root: Cell,
    nodes: Vec<Node>,
    coefs: Vec<f64>,
    params: Option<BuildParams>,
    lookup: Option<Lookup>,
}

const LOOKUP_MAX_CELLS: usize = 1 << 16;

/// Grid over the root at the finest leaf resolution; each grid cell holds a
/// copy of the coefficients of the leaf covering it, `[inf, 0, ...]` when
/// blocked. Only built when every
/// split is the exact midpoint of its cell, so grid lines coincide with
/// split values bit for bit.
#[derive(Debug, Clone)]
struct Lookup {
    axes: Vec<AxisGrid>,
    /// Grid lines of every axis, back to back.
    lines: Vec<f64>,
    coefs: Vec<f64>,
}

#[derive(Debug, Clone)]
struct AxisGrid {
    start: usize,
    cells: usize,
    lo: f64,
    hi: f64,
    scale: f64,
    stride: usize,
    /// `floor((v - lo) * scale)` is always the right cell: `lo` is zero,
    /// `scale` a power of two and every line sits at `k / scale`.
    exact: bool,
}

impl Lookup {
    fn build(tree: &PlrTree) -> Option<Self> {
        let n = tree.dim;
        // deepest split count per axis, checking midpoints on the way
        let mut levels = vec![0u32; n];
        let mut stack = vec![(0usize, tree.root.clone(), vec![0u32; n])];
        while let Some((i, cell, count)) = stack.pop() {
            match tree.nodes[i] {
                Node::Internal { axis, split, right } => {
                    let a = axis as usize;
                    if split.to_bits() != (0.5 * (cell.lo[a] + cell.hi[a])).to_bits() {
                        return None;
                    }
                    let mut c = count;
                    c[a] += 1;
                    let (l, r) = cell.halves(a, split);
                    stack.push((right as usize, r, c.clone()));
                    stack.push((i + 1, l, c));
                }
                _ => {
                    for (lv, c) in levels.iter_mut().zip(&count) {
                        *lv = (*lv).max(*c);
                    }
                }
            }
        }
        if levels.iter().map(|&l| l as usize).sum::<usize>()
            > LOOKUP_MAX_CELLS.trailing_zeros() as usize
        {
            return None;
        }
        let mut lines = Vec::with_capacity(n);
        for a in 0..n {
            let mut b = vec![tree.root.lo[a], tree.root.hi[a]];
            for _ in 0..levels[a] {
                let mut next = Vec::with_capacity(2 * b.len() - 1);
                for w in b.windows(2) {
                    next.push(w[0]);
                    next.push(0.5 * (w[0] + w[1]));
                }
                next.push(*b.last().unwrap());
                b = next;
            }
            lines.push(b);
        }
        let mut stride = vec![1usize; n];
        for a in 1..n {
            stride[a] = stride[a - 1] * (lines[a - 1].len() - 1);
        }
        let total = stride[n - 1] * (lines[n - 1].len() - 1);
        let width = n + 1;
        let mut blocked = vec![0.0; width];
        blocked[0] = f64::INFINITY;
        let mut coefs = vec![0.0; total * width];
        let full: Vec<(usize, usize)> = lines.iter().map(|b| (0, b.len() - 1)).collect();
        let mut stack = vec![(0usize, full)];
        while let Some((i, range)) = stack.pop() {
            let value = match tree.nodes[i] {
                Node::Internal { axis, right, .. } => {
                    let a = axis as usize;
                    let mid = (range[a].0 + range[a].1) / 2;
                    let (mut l, mut r) = (range.clone(), range);
                    l[a].1 = mid;
                    r[a].0 = mid;
                    stack.push((right as usize, r));
                    stack.push((i + 1, l));
                    continue;
                }
                Node::Leaf { coef } => &tree.coefs[coef as usize..coef as usize + width],
                Node::Blocked => &blocked[..],
            };
            // fill the box of grid cells covered by this leaf
            let mut k: Vec<usize> = range.iter().map(|r| r.0).collect();
            'fill: loop {
                let at = width * k.iter().zip(&stride).map(|(k, s)| k * s).sum::<usize>();
                coefs[at..at + width].copy_from_slice(value);
                for a in 0..n {
                    k[a] += 1;
                    if k[a] < range[a].1 {
                        continue 'fill;
                    }
                    k[a] = range[a].0;
                }
                break;
            }
        }
        let mut axes = Vec::with_capacity(n);
        let mut flat = Vec::new();
        for (b, stride) in lines.iter().zip(stride) {
            let cells = b.len() - 1;
            let (lo, hi) = (b[0], b[cells]);
            let scale = cells as f64 / (hi - lo);
            let exact = lo == 0.0
                && scale.is_finite()
                && scale.to_bits() & ((1 << 52) - 1) == 0
                && b.iter().enumerate().all(|(k, &l)| l * scale == k as f64);
            axes.push(AxisGrid {
                start: flat.len(),
                cells,
                lo,
                hi,
                scale,
                stride,
                exact,
            });
            flat.extend_from_slice(b);
        }
        Some(Self {
            axes,
            lines: flat,
            coefs,
        })
    }

    /// Estimate at `x`, or `None` outside the root.
    #[inline]
    fn value(&self, x: &[f64]) -> Option<f64> {
        let idx = match (&self.axes[..], x) {
            ([ga, gb], &[a, b]) => self.cell(ga, a)? + self.cell(gb, b)?,
            _ => {
                let mut idx = 0;
                for (g, &v) in self.axes.iter().zip(x) {
                    idx += self.cell(g, v)?;
                }
                idx
            }
        };
        let w = x.len() + 1;
        Some(eval_affine(&self.coefs[idx * w..idx * w + w], x))
    }

    /// Strided grid offset of `v` along one axis.
    #[inline(always)]
    fn cell(&self, g: &AxisGrid, v: f64) -> Option<usize> {
        if !(v >= g.lo && v <= g.hi) {
            return None;
        }
        let mut k = (((v - g.lo) * g.scale) as usize).min(g.cells - 1);
        if !g.exact {
            // the float estimate can be one cell off next to a grid line
            let b = &self.lines[g.start..=g.start + g.cells];
            k -= (v < b[k]) as usize;
            k += (v >= b[k + 1] && k + 1 < g.cells) as usize;
        }
        Some(k * g.stride)
    }
}

impl PartialEq for PlrTree {
    /// Structural equality with bit-identical coefficients and splits.
    fn eq(&self, other: &Self) -> bool {
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        self.dim == other.dim
            && bits(&self.root.lo) == bits(&other.root.lo)
            && bits(&self.root.hi) == bits(&other.root.hi)
            && self.nodes.len() == other.nodes.len()
            && self
                .nodes
                .iter()
                .zip(&other.nodes)
                .all(|(a, b)| match (a, b) {
                    (
                        Node::Internal {
                            axis: aa,
                            split: sa,
                            right: ra,
                        },
                        Node::Internal {
                            axis: ab,
                            split: sb,
                            right: rb,
                        },
                    ) => aa == ab && sa.to_bits() == sb.to_bits() && ra == rb,
                    (Node::Leaf { coef: ca }, Node::Leaf { coef: cb }) => ca == cb,
                    (Node::Blocked, Node::Blocked) => true,
                    _ => false,
                })
            && bits(&self.coefs) == bits(&other.coefs)
    }
}

/// Result of point location.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafRef<'a> {
    pub node: usize,
    pub cell: Cell,
    pub coefficients: Option<&'a [f64]>,
}

impl LeafRef<'_> {
    pub fn is_blocked(&self) -> bool {
        self.coefficients.is_none()
    }
}

/// Least-squares affine fit `min sum (c . [1 x_i] - b_i)^2`; the minimum-norm
/// solution when the design is rank deficient.
pub fn compute_coefficients(samples: &[(Vec<f64>, f64)]) -> Result<Coefficients> {
    let Some((first, _)) = samples.first() else {
        return Err(Error::Contract("cannot fit an empty sample set".into()));
    };
    let n = first.len();
    if samples.iter().any(|(x, v)| x.len() != n || !v.is_finite()) {
        return Err(Error::Contract(
            "samples must share a dimension and have finite values".into(),
        ));
    }
    let m = samples.len();
    let a = DMatrix::from_fn(
        m,
        n + 1,
        |r, c| if c == 0 { 1.0 } else { samples[r].0[c - 1] },
    );
    let b = DVector::from_iterator(m, samples.iter().map(|(_, v)| *v));
    let svd = a.svd(true, true);
    let tol = f64::EPSILON * (m.max(n + 1) as f64) * svd.singular_values.max();
    let c = svd
        .solve(&b, tol)
        .map_err(|e| Error::Contract(format!("least-squares solve failed: {e}")))?;
    Ok(Coefficients(c.iter().copied().collect()))
}

/// The `2^n` corners in bit order (bit `i` picks `hi` on axis `i`), then the center.
pub fn base_points(cell: &Cell) -> Vec<Vec<f64>> {
    let n = cell.dim();
    let mut pts: Vec<Vec<f64>> = (0..1usize << n)
        .map(|mask| {
            (0..n)
                .map(|i| {
                    if mask >> i & 1 == 1 {
                        cell.hi[i]
                    } else {
                        cell.lo[i]
                    }
                })
                .collect()
        })
        .collect();
    pts.push(cell.center());
    pts
}

struct CellFit {
    payload: LeafPayload,
    center_value: f64,
    /// Some base point was infinite.
    partial: bool,
}

fn fit_sampled<O: DistanceOracle + ?Sized>(cell: &Cell, oracle: &O) -> CellFit {
    let points = base_points(cell);
    let values: Vec<f64> = points.iter().map(|p| oracle.evaluate(p)).collect();
    let center_value = *values.last().unwrap();
    let partial = values.iter().any(|v| !v.is_finite());
    let finite: Vec<(Vec<f64>, f64)> = points
        .into_iter()
        .zip(values)
        .filter(|(_, v)| v.is_finite())
        .collect();
    let payload = if finite.len() > cell.dim() {
        match compute_coefficients(&finite) {
            Ok(c) if c.0.iter().all(|v| v.is_finite()) => LeafPayload::Fitted(c),
            _ => LeafPayload::Blocked,
        }
    } else {
        LeafPayload::Blocked
    };
    CellFit {
        payload,
        center_value,
        partial,
    }
}

/// Fits the cell's affine model from the oracle at its base points,
/// discarding infinite samples.
pub fn fit_cell<O: DistanceOracle + ?Sized>(cell: &Cell, oracle: &O) -> LeafPayload {
    fit_sampled(cell, oracle).payload
}

fn split_decision(cell: &Cell, payload: &LeafPayload, fit: &CellFit, params: &BuildParams) -> bool {
    if cell.depth >= params.max_depth {
        return false;
    }
    match payload {
        LeafPayload::Blocked => true,
        LeafPayload::Fitted(c) => {
            // a fit that dropped samples straddles an obstacle; with only
            // n+1 survivors it interpolates the center and the residual
            // test below says nothing
            if fit.partial {
                return true;
            }
            let center_value = fit.center_value;
            (c.eval(&cell.center()) - center_value).abs() > params.threshold
        }
    }
}

pub fn should_split<O: DistanceOracle + ?Sized>(
    cell: &Cell,
    payload: &LeafPayload,
    oracle: &O,
    params: &BuildParams,
) -> bool {
    if cell.depth >= params.max_depth {
        return false;
    }
    let fit = fit_sampled(cell, oracle);
    split_decision(cell, payload, &fit, params)
}

/// Halves a cell at the midpoint of its split axis.
pub fn split_cell(cell: &Cell) -> (Cell, Cell) {
    let axis = cell.split_axis();
    cell.halves(axis, 0.5 * (cell.lo[axis] + cell.hi[axis]))
}

enum Built {
    Pending,
    Leaf(LeafPayload),
    Split(usize, usize, f64),
}

/// Worklist construction: pop a cell, fit it, split and enqueue the halves
/// while the split test passes.
pub fn build_plr<O: DistanceOracle + ?Sized>(
    oracle: &O,
    root: &Cell,
    params: &BuildParams,
) -> Result<PlrTree> {
    if oracle.dim() != root.dim() {
        return Err(Error::Contract(format!(
            "oracle dimension {} does not match root cell dimension {}",
            oracle.dim(),
            root.dim()
        )));
    }
    if root.dim() > u8::MAX as usize {
        return Err(Error::Contract(
            "dimension exceeds the format's axis field".into(),
        ));
    }
    let mut root = root.clone();
    root.depth = 0;
    let mut cells = vec![root.clone()];
    let mut built = vec![Built::Pending];
    let mut queue = VecDeque::from([0usize]);
    while let Some(id) = queue.pop_front() {
        let cell = cells[id].clone();
        let fit = fit_sampled(&cell, oracle);
        if split_decision(&cell, &fit.payload, &fit, params) {
            let axis = cell.split_axis();
            let (l, r) = split_cell(&cell);
            let split = l.hi[axis];
            let (li, ri) = (cells.len(), cells.len() + 1);
            cells.push(l);
            cells.push(r);
            built.push(Built::Pending);
            built.push(Built::Pending);
            built[id] = Built::Split(li, ri, split);
            queue.push_back(li);
            queue.push_back(ri);
        } else {
            built[id] = Built::Leaf(fit.payload);
        }
    }

    // lay the nodes out in preorder
    let mut tree = PlrTree {
        dim: root.dim(),
        root,
        nodes: Vec::new(),
        coefs: Vec::new(),
        params: Some(params.clone()),
        lookup: None,
    };
    let mut stack = vec![(0usize, None::<usize>)];
    while let Some((id, parent)) = stack.pop() {
        let here = tree.nodes.len();
        if let Some(p) = parent {
            if let Node::Internal { right, .. } = &mut tree.nodes[p] {
                *right = here as u32;
            }
        }
        match std::mem::replace(&mut built[id], Built::Pending) {
            Built::Split(l, r, split) => {
                let axis = cells[id].split_axis() as u8;
                tree.nodes.push(Node::Internal {
                    axis,
                    split,
                    right: 0,
                });
                stack.push((r, Some(here)));
                stack.push((l, None));
            }
            Built::Leaf(LeafPayload::Fitted(c)) => {
                tree.nodes.push(Node::Leaf {
                    coef: tree.coefs.len() as u32,
                });
                tree.coefs.extend_from_slice(&c.0);
            }
            Built::Leaf(LeafPayload::Blocked) => tree.nodes.push(Node::Blocked),
            Built::Pending => unreachable!("every queued cell is resolved"),
        }
    }
    Ok(tree.indexed())
}

impl PlrTree {
    fn indexed(mut self) -> Self {
        self.lookup = Lookup::build(&self);
        self
    }

    /// A one-leaf tree over `root` holding a fixed payload.
    pub fn single_leaf(root: &Cell, payload: LeafPayload) -> Result<Self> {
        let dim = root.dim();
        let mut root = root.clone();
        root.depth = 0;
        let (nodes, coefs) = match payload {
            LeafPayload::Fitted(c) => {
                if c.0.len() != dim + 1 || c.0.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Contract(format!(
                        "expected {} finite coefficients",
                        dim + 1
                    )));
                }
                (vec![Node::Leaf { coef: 0 }], c.0)
            }
            LeafPayload::Blocked => (vec![Node::Blocked], Vec::new()),
        };
        Ok(Self {
            dim,
            root,
            nodes,
            coefs,
            params: Some(BuildParams::new(0, 0.0)),
            lookup: None,
        }
        .indexed())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn root_cell(&self) -> &Cell {
        &self.root
    }

    /// Parameters the tree was built with; `None` after deserialization.
    pub fn build_params(&self) -> Option<&BuildParams> {
        self.params.as_ref()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| !matches!(n, Node::Internal { .. }))
            .count()
    }

    pub fn blocked_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Blocked))
            .count()
    }

    fn check_domain(&self, x: &[f64]) -> Result<()> {
        if self.root.contains(x) {
            Ok(())
        } else {
            Err(Error::OutOfBounds {
                point: x.to_vec(),
                lo: self.root.lo.clone(),
                hi: self.root.hi.clone(),
            })
        }
    }

    /// Descends to the leaf containing `x`; `x[axis] >= split` goes right.
    pub fn locate(&self, x: &[f64]) -> Result<LeafRef<'_>> {
        self.check_domain(x)?;
        let mut cell = self.root.clone();
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Internal { axis, split, right } => {
                    let axis = axis as usize;
                    let (l, r) = cell.halves(axis, split);
                    if x[axis] >= split {
                        cell = r;
                        i = right as usize;
                    } else {
                        cell = l;
                        i += 1;
                    }
                }
                Node::Leaf { coef } => {
                    let c = &self.coefs[coef as usize..coef as usize + self.dim + 1];
                    return Ok(LeafRef {
                        node: i,
                        cell,
                        coefficients: Some(c),
                    });
                }
                Node::Blocked => {
                    return Ok(LeafRef {
                        node: i,
                        cell,
                        coefficients: None,
                    })
                }
            }
        }
    }

    /// `c . [1, x]` for the leaf containing `x`, `+inf` on a blocked leaf.
    /// Values are not clamped.
    #[inline]
    pub fn query(&self, x: &[f64]) -> Result<f64> {
        if let (Some(lookup), true) = (&self.lookup, x.len() == self.dim) {
            if let Some(v) = lookup.value(x) {
                return Ok(v);
            }
        }
        self.check_domain(x)?;
        Ok(self.query_by_descent(x))
    }

    /// Point location and dot product without the domain check.
    #[inline]
    pub fn query_unchecked(&self, x: &[f64]) -> f64 {
        match self.lookup.as_ref().and_then(|l| l.value(x)) {
            Some(v) => v,
            None => self.query_by_descent(x),
        }
    }

    /// Point location by walking the tree from the root.
    pub fn query_by_descent(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Internal { axis, split, right } => {
                    i = if x[axis as usize] >= split {
                        right as usize
                    } else {
                        i + 1
                    };
                }
                Node::Leaf { coef } => {
                    let c = coef as usize;
                    return eval_affine(&self.coefs[c..c + self.dim + 1], x);
                }
                Node::Blocked => return f64::INFINITY,
            }
        }
    }

    /// Every leaf with its cell, in preorder.
    pub fn leaves(&self) -> Vec<(Cell, LeafPayload)> {
        let mut out = Vec::with_capacity(self.leaf_count());
        let mut stack = vec![(0usize, self.root.clone())];
        while let Some((i, cell)) = stack.pop() {
            match self.nodes[i] {
                Node::Internal { axis, split, right } => {
                    let (l, r) = cell.halves(axis as usize, split);
                    stack.push((right as usize, r));
                    stack.push((i + 1, l));
                }
                Node::Leaf { coef } => {
                    let c = coef as usize;
                    out.push((
                        cell,
                        LeafPayload::Fitted(Coefficients(self.coefs[c..c + self.dim + 1].to_vec())),
                    ));
                }
                Node::Blocked => out.push((cell, LeafPayload::Blocked)),
            }
        }
        out
    }

    /// Leaf count per depth, index = depth.
    pub fn depth_histogram(&self) -> Vec<usize> {
        let mut hist = Vec::new();
        for (cell, _) in self.leaves() {
            if hist.len() <= cell.depth {
                hist.resize(cell.depth + 1, 0);
            }
            hist[cell.depth] += 1;
        }
        hist
    }

    /// Encodes the tree in the PLR1 little-endian format.
    pub fn serialize(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        for v in self.root.lo.iter().chain(&self.root.hi) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&(self.nodes.len() as u32).to_le_bytes());
        for node in &self.nodes {
            match *node {
                Node::Internal { axis, split, .. } => {
                    out.push(TAG_INTERNAL);
                    out.push(axis);
                    out.extend_from_slice(&split.to_le_bytes());
                }
                Node::Leaf { coef } => {
                    out.push(TAG_LEAF);
                    for v in &self.coefs[coef as usize..coef as usize + self.dim + 1] {
                        out.extend_from_slice(&v.to_le_bytes());
                    }
                }
                Node::Blocked => out.push(TAG_BLOCKED),
            }
        }
        out
    }

    /// Size of [`PlrTree::serialize`] computed from the node counts.
    pub fn encoded_len(&self) -> usize {
        let header = 4 + 1 + 4 + 16 * self.dim + 4;
        header
            + self
                .nodes
                .iter()
                .map(|n| match n {
                    Node::Internal { .. } => 10,
                    Node::Leaf { .. } => 1 + 8 * (self.dim + 1),
                    Node::Blocked => 1,
                })
                .sum::<usize>()
    }

    pub fn deserialize(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Format {
                offset: 0,
                message: "bad magic, expected \"PLR1\"".into(),
            });
        }
        let version = r.u8()?;
        if version != VERSION {
            return Err(Error::Format {
                offset: 4,
                message: format!("unsupported version {version}"),
            });
        }
        let dim_at = r.pos;
        let dim = r.u32()? as usize;
        if dim == 0 || dim > u8::MAX as usize {
            return Err(r.error_at(dim_at, format!("invalid dimension {dim}")));
        }
        let bounds_at = r.pos;
        let mut lo = Vec::with_capacity(dim);
        let mut hi = Vec::with_capacity(dim);
        for _ in 0..dim {
            lo.push(r.f64()?);
        }
        for _ in 0..dim {
            hi.push(r.f64()?);
        }
        let root = Cell::new(lo, hi).map_err(|e| r.error_at(bounds_at, e.to_string()))?;
        let count_at = r.pos;
        let count = r.u32()? as usize;
        if count == 0 {
            return Err(r.error_at(count_at, "node count is zero".into()));
        }

        let mut nodes = Vec::with_capacity(count.min(1 << 20));
        let mut coefs = Vec::new();
        let mut pending: Vec<(usize, Cell)> = Vec::new();
        let mut cell = root.clone();
        loop {
            if nodes.len() == count {
                return Err(r.error_at(
                    r.pos,
                    format!("tree continues past the declared {count} nodes"),
                ));
            }
            let at = r.pos;
            match r.u8()? {
                TAG_INTERNAL => {
                    let axis = r.u8()?;
                    let split = r.f64()?;
                    if axis as usize != cell.split_axis() {
                        return Err(r.error_at(
                            at,
                            format!(
                                "axis {axis} at depth {} in a {dim}-dimensional tree",
                                cell.depth
                            ),
                        ));
                    }
                    let a = axis as usize;
                    if !(split > cell.lo[a] && split < cell.hi[a]) {
                        return Err(
                            r.error_at(at, format!("split {split} outside its cell on axis {a}"))
                        );
                    }
                    let (l, rc) = cell.halves(a, split);
                    pending.push((nodes.len(), rc));
                    nodes.push(Node::Internal {
                        axis,
                        split,
                        right: 0,
                    });
                    cell = l;
                    continue;
                }
                TAG_LEAF => {
                    nodes.push(Node::Leaf {
                        coef: coefs.len() as u32,
                    });
                    for _ in 0..=dim {
                        let v = r.f64()?;
                        if !v.is_finite() {
                            return Err(r.error_at(at, "non-finite coefficient".into()));
                        }
                        coefs.push(v);
                    }
                }
                TAG_BLOCKED => nodes.push(Node::Blocked),
                tag => return Err(r.error_at(at, format!("unknown node tag {tag}"))),
            }
            match pending.pop() {
                Some((parent, right_cell)) => {
                    let next = nodes.len() as u32;
                    if let Node::Internal { right, .. } = &mut nodes[parent] {
                        *right = next;
                    }
                    cell = right_cell;
                }
                None => break,
            }
        }
        if nodes.len() != count {
            return Err(r.error_at(
                r.pos,
                format!("declared {count} nodes but the tree has {}", nodes.len()),
            ));
        }
        if r.pos != bytes.len() {
            return Err(r.error_at(r.pos, format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Ok(PlrTree {
            dim,
            root,
            nodes,
            coefs,
            params: None,
            lookup: None,
        }
        .indexed())
    }

    /// Like [`PlrTree::deserialize`] but rejects trees of another dimension.
    pub fn deserialize_expecting(bytes: &[u8], dim: usize) -> Result<Self> {
        let tree = Self::deserialize(bytes)?;
        if tree.dim != dim {
            return Err(Error::Format {
                offset: 5,
                message: format!("expected dimension {dim}, found {}", tree.dim),
            });
        }
        Ok(tree)
    }
}

const MAGIC: &[u8; 4] = b"PLR1";
const VERSION: u8 = 1;
const TAG_INTERNAL: u8 = 0;
const TAG_LEAF: u8 = 1;
const TAG_BLOCKED: u8 = 2;

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn error_at(&self, offset: usize, message: String) -> Error {
        Error::Format { offset, message }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(self.error_at(
                self.pos,
                format!(
                    "truncated: need {n} bytes, {} left",
                    self.bytes.len() - self.pos
                ),
            ));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
