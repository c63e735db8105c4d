//! Finite evaluation lattices in the unit cube.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::copula::check_unit;
use crate::error::{Error, Result};

/// A finite set of points in `[0,1]^d`.
///
/// Tensor grids keep their axes, which enables the fast cumulative-count
/// evaluation paths. Margin augmentation makes every point of the form
/// `(1,..,1,u_j,1,..,1)` needed by the `K*` correction available; on a
/// tensor grid this amounts to having 0 and 1 on every axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    points: Vec<f64>,
    axes: Option<Vec<Vec<f64>>>,
    margin_augmented: bool,
    margin_index: BTreeMap<(usize, u64), usize>,
}

fn normalize_axis(mut axis: Vec<f64>, with_ends: bool) -> Result<Vec<f64>> {
    check_unit(&axis)?;
    if with_ends {
        axis.push(0.0);
        axis.push(1.0);
    }
    axis.sort_by(f64::total_cmp);
    axis.dedup();
    if axis.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(axis)
}

impl Grid {
    /// `per_axis` equispaced points `k/(per_axis-1)` on every axis,
    /// including 0 and 1.
    pub fn uniform(dim: usize, per_axis: usize) -> Result<Self> {
        if per_axis < 2 {
            return Err(Error::Numerical(alloc::format!(
                "grid needs at least 2 points per axis, got {per_axis}"
            )));
        }
        let axis: Vec<f64> = (0..per_axis)
            .map(|k| k as f64 / (per_axis - 1) as f64)
            .collect();
        Self::tensor(alloc::vec![axis; dim], true)
    }

    /// Tensor product of the given axes (sorted and deduplicated).
    pub fn tensor(axes: Vec<Vec<f64>>, include_margin_points: bool) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::EmptyInput);
        }
        let axes = axes
            .into_iter()
            .map(|a| normalize_axis(a, include_margin_points))
            .collect::<Result<Vec<_>>>()?;
        let dim = axes.len();
        let count: usize = axes.iter().map(Vec::len).product();
        let mut points = Vec::with_capacity(count * dim);
        let mut idx = alloc::vec![0usize; dim];
        for _ in 0..count {
            for j in 0..dim {
                points.push(axes[j][idx[j]]);
            }
            for j in (0..dim).rev() {
                idx[j] += 1;
                if idx[j] < axes[j].len() {
                    break;
                }
                idx[j] = 0;
            }
        }
        Ok(Self::assemble(
            dim,
            points,
            Some(axes),
            include_margin_points,
        ))
    }

    /// An arbitrary point list; with `include_margin_points` every margin
    /// point `(1,..,u_j,..,1)` of every listed point is appended, plus the
    /// all-ones corner (the margin point of the margin points).
    pub fn from_points(dim: usize, pts: &[Vec<f64>], include_margin_points: bool) -> Result<Self> {
        if pts.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut points = Vec::with_capacity(pts.len() * dim);
        let mut seen: BTreeMap<Vec<u64>, ()> = BTreeMap::new();
        let mut push = |p: &[f64], points: &mut Vec<f64>| {
            let key: Vec<u64> = p.iter().map(|x| x.to_bits()).collect();
            if seen.insert(key, ()).is_none() {
                points.extend_from_slice(p);
            }
        };
        for p in pts {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            check_unit(p)?;
            push(p, &mut points);
        }
        if include_margin_points {
            for p in pts {
                for j in 0..dim {
                    let mut m = alloc::vec![1.0; dim];
                    m[j] = p[j];
                    push(&m, &mut points);
                }
            }
            push(&alloc::vec![1.0; dim], &mut points);
        }
        Ok(Self::assemble(dim, points, None, include_margin_points))
    }

    fn assemble(
        dim: usize,
        points: Vec<f64>,
        axes: Option<Vec<Vec<f64>>>,
        margin_augmented: bool,
    ) -> Self {
        let mut margin_index = BTreeMap::new();
        for (k, p) in points.chunks_exact(dim).enumerate() {
            let off: Vec<usize> = (0..dim).filter(|&j| p[j] != 1.0).collect();
            match off.as_slice() {
                [] => {
                    for j in 0..dim {
                        margin_index.entry((j, 1.0f64.to_bits())).or_insert(k);
                    }
                }
                [j] => {
                    margin_index.entry((*j, p[*j].to_bits())).or_insert(k);
                }
                _ => {}
            }
        }
        Self {
            dim,
            points,
            axes,
            margin_augmented,
            margin_index,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.points[k * self.dim..(k + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.points.chunks_exact(self.dim)
    }

    pub fn axes(&self) -> Option<&[Vec<f64>]> {
        self.axes.as_deref()
    }

    pub fn is_margin_augmented(&self) -> bool {
        self.margin_augmented
    }

    /// Index of the point `(1,..,1,value,1,..,1)` with `value` on `axis`.
    pub fn margin_point(&self, axis: usize, value: f64) -> Option<usize> {
        self.margin_index.get(&(axis, value.to_bits())).copied()
    }

    /// Tensor sub-grid of points whose coordinates all lie in
    /// `[margin, 1 - margin]`. `None` if this is not a tensor grid or no
    /// point survives.
    pub fn trimmed(&self, margin: f64) -> Option<Grid> {
        let axes = self.axes.as_ref()?;
        let kept: Vec<Vec<f64>> = axes
            .iter()
            .map(|a| {
                a.iter()
                    .copied()
                    .filter(|&x| x >= margin && x <= 1.0 - margin)
                    .collect::<Vec<_>>()
            })
            .collect();
        if kept.iter().any(Vec::is_empty) {
            return None;
        }
        Grid::tensor(kept, false).ok()
    }
}
