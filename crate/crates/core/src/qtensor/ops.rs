use super::layout::PartitionLayout;
use super::operator::{re, CMatrix, CVector, DensityMatrix, HermitianOperator, C64};
use crate::error::{invalid, Error, Result};

/// Kronecker product of the operators in list order.
pub fn tensor_product(ops: &[HermitianOperator]) -> Result<HermitianOperator> {
    let (first, rest) = ops.split_first().ok_or(Error::Empty("operator list"))?;
    let mut acc = first.clone();
    for op in rest {
        acc = acc.kron(op);
    }
    Ok(acc)
}

/// Index arithmetic for a list of sites inside the global tensor space.
#[derive(Debug, Clone)]
pub(crate) struct SiteMap {
    d: usize,
    strides: Vec<usize>,
    /// Global offset contributed by each local sub-index.
    offsets: Vec<usize>,
}

impl SiteMap {
    pub(crate) fn new(sites: &[usize], layout: &PartitionLayout) -> Result<Self> {
        let total = layout.sites();
        let mut seen = vec![false; total];
        for &s in sites {
            if s >= total {
                return Err(Error::SiteOutOfRange {
                    site: s,
                    sites: total,
                });
            }
            if seen[s] {
                return Err(Error::SiteCollision(s));
            }
            seen[s] = true;
        }
        let d = layout.local_dim();
        let strides: Vec<usize> = sites.iter().map(|&s| layout.stride(s)).collect();
        let sub_dim = d.pow(sites.len() as u32);
        let offsets = (0..sub_dim)
            .map(|j| {
                let mut rem = j;
                let mut off = 0;
                for t in (0..strides.len()).rev() {
                    off += (rem % d) * strides[t];
                    rem /= d;
                }
                off
            })
            .collect();
        Ok(Self {
            d,
            strides,
            offsets,
        })
    }

    pub(crate) fn sub_dim(&self) -> usize {
        self.offsets.len()
    }

    /// Local sub-index of global index `a`.
    #[inline]
    pub(crate) fn sub_index(&self, a: usize) -> usize {
        let mut j = 0;
        for &s in &self.strides {
            j = j * self.d + (a / s) % self.d;
        }
        j
    }

    #[inline]
    pub(crate) fn offset(&self, j: usize) -> usize {
        self.offsets[j]
    }
}

/// `op` acting on `sites` (in the listed order) and identity elsewhere.
pub fn embed_on_sites(
    op: &HermitianOperator,
    sites: &[usize],
    layout: &PartitionLayout,
) -> Result<HermitianOperator> {
    let map = SiteMap::new(sites, layout)?;
    if op.dim() != map.sub_dim() {
        return Err(Error::DimensionMismatch {
            expected: map.sub_dim(),
            got: op.dim(),
        });
    }
    layout.ensure_within_cap()?;
    let dim = layout.global_dim();
    let m = op.matrix();
    let mut out = CMatrix::zeros(dim, dim);
    for a in 0..dim {
        let i = map.sub_index(a);
        let base = a - map.offset(i);
        for j in 0..map.sub_dim() {
            let v = m[(j, i)];
            if v != C64::new(0.0, 0.0) {
                out[(base + map.offset(j), a)] += v;
            }
        }
    }
    Ok(HermitianOperator::from_matrix_unchecked(out))
}

/// Matrix-free action of a site-local operator on a state vector.
pub(crate) fn apply_on_sites_into(op: &CMatrix, map: &SiteMap, v: &[C64], out: &mut [C64]) {
    let sub = map.sub_dim();
    for (a, &va) in v.iter().enumerate() {
        if va == C64::new(0.0, 0.0) {
            continue;
        }
        let i = map.sub_index(a);
        let base = a - map.offset(i);
        for j in 0..sub {
            out[base + map.offset(j)] += op[(j, i)] * va;
        }
    }
}

/// Reduced state on `keep`, ordered as listed.
pub fn partial_trace(
    rho: &DensityMatrix,
    keep: &[usize],
    layout: &PartitionLayout,
) -> Result<DensityMatrix> {
    if keep.is_empty() {
        return Err(Error::Empty("keep set"));
    }
    if rho.dim() != layout.global_dim() {
        return Err(Error::DimensionMismatch {
            expected: layout.global_dim(),
            got: rho.dim(),
        });
    }
    let kept = SiteMap::new(keep, layout)?;
    let rest: Vec<usize> = (0..layout.sites()).filter(|s| !keep.contains(s)).collect();
    let traced = SiteMap::new(&rest, layout)?;
    let k = kept.sub_dim();
    let m = rho.matrix();
    let mut out = CMatrix::zeros(k, k);
    for r in 0..traced.sub_dim() {
        let base = traced.offset(r);
        for i in 0..k {
            let a = base + kept.offset(i);
            for j in 0..k {
                out[(i, j)] += m[(a, base + kept.offset(j))];
            }
        }
    }
    Ok(DensityMatrix::from_matrix_unchecked(out))
}

/// Re-indexes every site from `layout.local_dim()` levels to `new_dim`
/// levels; the extra levels carry zero amplitude.
pub fn embed_local_dim(
    rho: &DensityMatrix,
    layout: &PartitionLayout,
    new_dim: usize,
) -> Result<DensityMatrix> {
    let index = local_dim_index_map(rho.dim(), layout, new_dim)?;
    let big = new_layout_dim(layout, new_dim)?;
    let m = rho.matrix();
    let mut out = CMatrix::zeros(big, big);
    for (i, &bi) in index.iter().enumerate() {
        for (j, &bj) in index.iter().enumerate() {
            out[(bi, bj)] = m[(i, j)];
        }
    }
    Ok(DensityMatrix::from_matrix_unchecked(out))
}

/// Vector version of [`embed_local_dim`].
pub fn embed_local_dim_vector(
    psi: &CVector,
    layout: &PartitionLayout,
    new_dim: usize,
) -> Result<CVector> {
    let index = local_dim_index_map(psi.len(), layout, new_dim)?;
    let mut out = CVector::from_element(new_layout_dim(layout, new_dim)?, re(0.0));
    for (i, &bi) in index.iter().enumerate() {
        out[bi] = psi[i];
    }
    Ok(out)
}

fn new_layout_dim(layout: &PartitionLayout, new_dim: usize) -> Result<usize> {
    let l = layout.with_local_dim(new_dim)?;
    l.ensure_within_cap()?;
    Ok(l.global_dim())
}

fn local_dim_index_map(dim: usize, layout: &PartitionLayout, new_dim: usize) -> Result<Vec<usize>> {
    let d = layout.local_dim();
    if new_dim <= d {
        return Err(invalid(
            "new_dim",
            format!("{new_dim} must exceed the current local dimension {d}"),
        ));
    }
    if dim != layout.global_dim() {
        return Err(Error::DimensionMismatch {
            expected: layout.global_dim(),
            got: dim,
        });
    }
    let sites = layout.sites();
    Ok((0..dim)
        .map(|i| {
            let mut rem = i;
            let mut out = 0;
            let mut scale = 1;
            for _ in 0..sites {
                out += (rem % d) * scale;
                rem /= d;
                scale *= new_dim;
            }
            out
        })
        .collect())
}
