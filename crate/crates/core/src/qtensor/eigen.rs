use nalgebra::{DVector, SymmetricEigen};

use super::operator::{CMatrix, HermitianOperator, C64};

/// Eigenvalues in ascending order with the matching orthonormal eigenvectors
/// stored as columns.
#[derive(Debug, Clone)]
pub struct Eigensystem {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: CMatrix,
}

impl Eigensystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `V diag(f(λ)) V^H`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let mut scaled = self.eigenvectors.clone();
        for (j, &l) in self.eigenvalues.iter().enumerate() {
            let s = f(l);
            scaled.column_mut(j).scale_mut(s);
        }
        scaled * self.eigenvectors.adjoint()
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.map_spectrum(|l| l)
    }

    /// Indices whose eigenvalue exceeds `threshold`.
    pub fn support(&self, threshold: f64) -> Vec<usize> {
        (0..self.dim())
            .filter(|&k| self.eigenvalues[k] > threshold)
            .collect()
    }
}

/// Hermitian eigendecomposition. Input must already be Hermitian.
pub fn eigh(a: &HermitianOperator) -> Eigensystem {
    eigh_matrix(a.matrix())
}

/// Index sets of the connected components of the nonzero pattern of `a`.
fn components(a: &CMatrix) -> Vec<Vec<usize>> {
    let n = a.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for j in 0..n {
        for i in (j + 1)..n {
            if a[(i, j)] != C64::new(0.0, 0.0) || a[(j, i)] != C64::new(0.0, 0.0) {
                let (ri, rj) = (root(&mut parent, i), root(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let r = root(&mut parent, i);
        groups[r].push(i);
    }
    groups.retain(|g| !g.is_empty());
    groups
}

fn finite(se: &SymmetricEigen<C64, nalgebra::Dyn>) -> bool {
    se.eigenvalues.iter().all(|x| x.is_finite())
        && se.eigenvectors.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Dense solve of one block. The QR iteration can return non-finite values
/// on some structured inputs; a diagonal shift changes the arithmetic
/// without changing the eigenvectors, so it is tried once before giving up.
fn solve_block(b: CMatrix) -> (Vec<f64>, CMatrix) {
    let se = SymmetricEigen::new(b.clone());
    if finite(&se) {
        return (se.eigenvalues.iter().copied().collect(), se.eigenvectors);
    }
    let n = b.nrows();
    let shift = 1.0 + b.iter().fold(0.0f64, |m, z| m.max(z.norm())) * n as f64;
    let se = SymmetricEigen::new(b + CMatrix::identity(n, n) * C64::new(shift, 0.0));
    (
        se.eigenvalues.iter().map(|l| l - shift).collect(),
        se.eigenvectors,
    )
}

/// Block-diagonal structure in the nonzero pattern is solved block by block;
/// multipartite states in small subspaces are mostly zero rows.
pub(crate) fn eigh_matrix(a: &CMatrix) -> Eigensystem {
    let n = a.nrows();
    let mut values = Vec::with_capacity(n);
    let mut vectors = CMatrix::zeros(n, n);
    let mut col = 0;
    for idx in components(a) {
        let k = idx.len();
        if k == 1 {
            values.push(a[(idx[0], idx[0])].re);
            vectors[(idx[0], col)] = C64::new(1.0, 0.0);
            col += 1;
            continue;
        }
        let block = CMatrix::from_fn(k, k, |i, j| a[(idx[i], idx[j])]);
        let (vals, vecs) = solve_block(block);
        for (j, v) in vals.into_iter().enumerate() {
            values.push(v);
            for (i, &row) in idx.iter().enumerate() {
                vectors[(row, col)] = vecs[(i, j)];
            }
            col += 1;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| values[i]));
    let mut eigenvectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &vectors.column(src));
    }
    Eigensystem {
        eigenvalues,
        eigenvectors,
    }
}
