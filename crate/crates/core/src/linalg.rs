//! Dense complex tensor algebra.
//!
//! Every operator carries the local dimensions of its tensor factors. Factor 0
//! is the most significant digit of a flattened index, so for factor
//! dimensions `[d0, d1]` the basis vector `|i⟩|j⟩` sits at `i * d1 + j`.

use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{cabs, cre, Real, C};

/// Default upper bound on any matrix side built by the crate.
pub const DEFAULT_DIM_CAP: usize = 1 << 14;

static DIM_CAP: AtomicUsize = AtomicUsize::new(DEFAULT_DIM_CAP);

/// Current dimension cap.
pub fn dim_cap() -> usize {
    DIM_CAP.load(Ordering::Relaxed)
}

/// Replaces the dimension cap for the whole process.
pub fn set_dim_cap(cap: usize) {
    DIM_CAP.store(cap.max(1), Ordering::Relaxed);
}

pub(crate) fn check_dim(what: &str, dim: usize) -> Result<()> {
    let cap = dim_cap();
    if dim > cap {
        return Err(Error::ResourceLimit {
            what: what.to_string(),
            dim,
            cap,
        });
    }
    Ok(())
}

/// `base^exp` with overflow reported as a resource error.
pub(crate) fn checked_pow(what: &str, base: usize, exp: usize) -> Result<usize> {
    let mut acc: usize = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base).ok_or_else(|| Error::ResourceLimit {
            what: what.to_string(),
            dim: usize::MAX,
            cap: dim_cap(),
        })?;
    }
    check_dim(what, acc)?;
    Ok(acc)
}

fn product(dims: &[usize]) -> usize {
    dims.iter().product()
}

/// Row-major strides for the given factor dimensions.
pub(crate) fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for j in (0..dims.len().saturating_sub(1)).rev() {
        s[j] = s[j + 1] * dims[j + 1];
    }
    s
}

/// Splits a flat index into its per-factor digits.
pub(crate) fn digits(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for j in (0..dims.len()).rev() {
        out[j] = index % dims[j];
        index /= dims[j];
    }
    out
}

/// Dense complex matrix with tensor-factor metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator<T: Real> {
    entries: DMatrix<C<T>>,
    row_dims: Vec<usize>,
    col_dims: Vec<usize>,
}

impl<T: Real> DenseOperator<T> {
    /// Square operator whose rows and columns share `factor_dims`.
    pub fn new(entries: DMatrix<C<T>>, factor_dims: Vec<usize>) -> Result<Self> {
        Self::rectangular(entries, factor_dims.clone(), factor_dims)
    }

    pub fn rectangular(
        entries: DMatrix<C<T>>,
        row_dims: Vec<usize>,
        col_dims: Vec<usize>,
    ) -> Result<Self> {
        if row_dims.iter().chain(&col_dims).any(|&d| d == 0) {
            return Err(Error::InvalidArgument(
                "factor dimensions must be positive".into(),
            ));
        }
        if product(&row_dims) != entries.nrows() {
            return Err(Error::DimensionMismatch {
                expected: product(&row_dims),
                found: entries.nrows(),
            });
        }
        if product(&col_dims) != entries.ncols() {
            return Err(Error::DimensionMismatch {
                expected: product(&col_dims),
                found: entries.ncols(),
            });
        }
        Ok(Self {
            entries,
            row_dims,
            col_dims,
        })
    }

    pub fn from_fn(factor_dims: Vec<usize>, f: impl FnMut(usize, usize) -> C<T>) -> Result<Self> {
        let n = product(&factor_dims);
        check_dim("operator", n)?;
        Self::new(DMatrix::from_fn(n, n, f), factor_dims)
    }

    pub fn zeros(factor_dims: Vec<usize>) -> Result<Self> {
        Self::from_fn(factor_dims, |_, _| C::zero())
    }

    pub fn identity(factor_dims: Vec<usize>) -> Result<Self> {
        let n = product(&factor_dims);
        check_dim("identity", n)?;
        Self::new(DMatrix::identity(n, n), factor_dims)
    }

    /// Real diagonal operator on a single factor.
    pub fn diagonal(diag: &[T]) -> Self {
        let n = diag.len();
        let m = DMatrix::from_fn(n, n, |r, c| if r == c { cre(diag[r]) } else { C::zero() });
        Self {
            entries: m,
            row_dims: vec![n],
            col_dims: vec![n],
        }
    }

    /// Column vector with the given amplitudes.
    pub fn ket(amplitudes: Vec<C<T>>, factor_dims: Vec<usize>) -> Result<Self> {
        let n = amplitudes.len();
        Self::rectangular(DMatrix::from_vec(n, 1, amplitudes), factor_dims, vec![])
    }

    /// Computational basis vector `|index⟩`.
    pub fn basis_ket(index: usize, factor_dims: Vec<usize>) -> Result<Self> {
        let n = product(&factor_dims);
        if index >= n {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} out of range for dimension {n}"
            )));
        }
        let mut amps = vec![C::zero(); n];
        amps[index] = C::one();
        Self::ket(amps, factor_dims)
    }

    pub fn entries(&self) -> &DMatrix<C<T>> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<C<T>> {
        self.entries
    }

    /// Row factor dimensions (equal to the column ones for square operators).
    pub fn factor_dims(&self) -> &[usize] {
        &self.row_dims
    }

    pub fn row_dims(&self) -> &[usize] {
        &self.row_dims
    }

    pub fn col_dims(&self) -> &[usize] {
        &self.col_dims
    }

    pub fn nrows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.entries.ncols()
    }

    /// Side length of a square operator, or the length of a ket.
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_square(&self) -> bool {
        self.nrows() == self.ncols()
    }

    pub fn is_ket(&self) -> bool {
        self.ncols() == 1 && self.col_dims.is_empty()
    }

    pub fn get(&self, r: usize, c: usize) -> C<T> {
        self.entries[(r, c)]
    }

    /// Reinterprets the same matrix with different (compatible) square factors.
    pub fn with_factor_dims(self, factor_dims: Vec<usize>) -> Result<Self> {
        if self.is_ket() {
            return Self::rectangular(self.entries, factor_dims, vec![]);
        }
        Self::new(self.entries, factor_dims)
    }

    pub fn trace(&self) -> C<T> {
        self.entries.trace()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            entries: self.entries.adjoint(),
            row_dims: self.col_dims.clone(),
            col_dims: self.row_dims.clone(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self {
            entries: self.entries.transpose(),
            row_dims: self.col_dims.clone(),
            col_dims: self.row_dims.clone(),
        }
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.ncols() != rhs.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.ncols(),
                found: rhs.nrows(),
            });
        }
        Ok(Self {
            entries: &self.entries * &rhs.entries,
            row_dims: self.row_dims.clone(),
            col_dims: rhs.col_dims.clone(),
        })
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            entries: self.entries.map(|z| z * s),
            row_dims: self.row_dims.clone(),
            col_dims: self.col_dims.clone(),
        }
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.entries.shape() != other.entries.shape() {
            return Err(Error::DimensionMismatch {
                expected: self.nrows() * self.ncols(),
                found: other.nrows() * other.ncols(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            entries: &self.entries + &other.entries,
            row_dims: self.row_dims.clone(),
            col_dims: self.col_dims.clone(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            entries: &self.entries - &other.entries,
            row_dims: self.row_dims.clone(),
            col_dims: self.col_dims.clone(),
        })
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        self.check_same_shape(other)?;
        Ok(self
            .entries
            .iter()
            .zip(other.entries.iter())
            .fold(T::zero(), |m, (a, b)| m.max(cabs(*a - *b))))
    }

    pub fn max_abs(&self) -> T {
        self.entries.iter().fold(T::zero(), |m, z| m.max(cabs(*z)))
    }

    /// Max-abs entry of `X - X†`; `+∞` for non-square inputs.
    pub fn hermitian_residual(&self) -> T {
        if !self.is_square() {
            return T::max_value().unwrap_or_else(T::one);
        }
        let n = self.nrows();
        let mut worst = T::zero();
        for c in 0..n {
            for r in c..n {
                let d = self.entries[(r, c)] - self.entries[(c, r)].conj();
                worst = worst.max(cabs(d));
            }
        }
        worst
    }

    /// Euclidean norm (Frobenius norm for matrices).
    pub fn norm(&self) -> T {
        self.entries.norm()
    }

    /// `⟨self|other⟩` for two kets.
    pub fn inner(&self, other: &Self) -> Result<C<T>> {
        if !self.is_ket() || !other.is_ket() {
            return Err(Error::InvalidArgument("inner product needs two kets".into()));
        }
        self.check_same_shape(other)?;
        Ok(self.entries.dotc(&other.entries))
    }

    /// `⟨ψ|X|ψ⟩`.
    pub fn expectation(&self, ket: &Self) -> Result<C<T>> {
        if !ket.is_ket() || ket.dim() != self.ncols() || !self.is_square() {
            return Err(Error::DimensionMismatch {
                expected: self.ncols(),
                found: ket.dim(),
            });
        }
        let v = &self.entries * &ket.entries;
        Ok(ket.entries.dotc(&v))
    }

    /// `|v⟩⟨v|` for a ket `v`.
    pub fn projector(&self) -> Result<Self> {
        if !self.is_ket() {
            return Err(Error::InvalidArgument("projector needs a ket".into()));
        }
        check_dim("projector", self.dim())?;
        Ok(Self {
            entries: &self.entries * self.entries.adjoint(),
            row_dims: self.row_dims.clone(),
            col_dims: self.row_dims.clone(),
        })
    }

    /// `n`-fold tensor power; the empty power is the 1×1 identity.
    pub fn tensor_power(&self, n: usize) -> Result<Self> {
        let mut acc = if self.is_ket() {
            Self::ket(vec![C::one()], vec![])?
        } else {
            Self::identity(vec![])?
        };
        for _ in 0..n {
            acc = tensor_product(&acc, self)?;
        }
        Ok(acc)
    }

    /// Validates Hermiticity, unit trace and positivity at the scalar's tolerances.
    pub fn check_state(&self) -> Result<()> {
        if !self.is_square() {
            return Err(Error::NotAState("operator is not square".into()));
        }
        let tol = T::herm_tol();
        let res = self.hermitian_residual();
        if res > tol {
            return Err(Error::NotHermitian {
                residual: res.as_f64(),
            });
        }
        let tr = self.trace();
        if (tr.re - T::one()).abs() > tol * T::from_usize_lossy(self.dim().max(1))
            || tr.im.abs() > tol
        {
            return Err(Error::NotAState(format!(
                "trace {} + {}i differs from 1",
                tr.re.as_f64(),
                tr.im.as_f64()
            )));
        }
        let eigs = herm_eigvals(self)?;
        if let Some(&min) = eigs.last() {
            if min < -T::psd_tol() {
                return Err(Error::NotAState(format!(
                    "smallest eigenvalue {} is negative",
                    min.as_f64()
                )));
            }
        }
        Ok(())
    }
}

/// Sorted list of distinct factor positions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactorSubset {
    indices: Vec<usize>,
}

impl FactorSubset {
    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(format!(
                "factor subset has repeated indices: {indices:?}"
            )));
        }
        Ok(Self { indices })
    }

    /// Positions `0..k`.
    pub fn first(k: usize) -> Self {
        Self {
            indices: (0..k).collect(),
        }
    }

    pub fn empty() -> Self {
        Self { indices: vec![] }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.indices.binary_search(&j).is_ok()
    }
}

/// Kronecker product; `a` carries the more significant factors.
pub fn tensor_product<T: Real>(a: &DenseOperator<T>, b: &DenseOperator<T>) -> Result<DenseOperator<T>> {
    let rows = a
        .nrows()
        .checked_mul(b.nrows())
        .ok_or_else(|| Error::Overflow("tensor product row count".into()))?;
    let cols = a
        .ncols()
        .checked_mul(b.ncols())
        .ok_or_else(|| Error::Overflow("tensor product column count".into()))?;
    check_dim("tensor product", rows.max(cols))?;
    let row_dims = a.row_dims.iter().chain(&b.row_dims).copied().collect();
    let col_dims = a.col_dims.iter().chain(&b.col_dims).copied().collect();
    DenseOperator::rectangular(a.entries.kronecker(&b.entries), row_dims, col_dims)
}

/// Traces out every factor not listed in `keep`.
///
/// Kept factors stay in their original relative order. An empty `keep`
/// yields the 1×1 operator holding the full trace.
pub fn partial_trace<T: Real>(x: &DenseOperator<T>, keep: &FactorSubset) -> Result<DenseOperator<T>> {
    if !x.is_square() || x.row_dims != x.col_dims {
        return Err(Error::InvalidArgument(
            "partial trace needs a square operator with matching factors".into(),
        ));
    }
    let dims = x.factor_dims();
    if let Some(&bad) = keep.indices().iter().find(|&&j| j >= dims.len()) {
        return Err(Error::InvalidArgument(format!(
            "factor {bad} out of range for {} factors",
            dims.len()
        )));
    }
    let st = strides(dims);
    let kept_dims: Vec<usize> = keep.indices().iter().map(|&j| dims[j]).collect();
    let traced: Vec<usize> = (0..dims.len()).filter(|j| !keep.contains(*j)).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&j| dims[j]).collect();

    let offsets = |positions: &[usize], local: &[usize]| -> Vec<usize> {
        (0..product(local))
            .map(|idx| {
                digits(idx, local)
                    .iter()
                    .zip(positions)
                    .map(|(digit, &pos)| digit * st[pos])
                    .sum()
            })
            .collect()
    };
    let keep_off = offsets(keep.indices(), &kept_dims);
    let trace_off = offsets(&traced, &traced_dims);

    let m = x.entries();
    let n = keep_off.len();
    let out = DMatrix::from_fn(n, n, |r, c| {
        let (br, bc) = (keep_off[r], keep_off[c]);
        trace_off
            .iter()
            .fold(C::zero(), |acc, &t| acc + m[(br + t, bc + t)])
    });
    DenseOperator::new(out, kept_dims)
}

fn check_bijection(perm: &[usize]) -> Result<()> {
    let mut seen = vec![false; perm.len()];
    for &p in perm {
        if p >= perm.len() || seen[p] {
            return Err(Error::InvalidArgument(format!(
                "{perm:?} is not a permutation of 0..{}",
                perm.len()
            )));
        }
        seen[p] = true;
    }
    Ok(())
}

/// Index map of the factor permutation: `map[i]` is the flat index of the
/// basis vector obtained by moving digit `j` of `i` to slot `perm[j]`.
pub(crate) fn permuted_indices(perm: &[usize], d: usize) -> Result<Vec<usize>> {
    check_bijection(perm)?;
    let n = perm.len();
    let dim = checked_pow("permutation operator", d, n)?;
    let dims = vec![d; n];
    let st = strides(&dims);
    Ok((0..dim)
        .map(|i| {
            digits(i, &dims)
                .iter()
                .enumerate()
                .map(|(j, &digit)| digit * st[perm[j]])
                .sum()
        })
        .collect())
}

/// Unitary `U_π` on `n = perm.len()` copies of a `d`-level system.
///
/// `U_π |i_0 … i_{n-1}⟩` carries `i_j` in slot `perm[j]`, so that
/// `U_π U_σ = U_{π∘σ}`.
pub fn permutation_operator<T: Real>(perm: &[usize], d: usize) -> Result<DenseOperator<T>> {
    let map = permuted_indices(perm, d)?;
    let dim = map.len();
    let mut m = DMatrix::zeros(dim, dim);
    for (col, &row) in map.iter().enumerate() {
        m[(row, col)] = C::one();
    }
    DenseOperator::new(m, vec![d; perm.len()])
}

fn hermitian_part<T: Real>(x: &DenseOperator<T>) -> Result<DMatrix<C<T>>> {
    let res = x.hermitian_residual();
    if res > T::herm_tol() {
        return Err(Error::NotHermitian {
            residual: res.as_f64(),
        });
    }
    let half = T::lit(0.5);
    Ok((x.entries() + x.entries().adjoint()).map(|z| z * half))
}

/// Eigenvalues of a Hermitian operator in descending order.
pub fn herm_eigvals<T: Real>(x: &DenseOperator<T>) -> Result<Vec<T>> {
    let h = hermitian_part(x)?;
    let mut vals: Vec<T> = h.symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    Ok(vals)
}

/// Eigenpairs of a Hermitian operator, eigenvalues descending; column `i` of
/// the matrix is the eigenvector of value `i`.
pub fn herm_eigh<T: Real>(x: &DenseOperator<T>) -> Result<(Vec<T>, DMatrix<C<T>>)> {
    let h = hermitian_part(x)?;
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(x.dim(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((vals, vecs))
}

/// Square root of a positive semidefinite operator; negative roundoff
/// eigenvalues are clamped to zero.
pub fn psd_sqrt<T: Real>(x: &DenseOperator<T>) -> Result<DenseOperator<T>> {
    let (vals, vecs) = herm_eigh(x)?;
    let roots: Vec<T> = vals.iter().map(|&v| v.max(T::zero()).sqrt()).collect();
    let scaled = DMatrix::from_fn(vecs.nrows(), vecs.ncols(), |r, c| vecs[(r, c)] * roots[c]);
    DenseOperator::new(&scaled * vecs.adjoint(), x.factor_dims().to_vec())
}

/// Max-abs change of `x` under conjugation by the transposition of factors
/// `a` and `b` (which must have equal dimension). Trailing factors beyond
/// the permuted block are left untouched.
pub(crate) fn swap_conjugation_residual<T: Real>(x: &DenseOperator<T>, a: usize, b: usize) -> T {
    let dims = x.factor_dims();
    let st = strides(dims);
    let n = x.dim();
    let map: Vec<usize> = (0..n)
        .map(|i| {
            let da = (i / st[a]) % dims[a];
            let db = (i / st[b]) % dims[b];
            i - da * st[a] - db * st[b] + db * st[a] + da * st[b]
        })
        .collect();
    let m = x.entries();
    let mut worst = T::zero();
    for c in 0..n {
        for r in 0..n {
            worst = worst.max(cabs(m[(map[r], map[c])] - m[(r, c)]));
        }
    }
    worst
}

/// Largest residual of [`swap_conjugation_residual`] over the adjacent
/// transpositions of the first `n` factors.
pub(crate) fn adjacent_swap_residual<T: Real>(x: &DenseOperator<T>, n: usize) -> T {
    (0..n.saturating_sub(1))
        .map(|j| swap_conjugation_residual(x, j, j + 1))
        .fold(T::zero(), |m, r| m.max(r))
}

/// `1/√n` as a complex scalar.
pub(crate) fn inv_sqrt<T: Real>(n: usize) -> C<T> {
    Complex::new(T::one() / T::from_usize_lossy(n).sqrt(), T::zero())
}
