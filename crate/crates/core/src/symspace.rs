//! The totally symmetric subspace of `n` copies of a `d`-level system.
//!
//! Its orthonormal occupation-number basis gives the symmetrizer as `V V†`
//! without ever averaging over `n!` permutations, and the Haar moment
//! `∫ dψ |ψ⟩⟨ψ|^{⊗n}` equals the symmetrizer divided by its rank.

use nalgebra::DMatrix;
use num_complex::Complex;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{checked_pow, digits, inv_sqrt, DenseOperator};
use crate::montecarlo::{self, MonteCarloEstimate};
use crate::scalar::{Real, C};

/// `binom(d + n - 1, n)`, the dimension of the symmetric subspace.
pub fn sym_dim(d: usize, n: usize) -> Result<u64> {
    if d == 0 {
        return Err(Error::InvalidArgument("local dimension must be positive".into()));
    }
    let mut acc: u128 = 1;
    for i in 1..=n as u128 {
        // acc == binom(d - 1 + i - 1, i - 1) here, so the division is exact
        acc = acc
            .checked_mul(d as u128 - 1 + i)
            .ok_or_else(|| Error::Overflow(format!("sym_dim({d}, {n})")))?
            / i;
    }
    u64::try_from(acc).map_err(|_| Error::Overflow(format!("sym_dim({d}, {n}) exceeds 64 bits")))
}

fn occupations(d: usize, n: usize) -> Vec<Vec<usize>> {
    fn rec(slot: usize, d: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slot + 1 == d {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for take in (0..=left).rev() {
            prefix.push(take);
            rec(slot + 1, d, left - take, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, d, n, &mut Vec::with_capacity(d), &mut out);
    out
}

/// Occupation-number basis of the symmetric subspace and its isometry into
/// the full tensor power.
#[derive(Clone, Debug)]
pub struct SymBasis<T: Real> {
    d: usize,
    n: usize,
    occupations: Vec<Vec<usize>>,
    isometry: DenseOperator<T>,
    support: Vec<Vec<usize>>,
    column_of: Vec<usize>,
}

impl<T: Real> SymBasis<T> {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `d^n`.
    pub fn full_dim(&self) -> usize {
        self.column_of.len()
    }

    /// Number of basis vectors, `binom(d + n - 1, n)`.
    pub fn sym_dim(&self) -> usize {
        self.occupations.len()
    }

    /// Occupation tuples `(n_1, …, n_d)`, lexicographically descending.
    pub fn occupations(&self) -> &[Vec<usize>] {
        &self.occupations
    }

    /// `d^n × sym_dim` isometry whose columns are the normalized type vectors.
    pub fn isometry(&self) -> &DenseOperator<T> {
        &self.isometry
    }

    /// Flat indices of the product basis vectors in column `col`.
    pub fn support(&self, col: usize) -> &[usize] {
        &self.support[col]
    }

    /// Column whose type class contains the product basis vector `index`.
    pub fn column_of(&self, index: usize) -> usize {
        self.column_of[index]
    }

    /// Common value of the nonzero entries of column `col`.
    pub fn amplitude(&self, col: usize) -> T {
        T::one() / T::from_usize_lossy(self.support[col].len()).sqrt()
    }

    /// `V† |v⟩` for a ket on the full space.
    pub fn coordinates(&self, ket: &DenseOperator<T>) -> Result<DenseOperator<T>> {
        if !ket.is_ket() || ket.dim() != self.full_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.full_dim(),
                found: ket.dim(),
            });
        }
        let amps = (0..self.sym_dim())
            .map(|s| {
                let a = self.amplitude(s);
                self.support[s]
                    .iter()
                    .fold(C::zero(), |acc, &r| acc + ket.get(r, 0))
                    * a
            })
            .collect();
        DenseOperator::ket(amps, vec![self.sym_dim()])
    }

    /// Coordinates of `|ψ⟩^{⊗n}` for a single-system ket `ψ`, computed from
    /// occupation numbers as `√(multinomial) ∏ ψ_i^{n_i}`.
    pub fn product_coordinates(&self, psi: &[C<T>]) -> Result<Vec<C<T>>> {
        if psi.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: psi.len(),
            });
        }
        Ok(self
            .occupations
            .iter()
            .zip(&self.support)
            .map(|(occ, supp)| {
                let mono = occ
                    .iter()
                    .zip(psi)
                    .fold(C::one(), |acc, (&k, z)| acc * z.powu(k as u32));
                mono * T::from_usize_lossy(supp.len()).sqrt()
            })
            .collect())
    }

    /// `V X V†` for an operator in symmetric coordinates.
    pub fn expand(&self, x: &DenseOperator<T>) -> Result<DenseOperator<T>> {
        if x.dim() != self.sym_dim() || !x.is_square() {
            return Err(Error::DimensionMismatch {
                expected: self.sym_dim(),
                found: x.dim(),
            });
        }
        let v = self.isometry.entries();
        DenseOperator::new(v * x.entries() * v.adjoint(), vec![self.d; self.n])
    }

    /// `V† X V` for an operator on the full space.
    pub fn compress(&self, x: &DenseOperator<T>) -> Result<DenseOperator<T>> {
        if x.dim() != self.full_dim() || !x.is_square() {
            return Err(Error::DimensionMismatch {
                expected: self.full_dim(),
                found: x.dim(),
            });
        }
        let m = x.entries();
        let k = self.sym_dim();
        let out = DMatrix::from_fn(k, k, |s, t| {
            let mut acc = C::zero();
            for &r in &self.support[s] {
                for &c in &self.support[t] {
                    acc += m[(r, c)];
                }
            }
            acc * (self.amplitude(s) * self.amplitude(t))
        });
        DenseOperator::new(out, vec![k])
    }

    /// `Tr[X] - Tr[Π X]`: the weight of a PSD `X` outside the symmetric subspace.
    pub fn outside_weight(&self, x: &DenseOperator<T>) -> Result<T> {
        let inside = self.compress(x)?.trace().re;
        Ok(x.trace().re - inside)
    }
}

/// Orthonormal occupation basis of the symmetric subspace of `n` copies of `C^d`.
pub fn sym_basis<T: Real>(d: usize, n: usize) -> Result<SymBasis<T>> {
    sym_dim(d, n)?;
    let full = checked_pow("symmetric basis", d, n)?;
    let occs = occupations(d, n);
    let lookup: std::collections::HashMap<Vec<usize>, usize> =
        occs.iter().cloned().enumerate().map(|(i, o)| (o, i)).collect();
    let dims = vec![d; n];
    let mut support = vec![Vec::new(); occs.len()];
    let mut column_of = Vec::with_capacity(full);
    for idx in 0..full {
        let mut occ = vec![0; d];
        for digit in digits(idx, &dims) {
            occ[digit] += 1;
        }
        let col = lookup[&occ];
        support[col].push(idx);
        column_of.push(col);
    }
    let mut v = DMatrix::zeros(full, occs.len());
    for (col, supp) in support.iter().enumerate() {
        let a = inv_sqrt(supp.len());
        for &r in supp {
            v[(r, col)] = a;
        }
    }
    let isometry = DenseOperator::rectangular(v, dims, vec![occs.len()])?;
    Ok(SymBasis {
        d,
        n,
        occupations: occs,
        isometry,
        support,
        column_of,
    })
}

/// Orthogonal projector onto the symmetric subspace, assembled as `V V†`.
pub fn symmetrizer<T: Real>(d: usize, n: usize) -> Result<DenseOperator<T>> {
    let basis = sym_basis::<T>(d, n)?;
    let full = basis.full_dim();
    let mut p = DMatrix::zeros(full, full);
    for col in 0..basis.sym_dim() {
        let w = Complex::new(basis.amplitude(col).powi(2), T::zero());
        for &r in basis.support(col) {
            for &c in basis.support(col) {
                p[(r, c)] = w;
            }
        }
    }
    DenseOperator::new(p, vec![d; n])
}

const WORDS_PER_DRAW: u128 = 1 << 20;

/// Counter-based Haar sampler for pure states of `C^d`.
///
/// Draw `counter` of stream `stream` depends only on `(seed, stream, counter)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HaarSampler {
    d: usize,
    seed: u64,
    stream: u64,
    counter: u64,
}

impl HaarSampler {
    pub fn new(d: usize, seed: u64) -> Self {
        Self::with_stream(d, seed, 0)
    }

    pub fn with_stream(d: usize, seed: u64, stream: u64) -> Self {
        Self {
            d,
            seed,
            stream,
            counter: 0,
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// Amplitudes of draw `counter`, without advancing the sampler.
    pub fn amplitudes_at<T: Real>(&self, counter: u64) -> Vec<C<T>> {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(counter as u128 * WORDS_PER_DRAW);
        let raw: Vec<(f64, f64)> = (0..self.d)
            .map(|_| (rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let norm = raw.iter().map(|(a, b)| a * a + b * b).sum::<f64>().sqrt();
        raw.into_iter()
            .map(|(a, b)| Complex::new(T::lit(a / norm), T::lit(b / norm)))
            .collect()
    }

    pub fn ket_at<T: Real>(&self, counter: u64) -> DenseOperator<T> {
        DenseOperator::ket(self.amplitudes_at(counter), vec![self.d])
            .expect("amplitude count matches dimension")
    }

    pub fn next_ket<T: Real>(&mut self) -> DenseOperator<T> {
        let k = self.ket_at(self.counter);
        self.counter += 1;
        k
    }
}

/// Draws the next Haar-random ket and advances the sampler.
pub fn haar_sample<T: Real>(sampler: &mut HaarSampler) -> DenseOperator<T> {
    sampler.next_ket()
}

/// Monte Carlo estimate of `d_n^+ ∫ dψ |ψ⟩⟨ψ|^{⊗n}`, which converges to
/// [`symmetrizer`]`(d, n)`.
pub fn haar_moment_estimate<T: Real>(
    d: usize,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<MonteCarloEstimate<T>> {
    let full = checked_pow("Haar moment", d, n)?;
    let scale = T::lit(sym_dim(d, n)? as f64);
    let sampler = HaarSampler::new(d, seed);
    Ok(montecarlo::estimate(full, full, samples, seed, |i| {
        let psi: DenseOperator<T> = sampler.ket_at(i);
        let power = psi.tensor_power(n).expect("within cap");
        let v = power.entries();
        (v * v.adjoint()).map(|z| z * scale)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{herm_eigvals, permutation_operator};

    type Op = DenseOperator<f64>;

    #[test]
    fn dimensions() {
        assert_eq!(sym_dim(2, 2).unwrap(), 3);
        assert_eq!(sym_dim(2, 10).unwrap(), 11);
        assert_eq!(sym_dim(3, 2).unwrap(), 6);
        assert_eq!(sym_dim(4, 6).unwrap(), 84);
        for d in 1..6 {
            assert_eq!(sym_dim(d, 0).unwrap(), 1);
            assert_eq!(sym_dim(d, 1).unwrap(), d as u64);
        }
        assert!(sym_dim(0, 3).is_err());
        assert!(matches!(sym_dim(1000, 1000), Err(Error::Overflow(_))));
    }

    #[test]
    fn triplet_basis() {
        let b = sym_basis::<f64>(2, 2).unwrap();
        assert_eq!(b.occupations(), &[vec![2, 0], vec![1, 1], vec![0, 2]]);
        let v = b.isometry();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let want = [[1.0, 0.0, 0.0], [0.0, s, 0.0], [0.0, s, 0.0], [0.0, 0.0, 1.0]];
        for (r, row) in want.iter().enumerate() {
            for (c, &w) in row.iter().enumerate() {
                assert!((v.get(r, c).re - w).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn three_qubit_type_column() {
        let b = sym_basis::<f64>(2, 3).unwrap();
        let col = b.occupations().iter().position(|o| o == &vec![2, 1]).unwrap();
        let nz: Vec<f64> = (0..8).map(|r| b.isometry().get(r, col).re).filter(|x| *x != 0.0).collect();
        assert_eq!(nz.len(), 3);
        for x in nz {
            assert!((x - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn isometry_is_orthonormal() {
        for (d, n) in [(2, 1), (2, 4), (3, 3), (4, 2), (1, 5)] {
            let b = sym_basis::<f64>(d, n).unwrap();
            assert_eq!(b.sym_dim() as u64, sym_dim(d, n).unwrap());
            let v = b.isometry().entries();
            let gram = v.adjoint() * v;
            let eye = DMatrix::identity(b.sym_dim(), b.sym_dim());
            assert!((gram - eye).norm() < 1e-12);
        }
    }

    #[test]
    fn symmetrizer_small_cases() {
        let p1: Op = symmetrizer(3, 1).unwrap();
        assert!(p1.max_abs_diff(&Op::identity(vec![3]).unwrap()).unwrap() < 1e-15);
        let p: Op = symmetrizer(2, 2).unwrap();
        assert!((p.get(0, 0).re - 1.0).abs() < 1e-15);
        assert!((p.get(1, 1).re - 0.5).abs() < 1e-15);
        assert!((p.get(2, 1).re - 0.5).abs() < 1e-15);
    }

    fn all_perms(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in all_perms(n - 1) {
            for pos in 0..n {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn symmetrizer_equals_permutation_average() {
        for (d, n) in [(2, 2), (2, 3), (2, 4), (3, 3)] {
            let perms = all_perms(n);
            let mut avg = Op::zeros(vec![d; n]).unwrap();
            for p in &perms {
                avg = avg.add(&permutation_operator(p, d).unwrap()).unwrap();
            }
            let avg = avg.scale(1.0 / perms.len() as f64);
            let p: Op = symmetrizer(d, n).unwrap();
            assert!(p.max_abs_diff(&avg).unwrap() < 1e-12, "d={d} n={n}");
        }
    }

    #[test]
    fn symmetrizer_is_rank_k_projector() {
        let p: Op = symmetrizer(3, 3).unwrap();
        assert!(p.matmul(&p).unwrap().max_abs_diff(&p).unwrap() < 1e-12);
        assert!(p.hermitian_residual() < 1e-15);
        let ev = herm_eigvals(&p).unwrap();
        let ones = ev.iter().filter(|&&x| x >= 1.0 - 1e-9).count();
        let zeros = ev.iter().filter(|&&x| x <= 1e-9).count();
        assert_eq!(ones, 10);
        assert_eq!(ones + zeros, 27);
        for j in 0..2 {
            let mut perm: Vec<usize> = (0..3).collect();
            perm.swap(j, j + 1);
            let u: Op = permutation_operator(&perm, 3).unwrap();
            let c = u.matmul(&p).unwrap().matmul(&u.adjoint()).unwrap();
            assert!(c.max_abs_diff(&p).unwrap() < 1e-12);
        }
    }

    #[test]
    fn coordinates_agree_with_isometry() {
        let b = sym_basis::<f64>(3, 3).unwrap();
        let psi = HaarSampler::new(3, 5).ket_at::<f64>(0);
        let power = psi.tensor_power(3).unwrap();
        let via_iso = b.isometry().adjoint().matmul(&power).unwrap();
        let via_coords = b.coordinates(&power).unwrap();
        let via_occ = b.product_coordinates(psi.entries().as_slice()).unwrap();
        for (s, occ) in via_occ.iter().enumerate() {
            assert!((via_iso.get(s, 0) - via_coords.get(s, 0)).norm() < 1e-14);
            assert!((via_iso.get(s, 0) - occ).norm() < 1e-14);
        }
    }

    #[test]
    fn sampler_is_deterministic_and_normalized() {
        let a = HaarSampler::new(2, 42).ket_at::<f64>(0);
        let b = HaarSampler::new(2, 42).ket_at::<f64>(0);
        assert_eq!(a, b);
        let mut s = HaarSampler::new(2, 42);
        let first: Op = haar_sample(&mut s);
        let second: Op = haar_sample(&mut s);
        assert_eq!(first, a);
        assert_ne!(first, second);
        assert_eq!(s.counter(), 2);
        assert!((second.norm() - 1.0).abs() < 1e-14);
        let other_stream: Op = HaarSampler::with_stream(2, 42, 1).ket_at(0);
        assert_ne!(other_stream, a);
    }

    #[test]
    fn first_moment_is_maximally_mixed() {
        let est = haar_moment_estimate::<f64>(2, 1, 100_000, 3).unwrap();
        let exact = DMatrix::identity(2, 2);
        assert!(est.within(&exact, 5.0), "z = {}", est.max_z_score(&exact));
    }

    #[test]
    fn second_moment_is_normalized_symmetrizer() {
        let est = haar_moment_estimate::<f64>(2, 2, 100_000, 4).unwrap();
        let p: Op = symmetrizer(2, 2).unwrap();
        assert!(est.within(p.entries(), 5.0), "z = {}", est.max_z_score(p.entries()));
    }
}
