//! Channels in Choi form and the symmetric-distribution channels under study.
//!
//! The Choi matrix is `Σ_ij 𝓔(|i⟩⟨j|) ⊗ |i⟩⟨j|`: output factors first, the
//! input as the last (least significant) factor.

use nalgebra::DMatrix;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    adjacent_swap_residual, check_dim, herm_eigvals, strides, tensor_product, DenseOperator,
};
use crate::scalar::{cabs, cre, Real, C};
use crate::symspace::{sym_basis, sym_dim};

/// Completely positive trace-preserving map stored as its Choi matrix.
#[derive(Clone, Debug)]
pub struct QuantumChannel<T: Real> {
    choi: DenseOperator<T>,
    dim_in: usize,
    out_factors: Vec<usize>,
    symmetric_input: Option<(usize, usize)>,
}

/// Outcome of [`validate_sdi`].
#[derive(Clone, Debug, PartialEq)]
pub struct SdiReport<T: Real> {
    /// Largest Choi-level residual over adjacent output transpositions.
    pub max_residual: T,
    pub passed: bool,
    /// `Tr[C] - Tr[(Π₊ ⊗ 1) C]`.
    pub support_residual: T,
    /// Output lies in the symmetric subspace for every input.
    pub symmetric_support: bool,
}

/// Positivity and trace-preservation diagnostics of a Choi matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CptpReport<T: Real> {
    pub min_eigenvalue: T,
    pub trace_preservation_residual: T,
}

impl<T: Real> CptpReport<T> {
    pub fn holds(&self, tol: T) -> bool {
        self.min_eigenvalue >= -tol && self.trace_preservation_residual <= tol
    }
}

impl<T: Real> QuantumChannel<T> {
    /// Builds the Choi matrix from the images `𝓔(|i⟩⟨j|)` of the input matrix units.
    pub fn from_blocks(
        out_factors: Vec<usize>,
        dim_in: usize,
        mut block: impl FnMut(usize, usize) -> Result<DenseOperator<T>>,
    ) -> Result<Self> {
        let dim_out: usize = out_factors.iter().product();
        let total = dim_out
            .checked_mul(dim_in)
            .ok_or_else(|| Error::Overflow("Choi dimension".into()))?;
        check_dim("Choi matrix", total)?;
        let mut choi = DMatrix::zeros(total, total);
        for i in 0..dim_in {
            for j in 0..dim_in {
                let b = block(i, j)?;
                if b.dim() != dim_out || !b.is_square() {
                    return Err(Error::DimensionMismatch {
                        expected: dim_out,
                        found: b.dim(),
                    });
                }
                let m = b.entries();
                for bc in 0..dim_out {
                    for ar in 0..dim_out {
                        choi[(ar * dim_in + i, bc * dim_in + j)] = m[(ar, bc)];
                    }
                }
            }
        }
        let mut factors = out_factors.clone();
        factors.push(dim_in);
        Ok(Self {
            choi: DenseOperator::new(choi, factors)?,
            dim_in,
            out_factors,
            symmetric_input: None,
        })
    }

    pub fn from_choi(choi: DenseOperator<T>, out_factors: Vec<usize>, dim_in: usize) -> Result<Self> {
        let dim_out: usize = out_factors.iter().product();
        if choi.dim() != dim_out * dim_in || !choi.is_square() {
            return Err(Error::DimensionMismatch {
                expected: dim_out * dim_in,
                found: choi.dim(),
            });
        }
        let mut factors = out_factors.clone();
        factors.push(dim_in);
        Ok(Self {
            choi: choi.with_factor_dims(factors)?,
            dim_in,
            out_factors,
            symmetric_input: None,
        })
    }

    /// The identity channel on `C^d`.
    pub fn identity(d: usize) -> Result<Self> {
        Self::from_blocks(vec![d], d, |i, j| {
            DenseOperator::from_fn(vec![d], |r, c| {
                if r == i && c == j {
                    cre(T::one())
                } else {
                    C::zero()
                }
            })
        })
    }

    /// The constant channel `ρ ↦ Tr[ρ] σ`.
    pub fn constant(output: &DenseOperator<T>, dim_in: usize) -> Result<Self> {
        output.check_state()?;
        let zero = DenseOperator::zeros(output.factor_dims().to_vec())?;
        Self::from_blocks(output.factor_dims().to_vec(), dim_in, |i, j| {
            Ok(if i == j { output.clone() } else { zero.clone() })
        })
    }

    pub fn choi(&self) -> &DenseOperator<T> {
        &self.choi
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.out_factors.iter().product()
    }

    pub fn out_factors(&self) -> &[usize] {
        &self.out_factors
    }

    /// Number of output factors (users).
    pub fn num_outputs(&self) -> usize {
        self.out_factors.len()
    }

    /// `(d, N)` when the input space is the symmetric subspace of `N` copies
    /// of `C^d`, expressed in occupation-basis coordinates.
    pub fn symmetric_input(&self) -> Option<(usize, usize)> {
        self.symmetric_input
    }

    /// Channel input for the pure single-system state `φ`: `φ^{⊗N}` in
    /// symmetric coordinates for cloners, `|φ⟩⟨φ|` otherwise.
    pub fn pure_input(&self, phi: &DenseOperator<T>) -> Result<DenseOperator<T>> {
        match self.symmetric_input {
            Some((d, n)) => {
                if phi.dim() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        found: phi.dim(),
                    });
                }
                let basis = sym_basis::<T>(d, n)?;
                let amps = phi.entries().as_slice().to_vec();
                let coords = basis.product_coordinates(&amps)?;
                DenseOperator::ket(coords, vec![basis.sym_dim()])?.projector()
            }
            None => {
                if phi.dim() != self.dim_in {
                    return Err(Error::DimensionMismatch {
                        expected: self.dim_in,
                        found: phi.dim(),
                    });
                }
                phi.projector()
            }
        }
    }

    /// Max-abs deviation of `Tr_out[C]` from the identity.
    pub fn trace_preservation_residual(&self) -> T {
        let m = self.choi.entries();
        let mut worst = T::zero();
        for i in 0..self.dim_in {
            for j in 0..self.dim_in {
                let mut acc = C::zero();
                for a in 0..self.dim_out() {
                    acc += m[(a * self.dim_in + i, a * self.dim_in + j)];
                }
                if i == j {
                    acc -= cre(T::one());
                }
                worst = worst.max(cabs(acc));
            }
        }
        worst
    }

    /// Full diagonalization of the Choi matrix; intended for small channels.
    pub fn cptp_report(&self) -> Result<CptpReport<T>> {
        let eigs = herm_eigvals(&self.choi)?;
        Ok(CptpReport {
            min_eigenvalue: eigs.last().copied().unwrap_or_else(T::zero),
            trace_preservation_residual: self.trace_preservation_residual(),
        })
    }
}

/// Schrödinger picture: `𝓔(ρ) = Tr_in[C (1 ⊗ ρᵀ)]`.
pub fn apply<T: Real>(ch: &QuantumChannel<T>, rho: &DenseOperator<T>) -> Result<DenseOperator<T>> {
    if rho.dim() != ch.dim_in || !rho.is_square() {
        return Err(Error::DimensionMismatch {
            expected: ch.dim_in,
            found: rho.dim(),
        });
    }
    let (n, dout) = (ch.dim_in, ch.dim_out());
    let c = ch.choi.entries();
    let r = rho.entries();
    let out = DMatrix::from_fn(dout, dout, |a, b| {
        let mut acc = C::zero();
        for i in 0..n {
            for j in 0..n {
                acc += r[(i, j)] * c[(a * n + i, b * n + j)];
            }
        }
        acc
    });
    DenseOperator::new(out, ch.out_factors.clone())
}

/// Heisenberg picture: the unique `𝓔*` with `Tr[O 𝓔(ρ)] = Tr[𝓔*(O) ρ]`.
pub fn adjoint_apply<T: Real>(ch: &QuantumChannel<T>, o: &DenseOperator<T>) -> Result<DenseOperator<T>> {
    if o.dim() != ch.dim_out() || !o.is_square() {
        return Err(Error::DimensionMismatch {
            expected: ch.dim_out(),
            found: o.dim(),
        });
    }
    let (n, dout) = (ch.dim_in, ch.dim_out());
    let c = ch.choi.entries();
    let om = o.entries();
    let out = DMatrix::from_fn(n, n, |j, i| {
        let mut acc = C::zero();
        for b in 0..dout {
            for a in 0..dout {
                acc += om[(b, a)] * c[(a * n + i, b * n + j)];
            }
        }
        acc
    });
    DenseOperator::new(out, vec![n])
}

/// Optimal universal `N → M` cloner,
/// `𝓔(ρ) = (d_N^+ / d_M^+) Π_M (ρ ⊗ 1^{⊗(M-N)}) Π_M`,
/// with inputs in symmetric coordinates of `N` copies.
pub fn universal_cloner<T: Real>(d: usize, n: usize, m: usize) -> Result<QuantumChannel<T>> {
    if n == 0 || n > m {
        return Err(Error::InvalidArgument(format!(
            "cloner needs 1 <= N <= M, got N={n}, M={m}"
        )));
    }
    let out_basis = sym_basis::<T>(d, m)?;
    let in_basis = sym_basis::<T>(d, n)?;
    let k_out = out_basis.sym_dim();
    let k_in = in_basis.sym_dim();
    let rest = out_basis.full_dim() / in_basis.full_dim();
    check_dim("Choi matrix", out_basis.full_dim() * k_in)?;

    // a[s][(col, y)] = ⟨v_col| (|w_s⟩ ⊗ |y⟩)
    let a: Vec<DMatrix<C<T>>> = (0..k_in)
        .map(|s| {
            let mut a = DMatrix::zeros(k_out, rest);
            let amp_s = in_basis.amplitude(s);
            for col in 0..k_out {
                let amp = out_basis.amplitude(col) * amp_s;
                for &r in out_basis.support(col) {
                    let (x, y) = (r / rest, r % rest);
                    if in_basis.column_of(x) == s {
                        a[(col, y)] += cre(amp);
                    }
                }
            }
            a
        })
        .collect();

    let scale = T::lit(sym_dim(d, n)? as f64 / sym_dim(d, m)? as f64);
    let v = out_basis.isometry().entries();
    let mut ch = QuantumChannel::from_blocks(vec![d; m], k_in, |s, t| {
        let small = (&a[s] * a[t].adjoint()).map(|z| z * scale);
        DenseOperator::new(v * small * v.adjoint(), vec![d; m])
    })?;
    ch.symmetric_input = Some((d, n));
    Ok(ch)
}

/// The constant channel `ρ ↦ σ^{⊗M}` with input `C^d`.
pub fn fixed_prep_channel<T: Real>(sigma: &DenseOperator<T>, m: usize) -> Result<QuantumChannel<T>> {
    sigma.check_state()?;
    if m == 0 {
        return Err(Error::InvalidArgument("M must be at least 1".into()));
    }
    let d = sigma.dim();
    let sigma = sigma.clone().with_factor_dims(vec![d])?;
    QuantumChannel::constant(&sigma.tensor_power(m)?, d)
}

/// `(1-p) X + p (Tr_j X) ⊗_j 1/d` on factor `j`.
pub(crate) fn depolarize_factor<T: Real>(x: &DenseOperator<T>, j: usize, p: T) -> Result<DenseOperator<T>> {
    let dims = x.factor_dims().to_vec();
    let dj = dims[j];
    let st = strides(&dims)[j];
    let m = x.entries();
    let w = p / T::from_usize_lossy(dj);
    let keep = T::one() - p;
    let n = x.dim();
    let out = DMatrix::from_fn(n, n, |r, c| {
        let (rj, cj) = ((r / st) % dj, (c / st) % dj);
        let mut v = m[(r, c)] * keep;
        if rj == cj {
            let (r0, c0) = (r - rj * st, c - cj * st);
            let mut tr = C::zero();
            for t in 0..dj {
                tr += m[(r0 + t * st, c0 + t * st)];
            }
            v += tr * w;
        }
        v
    });
    DenseOperator::new(out, dims)
}

/// Universal cloner followed by independent depolarization of strength `p`
/// on every output factor.
pub fn noisy_cloner<T: Real>(d: usize, n: usize, m: usize, p: T) -> Result<QuantumChannel<T>> {
    if !(p >= T::zero() && p <= T::one()) {
        return Err(Error::InvalidArgument(format!(
            "noise p={} outside [0, 1]",
            p.as_f64()
        )));
    }
    let base = universal_cloner::<T>(d, n, m)?;
    let mut choi = base.choi.clone();
    for j in 0..m {
        choi = depolarize_factor(&choi, j, p)?;
    }
    Ok(QuantumChannel { choi, ..base })
}

/// Measure-and-prepare channel `ρ ↦ Σ_i Tr[P_i ρ] ρ_i^{⊗M}`.
pub fn measure_prepare<T: Real>(
    povm: &[DenseOperator<T>],
    preps: &[DenseOperator<T>],
    m: usize,
) -> Result<QuantumChannel<T>> {
    if povm.is_empty() || povm.len() != preps.len() {
        return Err(Error::InvalidArgument(format!(
            "{} POVM elements for {} preparations",
            povm.len(),
            preps.len()
        )));
    }
    if m == 0 {
        return Err(Error::InvalidArgument("M must be at least 1".into()));
    }
    let dim_in = povm[0].dim();
    let mut total = DenseOperator::zeros(vec![dim_in])?;
    for e in povm {
        if e.dim() != dim_in || !e.is_square() {
            return Err(Error::DimensionMismatch {
                expected: dim_in,
                found: e.dim(),
            });
        }
        let min = herm_eigvals(e)?.last().copied().unwrap_or_else(T::zero);
        if min < -T::psd_tol() {
            return Err(Error::InvalidArgument(format!(
                "POVM element has negative eigenvalue {}",
                min.as_f64()
            )));
        }
        total = total.add(&e.clone().with_factor_dims(vec![dim_in])?)?;
    }
    let miss = total.max_abs_diff(&DenseOperator::identity(vec![dim_in])?)?;
    if miss > T::herm_tol() {
        return Err(Error::InvalidArgument(format!(
            "POVM elements sum to identity only within {}",
            miss.as_f64()
        )));
    }
    let d = preps[0].dim();
    let powers = preps
        .iter()
        .map(|s| {
            s.check_state()?;
            if s.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: s.dim(),
                });
            }
            s.clone().with_factor_dims(vec![d])?.tensor_power(m)
        })
        .collect::<Result<Vec<_>>>()?;
    QuantumChannel::from_blocks(vec![d; m], dim_in, |i, j| {
        let mut acc = DenseOperator::zeros(vec![d; m])?;
        for (e, pow) in povm.iter().zip(&powers) {
            let w = e.get(j, i);
            if w != C::zero() {
                acc = acc.add(&DenseOperator::new(
                    pow.entries().map(|z| z * w),
                    vec![d; m],
                )?)?;
            }
        }
        Ok(acc)
    })
}

/// Checks permutation invariance of the outputs at the Choi level and
/// whether they are supported on the symmetric subspace.
pub fn validate_sdi<T: Real>(ch: &QuantumChannel<T>, tol: T) -> Result<SdiReport<T>> {
    let m = ch.num_outputs();
    let d = ch.out_factors[0];
    if ch.out_factors.iter().any(|&f| f != d) {
        return Err(Error::InvalidArgument(format!(
            "output factors {:?} are not all equal",
            ch.out_factors
        )));
    }
    let max_residual = adjacent_swap_residual(&ch.choi, m);

    let basis = sym_basis::<T>(d, m)?;
    let n = ch.dim_in;
    let c = ch.choi.entries();
    let mut inside = T::zero();
    for col in 0..basis.sym_dim() {
        let w = basis.amplitude(col).powi(2);
        for i in 0..n {
            let mut acc: C<T> = C::zero();
            for &r in basis.support(col) {
                for &s in basis.support(col) {
                    acc += c[(r * n + i, s * n + i)];
                }
            }
            inside += acc.re * w;
        }
    }
    let support_residual = ch.choi.trace().re - inside;
    Ok(SdiReport {
        passed: max_residual <= tol,
        max_residual,
        symmetric_support: support_residual <= T::support_tol(),
        support_residual,
    })
}

/// Complex matrix as nested rows of `[re, im]` pairs.
pub type ComplexMatrixJson = Vec<Vec<[f64; 2]>>;

pub fn matrix_from_json<T: Real>(rows: &ComplexMatrixJson) -> Result<DenseOperator<T>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidArgument("matrix must be square and non-empty".into()));
    }
    DenseOperator::from_fn(vec![n], |r, c| {
        let [re, im] = rows[r][c];
        C::new(T::lit(re), T::lit(im))
    })
}

pub fn matrix_to_json<T: Real>(x: &DenseOperator<T>) -> ComplexMatrixJson {
    (0..x.nrows())
        .map(|r| {
            (0..x.ncols())
                .map(|c| {
                    let z = x.get(r, c);
                    [z.re.as_f64(), z.im.as_f64()]
                })
                .collect()
        })
        .collect()
}

/// Declarative description of a symmetric-distribution channel, with a
/// canonical JSON encoding tagged by `kind`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SdiChannelSpec {
    UniversalCloner {
        d: usize,
        #[serde(rename = "N")]
        n: usize,
        #[serde(rename = "M")]
        m: usize,
    },
    FixedPrep {
        d: usize,
        #[serde(rename = "M")]
        m: usize,
        prep: ComplexMatrixJson,
    },
    NoisyCloner {
        d: usize,
        #[serde(rename = "N")]
        n: usize,
        #[serde(rename = "M")]
        m: usize,
        p: f64,
    },
    MeasurePrepare {
        d: usize,
        #[serde(rename = "M")]
        m: usize,
        povm: Vec<ComplexMatrixJson>,
        preps: Vec<ComplexMatrixJson>,
    },
}

impl SdiChannelSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::UniversalCloner { .. } => "universal_cloner",
            Self::FixedPrep { .. } => "fixed_prep",
            Self::NoisyCloner { .. } => "noisy_cloner",
            Self::MeasurePrepare { .. } => "measure_prepare",
        }
    }

    pub fn d(&self) -> usize {
        match *self {
            Self::UniversalCloner { d, .. }
            | Self::FixedPrep { d, .. }
            | Self::NoisyCloner { d, .. }
            | Self::MeasurePrepare { d, .. } => d,
        }
    }

    pub fn m(&self) -> usize {
        match *self {
            Self::UniversalCloner { m, .. }
            | Self::FixedPrep { m, .. }
            | Self::NoisyCloner { m, .. }
            | Self::MeasurePrepare { m, .. } => m,
        }
    }

    /// Number of input copies, for cloners.
    pub fn n_copies(&self) -> Option<usize> {
        match *self {
            Self::UniversalCloner { n, .. } | Self::NoisyCloner { n, .. } => Some(n),
            _ => None,
        }
    }

    pub fn noise(&self) -> Option<f64> {
        match *self {
            Self::NoisyCloner { p, .. } => Some(p),
            _ => None,
        }
    }

    pub fn build<T: Real>(&self) -> Result<QuantumChannel<T>> {
        match self {
            Self::UniversalCloner { d, n, m } => universal_cloner(*d, *n, *m),
            Self::NoisyCloner { d, n, m, p } => noisy_cloner(*d, *n, *m, T::lit(*p)),
            Self::FixedPrep { d, m, prep } => {
                let sigma = matrix_from_json::<T>(prep)?;
                if sigma.dim() != *d {
                    return Err(Error::DimensionMismatch {
                        expected: *d,
                        found: sigma.dim(),
                    });
                }
                fixed_prep_channel(&sigma, *m)
            }
            Self::MeasurePrepare { d, m, povm, preps } => {
                let povm = povm.iter().map(matrix_from_json::<T>).collect::<Result<Vec<_>>>()?;
                let preps = preps.iter().map(matrix_from_json::<T>).collect::<Result<Vec<_>>>()?;
                if let Some(bad) = preps.iter().find(|s| s.dim() != *d) {
                    return Err(Error::DimensionMismatch {
                        expected: *d,
                        found: bad.dim(),
                    });
                }
                measure_prepare(&povm, &preps, *m)
            }
        }
    }
}

/// Product of single-system states, `σ_0 ⊗ σ_1 ⊗ …`.
pub fn product_state<T: Real>(factors: &[DenseOperator<T>]) -> Result<DenseOperator<T>> {
    let mut acc = DenseOperator::identity(vec![])?;
    for f in factors {
        acc = tensor_product(&acc, f)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{partial_trace, permutation_operator, FactorSubset};
    use crate::symspace::{symmetrizer, HaarSampler};
    use num_complex::Complex;

    type Op = DenseOperator<f64>;

    fn random_state(d: usize, seed: u64) -> Op {
        // mixture of three Haar kets with unequal weights
        let s = HaarSampler::new(d, seed);
        let w = [0.5, 0.3, 0.2];
        let mut acc = Op::zeros(vec![d]).unwrap();
        for (i, wi) in w.iter().enumerate() {
            acc = acc.add(&s.ket_at::<f64>(i as u64).projector().unwrap().scale(*wi)).unwrap();
        }
        acc
    }

    fn random_hermitian(d: usize, seed: u64) -> Op {
        let s = HaarSampler::new(d, seed);
        let a = Op::new(
            DMatrix::from_fn(d, d, |r, c| s.amplitudes_at::<f64>(r as u64)[c]),
            vec![d],
        )
        .unwrap();
        a.add(&a.adjoint()).unwrap()
    }

    fn c(re: f64) -> C<f64> {
        Complex::new(re, 0.0)
    }

    #[test]
    fn identity_channel_round_trips() {
        let ch = QuantumChannel::<f64>::identity(3).unwrap();
        let rho = random_state(3, 1);
        assert!(apply(&ch, &rho).unwrap().max_abs_diff(&rho).unwrap() < 1e-15);
        let o = random_hermitian(3, 2);
        assert!(adjoint_apply(&ch, &o).unwrap().max_abs_diff(&o).unwrap() < 1e-15);
    }

    #[test]
    fn fixed_prep_is_constant() {
        let ch = fixed_prep_channel(&Op::diagonal(&[1.0, 0.0]), 2).unwrap();
        let out = apply(&ch, &random_state(2, 3)).unwrap();
        assert!(out.max_abs_diff(&Op::diagonal(&[1., 0., 0., 0.])).unwrap() < 1e-15);
        let ch = fixed_prep_channel(&Op::diagonal(&[0.5, 0.5]), 2).unwrap();
        let out = apply(&ch, &random_state(2, 4)).unwrap();
        assert!(out.max_abs_diff(&Op::diagonal(&[0.25; 4])).unwrap() < 1e-15);
        let report = validate_sdi(&fixed_prep_channel(&random_state(2, 5), 3).unwrap(), 1e-12).unwrap();
        assert!(report.passed && report.max_residual <= 1e-12);
        assert!(fixed_prep_channel(&Op::diagonal(&[0.7, 0.7]), 2).is_err());
    }

    #[test]
    fn trivial_cloner_is_identity() {
        let ch = universal_cloner::<f64>(2, 1, 1).unwrap();
        let id = QuantumChannel::<f64>::identity(2).unwrap();
        assert!(ch.choi().max_abs_diff(id.choi()).unwrap() < 1e-15);
    }

    #[test]
    fn one_to_two_qubit_clone_fidelity() {
        let ch = universal_cloner::<f64>(2, 1, 2).unwrap();
        let out = apply(&ch, &Op::diagonal(&[1.0, 0.0])).unwrap();
        let single = partial_trace(&out, &FactorSubset::first(1)).unwrap();
        assert!((single.get(0, 0).re - 5.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn constructed_channels_are_cptp() {
        let chans: Vec<QuantumChannel<f64>> = vec![
            universal_cloner(2, 1, 3).unwrap(),
            universal_cloner(2, 2, 3).unwrap(),
            universal_cloner(3, 1, 2).unwrap(),
            noisy_cloner(2, 1, 3, 0.1).unwrap(),
            fixed_prep_channel(&random_state(2, 6), 2).unwrap(),
        ];
        for ch in &chans {
            let r = ch.cptp_report().unwrap();
            assert!(r.holds(1e-9), "{r:?}");
            let id = Op::identity(ch.out_factors().to_vec()).unwrap();
            let back = adjoint_apply(ch, &id).unwrap();
            assert!(back.max_abs_diff(&Op::identity(vec![ch.dim_in()]).unwrap()).unwrap() < 1e-9);
        }
    }

    #[test]
    fn duality_on_random_inputs() {
        let ch = noisy_cloner::<f64>(2, 2, 3, 0.2).unwrap();
        let rho = random_state(3, 7);
        let o = Op::new(
            random_hermitian(8, 8).into_entries(),
            vec![2, 2, 2],
        )
        .unwrap();
        let lhs = o.matmul(&apply(&ch, &rho).unwrap()).unwrap().trace();
        let rhs = adjoint_apply(&ch, &o).unwrap().matmul(&rho).unwrap().trace();
        assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn cloner_output_symmetric_and_supported() {
        let ch = universal_cloner::<f64>(2, 1, 10).unwrap();
        let out = apply(&ch, &random_state(2, 9)).unwrap();
        assert!(adjacent_swap_residual(&out, 10) < 1e-10);
        let ch3 = universal_cloner::<f64>(2, 1, 3).unwrap();
        let out3 = apply(&ch3, &random_state(2, 10)).unwrap();
        let p: Op = symmetrizer(2, 3).unwrap();
        let q = Op::identity(vec![2, 2, 2]).unwrap().sub(&p).unwrap();
        let sandwich = q.matmul(&out3).unwrap().matmul(&q).unwrap();
        assert!(sandwich.max_abs() <= 1e-10);
        // spot check a non-adjacent permutation
        let u: Op = permutation_operator(&[2, 0, 1], 2).unwrap();
        let conj = u.matmul(&out3).unwrap().matmul(&u.adjoint()).unwrap();
        assert!(conj.max_abs_diff(&out3).unwrap() < 1e-9);
    }

    #[test]
    fn noisy_cloner_limits() {
        let clean = universal_cloner::<f64>(2, 1, 2).unwrap();
        let zero = noisy_cloner::<f64>(2, 1, 2, 0.0).unwrap();
        assert!(clean.choi().max_abs_diff(zero.choi()).unwrap() < 1e-12);
        let full = noisy_cloner::<f64>(2, 1, 2, 1.0).unwrap();
        let out = apply(&full, &random_state(2, 11)).unwrap();
        assert!(out.max_abs_diff(&Op::diagonal(&[0.25; 4])).unwrap() < 1e-12);
        assert!(noisy_cloner::<f64>(2, 1, 2, 1.5).is_err());
        assert!(noisy_cloner::<f64>(2, 1, 2, -0.1).is_err());
    }

    #[test]
    fn noisy_cloner_leaves_symmetric_subspace() {
        let ch = noisy_cloner::<f64>(2, 1, 3, 0.1).unwrap();
        let out = apply(&ch, &Op::diagonal(&[1.0, 0.0])).unwrap();
        let p: Op = symmetrizer(2, 3).unwrap();
        let q = Op::identity(vec![2, 2, 2]).unwrap().sub(&p).unwrap();
        let sandwich = q.matmul(&out).unwrap().matmul(&q).unwrap();
        assert!(sandwich.max_abs() > 1e-3);
    }

    #[test]
    fn measure_prepare_cases() {
        let sigma = random_state(2, 12);
        let mp = measure_prepare(&[Op::identity(vec![2]).unwrap()], std::slice::from_ref(&sigma), 2).unwrap();
        let fp = fixed_prep_channel(&sigma, 2).unwrap();
        assert!(mp.choi().max_abs_diff(fp.choi()).unwrap() < 1e-15);

        let p0 = Op::diagonal(&[1.0, 0.0]);
        let p1 = Op::diagonal(&[0.0, 1.0]);
        let ch = measure_prepare(&[p0.clone(), p1.clone()], &[p0.clone(), p1.clone()], 2).unwrap();
        let q = 0.3;
        let out = apply(&ch, &Op::diagonal(&[q, 1.0 - q])).unwrap();
        assert!(out.max_abs_diff(&Op::diagonal(&[q, 0.0, 0.0, 1.0 - q])).unwrap() < 1e-15);

        let out = apply(&ch, &random_state(2, 13)).unwrap();
        assert!(adjacent_swap_residual(&out, 2) < 1e-12);
        assert!(measure_prepare(std::slice::from_ref(&p0), std::slice::from_ref(&p0), 2).is_err());
        assert!(measure_prepare(&[p0.clone(), p1], &[p0], 2).is_err());
    }

    #[test]
    fn validation_reports() {
        let r = validate_sdi(&universal_cloner::<f64>(2, 1, 3).unwrap(), 1e-12).unwrap();
        assert!(r.passed && r.symmetric_support);
        let r = validate_sdi(&noisy_cloner::<f64>(2, 1, 3, 0.1).unwrap(), 1e-12).unwrap();
        assert!(r.passed && !r.symmetric_support);
        let sigma = Op::diagonal(&[1.0, 0.0]);
        let tau = Op::diagonal(&[0.0, 1.0]);
        let asym = QuantumChannel::constant(&product_state(&[sigma, tau]).unwrap(), 2).unwrap();
        let r = validate_sdi(&asym, 1e-9).unwrap();
        assert!(!r.passed);
        let mixed = QuantumChannel::<f64>::from_blocks(vec![2, 3], 1, |_, _| {
            Op::identity(vec![2, 3]).map(|i| i.scale(1.0 / 6.0))
        })
        .unwrap();
        assert!(validate_sdi(&mixed, 1e-9).is_err());
    }

    #[test]
    fn pure_input_uses_symmetric_coordinates() {
        let ch = universal_cloner::<f64>(2, 2, 3).unwrap();
        let phi = Op::ket(vec![c(0.6), Complex::new(0.0, 0.8)], vec![2]).unwrap();
        let inp = ch.pure_input(&phi).unwrap();
        assert_eq!(inp.dim(), 3);
        assert!((inp.trace().re - 1.0).abs() < 1e-12);
        // the N=2 copies of phi read back from the output's two-user marginal
        let out = apply(&ch, &inp).unwrap();
        assert!((out.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = SdiChannelSpec::NoisyCloner { d: 2, n: 1, m: 3, p: 0.1 };
        let s = serde_json::to_string(&spec).unwrap();
        assert_eq!(s, r#"{"kind":"noisy_cloner","d":2,"N":1,"M":3,"p":0.1}"#);
        let back: SdiChannelSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, spec);
        let fp: SdiChannelSpec = serde_json::from_str(
            r#"{"kind":"fixed_prep","d":2,"M":2,"prep":[[[1,0],[0,0]],[[0,0],[0,0]]]}"#,
        )
        .unwrap();
        let ch = fp.build::<f64>().unwrap();
        assert_eq!(ch.dim_out(), 4);
        assert!(serde_json::from_str::<SdiChannelSpec>(r#"{"kind":"universal_cloner","d":2,"N":1,"M":2,"x":1}"#).is_err());
    }
}
