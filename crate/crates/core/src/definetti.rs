//! Finite de Finetti approximations of permutation-invariant outputs.
//!
//! For an `M`-user state `ρ` on the symmetric subspace, the separable
//! approximation is `∫ dψ p(ψ) |ψ⟩⟨ψ|^{⊗M}` with density
//! `p(ψ) = d_M^+ ⟨ψ|^{⊗M} ρ |ψ⟩^{⊗M}`. Its `k`-user marginal has the closed form
//!
//! ```text
//! ρ̃^{(k)} = (d_M^+ / d_{M+k}^+) Tr_{1..M}[(ρ ⊗ 1^{⊗k}) Π_{M+k}]
//! ```
//!
//! because `∫ dψ |ψ⟩⟨ψ|^{⊗n} = Π_n / d_n^+`. States outside the symmetric
//! subspace are first purified into the symmetric subspace of `(C^d ⊗ C^d)^{⊗M}`
//! and the ancilla halves are traced out afterwards.

use nalgebra::DMatrix;
use num_traits::{One, Zero};

use crate::channels::{adjoint_apply, validate_sdi, QuantumChannel};
use crate::error::{Error, Result};
use crate::linalg::{
    adjacent_swap_residual, checked_pow, partial_trace, permuted_indices, psd_sqrt, DenseOperator,
    FactorSubset,
};
use crate::montecarlo::{self, MonteCarloEstimate};
use crate::scalar::{cabs, cre, Real, C};
use crate::symspace::{sym_basis, sym_dim, HaarSampler, SymBasis};

/// How a reduced approximation was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReductionMethod {
    SymmetricExact,
    GeneralExact,
    MonteCarlo,
}

/// Which approximation applies to an output state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    /// Output supported on the symmetric subspace of `(C^d)^{⊗M}`.
    Symmetric,
    /// Any permutation-invariant output, via a symmetric purification.
    General,
}

/// `k`-user marginal of the separable approximation.
#[derive(Clone, Debug, PartialEq)]
pub struct ApproxReduction<T: Real> {
    pub k: usize,
    pub tilde_rho_k: DenseOperator<T>,
    pub method: ReductionMethod,
    pub sample_count: Option<usize>,
    pub seed: Option<u64>,
    /// Componentwise standard errors, Monte Carlo only.
    pub std_err: Option<DMatrix<C<T>>>,
}

impl<T: Real> ApproxReduction<T> {
    fn exact(k: usize, tilde_rho_k: DenseOperator<T>, method: ReductionMethod) -> Self {
        Self {
            k,
            tilde_rho_k,
            method,
            sample_count: None,
            seed: None,
            std_err: None,
        }
    }

    fn from_estimate(k: usize, d: usize, est: MonteCarloEstimate<T>) -> Result<Self> {
        Ok(Self {
            k,
            tilde_rho_k: DenseOperator::new(est.mean.clone(), vec![d; k])?,
            method: ReductionMethod::MonteCarlo,
            sample_count: Some(est.samples),
            seed: Some(est.seed),
            std_err: Some(est.std_err),
        })
    }

    /// Monte Carlo estimate view (mean and errors), if this is a sampled result.
    pub fn estimate(&self) -> Option<MonteCarloEstimate<T>> {
        Some(MonteCarloEstimate {
            mean: self.tilde_rho_k.entries().clone(),
            std_err: self.std_err.clone()?,
            samples: self.sample_count?,
            seed: self.seed?,
        })
    }
}

/// Local dimension and number of factors of an `M`-user operator.
pub(crate) fn users<T: Real>(rho: &DenseOperator<T>) -> Result<(usize, usize)> {
    let dims = rho.factor_dims();
    let Some(&d) = dims.first() else {
        return Err(Error::InvalidArgument("operator has no tensor factors".into()));
    };
    if dims.iter().any(|&f| f != d) {
        return Err(Error::InvalidArgument(format!(
            "factors {dims:?} are not identical"
        )));
    }
    if !rho.is_square() {
        return Err(Error::InvalidArgument("operator is not square".into()));
    }
    Ok((d, dims.len()))
}

fn check_unit<T: Real>(psi: &DenseOperator<T>) -> Result<()> {
    if !psi.is_ket() {
        return Err(Error::InvalidArgument("expected a ket".into()));
    }
    let n = psi.norm();
    if (n - T::one()).abs() > T::herm_tol() {
        return Err(Error::InvalidArgument(format!(
            "ket has norm {}, expected 1",
            n.as_f64()
        )));
    }
    Ok(())
}

fn scalar_one<T: Real>(k: usize) -> Result<ApproxReduction<T>> {
    Ok(ApproxReduction::exact(
        k,
        DenseOperator::identity(vec![])?,
        ReductionMethod::SymmetricExact,
    ))
}

fn ratio<T: Real>(d: usize, m: usize, k: usize) -> Result<T> {
    Ok(T::lit(sym_dim(d, m)? as f64) / T::lit(sym_dim(d, m + k)? as f64))
}

/// Weight of `ρ_out` outside the symmetric subspace, checked against the
/// support tolerance.
fn require_symmetric_support<T: Real>(rho: &DenseOperator<T>, basis: &SymBasis<T>) -> Result<()> {
    let residual = basis.outside_weight(rho)?;
    if residual > T::support_tol() {
        return Err(Error::NotSymmetricSupport {
            residual: residual.as_f64(),
        });
    }
    Ok(())
}

/// Column `s` of the `(M+k)`-copy isometry reshaped to `d^M × d^k`.
fn column_block<T: Real>(basis: &SymBasis<T>, s: usize, tail: usize, head: usize) -> DMatrix<C<T>> {
    let mut vs = DMatrix::zeros(head, tail);
    let a = cre(basis.amplitude(s));
    for &r in basis.support(s) {
        vs[(r / tail, r % tail)] = a;
    }
    vs
}

/// `Σ_s (V_sᵀ ρ V_s)ᵀ`, which equals `Tr_{1..M}[(ρ ⊗ 1) Π_{M+k}]`.
fn contract_operator<T: Real>(rho: &DMatrix<C<T>>, d: usize, m: usize, k: usize) -> Result<DMatrix<C<T>>> {
    let basis = sym_basis::<T>(d, m + k)?;
    let tail = checked_pow("reduced state", d, k)?;
    let head = rho.nrows();
    let mut acc = DMatrix::zeros(tail, tail);
    for s in 0..basis.sym_dim() {
        let vs = column_block(&basis, s, tail, head);
        let block = vs.transpose() * rho * &vs;
        acc += block.transpose();
    }
    Ok(acc)
}

/// Same contraction for `ρ = |φ⟩⟨φ|`: `Σ_s ū_s ū_s†` with `u_s = V_sᵀ φ`.
fn contract_ket<T: Real>(phi: &DMatrix<C<T>>, d: usize, m: usize, k: usize) -> Result<DMatrix<C<T>>> {
    let basis = sym_basis::<T>(d, m + k)?;
    let tail = checked_pow("reduced state", d, k)?;
    let mut acc = DMatrix::zeros(tail, tail);
    for s in 0..basis.sym_dim() {
        let a = basis.amplitude(s);
        let mut u: DMatrix<C<T>> = DMatrix::zeros(tail, 1);
        for &r in basis.support(s) {
            u[(r % tail, 0)] += phi[(r / tail, 0)] * a;
        }
        let ubar = u.map(|z| z.conj());
        acc += &ubar * ubar.adjoint();
    }
    Ok(acc)
}

/// De Finetti density `p(ψ) = d_M^+ ⟨ψ|^{⊗M} ρ_out |ψ⟩^{⊗M}`.
pub fn definetti_weight<T: Real>(rho_out: &DenseOperator<T>, psi: &DenseOperator<T>) -> Result<T> {
    check_unit(psi)?;
    let (d, m) = users(rho_out)?;
    if psi.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: psi.dim(),
        });
    }
    let psi = psi.clone().with_factor_dims(vec![d])?;
    let overlap = rho_out.expectation(&psi.tensor_power(m)?)?;
    Ok(overlap.re * T::lit(sym_dim(d, m)? as f64))
}

/// Exact `k`-user marginal of the separable approximation of an output
/// supported on the symmetric subspace.
pub fn approx_reduced_symmetric<T: Real>(rho_out: &DenseOperator<T>, k: usize) -> Result<ApproxReduction<T>> {
    let (d, m) = users(rho_out)?;
    if k > m {
        return Err(Error::InvalidArgument(format!("k={k} exceeds M={m}")));
    }
    checked_pow("symmetric approximation", d, m + k)?;
    require_symmetric_support(rho_out, &sym_basis(d, m)?)?;
    if k == 0 {
        return scalar_one(0);
    }
    let acc = contract_operator(rho_out.entries(), d, m, k)?;
    let scale = ratio::<T>(d, m, k)?;
    Ok(ApproxReduction::exact(
        k,
        DenseOperator::new(acc.map(|z| z * scale), vec![d; k])?,
        ReductionMethod::SymmetricExact,
    ))
}

/// `P_ψ = 𝓔*(d_M^+ |ψ⟩⟨ψ|^{⊗M})`, the measurement element the channel induces
/// on its input.
pub fn induced_povm_element<T: Real>(ch: &QuantumChannel<T>, psi: &DenseOperator<T>) -> Result<DenseOperator<T>> {
    check_unit(psi)?;
    let m = ch.num_outputs();
    let d = ch.out_factors()[0];
    if psi.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: psi.dim(),
        });
    }
    let report = validate_sdi(ch, T::support_tol())?;
    if !report.symmetric_support {
        return Err(Error::NotSymmetricSupport {
            residual: report.support_residual.as_f64(),
        });
    }
    let psi = psi.clone().with_factor_dims(vec![d])?;
    let pi = psi.tensor_power(m)?.projector()?.scale(T::lit(sym_dim(d, m)? as f64));
    adjoint_apply(ch, &pi)
}

/// Factor `j` of the purification is the pair `(system_j, ancilla_j)` with
/// the system digit more significant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairLayout {
    pub d: usize,
    pub m: usize,
}

/// Purification of a permutation-invariant state inside the symmetric
/// subspace of `(C^d ⊗ C^d)^{⊗M}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Purification<T: Real> {
    phi: DenseOperator<T>,
    layout: PairLayout,
}

impl<T: Real> Purification<T> {
    /// The purifying ket, with factor dimensions `[d²; M]`.
    pub fn phi(&self) -> &DenseOperator<T> {
        &self.phi
    }

    pub fn layout(&self) -> PairLayout {
        self.layout
    }

    /// Traces out every ancilla half.
    pub fn system_marginal(&self) -> Result<DenseOperator<T>> {
        let PairLayout { d, m } = self.layout;
        let split = self.phi.clone().with_factor_dims(vec![d; 2 * m])?;
        let keep = FactorSubset::new((0..m).map(|j| 2 * j).collect())?;
        partial_trace(&split.projector()?, &keep)
    }

    /// Max-abs entry of `Tr_anc|Φ⟩⟨Φ| - ρ`.
    pub fn roundtrip_residual(&self, rho: &DenseOperator<T>) -> Result<T> {
        self.system_marginal()?.max_abs_diff(rho)
    }

    /// Largest change of `|Φ⟩` under swapping two adjacent pairs.
    pub fn pair_permutation_residual(&self) -> Result<T> {
        let PairLayout { d, m } = self.layout;
        let amps = self.phi.entries();
        let mut worst = T::zero();
        for j in 0..m.saturating_sub(1) {
            let mut perm: Vec<usize> = (0..m).collect();
            perm.swap(j, j + 1);
            for (i, &target) in permuted_indices(&perm, d * d)?.iter().enumerate() {
                worst = worst.max(cabs(amps[(target, 0)] - amps[(i, 0)]));
            }
        }
        Ok(worst)
    }
}

/// `|Φ⟩ = (√ρ ⊗ 1) Σ_i |i⟩|i⟩`, regrouped so each factor is a
/// (system, ancilla) pair.
pub fn purify_perm_invariant<T: Real>(rho: &DenseOperator<T>, tol: T) -> Result<Purification<T>> {
    let (d, m) = users(rho)?;
    checked_pow("purification", d * d, m)?;
    let residual = adjacent_swap_residual(rho, m);
    if residual > tol {
        return Err(Error::NotPermutationInvariant {
            residual: residual.as_f64(),
        });
    }
    let root = psd_sqrt(rho)?;
    let dims = vec![d; m];
    let n = rho.dim();
    let pair_dims = vec![d * d; m];
    let pair_strides = crate::linalg::strides(&pair_dims);
    let mut amps = vec![C::zero(); n * n];
    for x in 0..n {
        let xs = crate::linalg::digits(x, &dims);
        for i in 0..n {
            let is = crate::linalg::digits(i, &dims);
            let pos: usize = (0..m).map(|j| (xs[j] * d + is[j]) * pair_strides[j]).sum();
            amps[pos] = root.get(x, i);
        }
    }
    Ok(Purification {
        phi: DenseOperator::ket(amps, pair_dims)?,
        layout: PairLayout { d, m },
    })
}

/// Exact `k`-user marginal of the separable approximation of any
/// permutation-invariant output.
pub fn approx_reduced_general<T: Real>(rho_out: &DenseOperator<T>, k: usize) -> Result<ApproxReduction<T>> {
    let (d, m) = users(rho_out)?;
    if k > m {
        return Err(Error::InvalidArgument(format!("k={k} exceeds M={m}")));
    }
    let big = d * d;
    checked_pow("purified approximation", big, m + k)?;
    if k == 0 {
        return Ok(ApproxReduction::exact(
            0,
            DenseOperator::identity(vec![])?,
            ReductionMethod::GeneralExact,
        ));
    }
    let pur = purify_perm_invariant(rho_out, T::support_tol())?;
    let acc = contract_ket(pur.phi().entries(), big, m, k)?;
    let scale = ratio::<T>(big, m, k)?;
    let pairs = DenseOperator::new(acc.map(|z| z * scale), vec![d; 2 * k])?;
    let keep = FactorSubset::new((0..k).map(|j| 2 * j).collect())?;
    Ok(ApproxReduction::exact(
        k,
        partial_trace(&pairs, &keep)?,
        ReductionMethod::GeneralExact,
    ))
}

/// Dispatches to the symmetric or general closed form.
pub fn approx_reduced<T: Real>(rho_out: &DenseOperator<T>, k: usize, route: Route) -> Result<ApproxReduction<T>> {
    match route {
        Route::Symmetric => approx_reduced_symmetric(rho_out, k),
        Route::General => approx_reduced_general(rho_out, k),
    }
}

/// Picks [`Route::Symmetric`] when the output lives on the symmetric subspace.
pub fn route_for<T: Real>(rho_out: &DenseOperator<T>) -> Result<Route> {
    let (d, m) = users(rho_out)?;
    let outside = sym_basis::<T>(d, m)?.outside_weight(rho_out)?;
    Ok(if outside <= T::support_tol() {
        Route::Symmetric
    } else {
        Route::General
    })
}

fn tensor_power_matrix<T: Real>(x: &DMatrix<C<T>>, k: usize) -> DMatrix<C<T>> {
    let mut acc = DMatrix::from_element(1, 1, C::one());
    for _ in 0..k {
        acc = acc.kronecker(x);
    }
    acc
}

/// Direct Monte Carlo estimate of `∫ dψ p(ψ) |ψ⟩⟨ψ|^{⊗k}` for an output on
/// the symmetric subspace.
pub fn mc_approx_reduced<T: Real>(
    rho_out: &DenseOperator<T>,
    k: usize,
    n_samples: usize,
    seed: u64,
) -> Result<ApproxReduction<T>> {
    let (d, m) = users(rho_out)?;
    if k > m || n_samples == 0 {
        return Err(Error::InvalidArgument(format!(
            "need k <= M and at least one sample (k={k}, M={m}, samples={n_samples})"
        )));
    }
    let side = checked_pow("reduced state", d, k)?;
    let basis = sym_basis::<T>(d, m)?;
    require_symmetric_support(rho_out, &basis)?;
    let sigma = basis.compress(rho_out)?.into_entries();
    let dm = T::lit(sym_dim(d, m)? as f64);
    let sampler = HaarSampler::new(d, seed);
    let est = montecarlo::estimate(side, side, n_samples, seed, |i| {
        let psi = sampler.amplitudes_at::<T>(i);
        let c = DMatrix::from_vec(basis.sym_dim(), 1, basis.product_coordinates(&psi).expect("d matches"));
        let w = c.dotc(&(&sigma * &c)).re * dm;
        let v = DMatrix::from_vec(d, 1, psi);
        tensor_power_matrix(&(&v * v.adjoint()), k).map(|z| z * w)
    });
    ApproxReduction::from_estimate(k, d, est)
}

/// Monte Carlo counterpart of [`approx_reduced_general`]: samples pure pair
/// states `Ψ`, weights them by `D_M^+ |⟨Ψ^{⊗M}|Φ⟩|²` and averages
/// `(Tr_anc |Ψ⟩⟨Ψ|)^{⊗k}`.
pub fn mc_approx_reduced_general<T: Real>(
    rho_out: &DenseOperator<T>,
    k: usize,
    n_samples: usize,
    seed: u64,
) -> Result<ApproxReduction<T>> {
    let (d, m) = users(rho_out)?;
    if k > m || n_samples == 0 {
        return Err(Error::InvalidArgument(format!(
            "need k <= M and at least one sample (k={k}, M={m}, samples={n_samples})"
        )));
    }
    let side = checked_pow("reduced state", d, k)?;
    let big = d * d;
    let pur = purify_perm_invariant(rho_out, T::support_tol())?;
    let basis = sym_basis::<T>(big, m)?;
    let u = basis.coordinates(pur.phi())?.into_entries();
    let dm = T::lit(sym_dim(big, m)? as f64);
    let sampler = HaarSampler::new(big, seed);
    let est = montecarlo::estimate(side, side, n_samples, seed, |i| {
        let psi = sampler.amplitudes_at::<T>(i);
        let c = DMatrix::from_vec(basis.sym_dim(), 1, basis.product_coordinates(&psi).expect("d matches"));
        let overlap = c.dotc(&u);
        let w = (overlap * overlap.conj()).re * dm;
        let local = DMatrix::from_fn(d, d, |x, y| {
            (0..d).fold(C::zero(), |acc, a| acc + psi[x * d + a] * psi[y * d + a].conj())
        });
        tensor_power_matrix(&local, k).map(|z| z * w)
    });
    ApproxReduction::from_estimate(k, d, est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{apply, fixed_prep_channel, noisy_cloner, universal_cloner};
    use crate::linalg::tensor_product;
    use crate::symspace::symmetrizer;

    type Op = DenseOperator<f64>;

    /// Brute-force `(d_M^+/d_{M+k}^+) Tr_{1..M}[(ρ ⊗ 1) Π_{M+k}]` with dense matrices.
    fn brute_force(rho: &Op, d: usize, m: usize, k: usize) -> Op {
        let id = Op::identity(vec![d; k]).unwrap();
        let big = tensor_product(rho, &id).unwrap();
        let p: Op = symmetrizer(d, m + k).unwrap();
        let prod = big.matmul(&p).unwrap();
        let keep = FactorSubset::new((m..m + k).collect()).unwrap();
        let scale = sym_dim(d, m).unwrap() as f64 / sym_dim(d, m + k).unwrap() as f64;
        partial_trace(&prod, &keep).unwrap().scale(scale)
    }

    fn cloner_output(d: usize, n: usize, m: usize, phi: &Op) -> Op {
        let ch = universal_cloner::<f64>(d, n, m).unwrap();
        apply(&ch, &ch.pure_input(phi).unwrap()).unwrap()
    }

    fn complex_qubit() -> Op {
        Op::ket(vec![C::new(0.6, 0.0), C::new(0.0, 0.8)], vec![2]).unwrap()
    }

    #[test]
    fn k_zero_is_scalar_one() {
        let rho = Op::diagonal(&[1.0, 0.0, 0.0, 0.0]).with_factor_dims(vec![2, 2]).unwrap();
        let r = approx_reduced_symmetric(&rho, 0).unwrap();
        assert_eq!(r.tilde_rho_k.dim(), 1);
        assert_eq!(r.tilde_rho_k.get(0, 0), C::new(1.0, 0.0));
        let g = approx_reduced_general(&rho, 0).unwrap();
        assert_eq!(g.tilde_rho_k.get(0, 0), C::new(1.0, 0.0));
    }

    #[test]
    fn two_copies_of_zero() {
        let rho = Op::diagonal(&[1.0, 0.0, 0.0, 0.0]).with_factor_dims(vec![2, 2]).unwrap();
        let r = approx_reduced_symmetric(&rho, 1).unwrap();
        assert_eq!(r.method, ReductionMethod::SymmetricExact);
        assert!(r.tilde_rho_k.max_abs_diff(&Op::diagonal(&[0.75, 0.25])).unwrap() < 1e-14);
    }

    #[test]
    fn closed_form_matches_dense_definition() {
        let phi = complex_qubit();
        for (n, m, k) in [(1, 2, 1), (1, 3, 2), (2, 3, 1), (1, 3, 3)] {
            let out = cloner_output(2, n, m, &phi);
            let fast = approx_reduced_symmetric(&out, k).unwrap().tilde_rho_k;
            let slow = brute_force(&out, 2, m, k);
            assert!(fast.max_abs_diff(&slow).unwrap() < 1e-13, "(n,m,k)=({n},{m},{k})");
        }
        let out = cloner_output(3, 1, 2, &HaarSampler::new(3, 9).ket_at(0));
        let fast = approx_reduced_symmetric(&out, 1).unwrap().tilde_rho_k;
        assert!(fast.max_abs_diff(&brute_force(&out, 3, 2, 1)).unwrap() < 1e-13);
    }

    #[test]
    fn reductions_are_states_and_marginally_consistent() {
        let out = cloner_output(2, 1, 4, &complex_qubit());
        let mut prev: Option<Op> = None;
        for k in 0..=3 {
            let r = approx_reduced_symmetric(&out, k).unwrap().tilde_rho_k;
            r.check_state().unwrap();
            if let Some(p) = prev {
                let traced = partial_trace(&r, &FactorSubset::first(k - 1)).unwrap();
                assert!(traced.max_abs_diff(&p).unwrap() < 1e-9);
            }
            prev = Some(r);
        }
    }

    #[test]
    fn general_route_marginal_consistency() {
        let ch = noisy_cloner::<f64>(2, 1, 3, 0.1).unwrap();
        let out = apply(&ch, &Op::diagonal(&[1.0, 0.0])).unwrap();
        let r1 = approx_reduced_general(&out, 1).unwrap().tilde_rho_k;
        let r2 = approx_reduced_general(&out, 2).unwrap().tilde_rho_k;
        r1.check_state().unwrap();
        r2.check_state().unwrap();
        let traced = partial_trace(&r2, &FactorSubset::first(1)).unwrap();
        assert!(traced.max_abs_diff(&r1).unwrap() < 1e-9);
    }

    #[test]
    fn support_violation_is_reported() {
        let out = Op::identity(vec![2, 2]).unwrap().scale(0.25);
        assert!(matches!(
            approx_reduced_symmetric(&out, 1),
            Err(Error::NotSymmetricSupport { .. })
        ));
        assert_eq!(route_for(&out).unwrap(), Route::General);
    }

    #[test]
    fn weights() {
        let psi0: Op = HaarSampler::new(2, 1).ket_at(0);
        let rho = psi0.tensor_power(3).unwrap().projector().unwrap();
        let w = definetti_weight(&rho, &psi0).unwrap();
        assert!((w - 4.0).abs() < 1e-12);

        let p: Op = symmetrizer(2, 3).unwrap();
        let flat = p.scale(0.25);
        for i in 0..5 {
            let psi: Op = HaarSampler::new(2, 2).ket_at(i);
            assert!((definetti_weight(&flat, &psi).unwrap() - 1.0).abs() < 1e-12);
        }
        let bad = Op::ket(vec![C::new(1.0, 0.0), C::new(1.0, 0.0)], vec![2]).unwrap();
        assert!(definetti_weight(&flat, &bad).is_err());
    }

    #[test]
    fn induced_element_of_identity_channel() {
        let ch = QuantumChannel::<f64>::identity(2).unwrap();
        let psi: Op = HaarSampler::new(2, 3).ket_at(0);
        let p = induced_povm_element(&ch, &psi).unwrap();
        assert!(p.max_abs_diff(&psi.projector().unwrap().scale(2.0)).unwrap() < 1e-14);
        let noisy = noisy_cloner::<f64>(2, 1, 2, 0.2).unwrap();
        assert!(induced_povm_element(&noisy, &psi).is_err());
    }

    #[test]
    fn purification_of_maximally_mixed_pair() {
        let rho = Op::identity(vec![2, 2]).unwrap().scale(0.25);
        let pur = purify_perm_invariant(&rho, 1e-8).unwrap();
        for z in pur.phi().entries().iter() {
            assert!(cabs(*z) < 1e-15 || (cabs(*z) - 0.5).abs() < 1e-14);
        }
        assert!(pur.roundtrip_residual(&rho).unwrap() < 1e-14);
        assert!(pur.pair_permutation_residual().unwrap() < 1e-14);
    }

    #[test]
    fn purification_of_product_state() {
        let sigma = Op::diagonal(&[2.0 / 3.0, 1.0 / 3.0]);
        let rho = tensor_product(&sigma, &sigma).unwrap();
        let pur = purify_perm_invariant(&rho, 1e-8).unwrap();
        assert!((pur.phi().norm() - 1.0).abs() < 1e-14);
        assert!(pur.roundtrip_residual(&rho).unwrap() < 1e-10);
        assert!(pur.pair_permutation_residual().unwrap() < 1e-10);
    }

    #[test]
    fn purification_rejects_asymmetric_input() {
        let rho = tensor_product(&Op::diagonal(&[1.0, 0.0]), &Op::diagonal(&[0.0, 1.0])).unwrap();
        assert!(matches!(
            purify_perm_invariant(&rho, 1e-8),
            Err(Error::NotPermutationInvariant { .. })
        ));
    }

    #[test]
    fn mc_matches_exact_and_is_reproducible() {
        let rho = Op::diagonal(&[1.0, 0.0, 0.0, 0.0]).with_factor_dims(vec![2, 2]).unwrap();
        let a = mc_approx_reduced(&rho, 1, 20_000, 42).unwrap();
        let b = mc_approx_reduced(&rho, 1, 20_000, 42).unwrap();
        assert_eq!(a, b);
        let est = a.estimate().unwrap();
        let exact = Op::diagonal(&[0.75, 0.25]);
        assert!(est.within(exact.entries(), 5.0), "z={}", est.max_z_score(exact.entries()));
    }

    #[test]
    fn mc_general_matches_exact() {
        let ch = noisy_cloner::<f64>(2, 1, 2, 0.3).unwrap();
        let out = apply(&ch, &Op::diagonal(&[1.0, 0.0])).unwrap();
        let exact = approx_reduced_general(&out, 1).unwrap().tilde_rho_k;
        let mc = mc_approx_reduced_general(&out, 1, 40_000, 7).unwrap();
        let est = mc.estimate().unwrap();
        assert!(est.within(exact.entries(), 5.0), "z={}", est.max_z_score(exact.entries()));
    }

    #[test]
    fn fixed_prep_reduction() {
        let ch = fixed_prep_channel(&Op::diagonal(&[1.0, 0.0]), 2).unwrap();
        let out = apply(&ch, &Op::diagonal(&[0.5, 0.5])).unwrap();
        let r = approx_reduced(&out, 1, route_for(&out).unwrap()).unwrap();
        assert!(r.tilde_rho_k.max_abs_diff(&Op::diagonal(&[0.75, 0.25])).unwrap() < 1e-14);
    }

    mod invariants {
        use super::*;
        use crate::metrics::{lemma1_bound, trace_distance, BoundForm};
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn cloner_reductions_are_states_within_bound(
                seed in 0u64..10_000, n in 1usize..3, extra in 0usize..4, k in 1usize..4,
            ) {
                let m = n + extra;
                prop_assume!(k <= m);
                let phi: Op = HaarSampler::new(2, seed).ket_at(0);
                let out = cloner_output(2, n, m, &phi);
                let tilde = approx_reduced_symmetric(&out, k).unwrap().tilde_rho_k;
                prop_assert!(tilde.check_state().is_ok());
                let marginal = partial_trace(&out, &FactorSubset::first(k)).unwrap();
                let dist = trace_distance(&marginal, &tilde).unwrap();
                prop_assert!(dist <= lemma1_bound::<f64>(2, m, k, BoundForm::Exact).unwrap() + 1e-9);
            }

            #[test]
            fn weight_is_nonnegative(seed in 0u64..10_000) {
                let s = HaarSampler::new(2, seed);
                let out = cloner_output(2, 1, 3, &s.ket_at(0));
                let w = definetti_weight(&out, &s.ket_at(1)).unwrap();
                prop_assert!(w >= -1e-12);
            }
        }
    }
}
