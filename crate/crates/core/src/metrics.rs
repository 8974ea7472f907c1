//! Distances, discrimination probabilities and the analytic bounds they are
//! compared against.

use num_rational::Ratio;
use serde::Serialize;

use crate::channels::{apply, validate_sdi, QuantumChannel};
use crate::definetti::{approx_reduced, route_for, users, Route};
use crate::error::{Error, Result};
use crate::linalg::{herm_eigvals, partial_trace, DenseOperator, FactorSubset};
use crate::scalar::Real;
use crate::symspace::sym_dim;

/// Slack used when comparing a computed quantity with a bound.
pub const BOUND_SLACK: f64 = 1e-9;

/// `‖ρ - σ‖₁`, the sum of absolute eigenvalues of the difference.
pub fn trace_distance<T: Real>(rho: &DenseOperator<T>, sigma: &DenseOperator<T>) -> Result<T> {
    if rho.dim() != sigma.dim() || !rho.is_square() || !sigma.is_square() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: sigma.dim(),
        });
    }
    let diff = rho.sub(sigma)?;
    let residual = diff.hermitian_residual();
    if residual > T::herm_tol() {
        return Err(Error::NotHermitian {
            residual: residual.as_f64(),
        });
    }
    Ok(herm_eigvals(&diff)?.into_iter().fold(T::zero(), |acc, x| acc + x.abs()))
}

/// Optimal error probability for telling `ρ` from `σ` with equal priors.
pub fn helstrom_perr<T: Real>(rho: &DenseOperator<T>, sigma: &DenseOperator<T>) -> Result<T> {
    Ok(T::lit(0.5) - trace_distance(rho, sigma)? / T::lit(4.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundForm {
    Exact,
    /// Leading order in `k/M`.
    Asymptotic,
}

fn check_bound_args(d: usize, m: usize, k: usize) -> Result<()> {
    if d < 1 || m < 1 || k > m {
        return Err(Error::InvalidArgument(format!(
            "bound needs d >= 1, M >= 1 and k <= M (d={d}, M={m}, k={k})"
        )));
    }
    Ok(())
}

/// `4(1 - √(d_{M-k}^+ / d_M^+))` or `2(d-1)k/M` for local dimension `d`.
fn bound_for<T: Real>(d: usize, m: usize, k: usize, form: BoundForm) -> Result<T> {
    Ok(match form {
        BoundForm::Exact => {
            let r = sym_dim(d, m - k)? as f64 / sym_dim(d, m)? as f64;
            T::lit(4.0 * (1.0 - r.sqrt()))
        }
        BoundForm::Asymptotic => T::lit(2.0 * (d - 1) as f64 * k as f64 / m as f64),
    })
}

/// Trace-norm bound for outputs on the symmetric subspace:
/// `4(1 - √(d_{M-k}^+ / d_M^+))`, or `2(d-1)k/M` to leading order.
pub fn lemma1_bound<T: Real>(d: usize, m: usize, k: usize, form: BoundForm) -> Result<T> {
    check_bound_args(d, m, k)?;
    bound_for(d, m, k, form)
}

/// Same bound for any permutation-invariant output, with `d²` in place of `d`.
pub fn general_bound<T: Real>(d: usize, m: usize, k: usize, form: BoundForm) -> Result<T> {
    check_bound_args(d, m, k)?;
    bound_for(d * d, m, k, form)
}

/// Lower bound `1/2 - (d-1)/(2M)` on the single-output discrimination error.
pub fn perr_lower_bound<T: Real>(d: usize, m: usize) -> Result<T> {
    if d < 1 || m < 1 {
        return Err(Error::InvalidArgument(format!("need d >= 1 and M >= 1 (d={d}, M={m})")));
    }
    Ok(T::lit(0.5) - T::lit((d - 1) as f64 / (2.0 * m as f64)))
}

fn check_clone_args(n: usize, m: usize, d: usize) -> Result<()> {
    if n < 1 || m < n || d < 1 {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= N <= M and d >= 1 (N={n}, M={m}, d={d})"
        )));
    }
    Ok(())
}

fn ratio_u64(num: u128, den: u128) -> Result<Ratio<u64>> {
    let r = Ratio::new(num, den);
    match (u64::try_from(*r.numer()), u64::try_from(*r.denom())) {
        (Ok(a), Ok(b)) => Ok(Ratio::new(a, b)),
        _ => Err(Error::Overflow(format!("{num}/{den} does not fit in u64"))),
    }
}

/// `N(d-1) / (M(N+d))` as an exact fraction.
pub fn universal_clone_gap_exact(n: usize, m: usize, d: usize) -> Result<Ratio<u64>> {
    check_clone_args(n, m, d)?;
    let (n, m, d) = (n as u128, m as u128, d as u128);
    ratio_u64(n * (d - 1), m * (n + d))
}

/// `N(d-1) / (M(N+d))`.
pub fn universal_clone_gap<T: Real>(n: usize, m: usize, d: usize) -> Result<T> {
    check_clone_args(n, m, d)?;
    Ok(T::lit((n * (d - 1)) as f64 / (m * (n + d)) as f64))
}

/// Single-copy fidelity of the optimal symmetric `N -> M` cloner,
/// `N/M + (M-N)(N+1)/(M(N+d))`, as an exact fraction.
pub fn universal_clone_fidelity_exact(n: usize, m: usize, d: usize) -> Result<Ratio<u64>> {
    check_clone_args(n, m, d)?;
    let (n, m, d) = (n as u128, m as u128, d as u128);
    ratio_u64(n * (n + d) + (m - n) * (n + 1), m * (n + d))
}

/// Fidelities of one output and of one user of the separable approximation
/// with the input `φ`, and the trace distance between the two marginals.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fidelities<T: Real> {
    pub f_clon: T,
    pub f_tilde: T,
    pub distance: T,
    pub route: RouteName,
}

/// Serializable copy of [`Route`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteName {
    Symmetric,
    General,
}

impl From<Route> for RouteName {
    fn from(r: Route) -> Self {
        match r {
            Route::Symmetric => RouteName::Symmetric,
            Route::General => RouteName::General,
        }
    }
}

/// Computes [`Fidelities`] for the pure input `φ` (as `φ^{⊗N}` for cloners).
pub fn single_user_fidelities<T: Real>(ch: &QuantumChannel<T>, phi: &DenseOperator<T>) -> Result<Fidelities<T>> {
    let report = validate_sdi(ch, T::herm_tol())?;
    if !report.passed {
        return Err(Error::NotPermutationInvariant {
            residual: report.max_residual.as_f64(),
        });
    }
    let out = apply(ch, &ch.pure_input(phi)?)?;
    let route = route_for(&out)?;
    let one = partial_trace(&out, &FactorSubset::first(1))?;
    let tilde = approx_reduced(&out, 1, route)?.tilde_rho_k;
    let d = ch.out_factors()[0];
    let phi = phi.clone().with_factor_dims(vec![d])?;
    Ok(Fidelities {
        f_clon: one.expectation(&phi)?.re,
        f_tilde: tilde.expectation(&phi)?.re,
        distance: trace_distance(&one, &tilde)?,
        route: route.into(),
    })
}

/// Parameters a bound was evaluated at.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoundParams {
    pub d: usize,
    pub n: Option<usize>,
    pub m: usize,
    pub k: usize,
}

/// A computed distance next to the bound it should respect.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport<T: Real> {
    pub actual: T,
    pub bound: T,
    pub asymptotic_bound: Option<T>,
    pub satisfied: bool,
    pub params: BoundParams,
}

impl<T: Real> BoundReport<T> {
    pub fn new(actual: T, bound: T, asymptotic_bound: Option<T>, params: BoundParams) -> Self {
        Self {
            satisfied: actual <= bound + T::lit(BOUND_SLACK),
            actual,
            bound,
            asymptotic_bound,
            params,
        }
    }
}

/// `‖ρ^{(k)} - ρ̃^{(k)}‖₁` for an `M`-user output and its separable
/// approximation along `route`, with the matching exact and leading-order
/// bounds.
pub fn reduction_report<T: Real>(rho_out: &DenseOperator<T>, k: usize, route: Route) -> Result<BoundReport<T>> {
    let (d, m) = users(rho_out)?;
    let marginal = partial_trace(rho_out, &FactorSubset::first(k))?;
    let tilde = approx_reduced(rho_out, k, route)?.tilde_rho_k;
    let actual = trace_distance(&marginal, &tilde)?;
    let (bound, asym) = match route {
        Route::Symmetric => (
            lemma1_bound(d, m, k, BoundForm::Exact)?,
            lemma1_bound(d, m, k, BoundForm::Asymptotic)?,
        ),
        Route::General => (
            general_bound(d, m, k, BoundForm::Exact)?,
            general_bound(d, m, k, BoundForm::Asymptotic)?,
        ),
    };
    Ok(BoundReport::new(
        actual,
        bound,
        Some(asym),
        BoundParams { d, n: None, m, k },
    ))
}
