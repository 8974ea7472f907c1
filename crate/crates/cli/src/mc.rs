//! Monte Carlo cross-checks against closed forms.

use serde::{Deserialize, Serialize};
use symbroadcast::symspace::haar_moment_estimate;
use symbroadcast::{
    apply, approx_reduced, mc_approx_reduced, mc_approx_reduced_general, route_for, symmetrizer,
    Channel, Operator, Route, SdiChannelSpec,
};

use crate::emit::Row;
use crate::error::Result;
use crate::fmt;
use crate::scenario::MC_Z_LIMIT;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McRow {
    /// `reduced` (separable approximation) or `identity` (Haar moment).
    pub target: String,
    pub d: usize,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    #[serde(rename = "M")]
    pub m: Option<usize>,
    /// Users kept, or tensor power for `identity`.
    pub k: usize,
    pub p: Option<f64>,
    pub samples: usize,
    pub seed: u64,
    pub route: Option<String>,
    pub max_abs_deviation: f64,
    pub max_z_score: f64,
    pub satisfied: bool,
}

impl Row for McRow {
    const HEADER: &'static [&'static str] = &[
        "target",
        "d",
        "N",
        "M",
        "k",
        "p",
        "samples",
        "seed",
        "route",
        "max_abs_deviation",
        "max_z_score",
        "satisfied",
    ];

    fn cells(&self) -> Vec<String> {
        vec![
            self.target.clone(),
            self.d.to_string(),
            fmt::opt(self.n),
            fmt::opt(self.m),
            self.k.to_string(),
            fmt::opt_real(self.p),
            self.samples.to_string(),
            self.seed.to_string(),
            self.route.clone().unwrap_or_default(),
            fmt::real(self.max_abs_deviation),
            fmt::real(self.max_z_score),
            self.satisfied.to_string(),
        ]
    }
}

/// `d_n^+ E[|ψ⟩⟨ψ|^{⊗n}]` over Haar samples against the symmetrizer.
pub fn identity_rows(d: usize, ns: &[usize], samples: usize, seed: u64) -> Result<Vec<McRow>> {
    ns.iter()
        .map(|&n| {
            let est = haar_moment_estimate::<f64>(d, n, samples, seed)?;
            let exact: Operator = symmetrizer(d, n)?;
            let z = est.max_z_score(exact.entries());
            Ok(McRow {
                target: "identity".into(),
                d,
                n: None,
                m: None,
                k: n,
                p: None,
                samples,
                seed,
                route: None,
                max_abs_deviation: est.max_abs_deviation(exact.entries()),
                max_z_score: z,
                satisfied: z <= MC_Z_LIMIT,
            })
        })
        .collect()
}

/// Sampled separable approximation of the channel's output on `|0⟩` against
/// the exact one.
pub fn reduced_rows(spec: &SdiChannelSpec, ks: &[usize], samples: usize, seed: u64) -> Result<Vec<McRow>> {
    let ch: Channel = spec.build()?;
    let zero = Operator::basis_ket(0, vec![spec.d()])?;
    let out = apply(&ch, &ch.pure_input(&zero)?)?;
    let route = route_for(&out)?;
    ks.iter()
        .map(|&k| {
            let exact = approx_reduced(&out, k, route)?.tilde_rho_k;
            let sampled = match route {
                Route::Symmetric => mc_approx_reduced(&out, k, samples, seed)?,
                Route::General => mc_approx_reduced_general(&out, k, samples, seed)?,
            };
            let est = sampled.estimate().expect("sampled result");
            let z = est.max_z_score(exact.entries());
            Ok(McRow {
                target: "reduced".into(),
                d: spec.d(),
                n: spec.n_copies(),
                m: Some(spec.m()),
                k,
                p: spec.noise(),
                samples,
                seed,
                route: Some(match route {
                    Route::Symmetric => "symmetric".into(),
                    Route::General => "general".into(),
                }),
                max_abs_deviation: est.max_abs_deviation(exact.entries()),
                max_z_score: z,
                satisfied: z <= MC_Z_LIMIT,
            })
        })
        .collect()
}
