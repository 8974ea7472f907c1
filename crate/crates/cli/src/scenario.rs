//! Scenario files and the pipeline that turns one into result rows.

use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use symbroadcast::metrics::{universal_clone_gap, BOUND_SLACK};
use symbroadcast::{
    apply, approx_reduced, general_bound, lemma1_bound, mc_approx_reduced,
    mc_approx_reduced_general, partial_trace, purify_perm_invariant, trace_distance, validate_sdi,
    BoundForm, Channel, Complex64, Error, FactorSubset, HaarSampler, Operator, Route,
    SdiChannelSpec,
};

use crate::emit::{Format, Row};
use crate::error::{CliError, Result};
use crate::fmt;

pub const SCHEMA_VERSION: u32 = 1;
/// Limit on purification roundtrip and pair-permutation residuals.
pub const PURIFICATION_TOL: f64 = 1e-9;
/// Monte Carlo agreement is a hard failure beyond this many standard errors.
pub const MC_Z_LIMIT: f64 = 5.0;
/// and produces a warning beyond this many.
pub const MC_Z_WARN: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Lemma1,
    Theorem2,
    Perr,
    FidelityGap,
    McCrosscheck,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteChoice {
    /// Symmetric when the channel output lies on the symmetric subspace and
    /// `theorem2` is not requested.
    #[default]
    Auto,
    Symmetric,
    General,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputState {
    /// Single-system ket `φ` as `[re, im]` pairs; cloners receive `φ^{⊗N}`.
    Pure { amplitudes: Vec<[f64; 2]> },
    /// Diagonal density matrix in the channel's input basis.
    Diagonal { probs: Vec<f64> },
    /// Haar-random single-system ket.
    Random { seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub samples: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub format: Format,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub channel: SdiChannelSpec,
    /// Defaults to `|0⟩`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_state: Option<InputState>,
    pub k_list: Vec<usize>,
    pub checks: Vec<Check>,
    #[serde(default)]
    pub route: RouteChoice,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
}

impl ScenarioConfig {
    pub fn name(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.channel.kind().to_string())
    }

    fn wants(&self, c: Check) -> bool {
        self.checks.contains(&c)
    }

    /// Schema-level checks that need no linear algebra.
    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(CliError::config(
                "schema",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema),
            ));
        }
        let (d, m) = (self.channel.d(), self.channel.m());
        if d < 1 || m < 1 {
            return Err(CliError::config("channel", "d and M must be at least 1"));
        }
        if let Some(n) = self.channel.n_copies() {
            if n < 1 || n > m {
                return Err(CliError::config("channel.N", format!("need 1 <= N <= M, got N={n}, M={m}")));
            }
        }
        if let Some(p) = self.channel.noise() {
            if !(0.0..=1.0).contains(&p) {
                return Err(CliError::config("channel.p", format!("p={p} is outside [0, 1]")));
            }
        }
        if self.k_list.is_empty() {
            return Err(CliError::config("k_list", "must not be empty"));
        }
        for (i, &k) in self.k_list.iter().enumerate() {
            if k < 1 || k > m {
                return Err(CliError::config(
                    format!("k_list[{i}]"),
                    format!("k={k} must satisfy 1 <= k <= M={m}"),
                ));
            }
        }
        if self.checks.is_empty() {
            return Err(CliError::config("checks", "at least one check is required"));
        }
        for (i, c) in self.checks.iter().enumerate() {
            if self.checks[..i].contains(c) {
                return Err(CliError::config(format!("checks[{i}]"), "duplicate check"));
            }
        }
        if self.wants(Check::Lemma1) && self.wants(Check::Theorem2) {
            return Err(CliError::config(
                "checks",
                "lemma1 and theorem2 use different approximation routes; put them in separate scenarios",
            ));
        }
        if self.wants(Check::Lemma1) && self.route == RouteChoice::General {
            return Err(CliError::config("route", "lemma1 needs the symmetric route"));
        }
        if self.wants(Check::Theorem2) && self.route == RouteChoice::Symmetric {
            return Err(CliError::config("route", "theorem2 needs the general route"));
        }
        match &self.mc {
            None if self.wants(Check::McCrosscheck) => {
                return Err(CliError::config("mc", "required by mc_crosscheck"));
            }
            Some(mc) if mc.samples == 0 => {
                return Err(CliError::config("mc.samples", "must be positive"));
            }
            _ => {}
        }
        match &self.input_state {
            Some(InputState::Pure { amplitudes }) => {
                if amplitudes.len() != d {
                    return Err(CliError::config(
                        "input_state.amplitudes",
                        format!("expected {d} amplitudes, found {}", amplitudes.len()),
                    ));
                }
                let norm: f64 = amplitudes.iter().map(|[re, im]| re * re + im * im).sum::<f64>().sqrt();
                if (norm - 1.0).abs() > 1e-9 {
                    return Err(CliError::config("input_state.amplitudes", format!("norm {norm} is not 1")));
                }
            }
            Some(InputState::Diagonal { probs }) => {
                if self.wants(Check::FidelityGap) {
                    return Err(CliError::config("input_state", "fidelity_gap needs a pure input"));
                }
                if probs.iter().any(|&q| q < 0.0) || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                    return Err(CliError::config("input_state.probs", "not a probability vector"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn pure_state(&self) -> Option<Operator> {
        let d = self.channel.d();
        match &self.input_state {
            None => Some(Operator::basis_ket(0, vec![d]).expect("d >= 1")),
            Some(InputState::Pure { amplitudes }) => Some(
                Operator::ket(amplitudes.iter().map(|&[re, im]| Complex64::new(re, im)).collect(), vec![d])
                    .expect("length checked"),
            ),
            Some(InputState::Random { seed }) => Some(HaarSampler::new(d, *seed).ket_at(0)),
            Some(InputState::Diagonal { .. }) => None,
        }
    }

    /// Seed reported with the results: Monte Carlo first, then random input.
    fn reported_seed(&self) -> Option<u64> {
        match (&self.mc, &self.input_state) {
            (Some(mc), _) => Some(mc.seed),
            (None, Some(InputState::Random { seed })) => Some(*seed),
            _ => None,
        }
    }
}

fn parse_one(value: Value, prefix: &str) -> Result<ScenarioConfig> {
    let cfg: ScenarioConfig = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        CliError::config(format!("{prefix}{path}"), e.into_inner().to_string())
    })?;
    cfg.validate().map_err(|e| match e {
        CliError::Config { path, message } => CliError::config(format!("{prefix}{path}"), message),
        other => other,
    })?;
    Ok(cfg)
}

/// Parses a scenario object or an array of them.
pub fn parse_scenarios(text: &str) -> Result<Vec<ScenarioConfig>> {
    let value: Value = serde_json::from_str(text).map_err(|e| CliError::config(".", e.to_string()))?;
    match value {
        Value::Array(items) => items
            .into_iter()
            .enumerate()
            .map(|(i, v)| parse_one(v, &format!("[{i}].")))
            .collect(),
        v => Ok(vec![parse_one(v, "")?]),
    }
}

/// One output row per `(scenario, k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub scenario: String,
    pub kind: String,
    pub route: String,
    pub d: usize,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    #[serde(rename = "M")]
    pub m: usize,
    pub k: usize,
    pub p: Option<f64>,
    pub seed: Option<u64>,
    pub actual_distance: f64,
    pub bound_exact: f64,
    pub bound_asymptotic: f64,
    pub p_err: f64,
    pub p_err_bound: f64,
    #[serde(rename = "F_clon")]
    pub f_clon: Option<f64>,
    #[serde(rename = "F_tilde")]
    pub f_tilde: Option<f64>,
    pub gap_formula: Option<f64>,
    pub satisfied_lemma1: Option<bool>,
    pub satisfied_theorem2: Option<bool>,
    pub satisfied_perr: Option<bool>,
    pub satisfied_fidelity_gap: Option<bool>,
    pub satisfied_mc_crosscheck: Option<bool>,
    pub wall_time_ms: Option<f64>,
}

impl ResultRecord {
    /// False if any requested check failed.
    pub fn all_satisfied(&self) -> bool {
        [
            self.satisfied_lemma1,
            self.satisfied_theorem2,
            self.satisfied_perr,
            self.satisfied_fidelity_gap,
            self.satisfied_mc_crosscheck,
        ]
        .iter()
        .all(|f| f.unwrap_or(true))
    }
}

impl Row for ResultRecord {
    const HEADER: &'static [&'static str] = &[
        "scenario",
        "kind",
        "route",
        "d",
        "N",
        "M",
        "k",
        "p",
        "seed",
        "actual_distance",
        "bound_exact",
        "bound_asymptotic",
        "p_err",
        "p_err_bound",
        "F_clon",
        "F_tilde",
        "gap_formula",
        "satisfied_lemma1",
        "satisfied_theorem2",
        "satisfied_perr",
        "satisfied_fidelity_gap",
        "satisfied_mc_crosscheck",
        "wall_time_ms",
    ];

    fn cells(&self) -> Vec<String> {
        vec![
            self.scenario.clone(),
            self.kind.clone(),
            self.route.clone(),
            self.d.to_string(),
            fmt::opt(self.n),
            self.m.to_string(),
            self.k.to_string(),
            fmt::opt_real(self.p),
            fmt::opt(self.seed),
            fmt::real(self.actual_distance),
            fmt::real(self.bound_exact),
            fmt::real(self.bound_asymptotic),
            fmt::real(self.p_err),
            fmt::real(self.p_err_bound),
            fmt::opt_real(self.f_clon),
            fmt::opt_real(self.f_tilde),
            fmt::opt_real(self.gap_formula),
            fmt::opt_bool(self.satisfied_lemma1),
            fmt::opt_bool(self.satisfied_theorem2),
            fmt::opt_bool(self.satisfied_perr),
            fmt::opt_bool(self.satisfied_fidelity_gap),
            fmt::opt_bool(self.satisfied_mc_crosscheck),
            fmt::opt_real(self.wall_time_ms),
        ]
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// Fill `wall_time_ms`. Off by default so outputs are reproducible byte for byte.
    pub timing: bool,
}

#[derive(Clone, Debug, Default)]
pub struct ScenarioOutcome {
    pub records: Vec<ResultRecord>,
    pub warnings: Vec<String>,
}

fn route_name(r: Route) -> &'static str {
    match r {
        Route::Symmetric => "symmetric",
        Route::General => "general",
    }
}

/// Builds the channel, applies it to the input and evaluates every requested
/// check for every `k`.
pub fn run_scenario(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<ScenarioOutcome> {
    cfg.validate()?;
    let name = cfg.name();
    let spec = &cfg.channel;
    let (d, m) = (spec.d(), spec.m());
    let ch: Channel = spec.build()?;

    let phi = cfg.pure_state();
    let rho_in = match (&phi, &cfg.input_state) {
        (Some(phi), _) => ch.pure_input(phi)?,
        (None, Some(InputState::Diagonal { probs })) => {
            if probs.len() != ch.dim_in() {
                return Err(CliError::config(
                    "input_state.probs",
                    format!("expected {} entries (channel input dimension), found {}", ch.dim_in(), probs.len()),
                ));
            }
            Operator::diagonal(probs)
        }
        _ => unreachable!("pure_state covers every other input"),
    };

    let sdi = validate_sdi(&ch, BOUND_SLACK)?;
    if !sdi.passed {
        return Err(Error::NotPermutationInvariant {
            residual: sdi.max_residual,
        }
        .into());
    }
    let route = match cfg.route {
        RouteChoice::Auto if cfg.wants(Check::Theorem2) => Route::General,
        RouteChoice::Auto if sdi.symmetric_support => Route::Symmetric,
        RouteChoice::Auto | RouteChoice::General => Route::General,
        RouteChoice::Symmetric if sdi.symmetric_support => Route::Symmetric,
        RouteChoice::Symmetric => {
            return Err(CliError::config(
                "route",
                format!("channel output is not on the symmetric subspace (residual {:e})", sdi.support_residual),
            ))
        }
    };
    if cfg.wants(Check::Lemma1) && route != Route::Symmetric {
        return Err(CliError::config(
            "checks",
            format!(
                "lemma1 needs an output on the symmetric subspace (residual {:e}); use theorem2",
                sdi.support_residual
            ),
        ));
    }

    let out = apply(&ch, &rho_in)?;
    let slack = BOUND_SLACK;

    let purification_ok = if cfg.wants(Check::Theorem2) {
        let pur = purify_perm_invariant(&out, 1e-8)?;
        pur.roundtrip_residual(&out)? <= PURIFICATION_TOL && pur.pair_permutation_residual()? <= PURIFICATION_TOL
    } else {
        true
    };

    let bounds = |k: usize| -> Result<(f64, f64)> {
        Ok(match route {
            Route::Symmetric => (
                lemma1_bound(d, m, k, BoundForm::Exact)?,
                lemma1_bound(d, m, k, BoundForm::Asymptotic)?,
            ),
            Route::General => (
                general_bound(d, m, k, BoundForm::Exact)?,
                general_bound(d, m, k, BoundForm::Asymptotic)?,
            ),
        })
    };

    let gap_formula = match *spec {
        SdiChannelSpec::UniversalCloner { d, n, m } => Some(universal_clone_gap::<f64>(n, m, d)?),
        _ => None,
    };
    let fidelities = match &phi {
        Some(phi) => {
            let one = partial_trace(&out, &FactorSubset::first(1))?;
            let tilde = approx_reduced(&out, 1, route)?.tilde_rho_k;
            Some((
                one.expectation(phi)?.re,
                tilde.expectation(phi)?.re,
                trace_distance(&one, &tilde)?,
            ))
        }
        None => None,
    };
    let fidelity_ok = fidelities.map(|(f_clon, f_tilde, delta)| -> Result<bool> {
        let gap = f_clon - f_tilde;
        let mut ok = gap <= delta + slack && delta <= bounds(1)?.0 + slack;
        if let Some(formula) = gap_formula {
            ok &= gap >= -slack && (gap - formula).abs() <= slack;
        }
        Ok(ok)
    });
    let fidelity_ok = fidelity_ok.transpose()?;

    let mut outcome = ScenarioOutcome::default();
    for &k in &cfg.k_list {
        let started = Instant::now();
        let marginal = partial_trace(&out, &FactorSubset::first(k))?;
        let reduced = approx_reduced(&out, k, route)?;
        let actual = trace_distance(&marginal, &reduced.tilde_rho_k)?;
        let (bound_exact, bound_asymptotic) = bounds(k)?;
        let p_err = 0.5 - actual / 4.0;
        let p_err_bound = 0.5 - bound_asymptotic / 4.0;
        let within = actual <= bound_exact + slack;

        let flag = |c: Check, v: bool| cfg.wants(c).then_some(v);
        let perr_ok = p_err >= 0.5 - bound_exact / 4.0 - slack && (k != 1 || p_err >= p_err_bound - slack);

        let mc_ok = match (&cfg.mc, cfg.wants(Check::McCrosscheck)) {
            (Some(mc), true) => {
                let est = match route {
                    Route::Symmetric => mc_approx_reduced(&out, k, mc.samples, mc.seed)?,
                    Route::General => mc_approx_reduced_general(&out, k, mc.samples, mc.seed)?,
                }
                .estimate()
                .expect("sampled result");
                let z = est.max_z_score(reduced.tilde_rho_k.entries());
                if z > MC_Z_WARN {
                    outcome.warnings.push(format!(
                        "{name} k={k}: Monte Carlo deviates by {z:.2} standard errors"
                    ));
                }
                Some(z <= MC_Z_LIMIT)
            }
            _ => None,
        };

        outcome.records.push(ResultRecord {
            scenario: name.clone(),
            kind: spec.kind().to_string(),
            route: route_name(route).to_string(),
            d,
            n: spec.n_copies(),
            m,
            k,
            p: spec.noise(),
            seed: cfg.reported_seed(),
            actual_distance: actual,
            bound_exact,
            bound_asymptotic,
            p_err,
            p_err_bound,
            f_clon: fidelities.map(|f| f.0),
            f_tilde: fidelities.map(|f| f.1),
            gap_formula,
            satisfied_lemma1: flag(Check::Lemma1, within),
            satisfied_theorem2: flag(Check::Theorem2, within && purification_ok),
            satisfied_perr: flag(Check::Perr, perr_ok),
            satisfied_fidelity_gap: flag(Check::FidelityGap, fidelity_ok.unwrap_or(false)),
            satisfied_mc_crosscheck: mc_ok,
            wall_time_ms: opts.timing.then(|| started.elapsed().as_secs_f64() * 1e3),
        });
    }
    Ok(outcome)
}

/// Runs scenarios in parallel and concatenates their rows in input order.
pub fn run_all(configs: &[ScenarioConfig], opts: &RunOptions) -> Result<ScenarioOutcome> {
    use rayon::prelude::*;
    let parts: Vec<ScenarioOutcome> = configs
        .par_iter()
        .map(|c| run_scenario(c, opts))
        .collect::<Result<_>>()?;
    let mut all = ScenarioOutcome::default();
    for p in parts {
        all.records.extend(p.records);
        all.warnings.extend(p.warnings);
    }
    Ok(all)
}
