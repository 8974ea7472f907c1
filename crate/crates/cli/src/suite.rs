//! Bundled scenario suite.

use symbroadcast::channels::matrix_to_json;
use symbroadcast::{HaarSampler, Operator, SdiChannelSpec};

use crate::error::Result;
use crate::mc::{identity_rows, McRow};
use crate::scenario::{
    run_all, Check, InputState, McConfig, ResultRecord, RouteChoice, RunOptions, ScenarioConfig,
};

pub const DEFAULT_SAMPLES: usize = 100_000;

fn scenario(name: String, channel: SdiChannelSpec, k_list: Vec<usize>, checks: Vec<Check>) -> ScenarioConfig {
    ScenarioConfig {
        schema: 1,
        name: Some(name),
        channel,
        input_state: None,
        k_list,
        checks,
        route: RouteChoice::Auto,
        mc: None,
        output: None,
    }
}

fn projector_json(psi: &Operator) -> Vec<Vec<[f64; 2]>> {
    matrix_to_json(&psi.projector().expect("ket"))
}

/// Scenarios for the bundled suite; seeds of random inputs and samplers are
/// derived from `seed`.
pub fn default_suite(seed: u64, samples: usize) -> Vec<ScenarioConfig> {
    use Check::*;
    let random = |i: u64| Some(InputState::Random { seed: seed.wrapping_add(i) });
    let mut out = Vec::new();

    let mut s = scenario(
        "qubit10".into(),
        SdiChannelSpec::UniversalCloner { d: 2, n: 1, m: 10 },
        vec![1],
        vec![Lemma1, Perr, FidelityGap],
    );
    s.input_state = random(0);
    out.push(s);

    for n in 1..=2 {
        for m in n..=8 {
            let mut s = scenario(
                format!("lemma1_cloner_N{n}_M{m}"),
                SdiChannelSpec::UniversalCloner { d: 2, n, m },
                (1..=m.min(3)).collect(),
                vec![Lemma1, Perr],
            );
            s.input_state = random(out.len() as u64);
            out.push(s);
        }
    }

    let zero = Operator::basis_ket(0, vec![2]).expect("qubit");
    let tilted: Operator = HaarSampler::new(2, seed).ket_at(0);
    for (label, prep) in [("zero", &zero), ("random", &tilted)] {
        for m in 2..=6 {
            let mut s = scenario(
                format!("lemma1_fixed_prep_{label}_M{m}"),
                SdiChannelSpec::FixedPrep { d: 2, m, prep: projector_json(prep) },
                (1..=m.min(3)).collect(),
                vec![Lemma1, Perr],
            );
            s.input_state = random(out.len() as u64);
            out.push(s);
        }
    }

    let basis = |i: usize| projector_json(&Operator::basis_ket(i, vec![2]).expect("qubit"));
    let mut s = scenario(
        "lemma1_measure_prepare_M3".into(),
        SdiChannelSpec::MeasurePrepare {
            d: 2,
            m: 3,
            povm: vec![basis(0), basis(1)],
            preps: vec![basis(0), basis(1)],
        },
        vec![1, 2, 3],
        vec![Lemma1, Perr],
    );
    s.input_state = random(out.len() as u64);
    out.push(s);

    for m in 2..=4 {
        let mut s = scenario(
            format!("theorem2_noisy_M{m}"),
            SdiChannelSpec::NoisyCloner { d: 2, n: 1, m, p: 0.1 },
            vec![1, 2],
            vec![Theorem2, Perr, McCrosscheck],
        );
        s.mc = Some(McConfig { samples, seed });
        out.push(s);
    }
    out.push(scenario(
        "theorem2_noisy_qutrit_M2".into(),
        SdiChannelSpec::NoisyCloner { d: 3, n: 1, m: 2, p: 0.2 },
        vec![1],
        vec![Theorem2, Perr],
    ));

    for (n, m, d) in [(1, 2, 2), (1, 3, 2), (2, 3, 2), (2, 4, 2), (1, 2, 3)] {
        let mut s = scenario(
            format!("fidelity_N{n}_M{m}_d{d}"),
            SdiChannelSpec::UniversalCloner { d, n, m },
            vec![1],
            vec![Lemma1, FidelityGap],
        );
        s.input_state = random(out.len() as u64);
        out.push(s);
    }

    let mut s = scenario(
        "mc_fixed_prep_zero_M2".into(),
        SdiChannelSpec::FixedPrep { d: 2, m: 2, prep: basis(0) },
        vec![1],
        vec![Lemma1, McCrosscheck],
    );
    s.mc = Some(McConfig { samples, seed });
    out.push(s);

    out
}

#[derive(Clone, Debug)]
pub struct SuiteOutcome {
    pub records: Vec<ResultRecord>,
    /// Haar moment checks for `d = 2`, `n = 1..4`.
    pub identity: Vec<McRow>,
    pub warnings: Vec<String>,
}

impl SuiteOutcome {
    pub fn all_satisfied(&self) -> bool {
        self.records.iter().all(ResultRecord::all_satisfied) && self.identity.iter().all(|r| r.satisfied)
    }
}

pub fn run_suite(seed: u64, samples: usize, opts: &RunOptions) -> Result<SuiteOutcome> {
    let outcome = run_all(&default_suite(seed, samples), opts)?;
    Ok(SuiteOutcome {
        records: outcome.records,
        identity: identity_rows(2, &[1, 2, 3, 4], samples, seed)?,
        warnings: outcome.warnings,
    })
}
