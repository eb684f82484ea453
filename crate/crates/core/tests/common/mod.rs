#![allow(dead_code)]

use vrla_ageing::control::Policy;
use vrla_ageing::engine::{run_batch, Scenario, SimResult};
use vrla_ageing::profiles::{ArchetypeSpec, UseArchetype};

pub const BASELINE_ORDER: [UseArchetype; 4] = [
    UseArchetype::High,
    UseArchetype::Moderate,
    UseArchetype::Low,
    UseArchetype::Infrequent,
];

pub fn scenario(archetype: UseArchetype, policy: Policy) -> Scenario {
    Scenario::archetype(archetype.name(), ArchetypeSpec::defaults(archetype), policy)
}

pub fn with_dt(mut s: Scenario, dt_s: f64) -> Scenario {
    s.dt_s = dt_s;
    s
}

/// Runs the scenarios in parallel and unwraps every result.
pub fn run_all(scenarios: &[Scenario]) -> Vec<SimResult> {
    run_batch(scenarios, None)
        .into_iter()
        .zip(scenarios)
        .map(|(r, s)| r.unwrap_or_else(|e| panic!("{}: {e}", s.name)))
        .collect()
}

pub fn baselines(dt_s: f64) -> Vec<SimResult> {
    let scenarios: Vec<_> = BASELINE_ORDER
        .iter()
        .map(|&a| with_dt(scenario(a, Policy::BboxxStatic), dt_s))
        .collect();
    run_all(&scenarios)
}
