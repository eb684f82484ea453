//! Closed-loop simulation: inputs, charge controller, battery model and
//! degradation, with daily controller adaptation, run until end of life.

use serde::{Deserialize, Serialize};

use crate::battery::{self, BatteryParams, BatteryState};
use crate::calibration::{self, Datasheet};
use crate::control::{self, ControlParams, ControllerState, Phase, Policy};
use crate::degradation::{self, ActiveMassParams, CorrosionParams, DegradationLedger, DegradationLimits};
use crate::error::{Error, Result};
use crate::profiles::{self, ArchetypeGenerator, ArchetypeSpec, BatteryTrace, DayProfile, Sample, TimeSeries, TraceStep};

pub const DAYS_PER_YEAR: f64 = 365.25;
const KELVIN_OFFSET: f64 = 273.15;

/// Every physical constant of the battery and its ageing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    pub battery: BatteryParams,
    pub corrosion: CorrosionParams,
    pub active_mass: ActiveMassParams,
    pub datasheet: Datasheet,
    /// End of life once the capacity loss reaches this share of `C_N`.
    pub eol_fraction: f64,
    /// Share of panel power reaching the battery bus.
    pub charger_efficiency: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            battery: BatteryParams::default(),
            corrosion: CorrosionParams::default(),
            active_mass: ActiveMassParams::default(),
            datasheet: Datasheet::default(),
            eol_fraction: 0.2,
            charger_efficiency: 0.95,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        self.battery.validate()?;
        self.corrosion.validate()?;
        self.active_mass.validate()?;
        self.datasheet.validate()?;
        if !(self.eol_fraction > 0.0 && self.eol_fraction < 1.0) {
            return Err(Error::param("eol_fraction", "must lie in (0, 1)"));
        }
        if !(self.charger_efficiency > 0.0 && self.charger_efficiency <= 1.0) {
            return Err(Error::param("charger_efficiency", "must lie in (0, 1]"));
        }
        Ok(())
    }

    pub fn eol_loss_ah(&self) -> f64 {
        self.eol_fraction * self.battery.nominal_capacity_ah
    }
}

/// SOC changes split by cause, so the coulomb count stays auditable.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SocAudit {
    /// Sum of `(I - I_gas) dt / C_N`.
    pub coulomb: f64,
    pub clamp: f64,
    pub clamp_events: u64,
    pub ocv_correction: f64,
    pub ocv_corrections: u64,
    pub ocv_clamp_events: u64,
    pub float_reset: f64,
    pub float_resets: u64,
}

impl SocAudit {
    /// Everything except the coulomb count.
    pub fn jumps(&self) -> f64 {
        self.clamp + self.ocv_correction + self.float_reset
    }
}

/// What happened in one plant step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub current: f64,
    pub voltage: f64,
    pub gassing: f64,
    pub positive_potential: f64,
    pub phase: Phase,
    pub full_charge: bool,
    pub soc: f64,
}

/// Battery, ledger and controller coupled together.
#[derive(Debug, Clone)]
pub struct Plant<'a> {
    model: &'a ModelParams,
    control: &'a ControlParams,
    pub battery: BatteryState,
    pub ledger: DegradationLedger,
    pub ctrl: ControllerState,
    pub audit: SocAudit,
    step: u64,
}

impl<'a> Plant<'a> {
    pub fn new(
        model: &'a ModelParams,
        control: &'a ControlParams,
        limits: DegradationLimits,
        initial_soc: f64,
        temperature_c: f64,
    ) -> Result<Self> {
        Ok(Self {
            model,
            control,
            battery: BatteryState::at_rest(&model.battery, initial_soc, temperature_c + KELVIN_OFFSET)?,
            ledger: DegradationLedger::new(limits, model.datasheet.cycle_life),
            ctrl: ControllerState::new(control),
            audit: SocAudit::default(),
            step: 0,
        })
    }

    pub fn soc(&self) -> f64 {
        self.battery.soc
    }

    pub fn total_loss(&self) -> f64 {
        self.ledger.total_loss
    }

    pub fn is_eol(&self) -> bool {
        self.ledger.total_loss >= self.model.eol_loss_ah()
    }

    pub fn close_day(&mut self) {
        let delta = self.ledger.close_day();
        self.ctrl.on_day_boundary(self.control, &delta);
    }

    /// Advances by `dt_s` with the panel able to deliver `solar_current` and
    /// the load drawing `load_current` (both A at the bus).
    pub fn step_currents(
        &mut self,
        solar_current: f64,
        load_current: f64,
        temperature_c: f64,
        dt_s: f64,
    ) -> Result<StepReport> {
        let bp = &self.model.battery;
        let soc = self.battery.soc;
        let loss = self.ledger.total_loss;
        let temperature_k = temperature_c + KELVIN_OFFSET;
        let step = self.step;
        let fail = |e: Error| Error::VoltageSolve {
            step,
            reason: format!("{e} (soc {soc:.6}, loss {loss:.4} Ah, T {temperature_c:.2} C)"),
        };

        let out = control::tscc_step(
            self.control,
            &mut self.ctrl,
            bp,
            soc,
            loss,
            temperature_c,
            solar_current,
            load_current,
        )
        .map_err(fail)?;
        let current = out.current;
        let voltage = battery::terminal_voltage_guarded(bp, soc, current, loss).map_err(fail)?;
        let gassing = battery::gassing_current(bp, voltage, temperature_k);
        let v_p = degradation::positive_terminal_voltage_guarded(bp, soc, current, loss).map_err(fail)?;

        self.ledger.step(
            &self.model.corrosion,
            &self.model.active_mass,
            bp.nominal_capacity_ah,
            v_p,
            temperature_k,
            (-current).max(0.0),
            soc,
            dt_s,
        );

        let counted = battery::step_soc(bp, soc, current, gassing, dt_s);
        self.audit.coulomb += (current - gassing) * dt_s / bp.nominal_capacity_coulomb();
        if let Some(jump) = counted.clamp_jump {
            self.audit.clamp += jump;
            self.audit.clamp_events += 1;
        }
        let mut new_soc = counted.soc;

        let full_charge = out.entered_float == Some(true);
        if full_charge {
            self.audit.float_reset += 1.0 - new_soc;
            self.audit.float_resets += 1;
            new_soc = 1.0;
            self.ledger.reset_full_charge();
        } else if current.abs() < bp.rest_current_threshold {
            let measured = battery::terminal_voltage_guarded(bp, new_soc, current, loss).map_err(fail)?;
            let correction = battery::correct_soc_by_ocv(bp, measured, current).map_err(fail)?;
            if let Some(s) = correction.soc() {
                if matches!(correction, battery::SocCorrection::Clamped(_)) {
                    self.audit.ocv_clamp_events += 1;
                }
                self.audit.ocv_correction += s - new_soc;
                self.audit.ocv_corrections += 1;
                new_soc = s;
            }
        }

        self.battery = BatteryState {
            soc: new_soc,
            acid_concentration: battery::acid_concentration(bp, new_soc).map_err(fail)?,
            terminal_voltage: voltage,
            positive_potential: v_p,
            temperature: temperature_k,
            gassing_current: gassing,
            applied_current: current,
        };
        self.step += 1;
        Ok(StepReport {
            current,
            voltage,
            gassing,
            positive_potential: v_p,
            phase: self.ctrl.phase,
            full_charge,
            soc: new_soc,
        })
    }
}

/// Where the solar, load and temperature inputs come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ProfileSpec {
    /// Synthetic household, generated day by day from the scenario seed.
    Archetype(ArchetypeSpec),
    /// Recorded inputs, repeated cyclically when shorter than the run.
    Series(TimeSeries),
}

#[allow(clippy::large_enum_variant)]
enum ProfileSource<'a> {
    Archetype {
        gen: ArchetypeGenerator,
        day: Option<(u64, DayProfile)>,
    },
    Series(&'a TimeSeries),
}

impl ProfileSource<'_> {
    fn sample(&mut self, step: u64, steps_per_day: u64, dt_s: f64) -> Sample {
        match self {
            ProfileSource::Archetype { gen, day } => {
                let d = step / steps_per_day;
                let profile = match day {
                    Some((n, p)) if *n == d => *p,
                    _ => {
                        let p = gen.next_day();
                        *day = Some((d, p));
                        p
                    }
                };
                gen.sample(&profile, (step % steps_per_day) as f64 * dt_s)
            }
            ProfileSource::Series(ts) => ts.samples[(step % ts.samples.len() as u64) as usize],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub model: ModelParams,
    pub control: ControlParams,
    pub profile: ProfileSpec,
    pub dt_s: f64,
    pub max_years: f64,
    pub seed: u64,
    pub initial_soc: f64,
    /// Calibrated limits; calibrated from the datasheet when absent.
    pub limits: Option<DegradationLimits>,
    /// Keep the per-step battery trace in the result.
    pub record_trace: bool,
    /// Report the SOH at this age (years) when reached.
    pub reference_years: Option<f64>,
}

impl Scenario {
    pub fn archetype(name: impl Into<String>, spec: ArchetypeSpec, policy: Policy) -> Self {
        Self {
            name: name.into(),
            model: ModelParams::default(),
            control: ControlParams::with_policy(policy),
            profile: ProfileSpec::Archetype(spec),
            dt_s: 900.0,
            max_years: 15.0,
            seed: 1,
            initial_soc: 1.0,
            limits: None,
            record_trace: false,
            reference_years: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.control.validate()?;
        profiles::steps_per_day(self.dt_s)?;
        if !(self.max_years > 0.0 && self.max_years.is_finite()) {
            return Err(Error::param("max_years", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.initial_soc) {
            return Err(Error::param("initial_soc", "must lie in [0, 1]"));
        }
        match &self.profile {
            ProfileSpec::Archetype(spec) => spec.validate()?,
            ProfileSpec::Series(ts) => {
                ts.validate()?;
                if (ts.dt_s - self.dt_s).abs() > 1e-9 {
                    return Err(Error::Profile(format!(
                        "series resolution {} s differs from scenario dt {} s",
                        ts.dt_s, self.dt_s
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn resolved_limits(&self) -> Result<DegradationLimits> {
        match self.limits {
            Some(l) => Ok(l),
            None => calibration::calibrate_limits(&self.model, self.dt_s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DayCapacity {
    pub day: u32,
    pub corrosion_ah: f64,
    pub active_mass_ah: f64,
    pub total_ah: f64,
    pub soh_pct: f64,
}

/// Time spent in each bin (h).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub hours: Vec<f64>,
}

impl Histogram {
    pub fn uniform(lo: f64, hi: f64, bins: usize) -> Self {
        let width = (hi - lo) / bins as f64;
        Self {
            edges: (0..=bins).map(|i| lo + i as f64 * width).collect(),
            hours: vec![0.0; bins],
        }
    }

    /// Adds time at `value`; values outside the range land in the end bins.
    pub fn add(&mut self, value: f64, hours: f64) {
        let n = self.hours.len();
        let lo = self.edges[0];
        let width = self.edges[1] - lo;
        let i = ((value - lo) / width).floor().clamp(0.0, (n - 1) as f64) as usize;
        self.hours[i] += hours;
    }

    pub fn total_hours(&self) -> f64 {
        self.hours.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        let total = self.total_hours();
        if total == 0.0 {
            return 0.0;
        }
        self.hours
            .iter()
            .enumerate()
            .map(|(i, h)| 0.5 * (self.edges[i] + self.edges[i + 1]) * h)
            .sum::<f64>()
            / total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadLossEvent {
    pub start_hour: f64,
    pub duration_h: f64,
    pub unserved_wh: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub name: String,
    pub policy: Policy,
    pub lifetime_years: f64,
    /// Horizon reached before end of life.
    pub censored: bool,
    pub fec: f64,
    /// Corrosion share of the capacity loss at the end of the run (%).
    pub corrosion_share_pct: f64,
    pub corrosion_loss_ah: f64,
    pub active_mass_loss_ah: f64,
    pub total_loss_ah: f64,
    pub final_soh_pct: f64,
    pub soh_at_reference: Option<(f64, f64)>,
    pub weighted_cycles: f64,
    pub min_soc: f64,
    pub days_simulated: u32,
    pub days_with_full_recharge: u32,
    pub max_days_between_full_recharges: u32,
    pub recharge_interval: Option<IntervalStats>,
    pub limits: DegradationLimits,
    pub soc_audit: SocAudit,
    pub initial_soc: f64,
    pub final_soc: f64,
    pub corrosion_speed_clamps: u64,
    pub load_loss_events: Vec<LoadLossEvent>,
    /// Written separately as the trajectory CSV.
    #[serde(skip)]
    pub capacity_trajectory: Vec<DayCapacity>,
    pub soc_histogram: Histogram,
    pub voltage_histogram: Histogram,
    #[serde(skip)]
    pub trace: Option<BatteryTrace>,
}

impl SimResult {
    /// Total loss at the end of `day` (1-based), holding the final value
    /// past the end of the run.
    pub fn loss_on_day(&self, day: u32) -> Option<f64> {
        let last = self.capacity_trajectory.last()?;
        if day >= last.day {
            return Some(last.total_ah);
        }
        self.capacity_trajectory
            .iter()
            .find(|d| d.day == day)
            .map(|d| d.total_ah)
    }
}

fn soh(nominal: f64, loss: f64) -> f64 {
    100.0 * (nominal - loss) / nominal
}

/// Runs a scenario until end of life or the horizon.
pub fn run_scenario(scenario: &Scenario) -> Result<SimResult> {
    scenario.validate()?;
    let limits = scenario.resolved_limits()?;
    let model = &scenario.model;
    let nominal = model.battery.nominal_capacity_ah;
    let dt = scenario.dt_s;
    let dt_h = dt / 3600.0;
    let spd = profiles::steps_per_day(dt)? as u64;
    let max_steps = (scenario.max_years * DAYS_PER_YEAR * spd as f64).ceil() as u64;

    let mut source = match &scenario.profile {
        ProfileSpec::Archetype(spec) => ProfileSource::Archetype {
            gen: ArchetypeGenerator::new(spec.clone(), scenario.seed),
            day: None,
        },
        ProfileSpec::Series(ts) => ProfileSource::Series(ts),
    };
    let first = source.sample(0, spd, dt);
    let mut plant = Plant::new(model, &scenario.control, limits, scenario.initial_soc, first.temp_c)?;

    let mut trajectory = Vec::new();
    let mut soc_hist = Histogram::uniform(0.0, 1.0, 20);
    let mut volt_hist = Histogram::uniform(10.0, 15.5, 55);
    let mut load_loss: Vec<LoadLossEvent> = Vec::new();
    let mut in_loss = false;
    let mut discharge_ah = 0.0;
    let mut min_soc = plant.soc();
    let mut full_days = 0u32;
    let mut full_today = false;
    let mut max_gap = 0u32;
    let mut intervals: Vec<f64> = Vec::new();
    let mut trace = scenario.record_trace.then(|| BatteryTrace {
        dt_s: dt,
        steps: Vec::with_capacity(max_steps.min(1 << 22) as usize),
    });
    let mut reference = None;
    let mut v_bus = plant.battery.terminal_voltage;

    let snapshot = |plant: &Plant, day: u32| DayCapacity {
        day,
        corrosion_ah: plant.ledger.corrosion.capacity_loss,
        active_mass_ah: plant.ledger.active_mass.capacity_loss,
        total_ah: plant.total_loss(),
        soh_pct: soh(nominal, plant.total_loss()),
    };

    let mut steps = 0u64;
    let mut sample = first;
    while steps < max_steps {
        if steps > 0 {
            sample = source.sample(steps, spd, dt);
            if steps.is_multiple_of(spd) {
                let day = (steps / spd) as u32;
                plant.close_day();
                trajectory.push(snapshot(&plant, day));
                full_days += u32::from(full_today);
                full_today = false;
                if scenario.control.policy == Policy::Adaptive {
                    intervals.push(plant.ctrl.recharge_interval);
                }
                if let Some(years) = scenario.reference_years {
                    if reference.is_none() && f64::from(day) >= years * DAYS_PER_YEAR {
                        reference = Some((years, soh(nominal, plant.total_loss())));
                    }
                }
            }
        }
        max_gap = max_gap.max(plant.ctrl.days_since_full_recharge);

        let soc_now = plant.soc();
        let disconnected = control::load_disconnect(&scenario.control, &mut plant.ctrl, soc_now);
        let load_w = if disconnected { 0.0 } else { sample.load_w };
        if disconnected && sample.load_w > 0.0 {
            if !in_loss {
                load_loss.push(LoadLossEvent {
                    start_hour: steps as f64 * dt_h,
                    duration_h: 0.0,
                    unserved_wh: 0.0,
                });
            }
            let ev = load_loss.last_mut().expect("event opened above");
            ev.duration_h += dt_h;
            ev.unserved_wh += sample.load_w * dt_h;
        }
        in_loss = disconnected && (in_loss || sample.load_w > 0.0);

        let solar_a = model.charger_efficiency * sample.solar_w / v_bus;
        let load_a = load_w / v_bus;
        let r = plant.step_currents(solar_a, load_a, sample.temp_c, dt)?;
        v_bus = r.voltage.max(1.0);

        if r.current < 0.0 {
            discharge_ah -= r.current * dt_h;
        }
        min_soc = min_soc.min(r.soc);
        full_today |= r.full_charge;
        soc_hist.add(r.soc, dt_h);
        volt_hist.add(r.voltage, dt_h);
        if let Some(t) = trace.as_mut() {
            t.steps.push(TraceStep {
                current_a: r.current,
                soc: r.soc,
                full_charge: r.full_charge,
                float: r.phase == Phase::Float,
            });
        }
        steps += 1;
        if plant.is_eol() {
            break;
        }
    }

    let eol = plant.is_eol();
    let day_end = steps.div_ceil(spd) as u32;
    if trajectory.last().map(|d| d.day) != Some(day_end) {
        trajectory.push(snapshot(&plant, day_end));
    }
    full_days += u32::from(full_today);
    let total = plant.total_loss();
    let corr = plant.ledger.corrosion.capacity_loss;
    let recharge_interval = (!intervals.is_empty()).then(|| IntervalStats {
        min: intervals.iter().copied().fold(f64::MAX, f64::min),
        max: intervals.iter().copied().fold(f64::MIN, f64::max),
        mean: intervals.iter().sum::<f64>() / intervals.len() as f64,
    });

    Ok(SimResult {
        name: scenario.name.clone(),
        policy: scenario.control.policy,
        lifetime_years: steps as f64 * dt / (DAYS_PER_YEAR * profiles::SECONDS_PER_DAY),
        censored: !eol,
        fec: aggregate_fec(discharge_ah, nominal),
        corrosion_share_pct: if total > 0.0 { 100.0 * corr / total } else { 0.0 },
        corrosion_loss_ah: corr,
        active_mass_loss_ah: plant.ledger.active_mass.capacity_loss,
        total_loss_ah: total,
        final_soh_pct: soh(nominal, total),
        soh_at_reference: reference,
        weighted_cycles: plant.ledger.active_mass.weighted_cycles,
        min_soc,
        days_simulated: day_end,
        days_with_full_recharge: full_days,
        max_days_between_full_recharges: max_gap,
        recharge_interval,
        limits,
        soc_audit: plant.audit,
        initial_soc: scenario.initial_soc,
        final_soc: plant.soc(),
        corrosion_speed_clamps: plant.ledger.speed_clamp_events,
        load_loss_events: load_loss,
        capacity_trajectory: trajectory,
        soc_histogram: soc_hist,
        voltage_histogram: volt_hist,
        trace,
    })
}

/// Full equivalent cycles: discharged charge over nominal capacity.
pub fn aggregate_fec(discharge_ah: f64, nominal_capacity_ah: f64) -> f64 {
    discharge_ah / nominal_capacity_ah
}

/// Runs scenarios on a pool of `jobs` workers (all cores when `None`),
/// returning results in input order.
pub fn run_batch(scenarios: &[Scenario], jobs: Option<usize>) -> Vec<Result<SimResult>> {
    use rayon::prelude::*;
    let run = || scenarios.par_iter().map(run_scenario).collect();
    match rayon::ThreadPoolBuilder::new().num_threads(jobs.unwrap_or(0)).build() {
        Ok(pool) => pool.install(run),
        Err(_) => scenarios.iter().map(run_scenario).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    pub policy: Policy,
    pub lifetime_years: f64,
    pub censored: bool,
    pub fec: f64,
    pub corrosion_share_pct: f64,
    pub corrosion_loss_ah: f64,
    pub active_mass_loss_ah: f64,
    pub min_soc: f64,
    pub load_loss_events: usize,
    pub full_recharge_day_fraction: f64,
}

impl From<&SimResult> for RunSummary {
    fn from(r: &SimResult) -> Self {
        Self {
            name: r.name.clone(),
            policy: r.policy,
            lifetime_years: r.lifetime_years,
            censored: r.censored,
            fec: r.fec,
            corrosion_share_pct: r.corrosion_share_pct,
            corrosion_loss_ah: r.corrosion_loss_ah,
            active_mass_loss_ah: r.active_mass_loss_ah,
            min_soc: r.min_soc,
            load_loss_events: r.load_loss_events.len(),
            full_recharge_day_fraction: f64::from(r.days_with_full_recharge)
                / f64::from(r.days_simulated.max(1)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub base: RunSummary,
    pub alt: RunSummary,
    pub lifetime_ratio: f64,
    pub corrosion_delta_ah: f64,
    /// `1 - alt / base` of the corrosion loss at each run's end.
    pub corrosion_reduction: f64,
    pub active_mass_delta_ah: f64,
    pub active_mass_ratio: f64,
    /// Alt-policy SOH on the day the base run ended.
    pub alt_soh_at_base_eol_pct: f64,
    pub alt_loss_at_base_eol_ah: f64,
    /// Largest `alt - base` total loss over the common days (<= 0 when alt
    /// is always healthier).
    pub worst_health_margin_ah: f64,
    pub alt_healthier_every_day: bool,
    pub min_soc_base: f64,
    pub min_soc_alt: f64,
    pub load_loss_events_base: usize,
    pub load_loss_events_alt: usize,
}

/// Paired runs differing only in controller policy.
pub fn compare_strategies(base: &Scenario, alt: &Scenario) -> Result<(ComparisonReport, SimResult, SimResult)> {
    if base.profile != alt.profile {
        return Err(Error::ScenarioMismatch("profiles differ".into()));
    }
    if base.model != alt.model {
        return Err(Error::ScenarioMismatch("battery or ageing parameters differ".into()));
    }
    if base.seed != alt.seed || base.dt_s != alt.dt_s || base.initial_soc != alt.initial_soc {
        return Err(Error::ScenarioMismatch("seed, time step or initial SOC differ".into()));
    }
    let (b, a) = rayon::join(|| run_scenario(base), || run_scenario(alt));
    let (b, a) = (b?, a?);
    Ok((comparison(&b, &a, base.model.battery.nominal_capacity_ah), b, a))
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == den {
        1.0
    } else {
        num / den
    }
}

pub fn comparison(b: &SimResult, a: &SimResult, nominal: f64) -> ComparisonReport {
    let common = b.days_simulated.min(a.days_simulated);
    let worst = (1..=common)
        .filter_map(|day| Some(a.loss_on_day(day)? - b.loss_on_day(day)?))
        .fold(None, |w: Option<f64>, d| Some(w.map_or(d, |w| w.max(d))))
        .unwrap_or(0.0);
    let alt_at_base_end = a.loss_on_day(b.days_simulated).unwrap_or(a.total_loss_ah);
    ComparisonReport {
        base: b.into(),
        alt: a.into(),
        lifetime_ratio: ratio(a.lifetime_years, b.lifetime_years),
        corrosion_delta_ah: a.corrosion_loss_ah - b.corrosion_loss_ah,
        corrosion_reduction: 1.0 - ratio(a.corrosion_loss_ah, b.corrosion_loss_ah),
        active_mass_delta_ah: a.active_mass_loss_ah - b.active_mass_loss_ah,
        active_mass_ratio: ratio(a.active_mass_loss_ah, b.active_mass_loss_ah),
        alt_soh_at_base_eol_pct: soh(nominal, alt_at_base_end),
        alt_loss_at_base_eol_ah: alt_at_base_end,
        worst_health_margin_ah: worst,
        alt_healthier_every_day: worst <= 0.0,
        min_soc_base: b.min_soc,
        min_soc_alt: a.min_soc,
        load_loss_events_base: b.load_loss_events.len(),
        load_loss_events_alt: a.load_loss_events.len(),
    }
}
