//! Degradation limits from datasheet float and cycle life, and the two
//! self-consistency runs that check them.

use serde::{Deserialize, Serialize};

use crate::control::{ControlParams, Policy, VoltageLimits};
use crate::degradation::{self, DegradationLimits};
use crate::engine::{ModelParams, Plant, DAYS_PER_YEAR};
use crate::error::{Error, Result};
use crate::profiles;

/// Datasheet life figures and the conditions they were rated at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Datasheet {
    pub float_life_years: f64,
    /// Nominal cycles to end of life, `Z_N`.
    pub cycle_life: f64,
    /// Battery float voltage of the float-life rating (V).
    pub float_voltage: f64,
    pub float_temperature_c: f64,
    /// Charger limits used for the standard cycling rating.
    pub cycle_limits: VoltageLimits,
    /// Discharge duration of one standard cycle at the reference current (h).
    pub cycle_discharge_hours: f64,
    /// Recharge current of a standard cycle, as a multiple of the reference
    /// discharge current.
    pub cycle_charge_ratio: f64,
}

impl Default for Datasheet {
    fn default() -> Self {
        Self {
            float_life_years: 8.0,
            cycle_life: 600.0,
            float_voltage: 13.65,
            float_temperature_c: 25.0,
            cycle_limits: VoltageLimits::datasheet(),
            cycle_discharge_hours: 10.0,
            cycle_charge_ratio: 1.5,
        }
    }
}

impl Datasheet {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("datasheet.float_life_years", self.float_life_years),
            ("datasheet.cycle_life", self.cycle_life),
            ("datasheet.float_voltage", self.float_voltage),
            ("datasheet.cycle_discharge_hours", self.cycle_discharge_hours),
            ("datasheet.cycle_charge_ratio", self.cycle_charge_ratio),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        if !self.float_temperature_c.is_finite() {
            return Err(Error::param("datasheet.float_temperature_c", "must be finite"));
        }
        self.cycle_limits.validate("datasheet.cycle_limits")
    }

    fn float_control(&self) -> ControlParams {
        let hold = VoltageLimits::new(self.float_voltage, self.float_voltage, 0.0);
        ControlParams {
            static_limits: hold,
            ..ControlParams::with_policy(Policy::BboxxStatic)
        }
    }

    fn cycle_control(&self) -> ControlParams {
        ControlParams {
            static_limits: self.cycle_limits,
            ..ControlParams::with_policy(Policy::BboxxStatic)
        }
    }
}

/// Charge offered during float runs (A); the controller throttles it.
const FLOAT_SUPPLY_C_RATE: f64 = 0.1;

/// Advances a plant on continuous float for `steps` or until EOL.
fn float_run(plant: &mut Plant, ds: &Datasheet, supply: f64, dt_s: f64, steps: u64) -> Result<u64> {
    for n in 0..steps {
        plant.step_currents(supply, 0.0, ds.float_temperature_c, dt_s)?;
        if plant.is_eol() {
            return Ok(n + 1);
        }
    }
    Ok(steps)
}

/// Limits from the datasheet.
///
/// `W_limit` is the layer grown by continuous float at the rated voltage and
/// temperature over the rated float life. Each mechanism alone ends life at
/// `eol_fraction * C_N`.
pub fn calibrate_limits(model: &ModelParams, dt_s: f64) -> Result<DegradationLimits> {
    model.validate()?;
    let spd = profiles::steps_per_day(dt_s)? as f64;
    let ds = &model.datasheet;
    let eol = model.eol_loss_ah();
    let probe = DegradationLimits {
        w_limit: f64::INFINITY,
        c_corr_limit: eol,
        c_deg_limit: eol,
    };
    let control = ds.float_control();
    let mut plant = Plant::new(model, &control, probe, 1.0, ds.float_temperature_c)?;
    let steps = (ds.float_life_years * DAYS_PER_YEAR * spd).round() as u64;
    let supply = FLOAT_SUPPLY_C_RATE * model.battery.nominal_capacity_ah;
    float_run(&mut plant, ds, supply, dt_s, steps)
        .map_err(|e| Error::Calibration(format!("float run failed: {e}")))?;
    let w_limit = plant.ledger.corrosion.layer_thickness;
    if !(w_limit > 0.0 && w_limit.is_finite()) {
        let v_p = plant.battery.positive_potential;
        let t = ds.float_temperature_c + 273.15;
        let k = degradation::corrosion_speed(&model.corrosion, v_p, t).k_s;
        return Err(Error::Calibration(format!(
            "no corrosion at float conditions (V_P {v_p:.4} V, T {t:.2} K, k_s {k})"
        )));
    }
    Ok(DegradationLimits {
        w_limit,
        c_corr_limit: eol,
        c_deg_limit: eol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloatCheck {
    pub years_to_eol: f64,
    pub rated_years: f64,
    pub relative_error: f64,
    pub reached_eol: bool,
}

/// Continuous float with calibrated limits until end of life.
pub fn float_life_check(model: &ModelParams, limits: DegradationLimits, dt_s: f64) -> Result<FloatCheck> {
    let spd = profiles::steps_per_day(dt_s)? as f64;
    let ds = &model.datasheet;
    let control = ds.float_control();
    let mut plant = Plant::new(model, &control, limits, 1.0, ds.float_temperature_c)?;
    let cap = (3.0 * ds.float_life_years * DAYS_PER_YEAR * spd).round() as u64;
    let supply = FLOAT_SUPPLY_C_RATE * model.battery.nominal_capacity_ah;
    let steps = float_run(&mut plant, ds, supply, dt_s, cap)?;
    let years = steps as f64 / (spd * DAYS_PER_YEAR);
    Ok(FloatCheck {
        years_to_eol: years,
        rated_years: ds.float_life_years,
        relative_error: years / ds.float_life_years - 1.0,
        reached_eol: plant.is_eol(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CyclingCheck {
    pub cycles_to_eol: f64,
    pub rated_cycles: f64,
    pub relative_error: f64,
    pub weighted_cycles: f64,
    pub days: u32,
    pub reached_eol: bool,
}

/// Daily standard cycles until end of life: a discharge at the reference
/// current for the rated duration, then a recharge under the datasheet
/// limits for the rest of the day.
pub fn standard_cycling_check(model: &ModelParams, limits: DegradationLimits, dt_s: f64) -> Result<CyclingCheck> {
    let spd = profiles::steps_per_day(dt_s)? as u64;
    let ds = &model.datasheet;
    let control = ds.cycle_control();
    let mut plant = Plant::new(model, &control, limits, 1.0, ds.float_temperature_c)?;
    let i_ref = model.active_mass.i_ref;
    let discharge_steps = (ds.cycle_discharge_hours * 3600.0 / dt_s).round() as u64;
    let max_days = (3.0 * ds.cycle_life) as u32;
    let mut discharged_ah = 0.0;
    let mut days = 0;
    while days < max_days && !plant.is_eol() {
        for n in 0..spd {
            let load = if n < discharge_steps && plant.soc() > 0.01 { i_ref } else { 0.0 };
            let solar = if load > 0.0 { 0.0 } else { ds.cycle_charge_ratio * i_ref };
            let r = plant.step_currents(solar, load, ds.float_temperature_c, dt_s)?;
            discharged_ah += (-r.current).max(0.0) * dt_s / 3600.0;
            if plant.is_eol() {
                break;
            }
        }
        plant.close_day();
        days += 1;
    }
    let cycles = discharged_ah / model.battery.nominal_capacity_ah;
    Ok(CyclingCheck {
        cycles_to_eol: cycles,
        rated_cycles: ds.cycle_life,
        relative_error: cycles / ds.cycle_life - 1.0,
        weighted_cycles: plant.ledger.active_mass.weighted_cycles,
        days,
        reached_eol: plant.is_eol(),
    })
}

/// Calibrated limits and both checks, as written by the `calibrate` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub limits: DegradationLimits,
    pub float: FloatCheck,
    pub cycling: CyclingCheck,
}

impl CalibrationReport {
    pub fn within_tolerance(&self) -> bool {
        self.float.reached_eol
            && self.cycling.reached_eol
            && self.float.relative_error.abs() <= 0.02
            && self.cycling.relative_error.abs() <= 0.10
    }
}

pub fn calibrate(model: &ModelParams, dt_s: f64) -> Result<CalibrationReport> {
    let limits = calibrate_limits(model, dt_s)?;
    Ok(CalibrationReport {
        limits,
        float: float_life_check(model, limits, dt_s)?,
        cycling: standard_cycling_check(model, limits, dt_s)?,
    })
}
