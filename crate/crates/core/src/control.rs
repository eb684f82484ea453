//! Three-stage charge controller with temperature-compensated limits,
//! low-SOC load disconnect and the corrosion-aware full-recharge scheduler.

use serde::{Deserialize, Serialize};

use crate::battery::{self, BatteryParams};
use crate::degradation::DailyDelta;
use crate::error::{Error, Result};

pub const MIN_RECHARGE_INTERVAL: f64 = 1.0;
pub const MAX_RECHARGE_INTERVAL: f64 = 6.0;

/// Charging setpoints for one limit set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoltageLimits {
    /// Absorption ceiling (battery V).
    pub v_limit: f64,
    /// Float setpoint (battery V).
    pub v_float: f64,
    /// Compensation slope (mV per degree C).
    pub t_var: f64,
    /// Temperature at which the setpoints apply unchanged (degrees C).
    #[serde(default = "default_reference_temperature")]
    pub reference_temperature: f64,
}

fn default_reference_temperature() -> f64 {
    25.0
}

impl VoltageLimits {
    pub const fn new(v_limit: f64, v_float: f64, t_var: f64) -> Self {
        Self {
            v_limit,
            v_float,
            t_var,
            reference_temperature: 25.0,
        }
    }

    /// Mid-range datasheet recommendation.
    pub const fn datasheet() -> Self {
        Self::new(14.4, 13.65, -30.0)
    }

    /// Static limits of the deployed fleet, without compensation.
    pub const fn bboxx() -> Self {
        Self::new(14.5, 13.5, 0.0)
    }

    pub const fn proposed_full() -> Self {
        Self::new(14.5, 13.5, -30.0)
    }

    pub const fn proposed_partial() -> Self {
        Self::new(13.0, 12.8, -30.0)
    }

    pub fn validate(&self, name: &'static str) -> Result<()> {
        if !(self.v_float < self.v_limit) || !self.v_float.is_finite() || !self.v_limit.is_finite() {
            return Err(Error::param(name, "v_float must be below v_limit"));
        }
        Ok(())
    }
}

/// Limits shifted by `t_var` mV for every degree away from the reference.
pub fn compensated_limits(limits: &VoltageLimits, temperature_c: f64) -> VoltageLimits {
    let shift = limits.t_var * (temperature_c - limits.reference_temperature) / 1000.0;
    VoltageLimits {
        v_limit: limits.v_limit + shift,
        v_float: limits.v_float + shift,
        ..*limits
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    BboxxStatic,
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Bulk,
    Absorption,
    Float,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitMode {
    Full,
    Partial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlParams {
    pub policy: Policy,
    /// Limits used by the static policy.
    pub static_limits: VoltageLimits,
    pub full_limits: VoltageLimits,
    pub partial_limits: VoltageLimits,
    /// Absorption ends when the voltage-limited current falls below this
    /// fraction of `C_N` per hour.
    pub full_charge_taper_c_rate: f64,
    pub disconnect_soc: f64,
    pub reconnect_soc: f64,
    /// Pins the recharge interval instead of deriving it from degradation.
    pub forced_recharge_interval: Option<f64>,
}

impl Default for ControlParams {
    fn default() -> Self {
        Self {
            policy: Policy::BboxxStatic,
            static_limits: VoltageLimits::bboxx(),
            full_limits: VoltageLimits::proposed_full(),
            partial_limits: VoltageLimits::proposed_partial(),
            full_charge_taper_c_rate: 0.02,
            disconnect_soc: 0.5,
            reconnect_soc: 0.55,
            forced_recharge_interval: None,
        }
    }
}

impl ControlParams {
    pub fn with_policy(policy: Policy) -> Self {
        Self {
            policy,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.static_limits.validate("static_limits")?;
        self.full_limits.validate("full_limits")?;
        self.partial_limits.validate("partial_limits")?;
        if !(self.full_charge_taper_c_rate > 0.0) {
            return Err(Error::param("full_charge_taper_c_rate", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.disconnect_soc) || self.reconnect_soc < self.disconnect_soc {
            return Err(Error::param(
                "reconnect_soc",
                "need 0 <= disconnect_soc <= reconnect_soc",
            ));
        }
        if let Some(d) = self.forced_recharge_interval {
            if !(MIN_RECHARGE_INTERVAL..=MAX_RECHARGE_INTERVAL).contains(&d) {
                return Err(Error::param("forced_recharge_interval", "must lie in [1, 6]"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerState {
    pub phase: Phase,
    pub policy: Policy,
    pub days_since_full_recharge: u32,
    pub recharge_interval: f64,
    /// Limit set chosen for the current day.
    pub mode: LimitMode,
    pub load_disconnected: bool,
}

impl ControllerState {
    /// A controller on the first day of service. The first day always uses
    /// the full limit set.
    pub fn new(params: &ControlParams) -> Self {
        Self {
            phase: Phase::Bulk,
            policy: params.policy,
            days_since_full_recharge: 0,
            recharge_interval: params.forced_recharge_interval.unwrap_or(MIN_RECHARGE_INTERVAL),
            mode: LimitMode::Full,
            load_disconnected: false,
        }
    }

    /// Active limits before temperature compensation.
    pub fn active_limits(&self, params: &ControlParams) -> VoltageLimits {
        select_limits(params, self)
    }

    /// Midnight bookkeeping: count the day, refresh the interval from the
    /// day's degradation split and pick tomorrow's limit set.
    pub fn on_day_boundary(&mut self, params: &ControlParams, delta: &DailyDelta) {
        self.days_since_full_recharge = self.days_since_full_recharge.saturating_add(1);
        if self.policy == Policy::Adaptive {
            self.recharge_interval = params
                .forced_recharge_interval
                .unwrap_or_else(|| recharge_interval(delta));
            self.mode = if f64::from(self.days_since_full_recharge) >= self.recharge_interval {
                LimitMode::Full
            } else {
                LimitMode::Partial
            };
        }
    }

    /// Registers a float entry. Returns true when it counts as a full recharge.
    fn enter_float(&mut self) -> bool {
        self.phase = Phase::Float;
        let full = self.mode == LimitMode::Full;
        if full {
            self.days_since_full_recharge = 0;
        }
        full
    }
}

/// Days between full recharges from the corrosion share of yesterday's
/// capacity loss. Idle days reuse the previous share (see `DailyDelta`).
pub fn recharge_interval(delta: &DailyDelta) -> f64 {
    let share = if delta.total > 0.0 {
        (delta.corrosion / delta.total).clamp(0.0, 1.0)
    } else {
        delta.corrosion_fraction.clamp(0.0, 1.0)
    };
    (MIN_RECHARGE_INTERVAL + (MAX_RECHARGE_INTERVAL - MIN_RECHARGE_INTERVAL) * share)
        .clamp(MIN_RECHARGE_INTERVAL, MAX_RECHARGE_INTERVAL)
}

/// Uncompensated limits for the controller's policy and current day mode.
pub fn select_limits(params: &ControlParams, ctrl: &ControllerState) -> VoltageLimits {
    match (ctrl.policy, ctrl.mode) {
        (Policy::BboxxStatic, _) => params.static_limits,
        (Policy::Adaptive, LimitMode::Full) => params.full_limits,
        (Policy::Adaptive, LimitMode::Partial) => params.partial_limits,
    }
}

/// What the controller did during one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TsccOutcome {
    /// Battery current (A), positive while charging.
    pub current: f64,
    /// Limits in force for the step, after compensation.
    pub limits: VoltageLimits,
    /// Float was entered this step; `Some(true)` for a full recharge.
    pub entered_float: Option<bool>,
}

/// One controller step.
///
/// `solar_current` is what the panel could deliver and `load_current` what
/// the connected load draws, both at the present terminal voltage. The
/// surplus charges the battery subject to the phase's voltage ceiling; a
/// deficit discharges it and re-arms the cycle to bulk.
#[allow(clippy::too_many_arguments)]
pub fn tscc_step(
    params: &ControlParams,
    ctrl: &mut ControllerState,
    battery: &BatteryParams,
    soc: f64,
    capacity_loss_ah: f64,
    temperature_c: f64,
    solar_current: f64,
    load_current: f64,
) -> Result<TsccOutcome> {
    let limits = compensated_limits(&select_limits(params, ctrl), temperature_c);
    let surplus = solar_current.max(0.0) - load_current.max(0.0);
    let mut outcome = TsccOutcome {
        current: surplus,
        limits,
        entered_float: None,
    };
    if surplus <= 0.0 {
        ctrl.phase = Phase::Bulk;
        return Ok(outcome);
    }

    if ctrl.phase == Phase::Bulk {
        let predicted = battery::terminal_voltage_guarded(battery, soc, surplus, capacity_loss_ah)?;
        if predicted < limits.v_limit {
            return Ok(outcome);
        }
        ctrl.phase = Phase::Absorption;
    }

    let taper = params.full_charge_taper_c_rate * battery.nominal_capacity_ah;
    match ctrl.phase {
        Phase::Absorption => {
            let limited = solve(battery, soc, limits.v_limit, capacity_loss_ah)?.max(0.0);
            outcome.current = surplus.min(limited);
            if limited <= surplus && limited < taper {
                outcome.entered_float = Some(ctrl.enter_float());
            }
        }
        Phase::Float => {
            let hold = solve(battery, soc, limits.v_float, capacity_loss_ah)?.max(0.0);
            outcome.current = surplus.min(hold);
        }
        Phase::Bulk => unreachable!("bulk handled above"),
    }
    Ok(outcome)
}

fn solve(battery: &BatteryParams, soc: f64, target: f64, loss: f64) -> Result<f64> {
    battery::current_for_voltage(battery, soc, target, loss).map_err(|e| Error::VoltageSolve {
        step: 0,
        reason: e.to_string(),
    })
}

/// Low-SOC load disconnect with reconnect hysteresis. Returns whether the
/// load is disconnected after this update.
pub fn load_disconnect(params: &ControlParams, ctrl: &mut ControllerState, soc: f64) -> bool {
    if ctrl.load_disconnected {
        if soc >= params.reconnect_soc {
            ctrl.load_disconnected = false;
        }
    } else if soc < params.disconnect_soc {
        ctrl.load_disconnected = true;
    }
    ctrl.load_disconnected
}
