//! Positive-grid corrosion and active-mass degradation.
//!
//! Corrosion grows a layer of thickness `W` at a speed set by the positive
//! electrode potential and temperature. Active mass is consumed by weighted
//! Ah throughput. Both map onto a capacity loss in Ah, and their sum decides
//! end of life.

use serde::{Deserialize, Serialize};

use crate::battery::{self, BatteryParams};
use crate::error::{Error, Result};

const SECONDS_PER_HOUR: f64 = 3600.0;

/// Positive-electrode potential (V, cell level): the positive OCV plus half
/// of the cell's share of the terminal overpotential.
pub fn positive_terminal_voltage(
    params: &BatteryParams,
    soc: f64,
    current: f64,
    capacity_loss_ah: f64,
) -> Result<f64> {
    if current != 0.0 && !(0.0 < soc && soc < 1.0) {
        battery::terminal_voltage(params, soc, current, capacity_loss_ah)?;
    }
    positive_terminal_voltage_guarded(params, soc, current, capacity_loss_ah)
}

pub fn positive_terminal_voltage_guarded(
    params: &BatteryParams,
    soc: f64,
    current: f64,
    capacity_loss_ah: f64,
) -> Result<f64> {
    let soc = soc.clamp(0.0, 1.0);
    let eta = battery::overpotential(params, soc, current, capacity_loss_ah);
    Ok(battery::positive_ocv_at_soc(params, soc)? + 0.5 * eta / f64::from(params.cells_in_series))
}

/// Corrosion speed surface and growth law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrosionParams {
    /// `(positive potential V, relative speed)` knots, ascending in voltage.
    pub speed_knots: Vec<(f64, f64)>,
    /// Temperature rise (K) that doubles the corrosion speed.
    pub doubling_interval_k: f64,
    pub reference_temperature_k: f64,
    /// Positive potential (V) separating sub-linear and linear growth.
    pub regime_threshold_v: f64,
    /// Exponent of the sub-linear growth law `W = k_s * tau^n`.
    pub power_law_exponent: f64,
    /// Length of one time unit (h) for both growth laws.
    pub time_unit_hours: f64,
}

impl Default for CorrosionParams {
    fn default() -> Self {
        Self {
            speed_knots: vec![
                (1.60, 0.20),
                (1.70, 0.12),
                (1.72, 0.10),
                (1.74, 0.60),
                (1.76, 1.00),
                (1.80, 1.10),
                (1.85, 1.30),
                (1.90, 1.60),
                (2.00, 2.60),
            ],
            doubling_interval_k: 10.0,
            reference_temperature_k: 298.0,
            regime_threshold_v: 1.74,
            power_law_exponent: 0.6,
            time_unit_hours: 1.0,
        }
    }
}

impl CorrosionParams {
    pub fn validate(&self) -> Result<()> {
        if self.speed_knots.len() < 2 {
            return Err(Error::param("speed_knots", "need at least two knots"));
        }
        for pair in self.speed_knots.windows(2) {
            if !(pair[1].0 > pair[0].0) {
                return Err(Error::param("speed_knots", "voltages must be strictly ascending"));
            }
        }
        if self.speed_knots.iter().any(|&(_, k)| !(k >= 0.0 && k.is_finite())) {
            return Err(Error::param("speed_knots", "speeds must be non-negative"));
        }
        for (name, v) in [
            ("doubling_interval_k", self.doubling_interval_k),
            ("reference_temperature_k", self.reference_temperature_k),
            ("power_law_exponent", self.power_law_exponent),
            ("time_unit_hours", self.time_unit_hours),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, "must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrosionSpeed {
    pub k_s: f64,
    /// The potential fell outside the knot table and was clamped to its edge.
    pub clamped: bool,
}

/// Corrosion speed parameter at positive potential `v_p` (V, cell level) and
/// temperature `temperature_k`.
pub fn corrosion_speed(params: &CorrosionParams, v_p: f64, temperature_k: f64) -> CorrosionSpeed {
    let knots = &params.speed_knots;
    let (first, last) = (knots[0], knots[knots.len() - 1]);
    let (base, clamped) = if v_p <= first.0 {
        (first.1, v_p < first.0)
    } else if v_p >= last.0 {
        (last.1, v_p > last.0)
    } else {
        let i = knots.partition_point(|&(v, _)| v <= v_p);
        let (v0, k0) = knots[i - 1];
        let (v1, k1) = knots[i];
        (k0 + (k1 - k0) * (v_p - v0) / (v1 - v0), false)
    };
    let factor = (std::f64::consts::LN_2 * (temperature_k - params.reference_temperature_k)
        / params.doubling_interval_k)
        .exp();
    CorrosionSpeed {
        k_s: base * factor,
        clamped,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrosionState {
    pub layer_thickness: f64,
    pub capacity_loss: f64,
    pub w_limit: f64,
    pub c_corr_limit: f64,
}

impl CorrosionState {
    pub fn new(w_limit: f64, c_corr_limit: f64) -> Self {
        Self {
            layer_thickness: 0.0,
            capacity_loss: 0.0,
            w_limit,
            c_corr_limit,
        }
    }

    /// Grows the layer over `dt_s` seconds at speed `k_s`.
    ///
    /// Below the regime threshold growth follows `W = k_s * tau^n`, with the
    /// effective age `tau` recovered from the present `W` so that switching
    /// regimes never makes `W` jump. At or above it growth is linear.
    pub fn grow(&mut self, params: &CorrosionParams, k_s: f64, v_p: f64, dt_s: f64) {
        if k_s <= 0.0 {
            return;
        }
        let dt = dt_s / (SECONDS_PER_HOUR * params.time_unit_hours);
        let grown = if v_p < params.regime_threshold_v {
            let n = params.power_law_exponent;
            let tau = (self.layer_thickness / k_s).powf(1.0 / n);
            k_s * (tau + dt).powf(n)
        } else {
            self.layer_thickness + k_s * dt
        };
        self.layer_thickness = grown.max(self.layer_thickness);
        self.capacity_loss = corrosion_capacity_loss(self);
    }
}

pub fn corrosion_capacity_loss(corr: &CorrosionState) -> f64 {
    corr.c_corr_limit * corr.layer_thickness / corr.w_limit
}

/// Weighted Ah-throughput constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActiveMassParams {
    /// SOC-factor growth rate right after a full charge (1/h).
    pub c_soc0: f64,
    /// Extra growth rate per unit of depth below full (1/h).
    pub c_soc_min: f64,
    /// Reference discharge current of the current factor (A).
    pub i_ref: f64,
    /// Floor on the discharge current inside the current factor (A).
    pub i_floor: f64,
}

impl Default for ActiveMassParams {
    fn default() -> Self {
        Self {
            c_soc0: 6.614e-5,
            c_soc_min: 3.307e-3,
            i_ref: 2.0,
            i_floor: 1.0e-3,
        }
    }
}

impl ActiveMassParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("i_ref", self.i_ref),
            ("i_floor", self.i_floor),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, "must be positive"));
            }
        }
        for (name, v) in [("c_soc0", self.c_soc0), ("c_soc_min", self.c_soc_min)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::param(name, "must be non-negative"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActiveMassState {
    pub weighted_cycles: f64,
    pub z_n: f64,
    pub capacity_loss: f64,
    pub c_deg_limit: f64,
    pub time_since_full_charge_h: f64,
    pub min_soc_since_full_charge: f64,
}

impl ActiveMassState {
    pub fn new(z_n: f64, c_deg_limit: f64) -> Self {
        let mut am = Self {
            weighted_cycles: 0.0,
            z_n,
            capacity_loss: 0.0,
            c_deg_limit,
            time_since_full_charge_h: 0.0,
            min_soc_since_full_charge: 1.0,
        };
        am.capacity_loss = active_mass_loss(&am);
        am
    }

    pub fn observe(&mut self, soc: f64, dt_s: f64) {
        self.time_since_full_charge_h += dt_s / SECONDS_PER_HOUR;
        self.min_soc_since_full_charge = self.min_soc_since_full_charge.min(soc);
    }

    pub fn reset_full_charge(&mut self) {
        self.time_since_full_charge_h = 0.0;
        self.min_soc_since_full_charge = 1.0;
    }
}

/// Current factor: larger weight for gentle discharges.
fn current_factor(params: &ActiveMassParams, discharge_current: f64) -> f64 {
    (params.i_ref / discharge_current.max(params.i_floor)).sqrt()
}

/// SOC factor for discharge current `discharge_current` (A, magnitude).
pub fn soc_factor(params: &ActiveMassParams, am: &ActiveMassState, discharge_current: f64) -> f64 {
    let depth = 1.0 - am.min_soc_since_full_charge.clamp(0.0, 1.0);
    1.0 + (params.c_soc0 + params.c_soc_min * depth)
        * current_factor(params, discharge_current)
        * am.time_since_full_charge_h.max(0.0)
}

/// Adds `I_d * f_SOC * dt / C_N` weighted cycles. Charging (`I_d = 0`)
/// contributes nothing.
pub fn accumulate_weighted_cycles(
    am: &mut ActiveMassState,
    nominal_capacity_ah: f64,
    discharge_current: f64,
    f_soc: f64,
    dt_s: f64,
) {
    let i_d = discharge_current.max(0.0);
    am.weighted_cycles += i_d * f_soc * dt_s / (nominal_capacity_ah * SECONDS_PER_HOUR);
    am.capacity_loss = active_mass_loss(am);
}

pub fn active_mass_loss(am: &ActiveMassState) -> f64 {
    am.c_deg_limit * (-5.0 * (1.0 - am.weighted_cycles / am.z_n)).exp()
}

/// Capacity-loss limits of each mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegradationLimits {
    pub w_limit: f64,
    pub c_corr_limit: f64,
    pub c_deg_limit: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DailyDelta {
    pub corrosion: f64,
    pub total: f64,
    /// Corrosion share of the day's loss, carried forward over idle days.
    pub corrosion_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradationLedger {
    pub corrosion: CorrosionState,
    pub active_mass: ActiveMassState,
    pub total_loss: f64,
    pub daily_deltas: Vec<DailyDelta>,
    day_start: (f64, f64),
    last_fraction: f64,
    pub speed_clamp_events: u64,
}

impl DegradationLedger {
    pub fn new(limits: DegradationLimits, z_n: f64) -> Self {
        let corrosion = CorrosionState::new(limits.w_limit, limits.c_corr_limit);
        let active_mass = ActiveMassState::new(z_n, limits.c_deg_limit);
        let total_loss = corrosion.capacity_loss + active_mass.capacity_loss;
        Self {
            corrosion,
            active_mass,
            total_loss,
            daily_deltas: Vec::new(),
            day_start: (corrosion.capacity_loss, total_loss),
            last_fraction: 0.0,
            speed_clamp_events: 0,
        }
    }

    /// Advances both mechanisms by one step.
    #[allow(clippy::too_many_arguments)]
    pub fn step(
        &mut self,
        corrosion: &CorrosionParams,
        active: &ActiveMassParams,
        nominal_capacity_ah: f64,
        v_p: f64,
        temperature_k: f64,
        discharge_current: f64,
        soc: f64,
        dt_s: f64,
    ) {
        let speed = corrosion_speed(corrosion, v_p, temperature_k);
        if speed.clamped {
            self.speed_clamp_events += 1;
        }
        self.corrosion.grow(corrosion, speed.k_s, v_p, dt_s);

        self.active_mass.observe(soc, dt_s);
        if discharge_current > 0.0 {
            let f = soc_factor(active, &self.active_mass, discharge_current);
            accumulate_weighted_cycles(
                &mut self.active_mass,
                nominal_capacity_ah,
                discharge_current,
                f,
                dt_s,
            );
        }
        self.total_loss = self.corrosion.capacity_loss + self.active_mass.capacity_loss;
    }

    pub fn reset_full_charge(&mut self) {
        self.active_mass.reset_full_charge();
    }

    /// Closes the current day and returns its loss increments.
    pub fn close_day(&mut self) -> DailyDelta {
        let d_corr = self.corrosion.capacity_loss - self.day_start.0;
        let d_total = self.total_loss - self.day_start.1;
        if d_total > 0.0 {
            self.last_fraction = (d_corr / d_total).clamp(0.0, 1.0);
        }
        let delta = DailyDelta {
            corrosion: d_corr,
            total: d_total,
            corrosion_fraction: self.last_fraction,
        };
        self.daily_deltas.push(delta);
        self.day_start = (self.corrosion.capacity_loss, self.total_loss);
        delta
    }

    pub fn total_loss_and_eol(&self, nominal_capacity_ah: f64, eol_fraction: f64) -> (f64, bool) {
        total_loss_and_eol(
            self.corrosion.capacity_loss,
            self.active_mass.capacity_loss,
            nominal_capacity_ah,
            eol_fraction,
        )
    }
}

/// Total capacity loss and whether it has reached end of life.
pub fn total_loss_and_eol(c_corr: f64, c_deg: f64, nominal_capacity_ah: f64, eol_fraction: f64) -> (f64, bool) {
    let c = c_corr + c_deg;
    (c, c >= eol_fraction * nominal_capacity_ah)
}
