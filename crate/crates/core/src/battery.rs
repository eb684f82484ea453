//! Electro-thermal VRLA battery model.
//!
//! Open-circuit voltage comes from the acid molality through two quartic
//! fits (whole cell and positive electrode). Terminal voltage is a modified
//! Shepherd expression, and state of charge is coulomb counted with the
//! gassing current subtracted. Cell quantities (`U`, `U_P`, `y`, `c`) are per
//! cell; terminal and gassing voltages are battery level (`cells_in_series`
//! cells).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound applied to SOC inside the `SOC/(1-SOC)` charge term.
pub const SOC_CAP: f64 = 0.9999;
/// Lower bound applied to SOC inside the `(1-SOC)/SOC` discharge term.
pub const SOC_FLOOR: f64 = 1.0e-4;

const SECONDS_PER_HOUR: f64 = 3600.0;
const CM3_PER_M3: f64 = 1.0e6;
const GRAMS_PER_KG: f64 = 1.0e3;

/// Tafel-type gassing current constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GassingParams {
    /// Normalised gassing current at the nominal point (A).
    pub i_gas0: f64,
    /// Voltage coefficient (1/V).
    pub c_v: f64,
    /// Temperature coefficient (1/K).
    pub c_t: f64,
    /// Nominal battery voltage (V).
    pub v_gas0: f64,
    /// Nominal temperature (K).
    pub t_gas0: f64,
}

impl Default for GassingParams {
    fn default() -> Self {
        Self {
            i_gas0: 0.017,
            c_v: 0.183,
            c_t: 0.06,
            v_gas0: 13.38,
            t_gas0: 298.0,
        }
    }
}

/// Datasheet and calibration constants of one battery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatteryParams {
    /// Nominal capacity (Ah).
    pub nominal_capacity_ah: f64,
    pub cells_in_series: u32,
    /// Acid concentration at SOC = 1 (mol/m^3).
    pub c_max: f64,
    /// Electrolyte volume (m^3).
    pub electrolyte_volume: f64,
    /// Molar volume of water (cm^3/mol).
    pub molar_volume_water: f64,
    /// Molar volume of sulphuric acid (cm^3/mol).
    pub molar_volume_acid: f64,
    /// Molar mass of water (g/mol).
    pub molar_mass_water: f64,
    /// Faraday constant (C/mol).
    pub faraday: f64,
    /// Aggregated internal resistance coefficient of a new battery
    /// (battery volts per unit C-rate).
    pub b0_nominal: f64,
    /// Charge-transfer overvoltage coefficient.
    pub b1: f64,
    /// Exponent of the ageing law `b0 = b0_nominal * (C_N / (C_N - C))^k`.
    /// Zero keeps `b0` constant.
    pub b0_ageing_exponent: f64,
    pub gassing: GassingParams,
    /// Below this current magnitude (A) the SOC is re-anchored on the OCV.
    pub rest_current_threshold: f64,
}

impl Default for BatteryParams {
    fn default() -> Self {
        Self {
            nominal_capacity_ah: 20.0,
            cells_in_series: 6,
            c_max: 5480.0,
            electrolyte_volume: 1.43e-4,
            molar_volume_water: 17.5,
            molar_volume_acid: 45.0,
            molar_mass_water: 18.0,
            faraday: 96_485.332_12,
            b0_nominal: 5.0,
            b1: 0.2,
            b0_ageing_exponent: 1.0,
            gassing: GassingParams::default(),
            rest_current_threshold: 0.01,
        }
    }
}

impl BatteryParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("nominal_capacity_ah", self.nominal_capacity_ah),
            ("c_max", self.c_max),
            ("electrolyte_volume", self.electrolyte_volume),
            ("molar_volume_water", self.molar_volume_water),
            ("molar_volume_acid", self.molar_volume_acid),
            ("molar_mass_water", self.molar_mass_water),
            ("faraday", self.faraday),
            ("b0_nominal", self.b0_nominal),
            ("b1", self.b1),
            ("gassing.i_gas0", self.gassing.i_gas0),
            ("gassing.c_v", self.gassing.c_v),
            ("gassing.c_t", self.gassing.c_t),
            ("gassing.v_gas0", self.gassing.v_gas0),
            ("gassing.t_gas0", self.gassing.t_gas0),
            ("rest_current_threshold", self.rest_current_threshold),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::param(name, format!("must be positive, got {value}")));
            }
        }
        if self.cells_in_series == 0 {
            return Err(Error::param("cells_in_series", "must be at least 1"));
        }
        if !(self.b0_ageing_exponent.is_finite() && self.b0_ageing_exponent >= 0.0) {
            return Err(Error::param("b0_ageing_exponent", "must be non-negative"));
        }
        if self.c_max / CM3_PER_M3 * self.molar_volume_acid >= 1.0 {
            return Err(Error::param(
                "c_max",
                "acid volume fraction at full charge must stay below 1",
            ));
        }
        let c_empty = self.c_max - self.concentration_span();
        if c_empty <= 0.0 {
            return Err(Error::param(
                "c_max",
                format!("acid concentration at SOC = 0 would be {c_empty:.1} mol/m^3"),
            ));
        }
        Ok(())
    }

    pub fn nominal_capacity_coulomb(&self) -> f64 {
        self.nominal_capacity_ah * SECONDS_PER_HOUR
    }

    /// Concentration change between SOC = 0 and SOC = 1 (mol/m^3).
    pub fn concentration_span(&self) -> f64 {
        self.nominal_capacity_coulomb() / (self.faraday * self.electrolyte_volume)
    }

    fn cells(&self) -> f64 {
        f64::from(self.cells_in_series)
    }

    /// Internal resistance coefficient after `capacity_loss_ah` of fade.
    pub fn b0_at(&self, capacity_loss_ah: f64) -> f64 {
        let remaining = (self.nominal_capacity_ah - capacity_loss_ah.max(0.0))
            .max(0.05 * self.nominal_capacity_ah);
        self.b0_nominal * (self.nominal_capacity_ah / remaining).powf(self.b0_ageing_exponent)
    }
}

/// Evolving electro-thermal state of the battery.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatteryState {
    pub soc: f64,
    /// mol/m^3
    pub acid_concentration: f64,
    /// Battery-level terminal voltage (V).
    pub terminal_voltage: f64,
    /// Cell-level positive electrode potential (V).
    pub positive_potential: f64,
    /// Kelvin.
    pub temperature: f64,
    pub gassing_current: f64,
    /// Positive while charging.
    pub applied_current: f64,
}

impl BatteryState {
    /// A battery resting at `soc` and `temperature` kelvin.
    pub fn at_rest(params: &BatteryParams, soc: f64, temperature: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&soc) {
            return Err(Error::param("soc", format!("{soc} outside [0, 1]")));
        }
        let c = acid_concentration(params, soc)?;
        let y = log_molality(params, c)?;
        let v = params.cells() * ocv(y);
        Ok(Self {
            soc,
            acid_concentration: c,
            terminal_voltage: v,
            positive_potential: positive_ocv(y),
            temperature,
            gassing_current: gassing_current(params, v, temperature),
            applied_current: 0.0,
        })
    }
}

/// Acid concentration (mol/m^3) at a given SOC.
pub fn acid_concentration(params: &BatteryParams, soc: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&soc) {
        return Err(Error::Domain {
            op: "acid_concentration",
            reason: format!("soc {soc} outside [0, 1]"),
        });
    }
    let span = params.concentration_span();
    if params.c_max - span <= 0.0 {
        return Err(Error::param(
            "c_max",
            "acid concentration must stay positive over the full SOC range",
        ));
    }
    Ok(params.c_max + span * (soc - 1.0))
}

/// Base-10 logarithm of the acid molality (mol/kg) for a concentration in
/// mol/m^3.
pub fn log_molality(params: &BatteryParams, c: f64) -> Result<f64> {
    let c = c / CM3_PER_M3;
    let denom = (1.0 - c * params.molar_volume_acid) * params.molar_mass_water;
    let molality = GRAMS_PER_KG * c * params.molar_volume_water / denom;
    if !(molality > 0.0 && molality.is_finite()) {
        return Err(Error::Domain {
            op: "log_molality",
            reason: format!("molality {molality} is not positive for c = {c} mol/cm^3"),
        });
    }
    Ok(molality.log10())
}

/// Cell open-circuit voltage as a function of log molality.
pub fn ocv(y: f64) -> f64 {
    1.92 + y * (0.15 + y * (0.06 + y * (0.07 + y * 0.03)))
}

/// Positive-electrode open-circuit potential as a function of log molality.
pub fn positive_ocv(y: f64) -> f64 {
    1.628 + y * (0.074 + y * (0.033 + y * (0.043 + y * 0.022)))
}

fn log_molality_at_soc(params: &BatteryParams, soc: f64) -> Result<f64> {
    log_molality(params, acid_concentration(params, soc)?)
}

/// Battery-level open-circuit voltage at `soc`.
pub fn battery_ocv(params: &BatteryParams, soc: f64) -> Result<f64> {
    Ok(params.cells() * ocv(log_molality_at_soc(params, soc)?))
}

/// Cell-level positive-electrode OCV at `soc`.
pub fn positive_ocv_at_soc(params: &BatteryParams, soc: f64) -> Result<f64> {
    Ok(positive_ocv(log_molality_at_soc(params, soc)?))
}

/// Battery-level voltage per ampere of current, on the charge (`I > 0`) or
/// discharge side.
///
/// Charging uses the `SOC/(1-SOC)` saturation term. Discharging mirrors it
/// with `(1-SOC)/SOC`, which saturates towards empty instead of full.
fn overpotential_slope(params: &BatteryParams, soc: f64, charging: bool, b0: f64) -> f64 {
    let ratio = if charging {
        let s = soc.clamp(0.0, SOC_CAP);
        s / (1.0 - s)
    } else {
        let s = soc.clamp(SOC_FLOOR, 1.0);
        (1.0 - s) / s
    };
    b0 * (1.0 + params.b1 * ratio) / params.nominal_capacity_ah
}

/// Battery-level overpotential (V) for current `current` at `soc`.
pub fn overpotential(params: &BatteryParams, soc: f64, current: f64, capacity_loss_ah: f64) -> f64 {
    let b0 = params.b0_at(capacity_loss_ah);
    current * overpotential_slope(params, soc, current >= 0.0, b0)
}

/// Terminal voltage of the battery. Rejects SOC exactly 1 (or 0) under load,
/// where the saturation term is singular.
pub fn terminal_voltage(
    params: &BatteryParams,
    soc: f64,
    current: f64,
    capacity_loss_ah: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&soc) {
        return Err(Error::Domain {
            op: "terminal_voltage",
            reason: format!("soc {soc} outside [0, 1]"),
        });
    }
    if current > 0.0 && soc >= 1.0 {
        return Err(Error::Domain {
            op: "terminal_voltage",
            reason: "SOC/(1-SOC) is singular at SOC = 1 with non-zero current".into(),
        });
    }
    if current < 0.0 && soc <= 0.0 {
        return Err(Error::Domain {
            op: "terminal_voltage",
            reason: "(1-SOC)/SOC is singular at SOC = 0 with non-zero current".into(),
        });
    }
    Ok(battery_ocv(params, soc)? + overpotential(params, soc, current, capacity_loss_ah))
}

/// Terminal voltage with SOC held inside `[SOC_FLOOR, SOC_CAP]` for the
/// saturation terms; the form used by the simulation loop.
pub fn terminal_voltage_guarded(
    params: &BatteryParams,
    soc: f64,
    current: f64,
    capacity_loss_ah: f64,
) -> Result<f64> {
    let soc = soc.clamp(0.0, 1.0);
    Ok(battery_ocv(params, soc)? + overpotential(params, soc, current, capacity_loss_ah))
}

/// Current (A) at which the guarded terminal voltage equals `target_v`.
///
/// Voltage is piecewise linear in current with a kink at zero, so the solve
/// is exact: pick the side from the sign of `target_v - OCV`.
pub fn current_for_voltage(
    params: &BatteryParams,
    soc: f64,
    target_v: f64,
    capacity_loss_ah: f64,
) -> Result<f64> {
    let soc = soc.clamp(0.0, 1.0);
    let open = battery_ocv(params, soc)?;
    let b0 = params.b0_at(capacity_loss_ah);
    let gap = target_v - open;
    let slope = overpotential_slope(params, soc, gap >= 0.0, b0);
    let current = gap / slope;
    if !current.is_finite() {
        return Err(Error::Domain {
            op: "current_for_voltage",
            reason: format!("degenerate slope {slope} at soc {soc}"),
        });
    }
    Ok(current)
}

/// Gassing current (A) at battery voltage `voltage` and temperature `temperature_k`.
pub fn gassing_current(params: &BatteryParams, voltage: f64, temperature_k: f64) -> f64 {
    let g = &params.gassing;
    g.i_gas0 * (g.c_v * (voltage - g.v_gas0) + g.c_t * (temperature_k - g.t_gas0)).exp()
}

/// Result of one coulomb-counting update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SocStep {
    pub soc: f64,
    /// Unclamped SOC minus clamped SOC, when clamping happened.
    pub clamp_jump: Option<f64>,
}

/// Advances SOC by `(I - I_gas) dt / C_N`, clamping into `[0, 1]`.
pub fn step_soc(params: &BatteryParams, soc: f64, current: f64, gassing: f64, dt_s: f64) -> SocStep {
    let raw = soc + (current - gassing) * dt_s / params.nominal_capacity_coulomb();
    let clamped = raw.clamp(0.0, 1.0);
    SocStep {
        soc: clamped,
        clamp_jump: (clamped != raw).then_some(clamped - raw),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SocCorrection {
    /// Current above the rest threshold; coulomb count stands.
    NotAtRest,
    Corrected(f64),
    /// Measured voltage outside the OCV range; SOC pinned to the nearest end.
    Clamped(f64),
}

impl SocCorrection {
    pub fn soc(self) -> Option<f64> {
        match self {
            SocCorrection::NotAtRest => None,
            SocCorrection::Corrected(s) | SocCorrection::Clamped(s) => Some(s),
        }
    }
}

/// Re-anchors the SOC by inverting the OCV when the battery is at rest.
pub fn correct_soc_by_ocv(
    params: &BatteryParams,
    measured_v: f64,
    current: f64,
) -> Result<SocCorrection> {
    if current.abs() >= params.rest_current_threshold {
        return Ok(SocCorrection::NotAtRest);
    }
    invert_ocv(params, measured_v)
}

/// SOC whose battery OCV equals `voltage`, by bisection on the monotone
/// composition of concentration, molality and the OCV polynomial.
pub fn invert_ocv(params: &BatteryParams, voltage: f64) -> Result<SocCorrection> {
    let lo_v = battery_ocv(params, 0.0)?;
    let hi_v = battery_ocv(params, 1.0)?;
    if voltage <= lo_v {
        return Ok(if voltage == lo_v {
            SocCorrection::Corrected(0.0)
        } else {
            SocCorrection::Clamped(0.0)
        });
    }
    if voltage >= hi_v {
        return Ok(if voltage == hi_v {
            SocCorrection::Corrected(1.0)
        } else {
            SocCorrection::Clamped(1.0)
        });
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if battery_ocv(params, mid)? < voltage {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(SocCorrection::Corrected(0.5 * (lo + hi)))
}
