//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p vrla-ageing --test acceptance`.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{baselines, run_all, scenario, with_dt, BASELINE_ORDER};
use vrla_ageing::battery::{self, BatteryParams, SocCorrection};
use vrla_ageing::calibration;
use vrla_ageing::control::{
    self, compensated_limits, ControlParams, ControllerState, LimitMode, Policy, VoltageLimits,
};
use vrla_ageing::degradation::{
    self, ActiveMassParams, ActiveMassState, CorrosionParams, CorrosionState, DailyDelta,
};
use vrla_ageing::engine::{compare_strategies, ModelParams, Plant, SimResult};
use vrla_ageing::profiles::{self, stress_factors, ArchetypeSpec, UseArchetype};

type Check = std::result::Result<(), String>;

struct Outcome {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self {
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn check(&mut self, name: &str, ok: bool, detail: impl Into<String>) {
        if !ok {
            self.failures.push(format!("{name}: {}", detail.into()));
        }
    }

    fn run(&mut self, name: &str, c: Check) {
        if let Err(e) = c {
            self.failures.push(format!("{name}: {e}"));
        }
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    fn within(&mut self, elapsed: Duration, limit: Duration) {
        self.check(
            "runtime",
            elapsed < limit,
            format!("{:.1} s exceeds {:.0} s", elapsed.as_secs_f64(), limit.as_secs_f64()),
        );
        self.note(format!("{:.2} s", elapsed.as_secs_f64()));
    }
}

fn close(name: &str, got: f64, want: f64, tol: f64) -> Check {
    if (got - want).abs() <= tol {
        Ok(())
    } else {
        Err(format!("{name}: got {got}, want {want} +/- {tol}"))
    }
}

fn holds(name: &str, ok: bool) -> Check {
    if ok {
        Ok(())
    } else {
        Err(format!("{name} does not hold"))
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn battery_examples() -> Check {
    let p = BatteryParams::default();
    let c = |s| battery::acid_concentration(&p, s).map_err(err);
    close("c(1)", c(1.0)?, p.c_max, 0.0)?;
    close("c_max - c(0)", p.c_max - c(0.0)?, 5218.0, 1.0)?;
    close("c_max - c(0.5)", p.c_max - c(0.5)?, 2609.0, 1.0)?;

    let unit = p.molar_mass_water / (1000.0 * p.molar_volume_water + p.molar_mass_water * p.molar_volume_acid) * 1e6;
    close("y(1 mol/kg)", battery::log_molality(&p, unit).map_err(err)?, 0.0, 1e-12)?;
    holds(
        "y increasing",
        battery::log_molality(&p, 3000.0).map_err(err)? > battery::log_molality(&p, 2000.0).map_err(err)?,
    )?;
    let cell_full = battery::battery_ocv(&p, 1.0).map_err(err)? / 6.0;
    holds("full-charge cell OCV in [2.05, 2.15]", (2.05..=2.15).contains(&cell_full))?;

    for (y, u, up) in [(0.0, 1.92, 1.628), (1.0, 2.23, 1.800), (-1.0, 1.79, 1.566)] {
        close("U(y)", battery::ocv(y), u, 1e-12)?;
        close("U_P(y)", battery::positive_ocv(y), up, 1e-12)?;
    }

    for soc in [0.1, 0.5, 0.9] {
        close(
            "V(I=0)",
            battery::terminal_voltage(&p, soc, 0.0, 0.0).map_err(err)?,
            battery::battery_ocv(&p, soc).map_err(err)?,
            0.0,
        )?;
    }
    let mut last = f64::MIN;
    for k in 1..100 {
        let v = battery::terminal_voltage(&p, f64::from(k) / 100.0, 1.5, 0.0).map_err(err)?;
        holds("V increasing in soc while charging", v > last)?;
        last = v;
    }
    let v_dis = battery::terminal_voltage(&p, 0.9, -0.05 * p.nominal_capacity_ah, 0.0).map_err(err)?;
    holds("0.05 C discharge from 0.9 within [11.8, 12.6] V", (11.8..=12.6).contains(&v_dis))?;
    let onset = (1..10_000)
        .map(|k| f64::from(k) / 10_000.0)
        .find(|&s| battery::terminal_voltage(&p, s, 0.1 * p.nominal_capacity_ah, 0.0).unwrap() >= 14.5);
    holds("absorption starts in [0.8, 0.95]", matches!(onset, Some(s) if (0.8..=0.95).contains(&s)))?;

    let g = |v, t| battery::gassing_current(&p, v, t);
    holds("gassing nominal point is exactly 0.017 A", g(13.38, 298.0) == 0.017)?;
    close("I_gas(14.5 V)", g(14.5, 298.0), 0.0210, 0.0002)?;
    close("I_gas(308 K)", g(13.38, 308.0), 0.0310, 0.0003)?;

    close("I = I_gas", battery::step_soc(&p, 0.6, 0.3, 0.3, 900.0).soc, 0.6, 0.0)?;
    close("2 A for 1 h", battery::step_soc(&p, 0.5, 2.0, 0.0, 3600.0).soc - 0.5, 0.1, 1e-12)?;
    close("self-discharge 24 h", battery::step_soc(&p, 0.5, 0.0, 0.017, 86_400.0).soc - 0.5, -0.0204, 1e-12)?;

    holds(
        "no correction above rest threshold",
        battery::correct_soc_by_ocv(&p, 12.5, 0.5).map_err(err)? == SocCorrection::NotAtRest,
    )?;
    for k in 0..=80 {
        let s = 0.1 + 0.01 * f64::from(k);
        let v = battery::battery_ocv(&p, s).map_err(err)?;
        let back = battery::correct_soc_by_ocv(&p, v, 0.0).map_err(err)?.soc().unwrap_or(f64::NAN);
        close("OCV inversion", back, s, 1e-6)?;
    }

    let model = ModelParams::default();
    let ctrl = ControlParams::default();
    let limits = degradation::DegradationLimits {
        w_limit: 1e5,
        c_corr_limit: 4.0,
        c_deg_limit: 4.0,
    };
    let mut plant = Plant::new(&model, &ctrl, limits, 0.97, 25.0).map_err(err)?;
    let mut floated = false;
    for _ in 0..96 {
        let r = plant.step_currents(3.0, 0.0, 25.0, 900.0).map_err(err)?;
        if r.full_charge {
            floated = r.soc == 1.0 && plant.soc() == 1.0;
            break;
        }
    }
    holds("float sets soc to 1", floated)
}

fn degradation_examples() -> Check {
    let p = BatteryParams::default();
    for soc in [0.3, 0.8] {
        close(
            "V_P(I=0)",
            degradation::positive_terminal_voltage(&p, soc, 0.0, 0.0).map_err(err)?,
            battery::positive_ocv_at_soc(&p, soc).map_err(err)?,
            0.0,
        )?;
        for i in [-2.0, 1.0] {
            let v = battery::terminal_voltage(&p, soc, i, 0.0).map_err(err)?;
            let vp = degradation::positive_terminal_voltage(&p, soc, i, 0.0).map_err(err)?;
            let u = battery::battery_ocv(&p, soc).map_err(err)? / 6.0;
            let up = battery::positive_ocv_at_soc(&p, soc).map_err(err)?;
            close("V_P identity", vp - up, 0.5 * (v / 6.0 - u), 1e-12)?;
        }
    }
    let s128 = battery::invert_ocv(&p, 12.8).map_err(err)?.soc().unwrap_or(f64::NAN);
    close(
        "V_P at 12.8 V rest",
        degradation::positive_terminal_voltage(&p, s128, 0.0, 0.0).map_err(err)?,
        1.74,
        0.005,
    )?;

    let cp = CorrosionParams::default();
    let k = |v, t| degradation::corrosion_speed(&cp, v, t).k_s;
    close("k_s doubling per 10 K", k(1.78, 308.0) / k(1.78, 298.0), 2.0, 1e-12)?;
    holds("k_s(1.70) < k_s(1.80)", k(1.70, 298.0) < k(1.80, 298.0))?;
    close("k_s continuity", k(1.74 + 1e-10, 298.0), k(1.74, 298.0), 1e-8)?;

    let mut w = CorrosionState::new(1e5, 4.0);
    w.grow(&cp, 0.0, 1.8, 900.0);
    close("k_s = 0 keeps W", w.layer_thickness, 0.0, 0.0)?;
    let mut w = CorrosionState::new(1e5, 4.0);
    w.layer_thickness = 10.0;
    for _ in 0..40 {
        w.grow(&cp, 2.0, 1.8, 3600.0);
    }
    close("linear growth", w.layer_thickness, 10.0 + 40.0 * 2.0, 1e-9)?;
    let mut w = CorrosionState::new(1e5, 4.0);
    for _ in 0..100 {
        w.grow(&cp, 2.0, 1.7, 3600.0);
    }
    close("power-law growth", w.layer_thickness / (2.0 * 100f64.powf(0.6)), 1.0, 0.01)?;
    for (frac, want) in [(0.0, 0.0), (0.5, 2.0), (1.0, 4.0)] {
        let mut s = CorrosionState::new(1e5, 4.0);
        s.layer_thickness = frac * 1e5;
        close("C_corr(W)", degradation::corrosion_capacity_loss(&s), want, 1e-12)?;
    }

    let ap = ActiveMassParams::default();
    let mut am = ActiveMassState::new(600.0, 4.0);
    close("f_SOC right after full charge", degradation::soc_factor(&ap, &am, 1.0), 1.0, 0.0)?;
    am.time_since_full_charge_h = 48.0;
    am.min_soc_since_full_charge = 0.8;
    let shallow = degradation::soc_factor(&ap, &am, 1.0);
    am.min_soc_since_full_charge = 0.5;
    holds("deeper discharge weighs more", degradation::soc_factor(&ap, &am, 1.0) > shallow)?;

    let mut am = ActiveMassState::new(600.0, 4.0);
    degradation::accumulate_weighted_cycles(&mut am, 20.0, 0.0, 1.0, 3600.0);
    close("I_d = 0 keeps Z_w", am.weighted_cycles, 0.0, 0.0)?;
    degradation::accumulate_weighted_cycles(&mut am, 20.0, 20.0, 1.0, 3600.0);
    close("20 Ah at f = 1", am.weighted_cycles, 1.0, 1e-12)?;
    let mut am = ActiveMassState::new(600.0, 4.0);
    degradation::accumulate_weighted_cycles(&mut am, 20.0, 10.0, 2.0, 3600.0);
    close("10 Ah at f = 2", am.weighted_cycles, 1.0, 1e-12)?;

    for (z, want) in [(600.0, 1.0), (0.0, 0.006_737_947), (300.0, 0.082_085)] {
        let mut am = ActiveMassState::new(600.0, 4.0);
        am.weighted_cycles = z;
        close("C_deg(Z_w)", degradation::active_mass_loss(&am) / 4.0, want, 1e-6)?;
    }
    let (c, eol) = degradation::total_loss_and_eol(0.0, 0.0, 20.0, 0.2);
    holds("fresh battery", c == 0.0 && !eol)?;
    let (c, eol) = degradation::total_loss_and_eol(2.0, 2.0, 20.0, 0.2);
    holds("4 Ah of 20 Ah is end of life", c == 4.0 && eol)
}

fn control_examples() -> Check {
    let full = VoltageLimits::proposed_full();
    close("25 C", compensated_limits(&full, 25.0).v_limit, 14.5, 1e-12)?;
    close("35 C", compensated_limits(&full, 35.0).v_limit, 14.2, 1e-12)?;
    close("15 C", compensated_limits(&full, 15.0).v_limit, 14.8, 1e-12)?;

    let d = |corrosion, total| {
        control::recharge_interval(&DailyDelta {
            corrosion,
            total,
            corrosion_fraction: 0.0,
        })
    };
    close("D(all corrosion)", d(1.0, 1.0), 6.0, 0.0)?;
    close("D(no corrosion)", d(0.0, 1.0), 1.0, 0.0)?;
    close("D(half)", d(0.5, 1.0), 3.5, 1e-12)?;

    // Full limits once the interval has elapsed since the last full recharge.
    let params = ControlParams::with_policy(Policy::Adaptive);
    let mut ctrl = ControllerState::new(&params);
    let half = DailyDelta {
        corrosion: 0.5,
        total: 1.0,
        corrosion_fraction: 0.5,
    };
    ctrl.on_day_boundary(&params, &half);
    holds("D = 3.5, one day since full: partial", ctrl.mode == LimitMode::Partial)?;
    holds(
        "partial limits {13.0, 12.8}",
        control::select_limits(&params, &ctrl) == VoltageLimits::proposed_partial(),
    )?;
    for _ in 0..3 {
        ctrl.on_day_boundary(&params, &half);
    }
    holds("D = 3.5, four days since full: full", ctrl.mode == LimitMode::Full)?;
    let fixed = ControlParams::default();
    let mut sc = ControllerState::new(&fixed);
    sc.on_day_boundary(&fixed, &half);
    holds(
        "static policy keeps {14.5, 13.5, 0}",
        control::select_limits(&fixed, &sc) == VoltageLimits::bboxx(),
    )?;

    let p = BatteryParams::default();
    let mut ctrl = ControllerState::new(&fixed);
    let out = control::tscc_step(&fixed, &mut ctrl, &p, 0.5, 0.0, 25.0, 1.0, 0.0).map_err(err)?;
    holds("small current stays in bulk", ctrl.phase == control::Phase::Bulk && out.entered_float.is_none())?;
    let mut ctrl = ControllerState::new(&fixed);
    let out = control::tscc_step(&fixed, &mut ctrl, &p, 0.93, 0.0, 25.0, 4.0, 0.0).map_err(err)?;
    close(
        "absorption holds v_limit",
        battery::terminal_voltage(&p, 0.93, out.current, 0.0).map_err(err)?,
        14.5,
        1e-6,
    )?;

    let mut ctrl = ControllerState::new(&fixed);
    holds("0.6 connected", !control::load_disconnect(&fixed, &mut ctrl, 0.6))?;
    holds("0.49 disconnected", control::load_disconnect(&fixed, &mut ctrl, 0.49))?;
    holds("0.54 still disconnected", control::load_disconnect(&fixed, &mut ctrl, 0.54))?;
    holds("0.55 reconnected", !control::load_disconnect(&fixed, &mut ctrl, 0.55))
}

fn profile_examples() -> Check {
    let inf = ArchetypeSpec::defaults(UseArchetype::Infrequent);
    let ts = profiles::generate_archetype(&inf, 30, 1, 900.0).map_err(err)?;
    let mut run = 0;
    let mut best = 0;
    for day in ts.samples.chunks(96) {
        run = if day.iter().all(|s| s.load_w == 0.0) { run + 1 } else { 0 };
        best = best.max(run);
    }
    holds("infrequent has a 7-day idle run", best >= 7)?;
    holds("no sun at midnight", ts.samples.chunks(96).all(|d| d[0].solar_w == 0.0))?;
    holds(
        "same seed, same series",
        profiles::generate_archetype(&inf, 30, 1, 900.0).map_err(err)? == ts,
    )?;
    let mut means = Vec::new();
    for a in [UseArchetype::High, UseArchetype::Moderate, UseArchetype::Low] {
        let s = profiles::generate_archetype(&ArchetypeSpec::defaults(a), 60, 3, 900.0).map_err(err)?;
        holds("solar within panel rating", s.samples.iter().all(|x| (0.0..=50.0).contains(&x.solar_w)))?;
        holds("solar covers load", s.mean_daily_solar_wh() >= s.mean_daily_load_wh())?;
        means.push(s.mean_daily_load_wh());
    }
    holds("daily load ordering", means[0] > means[1] && means[1] > means[2])?;

    let mut buf = Vec::new();
    profiles::write_series(&ts, &mut buf).map_err(err)?;
    let (back, gaps) =
        profiles::ingest_reader(buf.as_slice(), &profiles::ColumnMap::default(), 900.0).map_err(err)?;
    holds("uniform series passes through", back == ts && gaps.filled == 0)?;

    let square = profiles::BatteryTrace {
        dt_s: 3600.0,
        steps: (0..48)
            .map(|i| profiles::TraceStep {
                current_a: if i % 2 == 0 { 1.5 } else { -1.5 },
                soc: 0.8,
                full_charge: false,
                float: false,
            })
            .collect(),
    };
    let f = stress_factors(&square).map_err(err)?;
    close("square-wave charge factor", f.charge_factor.unwrap_or(f64::NAN), 1.0, 1e-12)?;
    close("never below 0.5", f.time_at_low_soc_h, 0.0, 0.0)?;
    holds(
        "empty trace rejected",
        stress_factors(&profiles::BatteryTrace {
            dt_s: 900.0,
            steps: Vec::new(),
        })
        .is_err(),
    )?;
    close("FEC definition", vrla_ageing::engine::aggregate_fec(550.0 * 20.0, 20.0), 550.0, 0.0)?;
    close("no discharge, no cycles", vrla_ageing::engine::aggregate_fec(0.0, 20.0), 0.0, 0.0)
}

fn criterion_1(o: &mut Outcome) {
    let start = Instant::now();
    o.run("battery", battery_examples());
    o.run("degradation", degradation_examples());
    o.run("control", control_examples());
    o.run("profiles", profile_examples());
    o.within(start.elapsed(), Duration::from_secs(1));
}

fn criterion_2(o: &mut Outcome) {
    let start = Instant::now();
    let model = ModelParams::default();
    match calibration::calibrate(&model, 900.0) {
        Ok(r) => {
            o.check(
                "float life",
                r.float.reached_eol && r.float.relative_error.abs() <= 0.02,
                format!("{:+.2}%", 100.0 * r.float.relative_error),
            );
            o.check(
                "cycle life",
                r.cycling.reached_eol && r.cycling.relative_error.abs() <= 0.10,
                format!("{:+.2}%", 100.0 * r.cycling.relative_error),
            );
            o.note(format!(
                "float {:.2} y ({:+.2}%), cycling {:.0} cycles ({:+.2}%)",
                r.float.years_to_eol,
                100.0 * r.float.relative_error,
                r.cycling.cycles_to_eol,
                100.0 * r.cycling.relative_error
            ));
        }
        Err(e) => o.check("calibration", false, e.to_string()),
    }
    let mut longer = model.clone();
    longer.datasheet.float_life_years *= 2.0;
    match (
        calibration::calibrate_limits(&model, 900.0),
        calibration::calibrate_limits(&longer, 900.0),
    ) {
        (Ok(a), Ok(b)) => o.check(
            "doubling float life",
            (b.w_limit / a.w_limit - 2.0).abs() < 1e-3,
            format!("W_limit ratio {}", b.w_limit / a.w_limit),
        ),
        _ => o.check("doubling float life", false, "calibration failed"),
    }
    o.within(start.elapsed(), Duration::from_secs(30));
}

fn criterion_3(o: &mut Outcome) -> Vec<SimResult> {
    let start = Instant::now();
    let runs = baselines(900.0);
    let elapsed = start.elapsed();
    for w in runs.windows(2) {
        o.check(
            "corrosion share ordering",
            w[0].corrosion_share_pct < w[1].corrosion_share_pct,
            format!("{} {:.1}% vs {} {:.1}%", w[0].name, w[0].corrosion_share_pct, w[1].name, w[1].corrosion_share_pct),
        );
        o.check(
            "FEC ordering",
            w[0].fec > w[1].fec,
            format!("{} {:.0} vs {} {:.0}", w[0].name, w[0].fec, w[1].name, w[1].fec),
        );
    }
    let (low, inf) = (&runs[2], &runs[3]);
    o.check(
        "low-use corrosion share in [75, 97]%",
        (75.0..=97.0).contains(&low.corrosion_share_pct),
        format!("{:.1}%", low.corrosion_share_pct),
    );
    o.check(
        "infrequent dies before low use",
        inf.lifetime_years < low.lifetime_years,
        format!("{:.2} vs {:.2} y", inf.lifetime_years, low.lifetime_years),
    );
    o.check(
        "infrequent FEC below 0.7 x low use",
        inf.fec < 0.7 * low.fec,
        format!("{:.0} vs {:.0}", inf.fec, low.fec),
    );
    for r in &runs {
        o.check("end of life reached", !r.censored, r.name.clone());
    }
    o.note(
        runs.iter()
            .map(|r| format!("{} {:.2} y / {:.0} FEC / {:.0}%", r.name, r.lifetime_years, r.fec, r.corrosion_share_pct))
            .collect::<Vec<_>>()
            .join(", "),
    );
    o.within(elapsed, Duration::from_secs(120));
    runs
}

fn criterion_4(o: &mut Outcome) {
    let start = Instant::now();
    let base = scenario(UseArchetype::Low, Policy::BboxxStatic);
    let alt = scenario(UseArchetype::Low, Policy::Adaptive);
    match compare_strategies(&base, &alt) {
        Ok((c, _, _)) => {
            o.check(
                "lifetime ratio in [1.10, 1.40]",
                (1.10..=1.40).contains(&c.lifetime_ratio),
                format!("{:.3}", c.lifetime_ratio),
            );
            o.check(
                "corrosion reduction >= 30%",
                c.corrosion_reduction >= 0.30,
                format!("{:.1}%", 100.0 * c.corrosion_reduction),
            );
            o.check(
                "active-mass loss at least doubled",
                c.active_mass_ratio >= 2.0,
                format!("{:.2}x", c.active_mass_ratio),
            );
            o.check("no load loss", c.load_loss_events_alt == 0, format!("{} events", c.load_loss_events_alt));
            o.check("min SOC >= 0.60", c.min_soc_alt >= 0.60, format!("{:.3}", c.min_soc_alt));
            o.check(
                "adaptive healthier every day",
                c.alt_healthier_every_day,
                format!("worst margin {:.4} Ah", c.worst_health_margin_ah),
            );
            o.note(format!(
                "ratio {:.3}, corrosion -{:.1}%, active mass x{:.2}, SOH {:.1}% at baseline EOL, min SOC {:.3}",
                c.lifetime_ratio,
                100.0 * c.corrosion_reduction,
                c.active_mass_ratio,
                c.alt_soh_at_base_eol_pct,
                c.min_soc_alt
            ));
        }
        Err(e) => o.check("comparison", false, e.to_string()),
    }
    o.within(start.elapsed(), Duration::from_secs(60));
}

/// Drives a plant through a generated profile, checking the degradation
/// invariants after every step.
fn stepwise_invariants(archetype: UseArchetype, days: u32) -> Check {
    let model = ModelParams::default();
    let control = ControlParams::with_policy(Policy::Adaptive);
    let limits = calibration::calibrate_limits(&model, 900.0).map_err(err)?;
    let series = profiles::generate_archetype(&ArchetypeSpec::defaults(archetype), days, 7, 900.0).map_err(err)?;
    let mut plant = Plant::new(&model, &control, limits, 1.0, series.samples[0].temp_c).map_err(err)?;
    let mut v = plant.battery.terminal_voltage;
    let mut prev = plant.ledger.clone();
    for (k, s) in series.samples.iter().enumerate() {
        if k > 0 && k % 96 == 0 {
            plant.close_day();
            let d = plant.ctrl.recharge_interval;
            holds("D in [1, 6]", (1.0..=6.0).contains(&d))?;
        }
        let soc = plant.soc();
        let load = if control::load_disconnect(&control, &mut plant.ctrl, soc) { 0.0 } else { s.load_w };
        let r = plant
            .step_currents(model.charger_efficiency * s.solar_w / v, load / v, s.temp_c, 900.0)
            .map_err(err)?;
        v = r.voltage;
        let l = &plant.ledger;
        holds("W non-decreasing", l.corrosion.layer_thickness >= prev.corrosion.layer_thickness)?;
        holds("Z_w non-decreasing", l.active_mass.weighted_cycles >= prev.active_mass.weighted_cycles)?;
        holds("C non-decreasing", l.total_loss >= prev.total_loss)?;
        holds(
            "C = C_corr + C_deg",
            l.total_loss - (l.corrosion.capacity_loss + l.active_mass.capacity_loss) == 0.0,
        )?;
        prev = l.clone();
    }
    Ok(())
}

fn coulomb_oracle() -> Check {
    let p = BatteryParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let start = rng.gen_range(0.3..0.7);
        let mut soc = start;
        let mut charge = 0.0;
        for _ in 0..rng.gen_range(1..40) {
            let i = rng.gen_range(-1.0..1.0);
            soc = battery::step_soc(&p, soc, i, 0.0, 900.0).soc;
            charge += i * 900.0;
        }
        let want = start + charge / p.nominal_capacity_coulomb();
        holds("coulomb count", (soc - want).abs() <= 1e-9 * want.abs())?;
    }
    Ok(())
}

fn criterion_5(o: &mut Outcome, coarse: &[SimResult]) {
    let start = Instant::now();
    o.run("stepwise invariants", stepwise_invariants(UseArchetype::Low, 365));
    o.run("stepwise invariants", stepwise_invariants(UseArchetype::High, 120));
    o.run("coulomb oracle", coulomb_oracle());
    let p = BatteryParams::default();
    let worst = (0..=900)
        .map(|k| 0.05 + 0.001 * f64::from(k))
        .map(|s| {
            let v = battery::battery_ocv(&p, s).unwrap();
            let back = battery::correct_soc_by_ocv(&p, v, 0.0).unwrap().soc().unwrap();
            (back - s).abs()
        })
        .fold(0.0, f64::max);
    o.check("OCV round trip", worst <= 1e-6, format!("max error {worst:e}"));

    let adaptive: Vec<_> = [UseArchetype::Moderate, UseArchetype::Low, UseArchetype::Infrequent]
        .iter()
        .map(|&a| scenario(a, Policy::Adaptive))
        .collect();
    let runs = run_all(&adaptive);
    for r in &runs {
        o.check(
            "at most 6 days between full recharges",
            r.max_days_between_full_recharges <= 6,
            format!("{}: {} days", r.name, r.max_days_between_full_recharges),
        );
        if let Some(d) = r.recharge_interval {
            o.check("D in [1, 6]", d.min >= 1.0 && d.max <= 6.0, format!("{}: {d:?}", r.name));
        }
    }

    let mut twin = scenario(UseArchetype::Infrequent, Policy::Adaptive);
    twin.record_trace = true;
    twin.max_years = 3.0;
    let pair = run_all(&[twin.clone(), twin]);
    o.check(
        "determinism",
        pair[0] == pair[1] && format!("{:?}", pair[0]) == format!("{:?}", pair[1]),
        "identical scenarios diverged",
    );

    let fine = run_all(
        &BASELINE_ORDER
            .iter()
            .map(|&a| with_dt(scenario(a, Policy::BboxxStatic), 450.0))
            .collect::<Vec<_>>(),
    );
    let mut shifts = Vec::new();
    for (a, b) in coarse.iter().zip(&fine) {
        let shift = (b.lifetime_years - a.lifetime_years).abs() / a.lifetime_years;
        o.check("dt halving < 2%", shift < 0.02, format!("{}: {:.2}%", a.name, 100.0 * shift));
        shifts.push(format!("{} {:.2}%", a.name, 100.0 * shift));
    }
    o.note(format!(
        "max gaps {}; dt-halving shifts {}",
        runs.iter()
            .map(|r| format!("{} {}", r.name, r.max_days_between_full_recharges))
            .collect::<Vec<_>>()
            .join(", "),
        shifts.join(", ")
    ));
    o.note(format!("{:.1} s", start.elapsed().as_secs_f64()));
}

fn criterion_6(o: &mut Outcome) {
    let start = Instant::now();
    let mut base = scenario(UseArchetype::Low, Policy::BboxxStatic);
    let mut alt = scenario(UseArchetype::Low, Policy::Adaptive);
    base.record_trace = true;
    alt.record_trace = true;
    let runs = run_all(&[base, alt]);
    let factors: Vec<_> = runs
        .iter()
        .map(|r| stress_factors(r.trace.as_ref().expect("trace recorded")))
        .collect();
    match (&factors[0], &factors[1]) {
        (Ok(b), Ok(a)) => {
            o.check(
                "baseline full-recharge frequency 0.95 +/- 0.05",
                (0.90..=1.0).contains(&b.full_recharge_day_fraction),
                format!("{:.3}", b.full_recharge_day_fraction),
            );
            o.check(
                "adaptive recharges less often",
                a.full_recharge_day_fraction < b.full_recharge_day_fraction,
                format!("{:.3} vs {:.3}", a.full_recharge_day_fraction, b.full_recharge_day_fraction),
            );
            let gap = |f: &profiles::StressFactors| f.time_between_full_charge.as_ref().map_or(f64::INFINITY, |g| g.mean_h);
            o.check(
                "adaptive waits longer between full charges",
                gap(a) > gap(b),
                format!("{:.1} h vs {:.1} h", gap(a), gap(b)),
            );
            o.note(format!(
                "full-recharge day fraction {:.3} vs {:.3}, mean gap {:.1} h vs {:.1} h",
                b.full_recharge_day_fraction,
                a.full_recharge_day_fraction,
                gap(b),
                gap(a)
            ));
        }
        _ => o.check("stress factors", false, "trace analysis failed"),
    }
    o.note(format!("{:.1} s", start.elapsed().as_secs_f64()));
}

fn main() -> ExitCode {
    let names = [
        "equation unit tests",
        "calibration self-consistency",
        "usage-pattern ordering",
        "low-use strategy comparison",
        "invariant suite",
        "stress-factor reproduction",
    ];
    let mut outcomes = Vec::new();
    let mut o = Outcome::new();
    criterion_1(&mut o);
    outcomes.push(o);
    let mut o = Outcome::new();
    criterion_2(&mut o);
    outcomes.push(o);
    let mut o = Outcome::new();
    let baselines = criterion_3(&mut o);
    outcomes.push(o);
    let mut o = Outcome::new();
    criterion_4(&mut o);
    outcomes.push(o);
    let mut o = Outcome::new();
    criterion_5(&mut o, &baselines);
    outcomes.push(o);
    let mut o = Outcome::new();
    criterion_6(&mut o);
    outcomes.push(o);

    let mut all = true;
    for (i, (name, o)) in names.iter().zip(&outcomes).enumerate() {
        let pass = o.failures.is_empty();
        all &= pass;
        println!(
            "criterion {}: {} {name} [{}]",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            o.notes.join("; ")
        );
        for f in &o.failures {
            println!("    {f}");
        }
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
