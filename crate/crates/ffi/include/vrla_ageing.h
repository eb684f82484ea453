#ifndef VRLA_AGEING_H
#define VRLA_AGEING_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of a fallible call.
 */
typedef enum VrlaStatus {
  VRLA_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  VRLA_STATUS_NULL_POINTER = 1,
  /**
   * Invalid parameters, configuration or input data.
   */
  VRLA_STATUS_VALIDATION = 2,
  /**
   * The simulation or calibration failed while running.
   */
  VRLA_STATUS_RUNTIME = 3,
  /**
   * A string argument was not valid UTF-8.
   */
  VRLA_STATUS_INVALID_UTF8 = 4,
  /**
   * A caller-provided buffer is too small.
   */
  VRLA_STATUS_BUFFER_TOO_SMALL = 5,
  /**
   * An internal panic was caught at the boundary.
   */
  VRLA_STATUS_PANIC = 6,
} VrlaStatus;

typedef enum VrlaPolicy {
  /**
   * Fixed limits every day.
   */
  VRLA_POLICY_STATIC = 0,
  /**
   * Full recharge every D days, reduced limits otherwise.
   */
  VRLA_POLICY_ADAPTIVE = 1,
} VrlaPolicy;

/**
 * Opaque result handle.
 */
typedef struct VrlaResult VrlaResult;

/**
 * Opaque scenario handle.
 */
typedef struct VrlaScenario VrlaScenario;

/**
 * Headline figures of one run.
 */
typedef struct VrlaSummary {
  double lifetime_years;
  double fec;
  double corrosion_pct;
  double corrosion_loss_ah;
  double active_mass_loss_ah;
  double final_soh_pct;
  double min_soc;
  /**
   * Days with at least one full recharge over all simulated days.
   */
  double full_recharge_day_fraction;
  uint64_t load_loss_events;
  uint32_t days_simulated;
  /**
   * Non-zero when the horizon was reached before end of life.
   */
  uint8_t censored;
} VrlaSummary;

/**
 * Capacity loss at the end of one day.
 */
typedef struct VrlaDayCapacity {
  uint32_t day;
  double corrosion_ah;
  double active_mass_ah;
  double total_ah;
  double soh_pct;
} VrlaDayCapacity;

/**
 * Paired run of two policies.
 */
typedef struct VrlaComparison {
  struct VrlaSummary base;
  struct VrlaSummary alt;
  double lifetime_ratio;
  double corrosion_reduction;
  double active_mass_ratio;
  double alt_soh_at_base_eol_pct;
  /**
   * Non-zero when the alternative run had no more capacity loss than the
   * base run on every common day.
   */
  uint8_t alt_healthier_every_day;
} VrlaComparison;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *vrla_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *vrla_version(void);

/**
 * Creates a scenario for a synthetic household (`"high"`, `"moderate"`,
 * `"low"` or `"infrequent"`) with default model constants. `policy` is a
 * [`VrlaPolicy`] value.
 *
 * # Safety
 * `archetype` must be a NUL-terminated string and `out` a valid pointer.
 */
enum VrlaStatus vrla_scenario_new_archetype(const char *archetype,
                                            uint32_t policy,
                                            struct VrlaScenario **out);

/**
 * Creates the scenario called `name` from the text of a TOML run file.
 * Relative paths in the run file resolve against `base_dir` (may be null
 * for the working directory).
 *
 * # Safety
 * String arguments must be NUL-terminated; `out` must be a valid pointer.
 */
enum VrlaStatus vrla_scenario_from_toml(const char *run_toml,
                                        const char *name,
                                        const char *base_dir,
                                        struct VrlaScenario **out);

/**
 * # Safety
 * `scenario` must come from a `vrla_scenario_new_*` call and not be freed.
 */
enum VrlaStatus vrla_scenario_set_seed(struct VrlaScenario *scenario, uint64_t seed);

/**
 * Sets the time step (s); it must divide one day.
 *
 * # Safety
 * `scenario` must come from a `vrla_scenario_new_*` call and not be freed.
 */
enum VrlaStatus vrla_scenario_set_dt(struct VrlaScenario *scenario, double dt_s);

/**
 * # Safety
 * `scenario` must come from a `vrla_scenario_new_*` call and not be freed.
 */
enum VrlaStatus vrla_scenario_set_max_years(struct VrlaScenario *scenario, double years);

/**
 * # Safety
 * `scenario` must be null or come from a `vrla_scenario_new_*` call, and
 * must not be used afterwards.
 */
void vrla_scenario_free(struct VrlaScenario *scenario);

/**
 * Runs a scenario until end of life or its horizon.
 *
 * # Safety
 * `scenario` must be a live handle and `out` a valid pointer.
 */
enum VrlaStatus vrla_run(const struct VrlaScenario *scenario, struct VrlaResult **out);

/**
 * # Safety
 * `result` must be a live handle and `out` a valid pointer.
 */
enum VrlaStatus vrla_result_summary(const struct VrlaResult *result, struct VrlaSummary *out);

/**
 * Number of days in the capacity trajectory, or 0 for a null handle.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
size_t vrla_result_trajectory_len(const struct VrlaResult *result);

/**
 * Copies the capacity trajectory into `buf`, which holds `capacity`
 * entries. `written` receives the number of entries copied, or the number
 * required when the buffer is too small.
 *
 * # Safety
 * `buf` must point to `capacity` writable entries; `written` must be valid.
 */
enum VrlaStatus vrla_result_trajectory(const struct VrlaResult *result,
                                       struct VrlaDayCapacity *buf,
                                       size_t capacity,
                                       size_t *written);

/**
 * Full result as JSON. Release the string with [`vrla_string_free`].
 *
 * # Safety
 * `result` must be a live handle and `out` a valid pointer.
 */
enum VrlaStatus vrla_result_json(const struct VrlaResult *result, char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void vrla_string_free(char *s);

/**
 * # Safety
 * `result` must be null or a live handle, and must not be used afterwards.
 */
void vrla_result_free(struct VrlaResult *result);

/**
 * Runs two scenarios that differ only in policy and compares them.
 *
 * # Safety
 * Both scenarios must be live handles and `out` a valid pointer.
 */
enum VrlaStatus vrla_compare(const struct VrlaScenario *base,
                             const struct VrlaScenario *alt,
                             struct VrlaComparison *out);

/**
 * Open-circuit battery voltage (V) of a new default battery at `soc`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum VrlaStatus vrla_battery_ocv(double soc, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VRLA_AGEING_H */
