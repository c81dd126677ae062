#ifndef FLUXPARITY_H
#define FLUXPARITY_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum FpDriveKind {
  FP_DRIVE_KIND_TRANSVERSAL = 0,
  FP_DRIVE_KIND_LONGITUDINAL = 1,
} FpDriveKind;

// Transition processes, in the order used by the selection-rule table.
typedef enum FpProcess {
  FP_PROCESS_ONE_PHOTON = 0,
  FP_PROCESS_TWO_PHOTON = 1,
  FP_PROCESS_RED_SIDEBAND = 2,
  FP_PROCESS_BLUE_SIDEBAND = 3,
  FP_PROCESS_BLUE_TWO_PHOTON = 4,
} FpProcess;

// Result codes shared by every entry point.
typedef enum FpStatus {
  FP_STATUS_OK = 0,
  FP_STATUS_NULL_POINTER = 1,
  FP_STATUS_INVALID_PARAMETER = 2,
  FP_STATUS_DIMENSION_MISMATCH = 3,
  FP_STATUS_DOMAIN = 4,
  FP_STATUS_INVARIANT = 5,
  FP_STATUS_NOT_CONVERGED = 6,
  FP_STATUS_FOCK_TRUNCATION = 7,
  FP_STATUS_IO = 8,
  FP_STATUS_PANIC = 9,
} FpStatus;

// Result grid with `values[ix * ny + iy]`.
typedef struct FpGrid FpGrid;

typedef struct FpRuleTable FpRuleTable;

// Qubit, resonator, coupling and decoherence parameters.
typedef struct FpSystem FpSystem;

// One row of a selection-rule table.
typedef struct FpRuleRow {
  enum FpProcess process;
  enum FpDriveKind drive;
  bool forbidden;
  bool confirmed;
  double relative_amplitude;
} FpRuleRow;

// Message of the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call on the same thread.
const char *fp_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *fp_version(void);

// Creates a system handle. Rates are angular; `gamma1 = 1/T1`, `gamma2 = 1/T2`.
enum FpStatus fp_system_new(double gap,
                            double bias,
                            double resonator_frequency,
                            double kappa_ext,
                            double kappa_int,
                            size_t n_max,
                            double g_transverse,
                            double g_longitudinal,
                            double gamma1,
                            double gamma2,
                            struct FpSystem **out);

// Releases a system handle; null is ignored.
void fp_system_free(struct FpSystem *system);

enum FpStatus fp_system_qubit_frequency(const struct FpSystem *system, double *out);

enum FpStatus fp_system_bloch_angle(const struct FpSystem *system, double *out);

// Bessel function `J_k(x)` for `k <= 3`, `|x| <= 12`.
enum FpStatus fp_bessel_j(uint32_t k, double x, double *out);

// One-photon transition amplitude at Bloch angle `theta` and drive `omega`.
enum FpStatus fp_one_photon_amplitude(double longitudinal,
                                      double transversal,
                                      double theta,
                                      double omega,
                                      double *out);

// Two-photon transition amplitude at drive `omega ≈ ω_q/2`.
enum FpStatus fp_two_photon_amplitude(double longitudinal,
                                      double transversal,
                                      double theta,
                                      double omega,
                                      double *out);

// Thermal stray-excitation probability at qubit frequency `omega_q` (rad/s).
enum FpStatus fp_stray_excitation(double omega_q, double temperature, double *out);

enum FpStatus fp_critical_photon_number(double g_transverse, double detuning, double *out);

enum FpStatus fp_power_broadening(double drive_photons,
                                  double gamma1,
                                  double gamma2,
                                  double g,
                                  double *out);

// Steady-state excited population of the driven qubit, from propagation.
enum FpStatus fp_steady_state_pe(const struct FpSystem *system,
                                 double longitudinal,
                                 double transversal,
                                 double omega,
                                 double t_final,
                                 double *out);

// Analytic resonant phase sweep at the degeneracy point of `system`.
enum FpStatus fp_phase_sweep(const struct FpSystem *system,
                             double max_amplitude,
                             double temperature,
                             const double *phases,
                             size_t n_phases,
                             struct FpGrid **out);

// Normalized analytic spectrum map over `thetas` × `omegas`; `process`
// takes an `FpProcess` value.
enum FpStatus fp_spectrum_map(const struct FpSystem *system,
                              uint32_t process,
                              double longitudinal,
                              double transversal,
                              double gamma_phi,
                              const double *thetas,
                              size_t n_thetas,
                              const double *omegas,
                              size_t n_omegas,
                              struct FpGrid **out);

enum FpStatus fp_grid_dims(const struct FpGrid *grid, size_t *nx, size_t *ny);

// Copies the `nx * ny` grid values into `buffer`, which must hold `len` entries.
enum FpStatus fp_grid_values(const struct FpGrid *grid, double *buffer, size_t len);

// Renders the grid as CSV; release the string with [`fp_string_free`].
enum FpStatus fp_grid_to_csv(const struct FpGrid *grid, char **out);

void fp_grid_free(struct FpGrid *grid);

void fp_string_free(char *s);

// Builds the selection-rule table with Fock cutoff `n_max >= 2`.
enum FpStatus fp_rule_table_new(size_t n_max, struct FpRuleTable **out);

enum FpStatus fp_rule_table_len(const struct FpRuleTable *table, size_t *out);

enum FpStatus fp_rule_table_row(const struct FpRuleTable *table,
                                size_t index,
                                struct FpRuleRow *out);

void fp_rule_table_free(struct FpRuleTable *table);

#endif  /* FLUXPARITY_H */
