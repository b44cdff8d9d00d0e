#ifndef MOTIONAL_GATE_H
#define MOTIONAL_GATE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes shared by every entry point.
typedef enum MgStatus {
  MG_STATUS_OK = 0,
  MG_STATUS_NULL_POINTER = 1,
  MG_STATUS_INVALID_UTF8 = 2,
  MG_STATUS_INVALID_PARAMETER = 3,
  MG_STATUS_CONFIG = 4,
  MG_STATUS_NUMERICAL = 5,
  MG_STATUS_IO = 6,
  MG_STATUS_OUT_OF_RANGE = 7,
  MG_STATUS_PANIC = 8,
  // A verification run finished but at least one check failed.
  MG_STATUS_CHECK_FAILED = 9,
} MgStatus;

// Opaque run configuration.
typedef struct MgConfig MgConfig;

// Opaque reconstructed gate.
typedef struct MgGate MgGate;

// Opaque simulator: a configuration plus its basis and tabulated Hamiltonian.
typedef struct MgSimulator MgSimulator;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, or NULL. Valid until the next call.
const char *mg_last_error(void);

// Library version as a static NUL-terminated string.
const char *mg_version(void);

// Builds a configuration from a bundled preset (`fig2`, `fig3`, `fig4`, `fig6a`, `fig6b`).
//
// # Safety
// `name` must be a NUL-terminated string and `out` a valid pointer.
enum MgStatus mg_config_from_preset(const char *name, struct MgConfig **out);

// Parses a `section.key = value` document on top of the defaults.
//
// # Safety
// `text` must be a NUL-terminated string and `out` a valid pointer.
enum MgStatus mg_config_parse(const char *text, struct MgConfig **out);

// Applies further `section.key = value` lines to an existing configuration.
// The configuration is left unchanged on failure.
//
// # Safety
// `cfg` must come from this library; `text` must be NUL-terminated.
enum MgStatus mg_config_apply(struct MgConfig *cfg, const char *text);

// Dimensionless contact coupling `g` derived from the configuration.
//
// # Safety
// `cfg` must come from this library; `g` must be valid.
enum MgStatus mg_config_coupling(const struct MgConfig *cfg, double *g);

// Runs the configured experiment and writes its artifacts to `output_dir`
// (the configured directory when NULL).
//
// # Safety
// `cfg` must come from this library; `output_dir` may be NULL.
enum MgStatus mg_config_run(const struct MgConfig *cfg, const char *output_dir);

// # Safety
// `cfg` must come from this library or be NULL; it must not be used afterwards.
void mg_config_free(struct MgConfig *cfg);

// Builds the basis and the Hamiltonian table for the configured trajectory.
//
// # Safety
// `cfg` must come from this library; `out` must be valid.
enum MgStatus mg_simulator_new(const struct MgConfig *cfg, struct MgSimulator **out);

// Dimension of the two-particle basis.
//
// # Safety
// `sim` must come from this library.
size_t mg_simulator_dim(const struct MgSimulator *sim);

// Propagates the four computational inputs and reconstructs the gate.
//
// # Safety
// `sim` must come from this library; `out` must be valid.
enum MgStatus mg_simulator_gate(const struct MgSimulator *sim, struct MgGate **out);

// # Safety
// `sim` must come from this library or be NULL; it must not be used afterwards.
void mg_simulator_free(struct MgSimulator *sim);

// Gate element `U[row][col]` over `{00, 01, 10, 11}`.
//
// # Safety
// `gate` must come from this library; `re` and `im` must be valid.
enum MgStatus mg_gate_element(const struct MgGate *gate,
                              size_t row,
                              size_t col,
                              double *re,
                              double *im);

// Averaged fidelity against √SWAP.
//
// # Safety
// `gate` must come from this library.
double mg_gate_fidelity(const struct MgGate *gate);

// Population lost from the computational subspace for input column `col`.
//
// # Safety
// `gate` must come from this library.
double mg_gate_leakage(const struct MgGate *gate, size_t col);

// # Safety
// `gate` must come from this library or be NULL; it must not be used afterwards.
void mg_gate_free(struct MgGate *gate);

// Double-well potential `V(x; a)` in oscillator units.
double mg_potential(double x, double a);

// Contact coupling for SI inputs (rad/s, kg, m).
//
// # Safety
// `g` must be valid.
enum MgStatus mg_coupling(double omega_x, double omega_p, double mass, double a_t, double *g);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MOTIONAL_GATE_H */
