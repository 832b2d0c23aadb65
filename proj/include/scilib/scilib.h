#ifndef SCILIB_SCILIB_H
#define SCILIB_SCILIB_H

/*
 * scilib: BLAS offload policy, residency tracking and trace-driven cost
 * simulation behind a C interface.
 *
 * Conventions:
 *  - Objects are opaque handles created by scilib_*_create/load/... and
 *    released by the matching *_destroy. Destroy functions accept NULL.
 *  - Every fallible function returns a scilib_status. On failure the
 *    output handle is left untouched and scilib_last_error() describes the
 *    problem for the calling thread.
 *  - Strings returned through char** are heap-allocated; release them with
 *    scilib_string_free.
 *  - Handles are not internally synchronized, except scilib_registry which
 *    may be shared between threads.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SCILIB_API __declspec(dllexport)
#elif defined(__GNUC__)
#define SCILIB_API __attribute__((visibility("default")))
#else
#define SCILIB_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum scilib_status {
  SCILIB_OK = 0,
  SCILIB_ERR_INVALID_ARGUMENT = 1,
  SCILIB_ERR_UNKNOWN_ROUTINE = 2,
  SCILIB_ERR_CONFIG_PARSE = 3,
  SCILIB_ERR_EMPTY_REGION = 4,
  SCILIB_ERR_TRACE_FORMAT = 5,
  SCILIB_ERR_UNKNOWN_PROFILE = 6,
  SCILIB_ERR_SPEC = 7,
  SCILIB_ERR_UNDERDETERMINED = 8,
  SCILIB_ERR_IO = 9,
  SCILIB_ERR_SYMBOL_NOT_FOUND = 10,
  SCILIB_ERR_INTERNAL = 99
} scilib_status;

typedef enum scilib_reason {
  SCILIB_REASON_BELOW_THRESHOLD = 0,
  SCILIB_REASON_ROUTINE_DISABLED = 1,
  SCILIB_REASON_OFFLOADED = 2,
  SCILIB_REASON_CAPACITY_EXCEEDED = 3
} scilib_reason;

typedef enum scilib_migration_kind {
  SCILIB_MIGRATED = 0,
  SCILIB_ALREADY_RESIDENT = 1,
  SCILIB_DENIED = 2
} scilib_migration_kind;

typedef struct scilib_config scilib_config;
typedef struct scilib_profile scilib_profile;
typedef struct scilib_trace scilib_trace;
typedef struct scilib_report scilib_report;
typedef struct scilib_comparison scilib_comparison;
typedef struct scilib_registry scilib_registry;

SCILIB_API const char* scilib_version(void);
SCILIB_API const char* scilib_status_string(scilib_status status);
/* Message of the last failure on this thread; "" if none. */
SCILIB_API const char* scilib_last_error(void);
SCILIB_API void scilib_string_free(char* s);

/* ---- configuration ------------------------------------------------------ */

SCILIB_API scilib_status scilib_config_create_default(scilib_config** out);
/* Reads SCILIB_STRATEGY, SCILIB_THRESHOLD, SCILIB_ROUTINES, SCILIB_DEBUG,
 * SCILIB_PAGE_SIZE, SCILIB_DEVICE_CAPACITY, SCILIB_TRACE, SCILIB_STATS. */
SCILIB_API scilib_status scilib_config_from_environ(scilib_config** out);
SCILIB_API scilib_status scilib_config_parse(const char* const* names,
                                             const char* const* values,
                                             size_t count, scilib_config** out);
/* Sets one variable by its environment name, e.g. ("SCILIB_THRESHOLD", "800"). */
SCILIB_API scilib_status scilib_config_set(scilib_config* cfg, const char* name,
                                           const char* value);
/* "NAME=VALUE\n" lines that scilib_config_parse accepts back unchanged. */
SCILIB_API scilib_status scilib_config_to_env(const scilib_config* cfg, char** out);
SCILIB_API void scilib_config_destroy(scilib_config* cfg);

SCILIB_API double scilib_effective_size(uint64_t m, uint64_t n, uint64_t k);
SCILIB_API scilib_status scilib_should_offload(const scilib_config* cfg,
                                               const char* routine, uint64_t m,
                                               uint64_t n, uint64_t k,
                                               int* offload, scilib_reason* reason);

/* ---- hardware profiles -------------------------------------------------- */

/* "gh200" or "h100_pcie". */
SCILIB_API scilib_status scilib_profile_builtin(const char* name, scilib_profile** out);
SCILIB_API scilib_status scilib_profile_load(const char* path, scilib_profile** out);
/* Built-in name first, then a JSON file path; SCILIB_ERR_UNKNOWN_PROFILE if
 * neither. */
SCILIB_API scilib_status scilib_profile_resolve(const char* name_or_path,
                                                scilib_profile** out);
SCILIB_API scilib_status scilib_profile_to_json(const scilib_profile* p, char** out);
SCILIB_API scilib_status scilib_profile_save(const scilib_profile* p, const char* path);
SCILIB_API const char* scilib_profile_name(const scilib_profile* p);
/* Fits a profile from a measurement file. `base` may be NULL, in which case
 * every required measurement class must be present. */
SCILIB_API scilib_status scilib_profile_calibrate(const char* measurements_path,
                                                  const scilib_profile* base,
                                                  scilib_profile** out);
SCILIB_API void scilib_profile_destroy(scilib_profile* p);

/* ---- traces ------------------------------------------------------------- */

typedef struct scilib_synthetic_spec {
  uint64_t n_matrices;
  uint64_t reuse_factor;
  uint64_t m, n, k;
  uint32_t elem_size; /* 4, 8 or 16 */
  char trans_a, trans_b;
  uint64_t seed;
  uint64_t page_size;
} scilib_synthetic_spec;

/* Defaults: one matrix set used once, 1x1x1, 8-byte elements, 'T','N',
 * seed 0, 4096-byte pages. */
SCILIB_API void scilib_synthetic_spec_init(scilib_synthetic_spec* spec);

SCILIB_API scilib_status scilib_trace_load(const char* path, scilib_trace** out);
SCILIB_API scilib_status scilib_trace_generate(const scilib_synthetic_spec* spec,
                                               scilib_trace** out);
SCILIB_API scilib_status scilib_trace_save(const scilib_trace* t, const char* path);
SCILIB_API size_t scilib_trace_call_count(const scilib_trace* t);
SCILIB_API uint64_t scilib_trace_page_size(const scilib_trace* t);
/* Call counts, decisions under `cfg` (NULL = defaults), byte and flop
 * totals, distinct operand regions. */
SCILIB_API scilib_status scilib_trace_summary_json(const scilib_trace* t,
                                                   const scilib_config* cfg,
                                                   char** out);
SCILIB_API void scilib_trace_destroy(scilib_trace* t);

/* ---- replay ------------------------------------------------------------- */

typedef struct scilib_totals {
  double wall_s;
  double kernel_s;
  double transfer_s;
  double migration_s;
  double other_s;
  double compute_plus_data_s;
  uint64_t bytes_moved;
  uint64_t calls_offloaded;
  uint64_t calls_host;
} scilib_totals;

typedef struct scilib_reuse_stats {
  uint64_t migrated_bytes;
  double mean_touches_per_page;
  uint64_t max_touches;
  uint64_t touched_pages;
  uint64_t resident_bytes;
} scilib_reuse_stats;

/* Strategy codes: "1", "2H", "2D", "3". */
SCILIB_API scilib_status scilib_replay(const scilib_trace* t, const char* strategy,
                                       const scilib_profile* p,
                                       const scilib_config* cfg, scilib_report** out);
SCILIB_API scilib_status scilib_report_totals(const scilib_report* r, scilib_totals* out);
SCILIB_API scilib_status scilib_report_reuse(const scilib_report* r,
                                             scilib_reuse_stats* out);
SCILIB_API scilib_status scilib_report_to_json(const scilib_report* r, char** out);
SCILIB_API scilib_status scilib_report_summary(const scilib_report* r, char** out);
SCILIB_API void scilib_report_destroy(scilib_report* r);

SCILIB_API scilib_status scilib_compare(const scilib_trace* t,
                                        const char* const* strategies, size_t count,
                                        const scilib_profile* p,
                                        const scilib_config* cfg,
                                        scilib_comparison** out);
SCILIB_API size_t scilib_comparison_size(const scilib_comparison* c);
SCILIB_API scilib_status scilib_comparison_totals(const scilib_comparison* c,
                                                  size_t index, scilib_totals* out,
                                                  double* speedup);
SCILIB_API scilib_status scilib_comparison_to_json(const scilib_comparison* c, char** out);
SCILIB_API scilib_status scilib_comparison_to_text(const scilib_comparison* c, char** out);
SCILIB_API void scilib_comparison_destroy(scilib_comparison* c);

/* ---- residency registry ------------------------------------------------- */

typedef struct scilib_migration {
  scilib_migration_kind kind;
  uint64_t new_pages;
  uint64_t bytes; /* migrated, or needed when denied */
} scilib_migration;

SCILIB_API scilib_status scilib_registry_create(uint64_t page_size, uint64_t capacity,
                                                scilib_registry** out);
SCILIB_API scilib_status scilib_registry_touch(scilib_registry* reg, uint64_t base,
                                               uint64_t length, scilib_migration* out);
SCILIB_API scilib_status scilib_registry_evict(scilib_registry* reg, uint64_t base,
                                               uint64_t length, uint64_t* released);
SCILIB_API scilib_status scilib_registry_stats(const scilib_registry* reg,
                                               scilib_reuse_stats* out);
SCILIB_API void scilib_registry_destroy(scilib_registry* reg);

/* ---- interposer stats --------------------------------------------------- */

/* Human-readable digest of a stats file written by the preload library. */
SCILIB_API scilib_status scilib_stats_summary(const char* path, char** out);

#ifdef __cplusplus
}
#endif

#endif /* SCILIB_SCILIB_H */
