#ifndef SCILIB_SCILIB_SHIM_H
#define SCILIB_SCILIB_SHIM_H

/*
 * Preload library (libscilib_shim.so). Exports sgemm_/dgemm_/cgemm_/zgemm_
 * and their no-underscore aliases with the Fortran BLAS ABI, plus the flush
 * hook below. Configured through SCILIB_* environment variables.
 */

#if defined(__GNUC__)
#define SCILIB_SHIM_EXPORT __attribute__((visibility("default")))
#else
#define SCILIB_SHIM_EXPORT
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Writes the stats report and flushes the trace without closing it. The
 * same happens automatically at process exit, followed by the trace footer. */
SCILIB_SHIM_EXPORT void scilib_shim_flush(void);

#ifdef __cplusplus
}
#endif

#endif /* SCILIB_SCILIB_SHIM_H */
