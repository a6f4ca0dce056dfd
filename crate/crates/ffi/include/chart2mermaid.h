/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef CHART2MERMAID_H
#define CHART2MERMAID_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum C2mStatus {
  C2M_STATUS_OK = 0,
  C2M_STATUS_NULL_POINTER = 1,
  C2M_STATUS_INVALID_UTF8 = 2,
  C2M_STATUS_PARSE_ERROR = 3,
  C2M_STATUS_INVALID_ARGUMENT = 4,
  C2M_STATUS_IMAGING_ERROR = 5,
  C2M_STATUS_STATS_ERROR = 6,
  C2M_STATUS_PANIC = 7,
} C2mStatus;

// Parsed flowchart. Opaque to C.
typedef struct C2mFlowchart C2mFlowchart;

typedef struct C2mMatchCounts {
  uint64_t tp;
  uint64_t fp;
  uint64_t fn_;
} C2mMatchCounts;

typedef struct C2mLevelCounts {
  struct C2mMatchCounts node;
  struct C2mMatchCounts edge;
  struct C2mMatchCounts path;
} C2mLevelCounts;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. Valid until the
// next library call on the same thread.
const char *c2m_last_error(void);

// # Safety
// `s` must be NULL or a string returned by this library.
void c2m_string_free(char *s);

// Sanitizes and parses Mermaid flowchart code.
//
// # Safety
// `code` must be a NUL-terminated string; `out_flowchart` must be writable.
enum C2mStatus c2m_flowchart_parse(const char *code, struct C2mFlowchart **out_flowchart);

// # Safety
// `h` must be NULL or a handle from [`c2m_flowchart_parse`] not yet freed.
void c2m_flowchart_free(struct C2mFlowchart *h);

// # Safety
// `h` must be a live handle; `out_count` must be writable.
enum C2mStatus c2m_flowchart_node_count(const struct C2mFlowchart *h, size_t *out_count);

// # Safety
// `h` must be a live handle; `out_count` must be writable.
enum C2mStatus c2m_flowchart_edge_count(const struct C2mFlowchart *h, size_t *out_count);

// Entry-to-terminal paths, each node visited at most twice.
//
// # Safety
// `h` must be a live handle; `out_count` must be writable.
enum C2mStatus c2m_flowchart_path_count(const struct C2mFlowchart *h, size_t *out_count);

// Canonical Mermaid text for the flowchart. Free with [`c2m_string_free`].
//
// # Safety
// `h` must be a live handle; `out_code` must be writable.
enum C2mStatus c2m_flowchart_emit(const struct C2mFlowchart *h, char **out_code);

// Normalizes model output before parsing. Free with [`c2m_string_free`].
//
// # Safety
// `code` must be a NUL-terminated string; `out_code` must be writable.
enum C2mStatus c2m_sanitize(const char *code, char **out_code);

// Sets `*out_valid` and, when `out_diagnostics` is not NULL, stores the
// parser messages ("ok" for valid code). Invalid code is not an error.
//
// # Safety
// `code` must be a NUL-terminated string; `out_valid` must be writable.
enum C2mStatus c2m_validate(const char *code, bool *out_valid, char **out_diagnostics);

// Node, edge and path match counts of `pred` against `truth`. A NULL
// `pred` stands for a run that produced no usable flowchart.
//
// # Safety
// `truth` must be a live handle, `pred` NULL or a live handle, `out_counts`
// writable.
enum C2mStatus c2m_evaluate(const struct C2mFlowchart *pred,
                            const struct C2mFlowchart *truth,
                            struct C2mLevelCounts *out_counts);

// Canny edge map of an 8-bit image with 1, 3 or 4 interleaved channels
// and no row padding. Writes `width * height` bytes (0 or 255) to
// `out_edges`.
//
// # Safety
// `pixels` must hold `width * height * channels` bytes and `out_edges`
// `width * height` bytes.
enum C2mStatus c2m_canny(const uint8_t *pixels,
                         uint32_t width,
                         uint32_t height,
                         uint32_t channels,
                         float low,
                         float high,
                         uint32_t aperture,
                         uint8_t *out_edges);

// One-sided Wilcoxon signed-rank test of `a > b` over `n` paired scores in
// [0, 1]. `out_effective_n` may be NULL.
//
// # Safety
// `a` and `b` must hold `n` values; `out_p` must be writable.
enum C2mStatus c2m_wilcoxon(const double *a,
                            const double *b,
                            size_t n,
                            double *out_p,
                            size_t *out_effective_n);

// Cliff's delta of `a` over `b` across all cross pairs.
//
// # Safety
// `a` and `b` must hold `n` values; `out_delta` must be writable.
enum C2mStatus c2m_cliffs_delta(const double *a, const double *b, size_t n, double *out_delta);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHART2MERMAID_H */
