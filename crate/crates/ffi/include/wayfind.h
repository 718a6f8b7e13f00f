#ifndef WAYFIND_H
#define WAYFIND_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum WfStatus {
  WF_STATUS_OK = 0,
  WF_STATUS_NULL_POINTER = 1,
  WF_STATUS_INVALID_UTF8 = 2,
  WF_STATUS_INVALID_ARGUMENT = 3,
  WF_STATUS_IO = 4,
  WF_STATUS_DATA = 5,
  WF_STATUS_NOT_FOUND = 6,
  WF_STATUS_NO_ROUTE = 7,
  WF_STATUS_EMPTY_QUERY = 8,
  WF_STATUS_BUFFER_TOO_SMALL = 9,
  WF_STATUS_PANIC = 10,
} WfStatus;

// Trained detector loaded from a checkpoint.
typedef struct WfDetector WfDetector;

// Floor graph used for routing.
typedef struct WfGraph WfGraph;

// Computed route between two departments.
typedef struct WfRoute WfRoute;

typedef struct WfPrediction {
  size_t origin_id;
  double origin_prob;
  size_t destination_id;
  double destination_prob;
} WfPrediction;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *wf_version(void);

// Copy the calling thread's last error message into `buf`. Returns the
// number of bytes needed including the terminator, or 0 when there is no
// error. Nothing is written if `cap` is too small.
//
// # Safety
// `buf` must be null or valid for `cap` bytes.
size_t wf_last_error_message(char *buf, size_t cap);

// Edit distance between two UTF-8 strings, counted in characters.
//
// # Safety
// `a` and `b` must be NUL-terminated strings; `out` must be writable.
enum WfStatus wf_levenshtein(const char *a, const char *b, size_t *out);

// Output-layer parameter count for `p` departments and `f` feature maps per
// filter width (three widths). `single_pair` selects one softmax over
// ordered pairs instead of two per-role softmaxes.
uint64_t wf_count_output_params(uint64_t p, uint64_t f, bool single_pair);

// Load a CNN checkpoint.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum WfStatus wf_detector_load(const char *path, struct WfDetector **out);

// # Safety
// `detector` must come from [`wf_detector_load`] and not be used afterwards.
void wf_detector_free(struct WfDetector *detector);

// Number of departments the detector predicts over (0 for a null handle).
//
// # Safety
// `detector` must be null or a live handle.
size_t wf_detector_num_departments(const struct WfDetector *detector);

// Copy a department name into `buf`; see [`wf_last_error_message`] for the
// buffer convention.
//
// # Safety
// `detector` must be a live handle; `buf` valid for `cap` bytes; `out_len`
// null or writable.
enum WfStatus wf_detector_department_name(const struct WfDetector *detector,
                                          size_t id,
                                          char *buf,
                                          size_t cap,
                                          size_t *out_len);

// Predict origin and destination for a query.
//
// # Safety
// `detector` must be a live handle; `query` a NUL-terminated string; `out`
// writable.
enum WfStatus wf_detector_predict(const struct WfDetector *detector,
                                  const char *query,
                                  struct WfPrediction *out);

// Load a floor graph from a JSON file, or the built-in demo map when `path`
// is null.
//
// # Safety
// `path` must be null or a NUL-terminated string; `out` writable.
enum WfStatus wf_graph_load(const char *path, struct WfGraph **out);

// # Safety
// `graph` must come from [`wf_graph_load`] and not be used afterwards.
void wf_graph_free(struct WfGraph *graph);

// Shortest route between two department ids.
//
// # Safety
// `graph` must be a live handle; `out` writable.
enum WfStatus wf_route(const struct WfGraph *graph,
                       size_t origin_id,
                       size_t dest_id,
                       struct WfRoute **out);

// # Safety
// `route` must come from [`wf_route`] and not be used afterwards.
void wf_route_free(struct WfRoute *route);

// Total route length in metres (NaN for a null handle).
//
// # Safety
// `route` must be null or a live handle.
double wf_route_length(const struct WfRoute *route);

// Number of nodes on the route (0 for a null handle).
//
// # Safety
// `route` must be null or a live handle.
size_t wf_route_node_count(const struct WfRoute *route);

// Copy up to `cap` node ids into `buf`. Fails with `BUFFER_TOO_SMALL` if
// `cap` is below [`wf_route_node_count`].
//
// # Safety
// `route` must be a live handle; `buf` valid for `cap` elements.
enum WfStatus wf_route_nodes(const struct WfRoute *route, uint32_t *buf, size_t cap);

// Turn-by-turn narration, valid until the route is freed.
//
// # Safety
// `route` must be null or a live handle.
const char *wf_route_narration(const struct WfRoute *route);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WAYFIND_H */
