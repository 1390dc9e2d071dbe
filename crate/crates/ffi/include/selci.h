#ifndef SELCI_H
#define SELCI_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define SELCI_METHOD_T 1

#define SELCI_METHOD_IV 2

#define SELCI_METHOD_PS 4

#define SELCI_METHOD_HR 8

#define SELCI_METHOD_ALL 15

#define SELCI_FLAG_NON_CONVERGED 1

#define SELCI_FLAG_NORMAL_FALLBACK 2

#define SELCI_FLAG_GRID_EDGE 4

#define SELCI_FLAG_EMPTY_REGION 8

#define SELCI_FLAG_WIDENED_TRUNCATION 16

#define SELCI_FLAG_INFEASIBLE_TRUNCATION 32

#define SELCI_FLAG_FAILED 64

typedef enum SelciStatus {
  SELCI_STATUS_OK = 0,
  SELCI_STATUS_NULL_POINTER = 1,
  SELCI_STATUS_INVALID_ARGUMENT = 2,
  SELCI_STATUS_NUMERICAL = 3,
  SELCI_STATUS_IO = 4,
  SELCI_STATUS_OUT_OF_RANGE = 5,
  SELCI_STATUS_PANIC = 6,
} SelciStatus;

typedef enum SelciSide {
  SELCI_SIDE_ONE = 0,
  SELCI_SIDE_TWO = 1,
} SelciSide;

// Opaque dataset handle.
typedef struct SelciDataset SelciDataset;

// Opaque result of an interval computation.
typedef struct SelciReport SelciReport;

// Interval options. Obtain defaults from [`selci_ci_options_default`].
typedef struct SelciCiOptions {
  double alpha;
  // A `SelciSide` value.
  uint32_t side;
  // Bitwise OR of `SELCI_METHOD_*`.
  uint32_t methods;
  // Bootstrap replicates for the hybrid method.
  size_t b;
  size_t kmax;
  // Bartlett lag of the variance estimate.
  size_t q;
  uint64_t seed;
  // Noise scale for the selective baseline; estimated when not positive.
  double ps_sigma;
} SelciCiOptions;

// One interval. Column indices are zero-based.
typedef struct SelciInterval {
  size_t j;
  // One `SELCI_METHOD_*` bit.
  uint32_t method;
  double lower;
  double upper;
  // Zero-based position of `j` in the selection order.
  size_t selected_order;
  // Bitwise OR of `SELCI_FLAG_*`.
  uint32_t flags;
} SelciInterval;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *selci_version(void);

// Message of the last failed call on this thread, or an empty string. The
// pointer stays valid until the next library call on the same thread.
const char *selci_last_error_message(void);

// Builds a dataset from a response of length `n` and a row-major `n × p`
// design.
//
// # Safety
// `y` must point to `n` doubles, `x` to `n * p` doubles, and `out` must be
// writable.
enum SelciStatus selci_dataset_from_row_major(const double *y,
                                              const double *x,
                                              size_t n,
                                              size_t p,
                                              struct SelciDataset **out);

// Simulates a dataset from one of the named designs (`lai`, `garch`, `ar`,
// `iid`, `mvn`).
//
// # Safety
// `setting` must be a NUL-terminated string and `out` writable.
enum SelciStatus selci_dataset_generate(const char *setting,
                                        size_t n,
                                        size_t p,
                                        uint64_t seed,
                                        struct SelciDataset **out);

// Reads a CSV with header `y,x1,...,xp`.
//
// # Safety
// `path` must be a NUL-terminated string and `out` writable.
enum SelciStatus selci_dataset_read_csv(const char *path, struct SelciDataset **out);

// # Safety
// `ds` must be a live handle; `n` and `p` may be null.
enum SelciStatus selci_dataset_dims(const struct SelciDataset *ds, size_t *n, size_t *p);

// # Safety
// `ds` must be null or a handle not yet freed.
void selci_dataset_free(struct SelciDataset *ds);

struct SelciCiOptions selci_ci_options_default(void);

// Selects columns and computes intervals for every selected column and
// requested method.
//
// # Safety
// `ds` and `opts` must be valid pointers and `out` writable.
enum SelciStatus selci_compute_intervals(const struct SelciDataset *ds,
                                         const struct SelciCiOptions *opts,
                                         struct SelciReport **out);

// Number of intervals in `report`; zero for a null handle.
//
// # Safety
// `report` must be null or a live handle.
size_t selci_report_len(const struct SelciReport *report);

// Estimated number of factors, or zero for a null handle.
//
// # Safety
// `report` must be null or a live handle.
size_t selci_report_k_hat(const struct SelciReport *report);

// Copies interval `index` into `out`.
//
// # Safety
// `report` must be a live handle and `out` writable.
enum SelciStatus selci_report_get(const struct SelciReport *report,
                                  size_t index,
                                  struct SelciInterval *out);

// # Safety
// `report` must be null or a handle not yet freed.
void selci_report_free(struct SelciReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SELCI_H */
