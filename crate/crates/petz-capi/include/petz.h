#ifndef PETZ_H
#define PETZ_H

/* Generated by cbindgen from the petz-capi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Call outcome. `PETZ_OK`, `PETZ_INVALID_INPUT`, and `PETZ_NUMERICAL`
// carry the same meaning as the command-line tool's exit codes 0, 2, and 3;
// value 1 is reserved (the tool uses it for negative verdicts, which this
// interface reports through out parameters instead).
typedef enum petz_status {
  // The call succeeded.
  PETZ_OK = 0,
  // Malformed or inconsistent input: an unparseable document, a matrix
  // that is not a state, mismatched dimensions, a bad tolerance, or a
  // precondition that does not hold.
  PETZ_INVALID_INPUT = 2,
  // The computation could not be completed at working precision.
  PETZ_NUMERICAL = 3,
  // A required pointer argument was NULL.
  PETZ_NULL_POINTER = 4,
  // A string argument was not valid UTF-8.
  PETZ_INVALID_UTF8 = 5,
  // An internal invariant failed; the library state is still consistent
  // but the call produced nothing.
  PETZ_INTERNAL = 6,
} petz_status;

// A completely positive trace-preserving map in Kraus form.
typedef struct petz_channel petz_channel;

// A density matrix.
typedef struct petz_state petz_state;

// A density matrix on a three-legged tensor product A ⊗ B ⊗ C.
typedef struct petz_tripartite petz_tripartite;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Version of the library, as a static string. Do not free.
const char *petz_version(void);

// Message for the most recent failure on the calling thread, as a static
// NUL-terminated string. Never NULL (empty before any failure); valid until
// the next failing call on the same thread. Do not free.
const char *petz_last_error_message(void);

// Releases a string returned by this library. NULL is ignored.
void petz_string_free(char *text);

// Parses a `state` JSON document into a new handle.
enum petz_status petz_state_parse(const char *json, struct petz_state **out);

// Builds a state from a row-major interleaved `dim×dim` buffer
// (`2*dim*dim` doubles). The matrix must be Hermitian, positive
// semidefinite, and of unit trace.
enum petz_status petz_state_new(size_t dim, const double *data, struct petz_state **out);

// Renders the state as a `state` JSON document.
enum petz_status petz_state_to_json(const struct petz_state *state, char **out);

// Dimension of the state's Hilbert space; 0 if `state` is NULL.
size_t petz_state_dim(const struct petz_state *state);

// Copies the state's matrix into `buffer` (row-major interleaved).
// `len` must be exactly `2*dim*dim`.
enum petz_status petz_state_copy_data(const struct petz_state *state, double *buffer, size_t len);

// Releases a state handle. NULL is ignored.
void petz_state_free(struct petz_state *state);

// Parses a `channel` JSON document into a new handle.
enum petz_status petz_channel_parse(const char *json, struct petz_channel **out);

// Builds a channel from `kraus_terms` stacked coefficient matrices, each an
// `out_dim×in_dim` row-major interleaved block of `2*out_dim*in_dim`
// doubles. The family must satisfy the trace-preservation identity.
enum petz_status petz_channel_new(size_t in_dim,
                                  size_t out_dim,
                                  size_t kraus_terms,
                                  const double *data,
                                  struct petz_channel **out);

// Renders the channel as a `channel` JSON document.
enum petz_status petz_channel_to_json(const struct petz_channel *channel, char **out);

// Input dimension; 0 if `channel` is NULL.
size_t petz_channel_in_dim(const struct petz_channel *channel);

// Output dimension; 0 if `channel` is NULL.
size_t petz_channel_out_dim(const struct petz_channel *channel);

// Number of Kraus coefficients; 0 if `channel` is NULL.
size_t petz_channel_kraus_terms(const struct petz_channel *channel);

// Applies the channel to a state: `*out = T(state)`.
enum petz_status petz_channel_apply(const struct petz_channel *channel,
                                    const struct petz_state *state,
                                    struct petz_state **out);

// Petz dual of the channel with respect to a reference state. The channel's
// image of the reference must be invertible.
enum petz_status petz_channel_petz_dual(const struct petz_channel *channel,
                                        const struct petz_state *reference,
                                        struct petz_channel **out);

// Releases a channel handle. NULL is ignored.
void petz_channel_free(struct petz_channel *channel);

// Parses a `tripartite_state` JSON document into a new handle.
enum petz_status petz_tripartite_parse(const char *json, struct petz_tripartite **out);

// Builds a tripartite state on A ⊗ B ⊗ C from a row-major interleaved
// buffer of `2*(dim_a*dim_b*dim_c)²` doubles.
enum petz_status petz_tripartite_new(size_t dim_a,
                                     size_t dim_b,
                                     size_t dim_c,
                                     const double *data,
                                     struct petz_tripartite **out);

// Renders the state as a `tripartite_state` JSON document.
enum petz_status petz_tripartite_to_json(const struct petz_tripartite *state, char **out);

// Leg dimensions of the tripartite state. Out pointers may be NULL.
enum petz_status petz_tripartite_dims(const struct petz_tripartite *state,
                                      size_t *dim_a,
                                      size_t *dim_b,
                                      size_t *dim_c);

// Releases a tripartite handle. NULL is ignored.
void petz_tripartite_free(struct petz_tripartite *state);

// Decides whether `channel` is sufficient for the pair `(state1, state2)`:
// both the cocycle grid condition and the recovery round trip through the
// Petz dual must hold within `tol` (pass 0 for the default 1e-8).
//
// `sufficient` receives 1 or 0; `ns_max_deviation` the largest cocycle
// deviation over the default t-grid; `recovery_deviation` the larger of the
// two recovery round-trip deviations. Out pointers may be NULL.
enum petz_status petz_check(const struct petz_channel *channel,
                            const struct petz_state *state1,
                            const struct petz_state *state2,
                            double tol,
                            int *sufficient,
                            double *ns_max_deviation,
                            double *recovery_deviation);

// Like [`petz_check`], but returns the full JSON report through `json`
// (the same document the command-line tool prints for `check --json`).
enum petz_status petz_check_report_json(const struct petz_channel *channel,
                                        const struct petz_state *state1,
                                        const struct petz_state *state2,
                                        double tol,
                                        int *sufficient,
                                        char **json);

// Runs the sufficiency check and, when it passes, extracts the block
// decomposition of the channel outputs and pulls it back through the
// recovery map, returning the structure report as JSON. When the check
// fails, `sufficient` receives 0 and `json` the failed check report
// instead. With `emit_factors` nonzero, the per-block factor matrices are
// embedded in the report.
enum petz_status petz_structure_report_json(const struct petz_channel *channel,
                                            const struct petz_state *state1,
                                            const struct petz_state *state2,
                                            double tol,
                                            int emit_factors,
                                            int *sufficient,
                                            char **json);

// Strong-subadditivity gap `S(AB) + S(BC) − S(ABC) − S(B)` in nats.
// `equality` receives 1 when the gap is below `tol` (0 for the default).
// Out pointers may be NULL.
enum petz_status petz_ssa(const struct petz_tripartite *state,
                          double tol,
                          double *gap,
                          int *equality);

// Full strong-subadditivity report as JSON (the same document the
// command-line tool prints for `ssa --json`). With `with_structure`
// nonzero and the gap below `tol`, the Markov decomposition is embedded.
// With `bits` nonzero the displayed entropies are converted to bits; the
// tolerance and the verdict stay in nats.
enum petz_status petz_ssa_report_json(const struct petz_tripartite *state,
                                      double tol,
                                      int with_structure,
                                      int bits,
                                      int *equality,
                                      char **json);

// Generates a tripartite state saturating strong subadditivity, with the
// Markov blocks described by `blocks` in the form `"LxR:weight,..."`
// (for example `"2x1:0.5,1x2:0.5"`). Weights must sum to 1.
enum petz_status petz_gen_markov(size_t dim_a,
                                 size_t dim_c,
                                 const char *blocks,
                                 uint64_t seed,
                                 struct petz_tripartite **out);

// Generates a channel together with two states for which it is sufficient.
// `blocks` lists the block shapes as `"d,m:d,m:..."` (for example
// `"2,2:1,3"`); `l1` and `l2` are the per-block weights of the two states,
// each a comma-separated list summing to 1. `env_dim` of 0 selects the
// default environment dimension 2.
enum petz_status petz_gen_sufficient(const char *blocks,
                                     const char *l1,
                                     const char *l2,
                                     size_t env_dim,
                                     uint64_t seed,
                                     struct petz_channel **channel,
                                     struct petz_state **state1,
                                     struct petz_state **state2);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PETZ_H */
