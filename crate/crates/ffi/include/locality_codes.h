/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef LOCALITY_CODES_H
#define LOCALITY_CODES_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible function.
typedef enum LcStatus {
  LC_STATUS_OK = 0,
  LC_STATUS_NULL_POINTER = 1,
  LC_STATUS_INVALID_ARGUMENT = 2,
  LC_STATUS_DECODE_FAILURE = 3,
  LC_STATUS_CORRECT_FAILURE = 4,
  LC_STATUS_INFEASIBLE = 5,
  LC_STATUS_UNSUPPORTED = 6,
  // Malformed JSON config.
  LC_STATUS_SCHEMA = 7,
  // An experiment suite assertion failed; the CSV is still produced.
  LC_STATUS_ASSERTION = 8,
  LC_STATUS_BUFFER_TOO_SMALL = 9,
  LC_STATUS_PANIC = 10,
} LcStatus;

// Experiment suites; pass the value to [`lc_instance_run_suite`].
typedef enum LcSuite {
  LC_SUITE_COMPLETENESS = 0,
  LC_SUITE_LCC_CONTRACT = 1,
  LC_SUITE_QUERY_AUDIT = 2,
} LcSuite;

// A binary extension field GF(2^k).
typedef struct LcField LcField;

// Any code built from a JSON instance config.
typedef struct LcInstance LcInstance;

// A Reed-Solomon code over evaluation points 0, 1, ... in enumeration order.
typedef struct LcRsCode LcRsCode;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *lc_version(void);

// The message of the last failed call on this thread, or NULL. The pointer
// stays valid until the next failing call on the same thread.
const char *lc_last_error(void);

// Releases a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void lc_string_free(char *s);

// Creates GF(2^k) with the built-in modulus, 1 <= k <= 32.
//
// # Safety
// `out` must be a valid pointer.
enum LcStatus lc_field_new(uint32_t k, struct LcField **out);

// # Safety
// `f` must be NULL or a handle from `lc_field_new` not yet freed.
void lc_field_free(struct LcField *f);

// Field order 2^k, or 0 for a NULL handle.
//
// # Safety
// `f` must be NULL or a live handle.
uint64_t lc_field_order(const struct LcField *f);

// # Safety
// `f` and `out` must be valid pointers.
enum LcStatus lc_field_mul(const struct LcField *f, uint32_t a, uint32_t b, uint32_t *out);

// Multiplicative inverse; zero has none.
//
// # Safety
// `f` and `out` must be valid pointers.
enum LcStatus lc_field_inv(const struct LcField *f, uint32_t a, uint32_t *out);

// RS_{k,n} over GF(2^field_k).
//
// # Safety
// `out` must be a valid pointer.
enum LcStatus lc_rs_new(uint32_t field_k, size_t n, size_t k, struct LcRsCode **out);

// # Safety
// `c` must be NULL or a live handle.
void lc_rs_free(struct LcRsCode *c);

// Encodes `k` message elements into `n` codeword elements.
//
// # Safety
// `msg` must hold `msg_len` elements and `out` room for `out_len`.
enum LcStatus lc_rs_encode(const struct LcRsCode *c,
                           const uint32_t *msg,
                           size_t msg_len,
                           uint32_t *out,
                           size_t out_len);

// Unique decoding of `n` received elements into `k` message elements.
// Returns `DecodeFailure` when no codeword is within (n-k)/2.
//
// # Safety
// `received` must hold `len` elements and `msg_out` room for `msg_len`.
enum LcStatus lc_rs_decode(const struct LcRsCode *c,
                           const uint32_t *received,
                           size_t len,
                           uint32_t *msg_out,
                           size_t msg_len);

// Builds any code from a JSON instance config (the CLI `build` schema).
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum LcStatus lc_instance_from_json(const char *json, struct LcInstance **out);

// # Safety
// `i` must be NULL or a live handle.
void lc_instance_free(struct LcInstance *i);

// Block length n, or 0 for NULL.
//
// # Safety
// `i` must be NULL or a live handle.
size_t lc_instance_block_length(const struct LcInstance *i);

// Number of message elements, or 0 for NULL.
//
// # Safety
// `i` must be NULL or a live handle.
size_t lc_instance_message_len(const struct LcInstance *i);

// Bytes per serialized codeword symbol, or 0 for NULL.
//
// # Safety
// `i` must be NULL or a live handle.
size_t lc_instance_symbol_bytes(const struct LcInstance *i);

// Summary and certification artifacts as a JSON document; release with
// `lc_string_free`.
//
// # Safety
// `i` and `out` must be valid pointers.
enum LcStatus lc_instance_describe(const struct LcInstance *i, char **out);

// Encodes a message into `block_length * symbol_bytes` bytes.
//
// # Safety
// `msg` must hold `msg_len` elements and `out` room for `out_len` bytes.
enum LcStatus lc_instance_encode(const struct LcInstance *i,
                                 const uint32_t *msg,
                                 size_t msg_len,
                                 uint8_t *out,
                                 size_t out_len);

// Locally corrects symbol `index` of a serialized word. The corrected
// symbol goes to `symbol_out` and the number of queries to `queries_out`
// (which may be NULL). `CorrectFailure` is an ordinary outcome.
//
// # Safety
// `word` must hold `word_len` bytes and `symbol_out` room for `symbol_len`.
enum LcStatus lc_instance_local_correct(const struct LcInstance *i,
                                        const uint8_t *word,
                                        size_t word_len,
                                        size_t index,
                                        uint64_t seed,
                                        uint8_t *symbol_out,
                                        size_t symbol_len,
                                        uint64_t *queries_out);

// One run of the local tester; `*accept` is 1 on accept and 0 on reject.
//
// # Safety
// `word` must hold `word_len` bytes and `accept` be a valid pointer.
enum LcStatus lc_instance_local_test(const struct LcInstance *i,
                                     const uint8_t *word,
                                     size_t word_len,
                                     uint64_t seed,
                                     int32_t *accept);

// Runs an experiment suite (an `LcSuite` value) and returns its CSV in `*csv_out` (release with
// `lc_string_free`). Returns `Assertion` when a row fails; the CSV is
// produced either way.
//
// # Safety
// `i` and `csv_out` must be valid pointers.
enum LcStatus lc_instance_run_suite(const struct LcInstance *i,
                                    int32_t suite,
                                    size_t trials,
                                    uint64_t seed,
                                    char **csv_out);

// The full instance file (config, summary, artifacts) for a JSON config, as
// the CLI `build` command writes it.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum LcStatus lc_instance_document(const char *json, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LOCALITY_CODES_H */
