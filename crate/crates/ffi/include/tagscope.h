#ifndef TAGSCOPE_H
#define TAGSCOPE_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes. Zero is success.
typedef enum TsStatus {
  TS_STATUS_OK = 0,
  TS_STATUS_NULL_POINTER = 1,
  TS_STATUS_INVALID_ARGUMENT = 2,
  TS_STATUS_LENGTH_MISMATCH = 3,
  TS_STATUS_AUTH_FAILURE = 4,
  TS_STATUS_UNKNOWN_CIPHER = 5,
  TS_STATUS_DUPLICATE_CIPHER = 6,
  TS_STATUS_INSUFFICIENT_DATA = 7,
  TS_STATUS_INVALID_CONFIG = 8,
  TS_STATUS_BUFFER_TOO_SMALL = 9,
  TS_STATUS_IO = 10,
  TS_STATUS_INTERNAL = 11,
  TS_STATUS_PANIC = 12,
} TsStatus;

typedef enum TsPmnMode {
  TS_PMN_MODE_ZERO = 0,
  TS_PMN_MODE_COUNTER = 1,
  TS_PMN_MODE_RANDOM = 2,
} TsPmnMode;

typedef enum TsVerdict {
  TS_VERDICT_PASS = 0,
  TS_VERDICT_REJECT = 1,
} TsVerdict;

// Opaque battery report.
typedef struct TsBatteryReport TsBatteryReport;

// Opaque cipher registry.
typedef struct TsRegistry TsRegistry;

// `crypto_aead_encrypt` with a leading context pointer. Writes
// `mlen + tag_len` bytes to `c` and their count to `clen`; returns 0 on
// success.
typedef int (*TsEncryptFn)(void *ctx,
                           uint8_t *c,
                           uint64_t *clen,
                           const uint8_t *m,
                           uint64_t mlen,
                           const uint8_t *ad,
                           uint64_t adlen,
                           const uint8_t *nsec,
                           const uint8_t *npub,
                           const uint8_t *k);

// `crypto_aead_decrypt` with a leading context pointer. Returns 0 when the
// tag verifies, nonzero otherwise.
typedef int (*TsDecryptFn)(void *ctx,
                           uint8_t *m,
                           uint64_t *mlen,
                           uint8_t *nsec,
                           const uint8_t *c,
                           uint64_t clen,
                           const uint8_t *ad,
                           uint64_t adlen,
                           const uint8_t *npub,
                           const uint8_t *k);

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the calling thread's last error message, NUL-terminated and
// truncated to `cap` bytes. Returns the untruncated message length.
//
// # Safety
// `buf` must be valid for `cap` bytes or null with `cap == 0`.
size_t ts_last_error(char *buf, size_t cap);

// Library version as a static NUL-terminated string.
const char *ts_version(void);

// New registry holding the built-in ciphers (aes128gcm, aes256gcm, prftag,
// xortag). Free with [`ts_registry_free`].
struct TsRegistry *ts_registry_new(void);

// # Safety
// `registry` must come from [`ts_registry_new`] and not be used afterwards.
void ts_registry_free(struct TsRegistry *registry);

// Registers an external cipher under `name`. `ctx` is passed to every
// callback and must stay valid, and safe to share across threads, until
// the registry is freed.
//
// # Safety
// Pointers must be valid; the callbacks must honour the SUPERCOP contract.
enum TsStatus ts_registry_register(struct TsRegistry *registry,
                                   const char *name,
                                   size_t key_len,
                                   size_t pmn_len,
                                   size_t smn_len,
                                   size_t tag_len,
                                   TsEncryptFn encrypt_fn,
                                   TsDecryptFn decrypt_fn,
                                   void *ctx);

// Reports the tag length of a registered cipher.
//
// # Safety
// Pointers must be valid.
enum TsStatus ts_cipher_tag_len(const struct TsRegistry *registry,
                                const char *name,
                                size_t *tag_len);

// Encrypts with a zero-length SMN and writes `ciphertext || tag`.
//
// # Safety
// Each buffer must be valid for its stated length.
enum TsStatus ts_encrypt(const struct TsRegistry *registry,
                         const char *name,
                         const uint8_t *key,
                         size_t key_len,
                         const uint8_t *pmn,
                         size_t pmn_len,
                         const uint8_t *adata,
                         size_t adata_len,
                         const uint8_t *plaintext,
                         size_t plaintext_len,
                         uint8_t *out,
                         size_t out_cap,
                         size_t *out_len);

// Encrypt/decrypt sanity check; `passed` receives 1 or 0.
//
// # Safety
// Pointers must be valid.
enum TsStatus ts_roundtrip_check(const struct TsRegistry *registry,
                                 const char *name,
                                 size_t trials,
                                 uint64_t seed,
                                 int *passed);

// Writes the concatenated tags of `num_tags` encryptions
// (`num_tags * tag_len` bytes).
//
// # Safety
// `out` must be valid for `out_cap` bytes.
enum TsStatus ts_generate_stream(const struct TsRegistry *registry,
                                 const char *name,
                                 enum TsPmnMode mode,
                                 size_t num_tags,
                                 uint64_t master_seed,
                                 uint8_t *out,
                                 size_t out_cap,
                                 size_t *out_len);

// Runs the statistical battery on `seq_count` sequences of `seq_len` bits
// taken from `data`. Free the report with [`ts_battery_report_free`].
//
// # Safety
// `data` must be valid for `len` bytes; `report` must be writable.
enum TsStatus ts_battery_run(const uint8_t *data,
                             size_t len,
                             size_t seq_len,
                             size_t seq_count,
                             double alpha,
                             struct TsBatteryReport **report);

// # Safety
// `report` must be a live report handle.
enum TsVerdict ts_battery_report_verdict(const struct TsBatteryReport *report);

// Tests that passed both the proportion and uniformity checks.
//
// # Safety
// `report` must be a live report handle.
size_t ts_battery_report_tests_passed(const struct TsBatteryReport *report);

// # Safety
// `report` must be a live report handle.
size_t ts_battery_report_tests_run(const struct TsBatteryReport *report);

// Writes the report as JSON (not NUL-terminated).
//
// # Safety
// `out` must be valid for `out_cap` bytes.
enum TsStatus ts_battery_report_json(const struct TsBatteryReport *report,
                                     uint8_t *out,
                                     size_t out_cap,
                                     size_t *out_len);

// # Safety
// `report` must come from [`ts_battery_run`] and not be used afterwards.
void ts_battery_report_free(struct TsBatteryReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TAGSCOPE_H */
