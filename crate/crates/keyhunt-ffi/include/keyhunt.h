/* C API for the keyhunt session-key recovery library. */

#ifndef KEYHUNT_H
#define KEYHUNT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every API call.
 */
typedef enum KeyhuntStatus {
  KEYHUNT_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  KEYHUNT_STATUS_NULL_ARGUMENT = 1,
  /**
   * An argument value was out of range or malformed.
   */
  KEYHUNT_STATUS_INVALID_ARGUMENT = 2,
  /**
   * A file or buffer could not be parsed.
   */
  KEYHUNT_STATUS_PARSE_ERROR = 3,
  /**
   * The search exhausted its space without a validating pair.
   */
  KEYHUNT_STATUS_NOT_FOUND = 4,
  KEYHUNT_STATUS_IO_ERROR = 5,
  /**
   * The cipher is unknown or cannot be validated by decryption.
   */
  KEYHUNT_STATUS_UNSUPPORTED = 6,
} KeyhuntStatus;

/**
 * Opaque handle to a trained stacked classifier.
 */
typedef struct KeyhuntModel KeyhuntModel;

/**
 * A recovered (IV, key) pair.
 */
typedef struct KeyhuntKeyMatch {
  /**
   * Byte offset of the IV inside the heap buffer.
   */
  uint64_t iv_offset;
  /**
   * Byte offset of the encryption key inside the heap buffer.
   */
  uint64_t key_offset;
  uint8_t iv[16];
  uint8_t key[64];
  uint32_t iv_len;
  uint32_t key_len;
  /**
   * Sequential-order rank of the winning probe.
   */
  uint64_t probes;
} KeyhuntKeyMatch;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static string; never freed by the caller.
 */
const char *keyhunt_version(void);

/**
 * Static description of a status code; never freed by the caller.
 */
const char *keyhunt_status_message(enum KeyhuntStatus status);

/**
 * Load a stacked model file produced by `keyhunt train`.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string and `out` a valid pointer.
 * On success `*out` owns the model; release it with [`keyhunt_model_free`].
 */
enum KeyhuntStatus keyhunt_model_load(const char *path, struct KeyhuntModel **out);

/**
 * Release a model handle; a null handle is a no-op.
 *
 * # Safety
 * `model` must have come from [`keyhunt_model_load`] and not been freed.
 */
void keyhunt_model_free(struct KeyhuntModel *model);

/**
 * Classify a heap buffer and return the byte offsets of the slices the
 * stacked model predicts to hold key material.
 *
 * # Safety
 * `heap` must point to `heap_len` readable bytes; `offsets_out` and
 * `count_out` must be valid pointers. The returned array is released with
 * [`keyhunt_offsets_free`].
 */
enum KeyhuntStatus keyhunt_classify(const struct KeyhuntModel *model,
                                    const uint8_t *heap,
                                    size_t heap_len,
                                    uint64_t **offsets_out,
                                    size_t *count_out);

/**
 * Release an offset array from [`keyhunt_classify`]; null is a no-op.
 *
 * # Safety
 * `offsets` and `count` must be exactly the values produced by one call.
 */
void keyhunt_offsets_free(uint64_t *offsets, size_t count);

/**
 * Recover the (IV, key) pair of one heap against one captured packet.
 *
 * With a model handle the classifier-assisted path runs (predicted slices
 * only); with a null model the heap is page-filtered and brute-forced.
 * `packet` is one SSH binary packet starting at its encrypted length field.
 *
 * # Safety
 * `heap` and `packet` must point to the stated number of readable bytes,
 * `cipher` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum KeyhuntStatus keyhunt_extract(const struct KeyhuntModel *model,
                                   const uint8_t *heap,
                                   size_t heap_len,
                                   const uint8_t *packet,
                                   size_t packet_len,
                                   const char *cipher,
                                   struct KeyhuntKeyMatch *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KEYHUNT_H */
