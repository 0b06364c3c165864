#ifndef CODOC_H
#define CODOC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CodocStatus {
  CODOC_STATUS_OK = 0,
  CODOC_STATUS_NULL_POINTER = 1,
  CODOC_STATUS_INVALID_UTF8 = 2,
  CODOC_STATUS_INVALID_ARGUMENT = 3,
  CODOC_STATUS_IO_ERROR = 4,
  CODOC_STATUS_PARSE_ERROR = 5,
  CODOC_STATUS_UNKNOWN_ID = 6,
  CODOC_STATUS_PANIC = 7,
} CodocStatus;

/**
 * Opaque BPE vocabulary.
 */
typedef struct CodocVocab CodocVocab;

/**
 * ROUGE precision, recall and F1 for unigrams, bigrams and the longest
 * common subsequence.
 */
typedef struct CodocRouge {
  double r1_precision;
  double r1_recall;
  double r1_f1;
  double r2_precision;
  double r2_recall;
  double r2_f1;
  double rl_precision;
  double rl_recall;
  double rl_f1;
} CodocRouge;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread ("" after a success).
 * The pointer stays valid until the next codoc call on the same thread.
 */
const char *codoc_last_error(void);

/**
 * Release a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from a codoc function and not be freed twice.
 */
void codoc_string_free(char *s);

/**
 * Release an id array returned by this library. Null is ignored.
 *
 * # Safety
 * `ids` and `len` must be exactly as returned.
 */
void codoc_ids_free(uint32_t *ids, size_t len);

/**
 * Structural validity of Python source; `*valid_out` is 1 or 0.
 *
 * # Safety
 * `source` must be a NUL-terminated string; `valid_out` writable.
 */
enum CodocStatus codoc_check_syntax(const char *source, int *valid_out);

/**
 * Style label of a docstring ("oneline", "numpydoc", ...).
 *
 * # Safety
 * `docstring` must be a NUL-terminated string; `style_out` writable.
 */
enum CodocStatus codoc_classify(const char *docstring, char **style_out);

/**
 * Clean a docstring with the default placeholders.
 *
 * # Safety
 * `docstring` must be a NUL-terminated string; `out` writable.
 */
enum CodocStatus codoc_clean(const char *docstring, char **out);

/**
 * Extract methods from one source file as JSON lines.
 *
 * # Safety
 * All strings must be NUL-terminated; `json_out` writable.
 */
enum CodocStatus codoc_extract_json(const char *source,
                                    const char *repo,
                                    const char *path,
                                    char **json_out);

/**
 * Corpus BLEU (0 to 100) over `n` hypothesis/reference pairs.
 *
 * # Safety
 * `hyps` and `refs` must point to `n` NUL-terminated strings each.
 */
enum CodocStatus codoc_bleu(const char *const *hyps,
                            const char *const *refs,
                            size_t n,
                            double *out);

/**
 * ROUGE-1, ROUGE-2 and ROUGE-L for one pair.
 *
 * # Safety
 * Both strings must be NUL-terminated; `out` writable.
 */
enum CodocStatus codoc_rouge(const char *hyp, const char *reference, struct CodocRouge *out);

/**
 * Load a vocabulary saved as a merges file and a token table.
 *
 * # Safety
 * Paths must be NUL-terminated; `out` writable. Free with [`codoc_vocab_free`].
 */
enum CodocStatus codoc_vocab_load(const char *merges_path,
                                  const char *tokens_path,
                                  struct CodocVocab **out);

/**
 * Train a vocabulary on `n` documents.
 *
 * # Safety
 * `docs` must point to `n` NUL-terminated strings; `out` writable.
 */
enum CodocStatus codoc_vocab_train(const char *const *docs,
                                   size_t n,
                                   size_t vocab_size,
                                   struct CodocVocab **out);

/**
 * Write the vocabulary to a merges file and a token table.
 *
 * # Safety
 * `vocab` must be a live handle; paths NUL-terminated.
 */
enum CodocStatus codoc_vocab_save(const struct CodocVocab *vocab,
                                  const char *merges_path,
                                  const char *tokens_path);

/**
 * Number of tokens in the vocabulary, or 0 for a null handle.
 *
 * # Safety
 * `vocab` must be null or a live handle.
 */
size_t codoc_vocab_size(const struct CodocVocab *vocab);

/**
 * # Safety
 * `vocab` must be null or a handle not yet freed.
 */
void codoc_vocab_free(struct CodocVocab *vocab);

/**
 * Encode text to token ids.
 *
 * # Safety
 * `vocab` live, `text` NUL-terminated, out-parameters writable.
 */
enum CodocStatus codoc_vocab_encode(const struct CodocVocab *vocab,
                                    const char *text,
                                    uint32_t **ids_out,
                                    size_t *len_out);

/**
 * Decode token ids to text.
 *
 * # Safety
 * `vocab` live, `ids` valid for `len` reads, `out` writable.
 */
enum CodocStatus codoc_vocab_decode(const struct CodocVocab *vocab,
                                    const uint32_t *ids,
                                    size_t len,
                                    char **out);

/**
 * Span-mask `ids` using the vocabulary's mask tokens.
 *
 * # Safety
 * `vocab` live, `ids` valid for `len` reads, out-parameters writable.
 */
enum CodocStatus codoc_noise(const struct CodocVocab *vocab,
                             const uint32_t *ids,
                             size_t len,
                             double mask_rate,
                             uint64_t seed,
                             uint32_t **source_out,
                             size_t *source_len,
                             uint32_t **target_out,
                             size_t *target_len);

/**
 * Inverse of [`codoc_noise`].
 *
 * # Safety
 * `vocab` live, arrays valid for their lengths, out-parameters writable.
 */
enum CodocStatus codoc_denoise(const struct CodocVocab *vocab,
                               const uint32_t *source,
                               size_t source_len,
                               const uint32_t *target,
                               size_t target_len,
                               uint32_t **ids_out,
                               size_t *len_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CODOC_H */
