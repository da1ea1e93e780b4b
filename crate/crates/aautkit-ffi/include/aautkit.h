/* C interface to aautkit: exact computations with almost automorphisms
 * of rooted regular trees.
 *
 * Conventions:
 *   - every fallible function returns a status code (AAUT_OK on success);
 *   - results are returned through out-pointers;
 *   - AautElement handles are owned by the caller and released with
 *     aaut_element_free; strings with aaut_string_free;
 *   - aaut_last_error() describes the most recent failure on the calling
 *     thread, valid until the next failing call on that thread;
 *   - element JSON:
 *       {"d":2,"rootArity":2,"map":[{"from":"0","to":"00",
 *        "portrait":[{"at":"","perm":[1,0]}]}, ...]}
 *     with "from" ranging over the domain leaves in planar order.
 */

#ifndef AAUTKIT_H
#define AAUTKIT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

enum {
    AAUT_OK = 0,         /* success */
    AAUT_ERR_PARSE = 1,  /* malformed JSON or string */
    AAUT_ERR_DOMAIN = 2, /* mathematically invalid input / undefined value */
    AAUT_ERR_BUDGET = 3, /* classification budget exhausted */
    AAUT_ERR_NULL = 4,   /* null pointer argument */
    AAUT_ERR_PANIC = 5   /* internal error */
};

/* opaque element handle */
typedef struct AautElement AautElement;

/* message for the most recent failure on this thread (library-owned) */
const char *aaut_last_error(void);

/* construction */
int aaut_element_parse(const char *json, AautElement **out);
int aaut_element_identity(uint16_t d, uint16_t root_arity, AautElement **out);

/* canonical JSON form; release with aaut_string_free */
int aaut_element_to_json(const AautElement *g, char **out);

/* group operations; compose applies f first */
int aaut_element_compose(const AautElement *g, const AautElement *f,
                         AautElement **out);
int aaut_element_invert(const AautElement *g, AautElement **out);
int aaut_element_equals(const AautElement *a, const AautElement *b, int *out);

/* parity (+1/-1); AAUT_ERR_DOMAIN when undefined for the element */
int aaut_element_parity(const AautElement *g, int *out);

/* elliptic/translation dichotomy; writes a JSON report; AAUT_ERR_BUDGET
 * when the search budget is exhausted */
int aaut_element_classify(const AautElement *g, size_t budget, char **out);

/* release */
void aaut_element_free(AautElement *g);
void aaut_string_free(char *s);

#ifdef __cplusplus
}
#endif

#endif /* AAUTKIT_H */
