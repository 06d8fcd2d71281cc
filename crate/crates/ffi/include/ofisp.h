/* C interface to the ofisp scheduling library. */

#ifndef OFISP_H
#define OFISP_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum OfispStatus {
  OFISP_STATUS_OK = 0,
  OFISP_STATUS_NULL_POINTER = 1,
  OFISP_STATUS_INVALID_UTF8 = 2,
  OFISP_STATUS_INVALID_INPUT = 3,
  OFISP_STATUS_OUT_OF_RANGE = 4,
  OFISP_STATUS_INFEASIBLE = 5,
  OFISP_STATUS_PANIC = 6,
} OfispStatus;

typedef enum OfispPolicy {
  OFISP_POLICY_MAX_WEIGHT = 0,
  OFISP_POLICY_MIN_SOFT = 1,
} OfispPolicy;

typedef struct OfispInstance OfispInstance;
typedef struct OfispModel OfispModel;
typedef struct OfispSampleSet OfispSampleSet;

typedef struct OfispPenalties {
  double p1;
  double p2;
  double p_pair;
  double p_elig;
} OfispPenalties;

/* A temperature <= 0 is derived from the model. */
typedef struct OfispSchedule {
  size_t reads;
  size_t sweeps;
  double t_init;
  double t_final;
  uint64_t seed;
} OfispSchedule;

typedef struct OfispSelection {
  size_t sample_index;
  double weight;
  size_t hard_violations;
  size_t soft_violations;
} OfispSelection;

/* Message for the last failed call on this thread; empty after a success. */
const char *ofisp_last_error(void);
const char *ofisp_version(void);
void ofisp_string_free(char *s);

OfispStatus ofisp_instance_from_json(const char *json, OfispInstance **out);
void ofisp_instance_free(OfispInstance *inst);
size_t ofisp_instance_num_jobs(const OfispInstance *inst);
OfispStatus ofisp_default_penalties(const OfispInstance *inst, OfispPenalties *out);

/* penalties may be NULL for the defaults. */
OfispStatus ofisp_encode(const OfispInstance *inst, const OfispPenalties *penalties, OfispModel **out);
void ofisp_model_free(OfispModel *model);
size_t ofisp_model_num_vars(const OfispModel *model);
OfispStatus ofisp_model_energy(const OfispModel *model, const uint8_t *bits, size_t len, double *out);
/* Free the result with ofisp_string_free. */
OfispStatus ofisp_model_to_coo(const OfispModel *model, char **out);

OfispSchedule ofisp_schedule_default(void);
/* schedule may be NULL for the defaults. */
OfispStatus ofisp_anneal(const OfispModel *model, const OfispSchedule *schedule, OfispSampleSet **out);
OfispStatus ofisp_brute_force(const OfispModel *model, OfispSampleSet **out);
void ofisp_samples_free(OfispSampleSet *set);
size_t ofisp_samples_len(const OfispSampleSet *set);
OfispStatus ofisp_sample_get(const OfispSampleSet *set,
                             size_t index,
                             uint8_t *bits,
                             size_t bits_len,
                             double *energy,
                             size_t *occurrences);
OfispStatus ofisp_select(const OfispSampleSet *set,
                         const OfispModel *model,
                         const OfispInstance *inst,
                         OfispPolicy policy,
                         OfispSelection *out);

#ifdef __cplusplus
}
#endif

#endif
