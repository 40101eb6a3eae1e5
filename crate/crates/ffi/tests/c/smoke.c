#include <stdio.h>
#include <string.h>
#include "felab.h"

#define CHECK(expr)                                                              \
  do {                                                                           \
    FelabStatus s_ = (expr);                                                     \
    if (s_ != FELAB_STATUS_OK) {                                                 \
      const char *m_ = felab_last_error_message();                               \
      fprintf(stderr, "%s failed: %d %s\n", #expr, (int)s_, m_ ? m_ : "");       \
      return 1;                                                                  \
    }                                                                            \
  } while (0)

int main(void) {
  FelabSimConfig cfg;
  CHECK(felab_sim_config_default(&cfg));
  cfg.n = 16;
  cfg.n_force = 0.0;
  FelabSim *sim = NULL;
  CHECK(felab_sim_new(&cfg, &sim));
  CHECK(felab_sim_set_single_mode(sim, 1, 0, 1.0, 0));
  double h0 = 0.0, h1 = 0.0, t = 0.0;
  uint64_t step = 0;
  CHECK(felab_sim_sobolev_norm(sim, 0.0, &h0));
  CHECK(felab_sim_step(sim, 10));
  CHECK(felab_sim_time(sim, &t, &step));
  CHECK(felab_sim_sobolev_norm(sim, 0.0, &h1));
  if (step != 10 || !(h1 < h0)) {
    fprintf(stderr, "unexpected state: step=%llu h0=%g h1=%g\n", (unsigned long long)step, h0, h1);
    return 1;
  }
  if (felab_sim_lp_norm(sim, 0.5, &h1) != FELAB_STATUS_INVALID_ARGUMENT) return 1;
  if (felab_last_error_message() == NULL) return 1;
  felab_sim_free(sim);
  printf("ok %s\n", felab_version());
  return 0;
}
