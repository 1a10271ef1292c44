#include <math.h>
#include <stdio.h>

#include "cascade_sim.h"

int main(void) {
    CascadeSubsystem s = {10.0, 10.0, 1000.0, 0.9, 0.1, 0.0, 0.0};
    CascadeParams *p = NULL;
    if (cascade_params_new(&s, &s, 0.0, &p) != CASCADE_STATUS_OK) {
        return 1;
    }
    double tbar = 0.0;
    if (cascade_find_tbar(p, 0.0, 100.0, &tbar) != CASCADE_STATUS_OK) {
        return 2;
    }
    double c = 0.0;
    if (cascade_conditional_concurrence(p, tbar, 100.0, 0.88, &c) != CASCADE_STATUS_OK) {
        return 3;
    }
    CascadeSubsystem bad = s;
    bad.detuning = 0.0;
    CascadeParams *q = NULL;
    if (cascade_params_new(&bad, &s, 0.0, &q) != CASCADE_STATUS_INVALID_PARAMETER || q != NULL) {
        return 4;
    }
    printf("%s tbar=%.2f c_cond=%.3f err=%s\n", cascade_version(), tbar, c, cascade_last_error_message());
    cascade_params_free(p);
    return (fabs(tbar - 28.32) < 0.05 && fabs(c - 0.75) < 0.01) ? 0 : 5;
}
