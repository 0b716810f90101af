#include <math.h>
#include <stdio.h>
#include "zoll_lab.h"

int main(void) {
    ZollManifold *m = NULL;
    if (zoll_manifold_new("round-sphere", NULL, NULL, 0, &m) != ZOLL_STATUS_OK) return 10;
    size_t dim = 0;
    zoll_manifold_dim(m, &dim);
    if (dim != 2) return 11;
    double q[2] = {0.2, -0.1}, v[2] = {0.0, 0.0}, k = 0.0;
    /* unit vector for the conformal metric 4/(1+|q|²)² δ */
    v[0] = (1.0 + q[0] * q[0] + q[1] * q[1]) / 2.0;
    if (zoll_khat(m, 0, q, v, 2, &k) != ZOLL_STATUS_OK) return 12;
    if (fabs(k - 1.0) > 1e-6) return 13;
    zoll_manifold_free(m);

    ZollManifold *bad = NULL;
    if (zoll_manifold_new("nope", NULL, NULL, 0, &bad) != ZOLL_STATUS_INVALID_ARGUMENT) return 14;
    char msg[256];
    if (zoll_last_error_message(msg, sizeof msg) == 0) return 15;

    double rho[4] = {0, 1, -1, 0}, gamma[4] = {1, 0, 0, 1};
    ZollSpectral *s = NULL;
    if (zoll_spectral_new(rho, gamma, 2, &s) != ZOLL_STATUS_OK) return 16;
    ZollFlowClass c;
    double period = 0.0;
    if (zoll_spectral_classify(s, 1000000, &c, &period) != ZOLL_STATUS_OK) return 17;
    if (c != ZOLL_FLOW_CLASS_ZOLL) return 18;
    zoll_spectral_free(s);
    printf("ok %s\n", zoll_version());
    return 0;
}
