#include <math.h>
#include <stdio.h>
#include <string.h>

#include "chlab.h"

#define CHECK(expr)                                                        \
    do {                                                                   \
        if (!(expr)) {                                                     \
            fprintf(stderr, "check failed: %s (%s)\n", #expr, chlab_last_error()); \
            return 1;                                                      \
        }                                                                  \
    } while (0)

int main(void) {
    CHECK(strlen(chlab_version()) > 0);

    ChlabBasis *basis = NULL;
    CHECK(chlab_basis_new(16, &basis) == CHLAB_STATUS_OK);
    double lam[15];
    CHECK(chlab_basis_eigenvalues(basis, lam, 15) == CHLAB_STATUS_OK);
    CHECK(lam[0] < 0.0 && fabs(lam[0] + 1.0) < 1e-2);
    CHECK(chlab_basis_eigenvalues(basis, lam, 2) == CHLAB_STATUS_BUFFER_TOO_SMALL);
    CHECK(strlen(chlab_last_error()) > 0);

    ChlabSheet *sheet = NULL;
    CHECK(chlab_sheet_generate(7, 0, 32, 16, 0.1, &sheet) == CHLAB_STATUS_OK);
    size_t m = 0, n = 0;
    CHECK(chlab_sheet_dims(sheet, &m, &n) == CHLAB_STATUS_OK);
    CHECK(m == 32 && n == 16);

    ChlabSolverConfig cfg = chlab_solver_config_default(16, 32, 0.1);
    double u[17];
    CHECK(chlab_simulate(&cfg, sheet, u, 17) == CHLAB_STATUS_OK);
    CHECK(u[0] == 0.0 && u[16] == 0.0 && u[8] > 0.0);

    cfg.drift.kind = CHLAB_DRIFT_KIND_CUBIC_CUTOFF;
    cfg.drift.c[0] = 1.0;
    cfg.drift.c[2] = -1.0;
    cfg.drift.r = 2.0;
    CHECK(chlab_simulate(&cfg, sheet, u, 17) == CHLAB_STATUS_OK);

    cfg.diffusion.kind = 42;
    CHECK(chlab_simulate(&cfg, sheet, u, 17) == CHLAB_STATUS_INVALID_ARGUMENT);

    ChlabSolverConfig small = chlab_solver_config_default(8, 8, 0.1);
    double h = 0.0, value = 0.0;
    CHECK(chlab_hnorm2(&small, sheet, 1.5707963267948966, &h, &value) == CHLAB_STATUS_OK);
    CHECK(h > 0.0);

    double g = 0.0, gn = 0.0;
    CHECK(chlab_exact_kernel(0.5, 1.0, 2.0, 1e-14, &g) == CHLAB_STATUS_OK);
    CHECK(chlab_discrete_kernel(basis, 0.5, 1.0, 2.0, &gn) == CHLAB_STATUS_OK);
    CHECK(fabs(g - gn) < 0.05);

    chlab_sheet_free(sheet);
    chlab_basis_free(basis);
    chlab_basis_free(NULL);
    printf("smoke ok\n");
    return 0;
}
