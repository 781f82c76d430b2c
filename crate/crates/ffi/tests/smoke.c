#include <stdio.h>
#include <string.h>

#include "fsi.h"

int main(void) {
    FsiConfig *config = NULL;
    if (fsi_config_preset("no-such-preset", &config) != FSI_STATUS_CONFIG || config != NULL) {
        return 10;
    }
    if (strstr(fsi_last_error(), "no-such-preset") == NULL) {
        return 11;
    }
    const char *json = "{\"scenario\": \"fp-fixed\", \"horizon\": 3, \"geometry\": {\"nr\": 6, \"nth\": 12},"
                       " \"fene\": {\"nqr\": 4, \"nqa\": 8}}";
    if (fsi_config_from_json(json, &config) != FSI_STATUS_OK) {
        fprintf(stderr, "%s\n", fsi_last_error());
        return 12;
    }
    FsiRun *run = NULL;
    if (fsi_run(config, &run) != FSI_STATUS_OK || fsi_run_exit_code(run) != 0) {
        return 13;
    }
    size_t rows = fsi_run_rows(run);
    double mass[8];
    if (rows != 4 || fsi_run_column(run, "mass", mass, 8) != FSI_STATUS_OK) {
        return 14;
    }
    printf("fsi %s rows %zu mass %.12f\n", fsi_version(), rows, mass[rows - 1]);
    fsi_run_free(run);
    fsi_config_free(config);
    return 0;
}
