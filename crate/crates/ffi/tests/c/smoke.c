#include <stdio.h>
#include <string.h>

#include "conflictlens.h"

#define CHECK(c)                                              \
    do {                                                      \
        if (!(c)) {                                           \
            fprintf(stderr, "%s:%d: %s\n", __FILE__, __LINE__, #c); \
            return 1;                                         \
        }                                                     \
    } while (0)

int main(void) {
    ClScenario *sc = NULL;
    ClReport *r = NULL;

    CHECK(cl_scenario_fixture("highway_ex4", -1, &sc) == CL_STATUS_OK);
    CHECK(cl_resolve(sc, 4, 0, &r) == CL_STATUS_OK);
    CHECK(cl_report_verdict(r) == 1);
    CHECK(cl_report_level(r) == 1);

    char *json = cl_report_json(r);
    CHECK(json != NULL);
    CHECK(strstr(json, "\"resolved-at(C1)\"") != NULL);
    cl_string_free(json);

    char *text = cl_explain_text(r);
    CHECK(text != NULL && strstr(text, "lidar") != NULL);
    cl_string_free(text);
    cl_report_free(r);
    cl_scenario_free(sc);

    sc = NULL;
    CHECK(cl_scenario_parse("HORIZON x\n", -1, &sc) == CL_STATUS_INVALID_INPUT);
    CHECK(sc == NULL);
    CHECK(cl_last_error() != NULL);

    bool sat = false;
    CHECK(cl_solve_dimacs("p cnf 1 1\n-1 0\n", &sat) == CL_STATUS_OK && sat);

    printf("ok %s\n", cl_version());
    return 0;
}
