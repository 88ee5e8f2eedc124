#include <math.h>
#include <stdio.h>

#include "p2dyn.h"

int main(void) {
    P2Map *map = NULL;
    if (p2dyn_map_power(2, &map) != P2_STATUS_OK) {
        fprintf(stderr, "%s\n", p2dyn_last_error());
        return 1;
    }
    double p[6] = {2.0, 0.0, 0.0, 0.0, 1.0, 0.0};
    double g = 0.0, bound = 0.0;
    if (p2dyn_green_value(map, 40, p, &g, &bound) != P2_STATUS_OK || fabs(g - log(2.0)) > bound) {
        fprintf(stderr, "green value %g\n", g);
        return 1;
    }
    if (p2dyn_map_power(2, NULL) != P2_STATUS_NULL_POINTER) {
        return 1;
    }
    p2dyn_map_free(map);
    printf("ok\n");
    return 0;
}
