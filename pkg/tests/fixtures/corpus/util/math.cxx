#include "math.hxx"
#include "../core/detail/macros.h"

float clampf(float v) {
    return CLAMP(v, 0.0f, PI);
}

int sign(int v) {
    if (v < 0) return -1;
    return v == 0 ? 0 : 1;
}

#define LOCAL_ONLY 1
#if LOCAL_ONLY
int local = SWAP;
#endif
