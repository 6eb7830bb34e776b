#pragma once

#include "gcdr/params.hpp"

namespace gcdr {

struct AdamConfig {
    float lr = 1e-3f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float eps = 1e-8f;
};

// One Adam update over every active entry of `ps` (bias-corrected moments,
// per-entry step counts). Throws NumericError naming the parameter if its
// gradient contains a non-finite value. Inactive entries keep value, moments
// and step count untouched.
void adam_step(ParamSet& ps, const AdamConfig& cfg);

}  // namespace gcdr
