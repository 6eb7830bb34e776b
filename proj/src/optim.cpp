#include "gcdr/optim.hpp"

#include <cmath>

#include "gcdr/errors.hpp"

namespace gcdr {

void adam_step(ParamSet& ps, const AdamConfig& cfg) {
    for (int id = 0; id < ps.size(); ++id) {
        if (!ps.active(id)) continue;
        const Tensor& g = ps.grad(id);
        if (!g.all_finite())
            throw NumericError("adam: non-finite gradient for parameter '" + ps.name(id) + "'");
        auto m = ps.adam_m(id).mat().array();
        auto v = ps.adam_v(id).mat().array();
        std::int64_t& t = ps.adam_t(id);
        t += 1;
        m = cfg.beta1 * m + (1.0f - cfg.beta1) * g.mat().array();
        v = cfg.beta2 * v + (1.0f - cfg.beta2) * g.mat().array().square();
        const float c1 =
            static_cast<float>(1.0 - std::pow(static_cast<double>(cfg.beta1), t));
        const float c2 =
            static_cast<float>(1.0 - std::pow(static_cast<double>(cfg.beta2), t));
        ps.value(id).mat().array() -= cfg.lr * (m / c1) / ((v / c2).sqrt() + cfg.eps);
    }
}

}  // namespace gcdr
