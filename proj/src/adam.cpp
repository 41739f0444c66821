#include "enrollrec/adam.hpp"

#include <cmath>

#include "enrollrec/error.hpp"

namespace enrollrec {

void AdamConfig::validate() const {
    if (!(learning_rate > 0.0)) throw Error("learning rate must be > 0");
    if (!(beta1 > 0.0 && beta1 < 1.0)) throw Error("beta1 must lie in (0, 1)");
    if (!(beta2 > 0.0 && beta2 < 1.0)) throw Error("beta2 must lie in (0, 1)");
    if (!(epsilon > 0.0)) throw Error("epsilon must be > 0");
    if (!(clip > 0.0)) throw Error("gradient clip must be > 0");
}

double clip_global_norm(std::span<const std::span<double>> grads, double clip) {
    double ss = 0.0;
    for (auto g : grads) {
        for (double x : g) ss += x * x;
    }
    const double norm = std::sqrt(ss);
    if (clip > 0.0 && norm > clip) {
        const double scale = clip / norm;
        for (auto g : grads) {
            for (double& x : g) x *= scale;
        }
    }
    return norm;
}

void Adam::update(std::span<const std::span<double>> params, std::span<const std::span<double>> grads) {
    if (params.size() != grads.size()) throw Error("parameter and gradient block counts differ");
    if (moments_.empty()) {
        moments_.resize(params.size());
        for (std::size_t b = 0; b < params.size(); ++b) {
            moments_[b].m.assign(params[b].size(), 0.0);
            moments_[b].v.assign(params[b].size(), 0.0);
        }
    }
    if (moments_.size() != params.size()) throw Error("parameter block count changed between steps");
    last_norm_ = clip_global_norm(grads, config_.clip);

    ++step_;
    const double t = static_cast<double>(step_);
    const double c1 = 1.0 - std::pow(config_.beta1, t);
    const double c2 = 1.0 - std::pow(config_.beta2, t);
    for (std::size_t b = 0; b < params.size(); ++b) {
        auto p = params[b];
        auto g = grads[b];
        auto& [m, v] = moments_[b];
        if (p.size() != g.size() || p.size() != m.size()) throw Error("parameter block shape changed");
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
            v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
            const double mhat = m[i] / c1;
            const double vhat = v[i] / c2;
            p[i] -= config_.learning_rate * mhat / (std::sqrt(vhat) + config_.epsilon);
        }
    }
}

}  // namespace enrollrec
