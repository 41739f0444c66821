#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace enrollrec {

struct AdamConfig {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double clip = 5.0;  // global gradient-norm clip; <= 0 disables

    void validate() const;
};

// Moment estimates for one parameter block.
struct AdamMoments {
    std::vector<double> m;
    std::vector<double> v;
};

// Scales every block so that the joint L2 norm is at most `clip`.
// Returns the norm before clipping.
double clip_global_norm(std::span<const std::span<double>> grads, double clip);

// One Adam step over a set of parameter blocks sharing a step counter.
// `grads` are clipped in place first. `step` is incremented.
class Adam {
public:
    explicit Adam(AdamConfig config = {}) : config_(config) { config_.validate(); }

    void update(std::span<const std::span<double>> params, std::span<const std::span<double>> grads);

    std::size_t step() const { return step_; }
    const AdamConfig& config() const { return config_; }
    double last_grad_norm() const { return last_norm_; }

private:
    AdamConfig config_;
    std::size_t step_ = 0;
    double last_norm_ = 0.0;
    std::vector<AdamMoments> moments_;
};

}  // namespace enrollrec
