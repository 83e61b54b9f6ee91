#pragma once

#include <cmath>
#include <vector>

#include "glore/model.hpp"

namespace glore {

struct AdamOptions {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Adam with bias-corrected moment estimates (Kingma & Ba).
class Adam {
public:
    Adam(const ModelParams& shape, AdamOptions options)
        : options_(options), m_(shape.zeros_like()), v_(shape.zeros_like()) {}

    void step(ModelParams& params, const ModelParams& grad) {
        ++t_;
        const double c1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
        std::vector<Matrix*> ms, vs;
        std::vector<const Matrix*> gs;
        m_.for_each([&](const std::string&, Matrix& x) { ms.push_back(&x); });
        v_.for_each([&](const std::string&, Matrix& x) { vs.push_back(&x); });
        grad.for_each([&](const std::string&, const Matrix& x) { gs.push_back(&x); });
        std::size_t k = 0;
        params.for_each([&](const std::string&, Matrix& p) {
            auto pv = p.values();
            auto mv = ms[k]->values();
            auto vv = vs[k]->values();
            auto gv = gs[k]->values();
            for (std::size_t i = 0; i < pv.size(); ++i) {
                mv[i] = options_.beta1 * mv[i] + (1.0 - options_.beta1) * gv[i];
                vv[i] = options_.beta2 * vv[i] + (1.0 - options_.beta2) * gv[i] * gv[i];
                const double mhat = mv[i] / c1;
                const double vhat = vv[i] / c2;
                pv[i] -= options_.learning_rate * mhat / (std::sqrt(vhat) + options_.epsilon);
            }
            ++k;
        });
    }

    long steps() const noexcept { return t_; }

private:
    AdamOptions options_;
    ModelParams m_;
    ModelParams v_;
    long t_ = 0;
};

/// Rescale `grad` so its global L2 norm is at most max_norm. Returns the
/// norm before clipping. max_norm <= 0 disables clipping.
inline double clip_global_norm(ModelParams& grad, double max_norm) {
    const double norm = std::sqrt(grad.squared_norm());
    if (max_norm > 0.0 && norm > max_norm) {
        const double s = max_norm / norm;
        grad.for_each([&](const std::string&, Matrix& m) {
            for (double& v : m.values())
                v *= s;
        });
    }
    return norm;
}

} // namespace glore
