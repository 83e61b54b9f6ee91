#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "glore/tensor.hpp"

namespace glore {

/// Gated recurrent unit (Cho et al. 2014):
///
///   z  = sigmoid(Wz x + Uz h + bz)
///   r  = sigmoid(Wr x + Ur h + br)
///   c  = tanh(Wh x + Uh (r * h) + bh)
///   h' = z * h + (1 - z) * c
///
/// The update gate z keeps the previous state; (1 - z) admits the candidate.
struct GruParams {
    Matrix wz, uz, bz;
    Matrix wr, ur, br;
    Matrix wh, uh, bh;

    GruParams() = default;
    GruParams(std::size_t input, std::size_t state)
        : wz(state, input), uz(state, state), bz(state, 1),
          wr(state, input), ur(state, state), br(state, 1),
          wh(state, input), uh(state, state), bh(state, 1) {}

    std::size_t input_size() const noexcept { return wz.cols(); }
    std::size_t state_size() const noexcept { return wz.rows(); }

    template <typename Self, typename Fn>
    static void visit(Self& self, const std::string& prefix, Fn&& fn) {
        fn(prefix + "wz", self.wz);
        fn(prefix + "uz", self.uz);
        fn(prefix + "bz", self.bz);
        fn(prefix + "wr", self.wr);
        fn(prefix + "ur", self.ur);
        fn(prefix + "br", self.br);
        fn(prefix + "wh", self.wh);
        fn(prefix + "uh", self.uh);
        fn(prefix + "bh", self.bh);
    }

    friend bool operator==(const GruParams&, const GruParams&) = default;
};

/// Activations of one step, kept for the backward pass.
struct GruStep {
    Vector x, h_prev, z, r, rh, c, h;
};

inline GruStep gru_forward(const GruParams& p, std::span<const double> x,
                           std::span<const double> h_prev) {
    const std::size_t n = p.state_size();
    GruStep s;
    s.x.assign(x.begin(), x.end());
    s.h_prev.assign(h_prev.begin(), h_prev.end());
    s.z.assign(p.bz.values().begin(), p.bz.values().end());
    s.r.assign(p.br.values().begin(), p.br.values().end());
    s.c.assign(p.bh.values().begin(), p.bh.values().end());
    linalg::gemv_acc(p.wz, x, s.z);
    linalg::gemv_acc(p.uz, h_prev, s.z);
    linalg::gemv_acc(p.wr, x, s.r);
    linalg::gemv_acc(p.ur, h_prev, s.r);
    for (std::size_t i = 0; i < n; ++i) {
        s.z[i] = linalg::sigmoid(s.z[i]);
        s.r[i] = linalg::sigmoid(s.r[i]);
    }
    s.rh.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        s.rh[i] = s.r[i] * h_prev[i];
    linalg::gemv_acc(p.wh, x, s.c);
    linalg::gemv_acc(p.uh, s.rh, s.c);
    s.h.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        s.c[i] = std::tanh(s.c[i]);
        s.h[i] = s.z[i] * h_prev[i] + (1.0 - s.z[i]) * s.c[i];
    }
    return s;
}

/// Accumulates parameter gradients into `grad` and writes the gradients
/// with respect to the step input and previous state into dx / dh_prev
/// (both overwritten).
inline void gru_backward(const GruParams& p, const GruStep& s, std::span<const double> dh,
                         GruParams& grad, Vector& dx, Vector& dh_prev) {
    const std::size_t n = p.state_size();
    dx.assign(p.input_size(), 0.0);
    dh_prev.assign(n, 0.0);

    Vector da_z(n), da_r(n), da_c(n), drh(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double dz = dh[i] * (s.h_prev[i] - s.c[i]);
        const double dc = dh[i] * (1.0 - s.z[i]);
        dh_prev[i] = dh[i] * s.z[i];
        da_c[i] = dc * (1.0 - s.c[i] * s.c[i]);
        da_z[i] = dz * s.z[i] * (1.0 - s.z[i]);
    }

    linalg::outer_acc(grad.wh, da_c, s.x);
    linalg::outer_acc(grad.uh, da_c, s.rh);
    for (std::size_t i = 0; i < n; ++i)
        grad.bh.values()[i] += da_c[i];
    linalg::gemv_t_acc(p.wh, da_c, dx);
    linalg::gemv_t_acc(p.uh, da_c, drh);

    for (std::size_t i = 0; i < n; ++i) {
        dh_prev[i] += drh[i] * s.r[i];
        const double dr = drh[i] * s.h_prev[i];
        da_r[i] = dr * s.r[i] * (1.0 - s.r[i]);
    }

    linalg::outer_acc(grad.wr, da_r, s.x);
    linalg::outer_acc(grad.ur, da_r, s.h_prev);
    for (std::size_t i = 0; i < n; ++i)
        grad.br.values()[i] += da_r[i];
    linalg::gemv_t_acc(p.wr, da_r, dx);
    linalg::gemv_t_acc(p.ur, da_r, dh_prev);

    linalg::outer_acc(grad.wz, da_z, s.x);
    linalg::outer_acc(grad.uz, da_z, s.h_prev);
    for (std::size_t i = 0; i < n; ++i)
        grad.bz.values()[i] += da_z[i];
    linalg::gemv_t_acc(p.wz, da_z, dx);
    linalg::gemv_t_acc(p.uz, da_z, dh_prev);
}

} // namespace glore
