#include "csgan/optim.hpp"

#include <cmath>
#include <cstring>
#include <iostream>

namespace csgan {

std::uint64_t ParamStore::checksum() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const void* p, std::size_t n) {
        const unsigned char* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 1099511628211ULL;
        }
    };
    for (const auto& t : tensors_) mix(t->data.data(), t->data.size() * sizeof(double));
    return h;
}

void Adam::step(ParamStore& params, double lr) {
    if (lr <= 0.0) throw InvariantError("Adam: lr must be > 0");
    ++step_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        auto& t = params.tensors()[pi];
        if (t->grad.empty()) continue;  // untouched this step
        auto& mo = moments_[params.names()[pi]];
        if (mo.m.size() != t->data.size()) {
            mo.m.assign(t->data.size(), 0.0);
            mo.v.assign(t->data.size(), 0.0);
        }
        for (std::size_t i = 0; i < t->data.size(); ++i) {
            const double g = t->grad[i];
            if (!std::isfinite(g))
                throw NumericError("Adam: non-finite gradient for " + params.names()[pi]);
            mo.m[i] = cfg_.beta1 * mo.m[i] + (1.0 - cfg_.beta1) * g;
            mo.v[i] = cfg_.beta2 * mo.v[i] + (1.0 - cfg_.beta2) * g * g;
            const double mhat = mo.m[i] / bc1;
            const double vhat = mo.v[i] / bc2;
            t->data[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

double clip_grad_norm(ParamStore& params, double max_norm) {
    double sq = 0.0;
    for (const auto& t : params.tensors())
        for (double g : t->grad) sq += g * g;
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const double s = max_norm / norm;
        for (const auto& t : params.tensors())
            for (double& g : t->grad) g *= s;
    }
    return norm;
}

double StlrSchedule::lr(std::int64_t t) const {
    if (cut_frac <= 0.0 || cut_frac >= 1.0) throw InvariantError("StlrSchedule: bad cut_frac");
    if (ratio <= 1.0) throw InvariantError("StlrSchedule: ratio must be > 1");
    if (t < 0) throw InvariantError("StlrSchedule: negative step");
    if (t > total_steps) {
        std::cerr << "warning: STLR step " << t << " beyond horizon " << total_steps
                  << ", clamping\n";
        t = total_steps;
    }
    if (total_steps < 1) throw InvariantError("StlrSchedule: total_steps must be >= 1");
    // short horizons would give cut == 0 and a division by zero below
    const auto cut = std::max<std::int64_t>(
        1, static_cast<std::int64_t>(std::floor(static_cast<double>(total_steps) * cut_frac)));
    double p;
    if (t < cut) {
        p = static_cast<double>(t) / static_cast<double>(cut);
    } else {
        p = 1.0 - static_cast<double>(t - cut) /
                      (static_cast<double>(cut) * (1.0 / cut_frac - 1.0));
    }
    return eta_max * (1.0 + p * (ratio - 1.0)) / ratio;
}

}  // namespace csgan
