#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "csgan/tensor.hpp"

namespace csgan {

// Named parameter registry with stable (insertion) order. Iteration order
// drives checkpoint layout and optimizer determinism.
class ParamStore {
public:
    TensorPtr add(const std::string& name, TensorPtr t) {
        if (index_.count(name)) throw InvariantError("ParamStore: duplicate name " + name);
        t->requires_grad = true;
        index_[name] = names_.size();
        names_.push_back(name);
        tensors_.push_back(std::move(t));
        return tensors_.back();
    }
    const TensorPtr& get(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw InvariantError("ParamStore: unknown name " + name);
        return tensors_[it->second];
    }
    bool has(const std::string& name) const { return index_.count(name) != 0; }
    std::size_t size() const { return names_.size(); }
    const std::vector<std::string>& names() const { return names_; }
    const std::vector<TensorPtr>& tensors() const { return tensors_; }

    void zero_grads() {
        for (auto& t : tensors_) t->zero_grad();
    }
    // FNV-1a over raw bytes of all parameter values, in store order.
    std::uint64_t checksum() const;

private:
    std::vector<std::string> names_;
    std::vector<TensorPtr> tensors_;
    std::map<std::string, std::size_t> index_;
};

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Standard Adam with bias correction. Moments are keyed by parameter name
// and sized on first use. Throws NumericError on a NaN/Inf gradient.
class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    void step(ParamStore& params, double lr);
    std::int64_t steps_taken() const { return step_; }

private:
    struct Moments {
        std::vector<double> m, v;
    };
    AdamConfig cfg_;
    std::map<std::string, Moments> moments_;
    std::int64_t step_ = 0;
};

// Scales all gradients in place so the global L2 norm is at most max_norm.
// Returns the pre-clip norm.
double clip_grad_norm(ParamStore& params, double max_norm);

// Slanted triangular learning rate: linear warmup to eta_max at
// t = floor(T * cut_frac), then linear decay back down.
struct StlrSchedule {
    double eta_max = 1e-3;
    std::int64_t total_steps = 1000;
    double cut_frac = 0.1;
    double ratio = 32.0;

    double lr(std::int64_t t) const;
};

}  // namespace csgan
