#include "csgan/autodiff.hpp"

#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <cstring>

namespace csgan {

namespace {

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<MatRM>;
using MapC = Eigen::Map<const MatRM>;

std::atomic<bool> g_finite_checks{true};

void require_same_shape(const TensorPtr& a, const TensorPtr& b, const char* op) {
    if (a->shape != b->shape)
        throw InvariantError(std::string(op) + ": shape mismatch " + a->shape_str() + " vs " +
                             b->shape_str());
}

TensorPtr fresh(std::vector<int> shape, bool rg) {
    auto t = make_tensor(std::move(shape));
    t->requires_grad = rg;
    return t;
}

void finish(Tape* tape, const TensorPtr& out, std::function<void()> bwd, const char* name) {
    if (finite_checks_enabled()) check_finite(*out, name);
    if (tape && out->requires_grad) tape->record(out, std::move(bwd));
}

}  // namespace

void set_finite_checks(bool enabled) { g_finite_checks.store(enabled); }
bool finite_checks_enabled() { return g_finite_checks.load(); }

void check_finite(const Tensor& t, const char* where) {
    for (double v : t.data)
        if (!std::isfinite(v))
            throw NumericError(std::string("non-finite value in ") + where);
}

void Tape::backward(const TensorPtr& loss) {
    if (loss->size() != 1) throw InvariantError("backward: loss must be scalar");
    if (nodes_.empty()) throw InvariantError("backward: tape is empty");
    for (auto& n : nodes_) {
        n.out->ensure_grad();
        n.out->zero_grad();
    }
    loss->ensure_grad();
    loss->grad[0] = 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) it->backward();
    if (finite_checks_enabled()) {
        for (auto& n : nodes_)
            for (double g : n.out->grad)
                if (!std::isfinite(g)) throw NumericError("non-finite gradient on tape");
    }
}

// ---------------------------------------------------------------- elementwise

TensorPtr add(Tape* tape, const TensorPtr& a, const TensorPtr& b) {
    require_same_shape(a, b, "add");
    auto out = fresh(a->shape, a->requires_grad || b->requires_grad);
    for (std::int64_t i = 0; i < a->size(); ++i) out->data[i] = a->data[i] + b->data[i];
    finish(tape, out, [out, a, b] {
        if (a->requires_grad) {
            a->ensure_grad();
            for (std::int64_t i = 0; i < out->size(); ++i) a->grad[i] += out->grad[i];
        }
        if (b->requires_grad) {
            b->ensure_grad();
            for (std::int64_t i = 0; i < out->size(); ++i) b->grad[i] += out->grad[i];
        }
    }, "add");
    return out;
}

TensorPtr sub(Tape* tape, const TensorPtr& a, const TensorPtr& b) {
    require_same_shape(a, b, "sub");
    auto out = fresh(a->shape, a->requires_grad || b->requires_grad);
    for (std::int64_t i = 0; i < a->size(); ++i) out->data[i] = a->data[i] - b->data[i];
    finish(tape, out, [out, a, b] {
        if (a->requires_grad) {
            a->ensure_grad();
            for (std::int64_t i = 0; i < out->size(); ++i) a->grad[i] += out->grad[i];
        }
        if (b->requires_grad) {
            b->ensure_grad();
            for (std::int64_t i = 0; i < out->size(); ++i) b->grad[i] -= out->grad[i];
        }
    }, "sub");
    return out;
}

TensorPtr mul(Tape* tape, const TensorPtr& a, const TensorPtr& b) {
    require_same_shape(a, b, "mul");
    auto out = fresh(a->shape, a->requires_grad || b->requires_grad);
    for (std::int64_t i = 0; i < a->size(); ++i) out->data[i] = a->data[i] * b->data[i];
    finish(tape, out, [out, a, b] {
        if (a->requires_grad) {
            a->ensure_grad();
            for (std::int64_t i = 0; i < out->size(); ++i) a->grad[i] += out->grad[i] * b->data[i];
        }
        if (b->requires_grad) {
            b->ensure_grad();
            for (std::int64_t i = 0; i < out->size(); ++i) b->grad[i] += out->grad[i] * a->data[i];
        }
    }, "mul");
    return out;
}

TensorPtr scale(Tape* tape, const TensorPtr& a, double c) {
    auto out = fresh(a->shape, a->requires_grad);
    for (std::int64_t i = 0; i < a->size(); ++i) out->data[i] = a->data[i] * c;
    finish(tape, out, [out, a, c] {
        if (!a->requires_grad) return;
        a->ensure_grad();
        for (std::int64_t i = 0; i < out->size(); ++i) a->grad[i] += out->grad[i] * c;
    }, "scale");
    return out;
}

TensorPtr relu(Tape* tape, const TensorPtr& a) {
    auto out = fresh(a->shape, a->requires_grad);
    for (std::int64_t i = 0; i < a->size(); ++i) out->data[i] = a->data[i] > 0.0 ? a->data[i] : 0.0;
    finish(tape, out, [out, a] {
        if (!a->requires_grad) return;
        a->ensure_grad();
        for (std::int64_t i = 0; i < out->size(); ++i)
            if (a->data[i] > 0.0) a->grad[i] += out->grad[i];
    }, "relu");
    return out;
}

TensorPtr reshape(Tape* tape, const TensorPtr& a, std::vector<int> new_shape) {
    if (Tensor::numel(new_shape) != a->size())
        throw InvariantError("reshape: element count mismatch for " + a->shape_str());
    auto out = fresh(std::move(new_shape), a->requires_grad);
    out->data = a->data;
    finish(tape, out, [out, a] {
        if (!a->requires_grad) return;
        a->ensure_grad();
        for (std::int64_t i = 0; i < out->size(); ++i) a->grad[i] += out->grad[i];
    }, "reshape");
    return out;
}

TensorPtr add_bias(Tape* tape, const TensorPtr& a, const TensorPtr& bias) {
    const int n = a->shape.back();
    if (bias->size() != n)
        throw InvariantError("add_bias: bias " + bias->shape_str() + " vs last axis of " +
                             a->shape_str());
    auto out = fresh(a->shape, a->requires_grad || bias->requires_grad);
    const std::int64_t rows = a->size() / n;
    for (std::int64_t r = 0; r < rows; ++r)
        for (int j = 0; j < n; ++j) out->data[r * n + j] = a->data[r * n + j] + bias->data[j];
    finish(tape, out, [out, a, bias, rows, n] {
        if (a->requires_grad) {
            a->ensure_grad();
            for (std::int64_t i = 0; i < out->size(); ++i) a->grad[i] += out->grad[i];
        }
        if (bias->requires_grad) {
            bias->ensure_grad();
            for (std::int64_t r = 0; r < rows; ++r)
                for (int j = 0; j < n; ++j) bias->grad[j] += out->grad[r * n + j];
        }
    }, "add_bias");
    return out;
}

TensorPtr add_time_table(Tape* tape, const TensorPtr& a, const TensorPtr& table) {
    if (a->rank() != 3) throw InvariantError("add_time_table: expected rank-3 input");
    const int b = a->dim(0), t = a->dim(1), h = a->dim(2);
    if (table->rank() != 2 || table->dim(0) < t || table->dim(1) != h)
        throw InvariantError("add_time_table: table " + table->shape_str() + " vs " +
                             a->shape_str());
    auto out = fresh(a->shape, a->requires_grad || table->requires_grad);
    const int th = table->dim(1);
    for (int bi = 0; bi < b; ++bi)
        for (int ti = 0; ti < t; ++ti)
            for (int j = 0; j < h; ++j)
                out->data[(static_cast<std::int64_t>(bi) * t + ti) * h + j] =
                    a->data[(static_cast<std::int64_t>(bi) * t + ti) * h + j] +
                    table->data[static_cast<std::int64_t>(ti) * th + j];
    finish(tape, out, [out, a, table, b, t, h, th] {
        if (a->requires_grad) {
            a->ensure_grad();
            for (std::int64_t i = 0; i < out->size(); ++i) a->grad[i] += out->grad[i];
        }
        if (table->requires_grad) {
            table->ensure_grad();
            for (int bi = 0; bi < b; ++bi)
                for (int ti = 0; ti < t; ++ti)
                    for (int j = 0; j < h; ++j)
                        table->grad[static_cast<std::int64_t>(ti) * th + j] +=
                            out->grad[(static_cast<std::int64_t>(bi) * t + ti) * h + j];
        }
    }, "add_time_table");
    return out;
}

TensorPtr add_row(Tape* tape, const TensorPtr& a, const TensorPtr& row) {
    const int h = a->shape.back();
    if (row->size() != h)
        throw InvariantError("add_row: row " + row->shape_str() + " vs last axis of " +
                             a->shape_str());
    auto out = fresh(a->shape, a->requires_grad || row->requires_grad);
    const std::int64_t rows = a->size() / h;
    for (std::int64_t r = 0; r < rows; ++r)
        for (int j = 0; j < h; ++j) out->data[r * h + j] = a->data[r * h + j] + row->data[j];
    finish(tape, out, [out, a, row, rows, h] {
        if (a->requires_grad) {
            a->ensure_grad();
            for (std::int64_t i = 0; i < out->size(); ++i) a->grad[i] += out->grad[i];
        }
        if (row->requires_grad) {
            row->ensure_grad();
            for (std::int64_t r = 0; r < rows; ++r)
                for (int j = 0; j < h; ++j) row->grad[j] += out->grad[r * h + j];
        }
    }, "add_row");
    return out;
}

// ------------------------------------------------------------- linear algebra

TensorPtr matmul(Tape* tape, const TensorPtr& a, const TensorPtr& w) {
    if (a->rank() < 2 || w->rank() != 2)
        throw InvariantError("matmul: need [..., m, k] x [k, n], got " + a->shape_str() + " x " +
                             w->shape_str());
    const int k = a->shape.back();
    if (k != w->dim(0))
        throw InvariantError("matmul: inner dims differ, " + a->shape_str() + " x " +
                             w->shape_str());
    const int n = w->dim(1);
    const std::int64_t m = a->size() / k;
    std::vector<int> out_shape(a->shape.begin(), a->shape.end() - 1);
    out_shape.push_back(n);
    auto out = fresh(std::move(out_shape), a->requires_grad || w->requires_grad);
    MapC A(a->data.data(), m, k), W(w->data.data(), k, n);
    MapM O(out->data.data(), m, n);
    O.noalias() = A * W;
    finish(tape, out, [out, a, w, m, k, n] {
        MapC G(out->grad.data(), m, n);
        if (a->requires_grad) {
            a->ensure_grad();
            MapC W(w->data.data(), k, n);
            MapM GA(a->grad.data(), m, k);
            GA.noalias() += G * W.transpose();
        }
        if (w->requires_grad) {
            w->ensure_grad();
            MapC A(a->data.data(), m, k);
            MapM GW(w->grad.data(), k, n);
            GW.noalias() += A.transpose() * G;
        }
    }, "matmul");
    return out;
}

TensorPtr bmm(Tape* tape, const TensorPtr& a, const TensorPtr& w) {
    if (a->rank() != 3 || w->rank() != 3 || a->dim(0) != w->dim(0) || a->dim(2) != w->dim(1))
        throw InvariantError("bmm: incompatible " + a->shape_str() + " x " + w->shape_str());
    const int b = a->dim(0), m = a->dim(1), k = a->dim(2), n = w->dim(2);
    auto out = fresh({b, m, n}, a->requires_grad || w->requires_grad);
    for (int bi = 0; bi < b; ++bi) {
        MapC A(a->data.data() + static_cast<std::int64_t>(bi) * m * k, m, k);
        MapC W(w->data.data() + static_cast<std::int64_t>(bi) * k * n, k, n);
        MapM O(out->data.data() + static_cast<std::int64_t>(bi) * m * n, m, n);
        O.noalias() = A * W;
    }
    finish(tape, out, [out, a, w, b, m, k, n] {
        for (int bi = 0; bi < b; ++bi) {
            MapC G(out->grad.data() + static_cast<std::int64_t>(bi) * m * n, m, n);
            if (a->requires_grad) {
                a->ensure_grad();
                MapC W(w->data.data() + static_cast<std::int64_t>(bi) * k * n, k, n);
                MapM GA(a->grad.data() + static_cast<std::int64_t>(bi) * m * k, m, k);
                GA.noalias() += G * W.transpose();
            }
            if (w->requires_grad) {
                w->ensure_grad();
                MapC A(a->data.data() + static_cast<std::int64_t>(bi) * m * k, m, k);
                MapM GW(w->grad.data() + static_cast<std::int64_t>(bi) * k * n, k, n);
                GW.noalias() += A.transpose() * G;
            }
        }
    }, "bmm");
    return out;
}

TensorPtr transpose_last2(Tape* tape, const TensorPtr& a) {
    if (a->rank() != 3) throw InvariantError("transpose_last2: expected rank-3 input");
    const int b = a->dim(0), m = a->dim(1), n = a->dim(2);
    auto out = fresh({b, n, m}, a->requires_grad);
    for (int bi = 0; bi < b; ++bi)
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j)
                out->data[(static_cast<std::int64_t>(bi) * n + j) * m + i] =
                    a->data[(static_cast<std::int64_t>(bi) * m + i) * n + j];
    finish(tape, out, [out, a, b, m, n] {
        if (!a->requires_grad) return;
        a->ensure_grad();
        for (int bi = 0; bi < b; ++bi)
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j)
                    a->grad[(static_cast<std::int64_t>(bi) * m + i) * n + j] +=
                        out->grad[(static_cast<std::int64_t>(bi) * n + j) * m + i];
    }, "transpose_last2");
    return out;
}

// --------------------------------------------------------------- activations

TensorPtr layer_norm(Tape* tape, const TensorPtr& a, const TensorPtr& gain,
                     const TensorPtr& bias, double eps) {
    const int n = a->shape.back();
    if (gain->size() != n || bias->size() != n)
        throw InvariantError("layer_norm: gain/bias must match last axis of " + a->shape_str());
    const std::int64_t rows = a->size() / n;
    auto out = fresh(a->shape, a->requires_grad || gain->requires_grad || bias->requires_grad);
    // keep per-row inv-sigma and normalized values for the backward pass
    auto xhat = std::make_shared<std::vector<double>>(a->data.size());
    auto inv_sigma = std::make_shared<std::vector<double>>(rows);
    for (std::int64_t r = 0; r < rows; ++r) {
        const double* x = a->data.data() + r * n;
        double mean = 0.0;
        for (int j = 0; j < n; ++j) mean += x[j];
        mean /= n;
        double var = 0.0;
        for (int j = 0; j < n; ++j) var += (x[j] - mean) * (x[j] - mean);
        var /= n;
        const double is = 1.0 / std::sqrt(var + eps);
        (*inv_sigma)[r] = is;
        for (int j = 0; j < n; ++j) {
            const double xh = (x[j] - mean) * is;
            (*xhat)[r * n + j] = xh;
            out->data[r * n + j] = gain->data[j] * xh + bias->data[j];
        }
    }
    finish(tape, out, [out, a, gain, bias, xhat, inv_sigma, rows, n] {
        for (std::int64_t r = 0; r < rows; ++r) {
            const double* g = out->grad.data() + r * n;
            const double* xh = xhat->data() + r * n;
            if (gain->requires_grad) {
                gain->ensure_grad();
                for (int j = 0; j < n; ++j) gain->grad[j] += g[j] * xh[j];
            }
            if (bias->requires_grad) {
                bias->ensure_grad();
                for (int j = 0; j < n; ++j) bias->grad[j] += g[j];
            }
            if (a->requires_grad) {
                a->ensure_grad();
                double mean_dxh = 0.0, mean_dxh_xh = 0.0;
                for (int j = 0; j < n; ++j) {
                    const double dxh = g[j] * gain->data[j];
                    mean_dxh += dxh;
                    mean_dxh_xh += dxh * xh[j];
                }
                mean_dxh /= n;
                mean_dxh_xh /= n;
                const double is = (*inv_sigma)[r];
                for (int j = 0; j < n; ++j) {
                    const double dxh = g[j] * gain->data[j];
                    a->grad[r * n + j] += is * (dxh - mean_dxh - xh[j] * mean_dxh_xh);
                }
            }
        }
    }, "layer_norm");
    return out;
}

TensorPtr softmax(Tape* tape, const TensorPtr& a, double temperature) {
    if (temperature <= 0.0) throw InvariantError("softmax: temperature must be > 0");
    const int n = a->shape.back();
    const std::int64_t rows = a->size() / n;
    auto out = fresh(a->shape, a->requires_grad);
    for (std::int64_t r = 0; r < rows; ++r) {
        const double* x = a->data.data() + r * n;
        double* y = out->data.data() + r * n;
        double mx = x[0];
        for (int j = 1; j < n; ++j) mx = std::max(mx, x[j]);
        double z = 0.0;
        for (int j = 0; j < n; ++j) {
            y[j] = std::exp((x[j] - mx) / temperature);
            z += y[j];
        }
        for (int j = 0; j < n; ++j) y[j] /= z;
    }
    finish(tape, out, [out, a, rows, n, temperature] {
        if (!a->requires_grad) return;
        a->ensure_grad();
        for (std::int64_t r = 0; r < rows; ++r) {
            const double* y = out->data.data() + r * n;
            const double* g = out->grad.data() + r * n;
            double dot = 0.0;
            for (int j = 0; j < n; ++j) dot += g[j] * y[j];
            for (int j = 0; j < n; ++j)
                a->grad[r * n + j] += y[j] * (g[j] - dot) / temperature;
        }
    }, "softmax");
    return out;
}

// -------------------------------------------------------- lookup / pool / loss

TensorPtr embedding_lookup(Tape* tape, const std::vector<int>& ids, std::vector<int> id_shape,
                           const TensorPtr& table) {
    if (table->rank() != 2) throw InvariantError("embedding_lookup: table must be [V, H]");
    const int v = table->dim(0), h = table->dim(1);
    if (Tensor::numel(id_shape) != static_cast<std::int64_t>(ids.size()))
        throw InvariantError("embedding_lookup: id count does not match id_shape");
    for (int id : ids)
        if (id < 0 || id >= v) throw InvariantError("embedding_lookup: id out of range");
    std::vector<int> out_shape = std::move(id_shape);
    out_shape.push_back(h);
    auto out = fresh(std::move(out_shape), table->requires_grad);
    for (std::size_t i = 0; i < ids.size(); ++i)
        std::memcpy(out->data.data() + i * h, table->data.data() + static_cast<std::int64_t>(ids[i]) * h,
                    sizeof(double) * h);
    auto ids_copy = std::make_shared<std::vector<int>>(ids);
    finish(tape, out, [out, table, ids_copy, h] {
        if (!table->requires_grad) return;
        table->ensure_grad();
        for (std::size_t i = 0; i < ids_copy->size(); ++i) {
            double* dst = table->grad.data() + static_cast<std::int64_t>((*ids_copy)[i]) * h;
            const double* src = out->grad.data() + i * h;
            for (int j = 0; j < h; ++j) dst[j] += src[j];
        }
    }, "embedding_lookup");
    return out;
}

TensorPtr mean_pool_masked(Tape* tape, const TensorPtr& x, const std::vector<double>& mask) {
    if (x->rank() != 3) throw InvariantError("mean_pool_masked: expected [b, t, h]");
    const int b = x->dim(0), t = x->dim(1), h = x->dim(2);
    if (static_cast<std::int64_t>(mask.size()) != static_cast<std::int64_t>(b) * t)
        throw InvariantError("mean_pool_masked: mask size mismatch");
    auto counts = std::make_shared<std::vector<double>>(b, 0.0);
    for (int bi = 0; bi < b; ++bi) {
        for (int ti = 0; ti < t; ++ti) (*counts)[bi] += mask[static_cast<std::size_t>(bi) * t + ti];
        if ((*counts)[bi] <= 0.0)
            throw InvariantError("mean_pool_masked: example with all positions masked");
    }
    auto out = fresh({b, h}, x->requires_grad);
    for (int bi = 0; bi < b; ++bi)
        for (int ti = 0; ti < t; ++ti) {
            const double w = mask[static_cast<std::size_t>(bi) * t + ti] / (*counts)[bi];
            if (w == 0.0) continue;
            const double* src = x->data.data() + (static_cast<std::int64_t>(bi) * t + ti) * h;
            double* dst = out->data.data() + static_cast<std::int64_t>(bi) * h;
            for (int j = 0; j < h; ++j) dst[j] += w * src[j];
        }
    auto mask_copy = std::make_shared<std::vector<double>>(mask);
    finish(tape, out, [out, x, mask_copy, counts, b, t, h] {
        if (!x->requires_grad) return;
        x->ensure_grad();
        for (int bi = 0; bi < b; ++bi)
            for (int ti = 0; ti < t; ++ti) {
                const double w = (*mask_copy)[static_cast<std::size_t>(bi) * t + ti] / (*counts)[bi];
                if (w == 0.0) continue;
                double* dst = x->grad.data() + (static_cast<std::int64_t>(bi) * t + ti) * h;
                const double* src = out->grad.data() + static_cast<std::int64_t>(bi) * h;
                for (int j = 0; j < h; ++j) dst[j] += w * src[j];
            }
    }, "mean_pool_masked");
    return out;
}

TensorPtr cross_entropy(Tape* tape, const TensorPtr& logits, const std::vector<int>& targets,
                        const std::vector<double>& weights) {
    if (logits->rank() != 2) throw InvariantError("cross_entropy: logits must be [n, v]");
    const int n = logits->dim(0), v = logits->dim(1);
    if (static_cast<int>(targets.size()) != n || static_cast<int>(weights.size()) != n)
        throw InvariantError("cross_entropy: targets/weights length mismatch");
    double wsum = 0.0;
    for (double w : weights) wsum += w;
    if (wsum <= 0.0) throw InvariantError("cross_entropy: no active positions");
    for (int i = 0; i < n; ++i)
        if (weights[i] > 0.0 && (targets[i] < 0 || targets[i] >= v))
            throw InvariantError("cross_entropy: target id out of range");
    auto out = fresh({1}, logits->requires_grad);
    auto probs = std::make_shared<std::vector<double>>(logits->data.size());
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const double* x = logits->data.data() + static_cast<std::int64_t>(i) * v;
        double* p = probs->data() + static_cast<std::int64_t>(i) * v;
        double mx = x[0];
        for (int j = 1; j < v; ++j) mx = std::max(mx, x[j]);
        double z = 0.0;
        for (int j = 0; j < v; ++j) {
            p[j] = std::exp(x[j] - mx);
            z += p[j];
        }
        for (int j = 0; j < v; ++j) p[j] /= z;
        if (weights[i] > 0.0) total += -weights[i] * (x[targets[i]] - mx - std::log(z));
    }
    out->data[0] = total / wsum;
    auto tgt = std::make_shared<std::vector<int>>(targets);
    auto wts = std::make_shared<std::vector<double>>(weights);
    finish(tape, out, [out, logits, probs, tgt, wts, n, v, wsum] {
        if (!logits->requires_grad) return;
        logits->ensure_grad();
        const double g = out->grad[0] / wsum;
        for (int i = 0; i < n; ++i) {
            if ((*wts)[i] <= 0.0) continue;
            const double* p = probs->data() + static_cast<std::int64_t>(i) * v;
            double* dx = logits->grad.data() + static_cast<std::int64_t>(i) * v;
            const double w = (*wts)[i] * g;
            for (int j = 0; j < v; ++j) dx[j] += w * p[j];
            dx[(*tgt)[i]] -= w;
        }
    }, "cross_entropy");
    return out;
}

// --------------------------------------------------------- sequence assembly

TensorPtr concat_time(Tape* tape, const std::vector<TensorPtr>& pieces) {
    if (pieces.empty()) throw InvariantError("concat_time: no pieces");
    const int b = pieces[0]->dim(0), h = pieces[0]->dim(2);
    int total_t = 0;
    bool rg = false;
    for (const auto& p : pieces) {
        if (p->rank() != 3 || p->dim(0) != b || p->dim(2) != h)
            throw InvariantError("concat_time: inconsistent piece " + p->shape_str());
        total_t += p->dim(1);
        rg = rg || p->requires_grad;
    }
    auto out = fresh({b, total_t, h}, rg);
    int off = 0;
    for (const auto& p : pieces) {
        const int pt = p->dim(1);
        for (int bi = 0; bi < b; ++bi)
            std::memcpy(out->data.data() + (static_cast<std::int64_t>(bi) * total_t + off) * h,
                        p->data.data() + static_cast<std::int64_t>(bi) * pt * h,
                        sizeof(double) * static_cast<std::size_t>(pt) * h);
        off += pt;
    }
    auto pieces_copy = std::make_shared<std::vector<TensorPtr>>(pieces);
    finish(tape, out, [out, pieces_copy, b, total_t, h] {
        int off = 0;
        for (const auto& p : *pieces_copy) {
            const int pt = p->dim(1);
            if (p->requires_grad) {
                p->ensure_grad();
                for (int bi = 0; bi < b; ++bi) {
                    const double* src =
                        out->grad.data() + (static_cast<std::int64_t>(bi) * total_t + off) * h;
                    double* dst = p->grad.data() + static_cast<std::int64_t>(bi) * pt * h;
                    for (std::int64_t i = 0; i < static_cast<std::int64_t>(pt) * h; ++i)
                        dst[i] += src[i];
                }
            }
            off += pt;
        }
    }, "concat_time");
    return out;
}

TensorPtr slice_time(Tape* tape, const TensorPtr& x, int t) {
    if (x->rank() != 3) throw InvariantError("slice_time: expected [b, T, h]");
    const int b = x->dim(0), T = x->dim(1), h = x->dim(2);
    if (t < 0 || t >= T) throw InvariantError("slice_time: index out of range");
    auto out = fresh({b, h}, x->requires_grad);
    for (int bi = 0; bi < b; ++bi)
        std::memcpy(out->data.data() + static_cast<std::int64_t>(bi) * h,
                    x->data.data() + (static_cast<std::int64_t>(bi) * T + t) * h,
                    sizeof(double) * h);
    finish(tape, out, [out, x, b, T, h, t] {
        if (!x->requires_grad) return;
        x->ensure_grad();
        for (int bi = 0; bi < b; ++bi) {
            const double* src = out->grad.data() + static_cast<std::int64_t>(bi) * h;
            double* dst = x->grad.data() + (static_cast<std::int64_t>(bi) * T + t) * h;
            for (int j = 0; j < h; ++j) dst[j] += src[j];
        }
    }, "slice_time");
    return out;
}

TensorPtr split_heads(Tape* tape, const TensorPtr& x, int heads) {
    if (x->rank() != 3) throw InvariantError("split_heads: expected [b, t, h]");
    const int b = x->dim(0), t = x->dim(1), h = x->dim(2);
    if (h % heads != 0) throw InvariantError("split_heads: hidden not divisible by heads");
    const int dh = h / heads;
    auto out = fresh({b * heads, t, dh}, x->requires_grad);
    for (int bi = 0; bi < b; ++bi)
        for (int hd = 0; hd < heads; ++hd)
            for (int ti = 0; ti < t; ++ti)
                std::memcpy(out->data.data() +
                                ((static_cast<std::int64_t>(bi) * heads + hd) * t + ti) * dh,
                            x->data.data() + (static_cast<std::int64_t>(bi) * t + ti) * h + hd * dh,
                            sizeof(double) * dh);
    finish(tape, out, [out, x, b, t, h, heads, dh] {
        if (!x->requires_grad) return;
        x->ensure_grad();
        for (int bi = 0; bi < b; ++bi)
            for (int hd = 0; hd < heads; ++hd)
                for (int ti = 0; ti < t; ++ti) {
                    const double* src =
                        out->grad.data() +
                        ((static_cast<std::int64_t>(bi) * heads + hd) * t + ti) * dh;
                    double* dst =
                        x->grad.data() + (static_cast<std::int64_t>(bi) * t + ti) * h + hd * dh;
                    for (int j = 0; j < dh; ++j) dst[j] += src[j];
                }
    }, "split_heads");
    return out;
}

TensorPtr merge_heads(Tape* tape, const TensorPtr& x, int heads) {
    if (x->rank() != 3) throw InvariantError("merge_heads: expected [b*heads, t, dh]");
    const int bh = x->dim(0), t = x->dim(1), dh = x->dim(2);
    if (bh % heads != 0) throw InvariantError("merge_heads: batch not divisible by heads");
    const int b = bh / heads, h = dh * heads;
    auto out = fresh({b, t, h}, x->requires_grad);
    for (int bi = 0; bi < b; ++bi)
        for (int hd = 0; hd < heads; ++hd)
            for (int ti = 0; ti < t; ++ti)
                std::memcpy(out->data.data() + (static_cast<std::int64_t>(bi) * t + ti) * h + hd * dh,
                            x->data.data() +
                                ((static_cast<std::int64_t>(bi) * heads + hd) * t + ti) * dh,
                            sizeof(double) * dh);
    finish(tape, out, [out, x, b, t, h, heads, dh] {
        if (!x->requires_grad) return;
        x->ensure_grad();
        for (int bi = 0; bi < b; ++bi)
            for (int hd = 0; hd < heads; ++hd)
                for (int ti = 0; ti < t; ++ti) {
                    const double* src =
                        out->grad.data() + (static_cast<std::int64_t>(bi) * t + ti) * h + hd * dh;
                    double* dst =
                        x->grad.data() +
                        ((static_cast<std::int64_t>(bi) * heads + hd) * t + ti) * dh;
                    for (int j = 0; j < dh; ++j) dst[j] += src[j];
                }
    }, "merge_heads");
    return out;
}

}  // namespace csgan
