#pragma once

#include <functional>
#include <vector>

#include "csgan/tensor.hpp"

namespace csgan {

// Reverse-mode tape. Ops append nodes in forward (topological) order;
// backward() walks them in reverse, accumulating into Tensor::grad.
// A tape is confined to a single thread. Passing tape == nullptr to any
// op runs forward-only (inference).
class Tape {
public:
    struct Node {
        TensorPtr out;
        std::function<void()> backward;
    };

    void record(TensorPtr out, std::function<void()> fn) {
        nodes_.push_back({std::move(out), std::move(fn)});
    }

    // loss must be a scalar (numel == 1).
    void backward(const TensorPtr& loss);

    std::size_t size() const { return nodes_.size(); }
    void clear() { nodes_.clear(); }

private:
    std::vector<Node> nodes_;
};

// Toggle for the NaN/Inf guard run after every op. On by default.
void set_finite_checks(bool enabled);
bool finite_checks_enabled();
void check_finite(const Tensor& t, const char* where);

// ---- elementwise / shape ----
TensorPtr add(Tape* tape, const TensorPtr& a, const TensorPtr& b);
TensorPtr sub(Tape* tape, const TensorPtr& a, const TensorPtr& b);
TensorPtr mul(Tape* tape, const TensorPtr& a, const TensorPtr& b);
TensorPtr scale(Tape* tape, const TensorPtr& a, double c);
TensorPtr relu(Tape* tape, const TensorPtr& a);
TensorPtr reshape(Tape* tape, const TensorPtr& a, std::vector<int> new_shape);

// Adds a bias vector (length n) across the last axis of a [..., n].
TensorPtr add_bias(Tape* tape, const TensorPtr& a, const TensorPtr& bias);
// Adds a [t, h] table to every batch of a [b, t, h] (positional encodings).
TensorPtr add_time_table(Tape* tape, const TensorPtr& a, const TensorPtr& table);
// Adds a single row (length h) to every position of a [..., h] (style embedding).
TensorPtr add_row(Tape* tape, const TensorPtr& a, const TensorPtr& row);

// ---- linear algebra ----
// a [..., m, k] times w [k, n]; leading axes of a are flattened.
TensorPtr matmul(Tape* tape, const TensorPtr& a, const TensorPtr& w);
// Batched: a [b, m, k] times w [b, k, n].
TensorPtr bmm(Tape* tape, const TensorPtr& a, const TensorPtr& w);
TensorPtr transpose_last2(Tape* tape, const TensorPtr& a);

// ---- normalization / activation ----
TensorPtr layer_norm(Tape* tape, const TensorPtr& a, const TensorPtr& gain,
                     const TensorPtr& bias, double eps = 1e-5);
// Softmax over the last axis at the given temperature (> 0).
TensorPtr softmax(Tape* tape, const TensorPtr& a, double temperature = 1.0);

// ---- embedding / pooling / loss ----
// ids flat list with logical shape `id_shape`; table [V, H].
TensorPtr embedding_lookup(Tape* tape, const std::vector<int>& ids,
                           std::vector<int> id_shape, const TensorPtr& table);
// x [b, t, h] with 0/1 mask [b, t]; masked positions contribute nothing.
TensorPtr mean_pool_masked(Tape* tape, const TensorPtr& x, const std::vector<double>& mask);
// Mean negative log-likelihood over positions with weight > 0.
// logits [n, v], targets length n, weights length n (0 or 1).
TensorPtr cross_entropy(Tape* tape, const TensorPtr& logits, const std::vector<int>& targets,
                        const std::vector<double>& weights);

// ---- sequence assembly ----
// Concatenates pieces [b, t_i, h] along the time axis.
TensorPtr concat_time(Tape* tape, const std::vector<TensorPtr>& pieces);
// Extracts position t: x [b, T, h] -> [b, h].
TensorPtr slice_time(Tape* tape, const TensorPtr& x, int t);

// Multi-head splitting: [b, t, h] -> [b*heads, t, h/heads] and back.
TensorPtr split_heads(Tape* tape, const TensorPtr& x, int heads);
TensorPtr merge_heads(Tape* tape, const TensorPtr& x, int heads);

}  // namespace csgan
