#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "csgan/autodiff.hpp"
#include "csgan/corpus.hpp"
#include "csgan/optim.hpp"

namespace csgan {

struct TransformerConfig {
    int n_layers = 3;
    int hidden = 256;
    int n_heads = 4;
    int ff_dim = 512;
    int max_len = 45;
    int n_styles = 2;
    int vocab_size = 0;
    double dropout = 0.0;  // 0 keeps runs deterministic

    void validate() const;
    std::string to_json_text() const;
    static TransformerConfig from_json_text(const std::string& text);
};

// The four style labels. Each training stage binds two of them to
// discriminator labels 0/1 (stage 1: MATRIX/EMBEDDED, stage 2:
// ARTIFICIAL_CS/NATURAL_CS).
enum class StyleId { MATRIX, EMBEDDED, ARTIFICIAL_CS, NATURAL_CS };

const char* style_name(StyleId s);
StyleId style_from_name(const std::string& s);

struct StyleBinding {
    StyleId style0 = StyleId::MATRIX;   // discriminator label 0
    StyleId style1 = StyleId::EMBEDDED; // discriminator label 1

    void validate() const {
        if (style0 == style1) throw ConfigError("stage must bind two distinct styles");
    }
};

// Batch of latents [b, t, hidden] with a 0/1 validity mask [b, t].
struct LatentBatch {
    TensorPtr values;
    std::vector<double> mask;
    int batch = 0;
    int time = 0;
};

// Continuous-softmax decoding output: probability rows and the matching
// soft embeddings (dists x embedding table, unscaled).
struct SoftSequence {
    TensorPtr dists;      // [b, steps, vocab]
    TensorPtr soft_embs;  // [b, steps, hidden]
    std::vector<double> mask;
    int batch = 0;
    int steps = 0;
};

// Transformer encoder-decoder with additive style conditioning. The style
// embedding is added to every encoder input position and serves as the
// decoder's start token. The encoder is shared between encode() and
// reencode_soft().
class Generator {
public:
    Generator(TransformerConfig cfg, std::uint64_t seed);

    const TransformerConfig& config() const { return cfg_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    LatentBatch encode(const std::vector<SentenceRecord>& batch, int style, Tape* tape) const;

    // Teacher-forced mean NLL per token of reconstructing `batch` under
    // one style (encoder and decoder both conditioned on it).
    TensorPtr reconstruction_loss(const std::vector<SentenceRecord>& batch, int style,
                                  Tape* tape) const;

    // Argmax decoding; stops per example at EOS or when the record would
    // exceed max_steps tokens including BOS/EOS.
    std::vector<std::vector<int>> decode_greedy(const LatentBatch& z, int style,
                                                int max_steps) const;

    // Free-running differentiable decoding; step t feeds the previous
    // step's soft embedding. steps_per_example caps each row's valid span.
    SoftSequence decode_soft(const LatentBatch& z, int style,
                             const std::vector<int>& steps_per_example, double temperature,
                             Tape* tape) const;

    LatentBatch reencode_soft(const SoftSequence& seq, int style, Tape* tape) const;

    // Valid decode_soft span for each record: content tokens plus EOS.
    static std::vector<int> soft_steps_for(const std::vector<SentenceRecord>& batch, int max_len);

private:
    struct Padded {
        std::vector<int> ids;      // [b * t], PAD-filled
        std::vector<double> mask;  // [b * t]
        int batch = 0, time = 0;
    };
    Padded pad_batch(const std::vector<SentenceRecord>& batch) const;

    TensorPtr embed_scaled(const std::vector<int>& ids, int b, int t, Tape* tape) const;
    TensorPtr style_row(int style, Tape* tape) const;
    TensorPtr style_tile(int style, int b, Tape* tape) const;
    TensorPtr run_encoder(TensorPtr x, const std::vector<double>& key_mask, int b, int t,
                          Tape* tape) const;
    TensorPtr run_decoder(TensorPtr x, const LatentBatch& z, int b, int t, Tape* tape) const;
    TensorPtr attention(const std::string& prefix, TensorPtr q_in, TensorPtr kv_in,
                        const TensorPtr& mask, Tape* tape) const;
    TensorPtr feed_forward(const std::string& prefix, TensorPtr x, Tape* tape) const;

    TransformerConfig cfg_;
    ParamStore params_;
    TensorPtr positional_;  // constant [max_len + 1, hidden]
};

// Latent-space style classifier: masked mean pool over time, then a
// two-layer feed-forward head to 2-class logits.
class Discriminator {
public:
    Discriminator(int hidden, int mid_dim, std::uint64_t seed);

    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    int hidden() const { return hidden_; }

    TensorPtr logits(const LatentBatch& z, Tape* tape) const;

private:
    int hidden_;
    ParamStore params_;
};

}  // namespace csgan
