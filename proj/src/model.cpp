#include "csgan/model.hpp"

#include <cmath>
#include <random>

#include <json.hpp>

namespace csgan {

void TransformerConfig::validate() const {
    if (n_layers < 1) throw ConfigError("n_layers must be >= 1");
    if (hidden < 1 || hidden % n_heads != 0)
        throw ConfigError("hidden must be positive and divisible by n_heads");
    if (max_len < 2) throw ConfigError("max_len must be >= 2");
    if (vocab_size < 5) throw ConfigError("vocab_size must cover the specials");
    if (n_styles < 2) throw ConfigError("n_styles must be >= 2");
    if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must be in [0, 1)");
}

std::string TransformerConfig::to_json_text() const {
    nlohmann::json j;
    j["n_layers"] = n_layers;
    j["hidden"] = hidden;
    j["n_heads"] = n_heads;
    j["ff_dim"] = ff_dim;
    j["max_len"] = max_len;
    j["n_styles"] = n_styles;
    j["vocab_size"] = vocab_size;
    j["dropout"] = dropout;
    return j.dump(2);
}

TransformerConfig TransformerConfig::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("bad model config JSON: ") + e.what());
    }
    TransformerConfig cfg;
    cfg.n_layers = j.value("n_layers", cfg.n_layers);
    cfg.hidden = j.value("hidden", cfg.hidden);
    cfg.n_heads = j.value("n_heads", cfg.n_heads);
    cfg.ff_dim = j.value("ff_dim", cfg.ff_dim);
    cfg.max_len = j.value("max_len", cfg.max_len);
    cfg.n_styles = j.value("n_styles", cfg.n_styles);
    cfg.vocab_size = j.value("vocab_size", cfg.vocab_size);
    cfg.dropout = j.value("dropout", cfg.dropout);
    cfg.validate();
    return cfg;
}

const char* style_name(StyleId s) {
    switch (s) {
        case StyleId::MATRIX: return "l_m";
        case StyleId::EMBEDDED: return "l_e";
        case StyleId::ARTIFICIAL_CS: return "l_a";
        case StyleId::NATURAL_CS: return "l_n";
    }
    return "?";
}

StyleId style_from_name(const std::string& s) {
    if (s == "l_m" || s == "matrix") return StyleId::MATRIX;
    if (s == "l_e" || s == "embedded") return StyleId::EMBEDDED;
    if (s == "l_a" || s == "artificial") return StyleId::ARTIFICIAL_CS;
    if (s == "l_n" || s == "natural") return StyleId::NATURAL_CS;
    throw ConfigError("unknown style: " + s);
}

namespace {

TensorPtr sinusoidal_table(int rows, int hidden) {
    auto t = make_tensor({rows, hidden});
    for (int p = 0; p < rows; ++p)
        for (int j = 0; j < hidden; ++j) {
            const double angle =
                p / std::pow(10000.0, 2.0 * (j / 2) / static_cast<double>(hidden));
            t->data[static_cast<std::size_t>(p) * hidden + j] =
                (j % 2 == 0) ? std::sin(angle) : std::cos(angle);
        }
    return t;
}

// Additive attention mask expanded over heads: 0 where attending is
// allowed, -1e9 where blocked.
TensorPtr make_attn_mask(int b, int heads, int tq, int tk, const std::vector<double>* key_mask,
                         bool causal) {
    auto m = make_tensor({b * heads, tq, tk});
    for (int bi = 0; bi < b; ++bi)
        for (int hd = 0; hd < heads; ++hd)
            for (int i = 0; i < tq; ++i)
                for (int j = 0; j < tk; ++j) {
                    bool blocked = false;
                    if (causal && j > i) blocked = true;
                    if (key_mask && (*key_mask)[static_cast<std::size_t>(bi) * tk + j] == 0.0)
                        blocked = true;
                    m->data[((static_cast<std::int64_t>(bi) * heads + hd) * tq + i) * tk + j] =
                        blocked ? -1e9 : 0.0;
                }
    return m;
}

void init_normal(Tensor& t, std::mt19937_64& rng, double stddev) {
    std::normal_distribution<double> dist(0.0, stddev);
    for (double& v : t.data) v = dist(rng);
}

}  // namespace

Generator::Generator(TransformerConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
    cfg_.validate();
    std::mt19937_64 rng(seed);
    const int h = cfg_.hidden, v = cfg_.vocab_size, f = cfg_.ff_dim;
    auto weight = [&](const std::string& name, int rows, int cols) {
        auto t = make_tensor({rows, cols});
        init_normal(*t, rng, 0.02);
        params_.add(name, t);
    };
    auto bias = [&](const std::string& name, int n) { params_.add(name, make_tensor({n})); };
    auto norm = [&](const std::string& prefix, int n) {
        params_.add(prefix + ".g", make_tensor({n}, 1.0));
        params_.add(prefix + ".b", make_tensor({n}));
    };
    weight("embedding", v, h);
    weight("style_table", cfg_.n_styles, h);
    auto attn_block = [&](const std::string& p) {
        weight(p + ".wq", h, h);
        bias(p + ".bq", h);
        weight(p + ".wk", h, h);
        bias(p + ".bk", h);
        weight(p + ".wv", h, h);
        bias(p + ".bv", h);
        weight(p + ".wo", h, h);
        bias(p + ".bo", h);
    };
    auto ff_block = [&](const std::string& p) {
        weight(p + ".w1", h, f);
        bias(p + ".b1", f);
        weight(p + ".w2", f, h);
        bias(p + ".b2", h);
    };
    for (int l = 0; l < cfg_.n_layers; ++l) {
        const std::string p = "enc." + std::to_string(l);
        attn_block(p + ".self");
        norm(p + ".ln1", h);
        ff_block(p + ".ff");
        norm(p + ".ln2", h);
    }
    for (int l = 0; l < cfg_.n_layers; ++l) {
        const std::string p = "dec." + std::to_string(l);
        attn_block(p + ".self");
        norm(p + ".ln1", h);
        attn_block(p + ".cross");
        norm(p + ".ln2", h);
        ff_block(p + ".ff");
        norm(p + ".ln3", h);
    }
    weight("out.w", h, v);
    bias("out.b", v);
    positional_ = sinusoidal_table(cfg_.max_len + 1, h);
}

Generator::Padded Generator::pad_batch(const std::vector<SentenceRecord>& batch) const {
    if (batch.empty()) throw InvariantError("empty batch");
    Padded p;
    p.batch = static_cast<int>(batch.size());
    for (const auto& rec : batch) {
        if (rec.ids.empty()) throw InvariantError("empty sentence record in batch");
        if (static_cast<int>(rec.ids.size()) > cfg_.max_len)
            throw InvariantError("record exceeds max_len");
        p.time = std::max(p.time, static_cast<int>(rec.ids.size()));
    }
    p.ids.assign(static_cast<std::size_t>(p.batch) * p.time, Vocabulary::kPad);
    p.mask.assign(static_cast<std::size_t>(p.batch) * p.time, 0.0);
    for (int bi = 0; bi < p.batch; ++bi)
        for (std::size_t k = 0; k < batch[static_cast<std::size_t>(bi)].ids.size(); ++k) {
            const int id = batch[static_cast<std::size_t>(bi)].ids[k];
            if (id < 0 || id >= cfg_.vocab_size)
                throw InvariantError("token id outside vocabulary");
            p.ids[static_cast<std::size_t>(bi) * p.time + k] = id;
            p.mask[static_cast<std::size_t>(bi) * p.time + k] = 1.0;
        }
    return p;
}

TensorPtr Generator::embed_scaled(const std::vector<int>& ids, int b, int t, Tape* tape) const {
    auto x = embedding_lookup(tape, ids, {b, t}, params_.get("embedding"));
    return scale(tape, x, std::sqrt(static_cast<double>(cfg_.hidden)));
}

TensorPtr Generator::style_row(int style, Tape* tape) const {
    if (style < 0 || style >= cfg_.n_styles)
        throw InvariantError("style index not bound in this stage");
    return embedding_lookup(tape, {style}, {1}, params_.get("style_table"));
}

TensorPtr Generator::style_tile(int style, int b, Tape* tape) const {
    if (style < 0 || style >= cfg_.n_styles)
        throw InvariantError("style index not bound in this stage");
    std::vector<int> ids(static_cast<std::size_t>(b), style);
    return embedding_lookup(tape, ids, {b, 1}, params_.get("style_table"));
}

TensorPtr Generator::attention(const std::string& prefix, TensorPtr q_in, TensorPtr kv_in,
                               const TensorPtr& mask, Tape* tape) const {
    const int heads = cfg_.n_heads;
    const double scale_factor = 1.0 / std::sqrt(static_cast<double>(cfg_.hidden / heads));
    auto q = add_bias(tape, matmul(tape, q_in, params_.get(prefix + ".wq")),
                      params_.get(prefix + ".bq"));
    auto k = add_bias(tape, matmul(tape, kv_in, params_.get(prefix + ".wk")),
                      params_.get(prefix + ".bk"));
    auto v = add_bias(tape, matmul(tape, kv_in, params_.get(prefix + ".wv")),
                      params_.get(prefix + ".bv"));
    q = split_heads(tape, q, heads);
    k = split_heads(tape, k, heads);
    v = split_heads(tape, v, heads);
    auto scores = scale(tape, bmm(tape, q, transpose_last2(tape, k)), scale_factor);
    scores = add(tape, scores, mask);
    auto probs = softmax(tape, scores);
    auto ctx = merge_heads(tape, bmm(tape, probs, v), heads);
    return add_bias(tape, matmul(tape, ctx, params_.get(prefix + ".wo")),
                    params_.get(prefix + ".bo"));
}

TensorPtr Generator::feed_forward(const std::string& prefix, TensorPtr x, Tape* tape) const {
    auto h = relu(tape, add_bias(tape, matmul(tape, x, params_.get(prefix + ".w1")),
                                 params_.get(prefix + ".b1")));
    return add_bias(tape, matmul(tape, h, params_.get(prefix + ".w2")),
                    params_.get(prefix + ".b2"));
}

TensorPtr Generator::run_encoder(TensorPtr x, const std::vector<double>& key_mask, int b, int t,
                                 Tape* tape) const {
    const auto mask = make_attn_mask(b, cfg_.n_heads, t, t, &key_mask, false);
    for (int l = 0; l < cfg_.n_layers; ++l) {
        const std::string p = "enc." + std::to_string(l);
        auto a = attention(p + ".self", x, x, mask, tape);
        x = layer_norm(tape, add(tape, x, a), params_.get(p + ".ln1.g"),
                       params_.get(p + ".ln1.b"));
        auto f = feed_forward(p + ".ff", x, tape);
        x = layer_norm(tape, add(tape, x, f), params_.get(p + ".ln2.g"),
                       params_.get(p + ".ln2.b"));
    }
    return x;
}

TensorPtr Generator::run_decoder(TensorPtr x, const LatentBatch& z, int b, int t,
                                 Tape* tape) const {
    const auto self_mask = make_attn_mask(b, cfg_.n_heads, t, t, nullptr, true);
    const auto cross_mask = make_attn_mask(b, cfg_.n_heads, t, z.time, &z.mask, false);
    for (int l = 0; l < cfg_.n_layers; ++l) {
        const std::string p = "dec." + std::to_string(l);
        auto a = attention(p + ".self", x, x, self_mask, tape);
        x = layer_norm(tape, add(tape, x, a), params_.get(p + ".ln1.g"),
                       params_.get(p + ".ln1.b"));
        auto c = attention(p + ".cross", x, z.values, cross_mask, tape);
        x = layer_norm(tape, add(tape, x, c), params_.get(p + ".ln2.g"),
                       params_.get(p + ".ln2.b"));
        auto f = feed_forward(p + ".ff", x, tape);
        x = layer_norm(tape, add(tape, x, f), params_.get(p + ".ln3.g"),
                       params_.get(p + ".ln3.b"));
    }
    return x;
}

LatentBatch Generator::encode(const std::vector<SentenceRecord>& batch, int style,
                              Tape* tape) const {
    const Padded p = pad_batch(batch);
    auto x = embed_scaled(p.ids, p.batch, p.time, tape);
    x = add_time_table(tape, x, positional_);
    x = add_row(tape, x, style_row(style, tape));
    LatentBatch out;
    out.values = run_encoder(x, p.mask, p.batch, p.time, tape);
    out.mask = p.mask;
    out.batch = p.batch;
    out.time = p.time;
    return out;
}

TensorPtr Generator::reconstruction_loss(const std::vector<SentenceRecord>& batch, int style,
                                         Tape* tape) const {
    const LatentBatch z = encode(batch, style, tape);
    const int b = z.batch;
    // targets: ids[1..] (content + EOS); decoder inputs: style token then
    // the gold content tokens (teacher forcing)
    int td = 0;
    for (const auto& rec : batch) td = std::max(td, static_cast<int>(rec.ids.size()) - 1);
    if (td < 1) throw InvariantError("reconstruction_loss: no target tokens");
    std::vector<int> targets(static_cast<std::size_t>(b) * td, Vocabulary::kPad);
    std::vector<double> weights(static_cast<std::size_t>(b) * td, 0.0);
    std::vector<int> in_ids(static_cast<std::size_t>(b) * std::max(td - 1, 1), Vocabulary::kPad);
    for (int bi = 0; bi < b; ++bi) {
        const auto& ids = batch[static_cast<std::size_t>(bi)].ids;
        const int n = static_cast<int>(ids.size()) - 1;
        for (int k = 0; k < n; ++k) {
            targets[static_cast<std::size_t>(bi) * td + k] = ids[static_cast<std::size_t>(k) + 1];
            weights[static_cast<std::size_t>(bi) * td + k] = 1.0;
            if (k + 1 < n)
                in_ids[static_cast<std::size_t>(bi) * (td - 1) + k] =
                    ids[static_cast<std::size_t>(k) + 1];
        }
    }
    std::vector<TensorPtr> pieces{style_tile(style, b, tape)};
    if (td > 1) pieces.push_back(embed_scaled(in_ids, b, td - 1, tape));
    auto x = concat_time(tape, pieces);
    x = add_time_table(tape, x, positional_);
    auto h = run_decoder(x, z, b, td, tape);
    auto logits = add_bias(tape, matmul(tape, h, params_.get("out.w")), params_.get("out.b"));
    logits = reshape(tape, logits, {b * td, cfg_.vocab_size});
    return cross_entropy(tape, logits, targets, weights);
}

std::vector<std::vector<int>> Generator::decode_greedy(const LatentBatch& z, int style,
                                                       int max_steps) const {
    const int b = z.batch;
    const int max_content = std::min(max_steps, cfg_.max_len) - 2;
    std::vector<std::vector<int>> generated(static_cast<std::size_t>(b));
    std::vector<bool> finished(static_cast<std::size_t>(b), false);
    for (int step = 0; step <= max_content; ++step) {
        const int t = step + 1;  // style token plus generated prefix
        std::vector<TensorPtr> pieces{style_tile(style, b, nullptr)};
        if (step > 0) {
            std::vector<int> prefix(static_cast<std::size_t>(b) * step, Vocabulary::kPad);
            for (int bi = 0; bi < b; ++bi)
                for (int k = 0; k < static_cast<int>(generated[static_cast<std::size_t>(bi)].size());
                     ++k)
                    prefix[static_cast<std::size_t>(bi) * step + k] =
                        generated[static_cast<std::size_t>(bi)][static_cast<std::size_t>(k)];
            pieces.push_back(embed_scaled(prefix, b, step, nullptr));
        }
        auto x = add_time_table(nullptr, concat_time(nullptr, pieces), positional_);
        auto h = run_decoder(x, z, b, t, nullptr);
        auto last = slice_time(nullptr, h, t - 1);
        auto logits =
            add_bias(nullptr, matmul(nullptr, last, params_.get("out.w")), params_.get("out.b"));
        bool all_done = true;
        for (int bi = 0; bi < b; ++bi) {
            if (finished[static_cast<std::size_t>(bi)]) continue;
            const double* row = logits->data.data() +
                                static_cast<std::int64_t>(bi) * cfg_.vocab_size;
            int best = Vocabulary::kEos;
            double best_v = -1e300;
            for (int j = 0; j < cfg_.vocab_size; ++j) {
                if (j == Vocabulary::kPad || j == Vocabulary::kBos) continue;
                if (row[j] > best_v) {
                    best_v = row[j];
                    best = j;
                }
            }
            if (best == Vocabulary::kEos || step == max_content) {
                finished[static_cast<std::size_t>(bi)] = true;
            } else {
                generated[static_cast<std::size_t>(bi)].push_back(best);
                all_done = false;
            }
        }
        if (all_done) break;
    }
    std::vector<std::vector<int>> records(static_cast<std::size_t>(b));
    for (int bi = 0; bi < b; ++bi) {
        auto& out = records[static_cast<std::size_t>(bi)];
        out.push_back(Vocabulary::kBos);
        for (int id : generated[static_cast<std::size_t>(bi)]) out.push_back(id);
        out.push_back(Vocabulary::kEos);
    }
    return records;
}

std::vector<int> Generator::soft_steps_for(const std::vector<SentenceRecord>& batch, int max_len) {
    std::vector<int> steps;
    steps.reserve(batch.size());
    for (const auto& rec : batch)
        steps.push_back(std::min(rec.content_length() + 1, max_len - 1));
    return steps;
}

SoftSequence Generator::decode_soft(const LatentBatch& z, int style,
                                    const std::vector<int>& steps_per_example, double temperature,
                                    Tape* tape) const {
    if (temperature <= 0.0) throw InvariantError("decode_soft: temperature must be > 0");
    const int b = z.batch;
    if (static_cast<int>(steps_per_example.size()) != b)
        throw InvariantError("decode_soft: steps_per_example size mismatch");
    int steps = 0;
    for (int s : steps_per_example) {
        if (s < 1) throw InvariantError("decode_soft: each example needs >= 1 step");
        steps = std::max(steps, s);
    }
    if (steps > cfg_.max_len) throw InvariantError("decode_soft: steps exceed max_len");
    const double emb_scale = std::sqrt(static_cast<double>(cfg_.hidden));
    std::vector<TensorPtr> dist_rows, soft_rows, input_pieces;
    input_pieces.push_back(style_tile(style, b, tape));
    for (int step = 0; step < steps; ++step) {
        const int t = step + 1;
        auto x = add_time_table(tape, concat_time(tape, input_pieces), positional_);
        auto h = run_decoder(x, z, b, t, tape);
        auto last = slice_time(tape, h, t - 1);
        auto logits =
            add_bias(tape, matmul(tape, last, params_.get("out.w")), params_.get("out.b"));
        auto dist = softmax(tape, logits, temperature);
        auto soft = matmul(tape, dist, params_.get("embedding"));
        dist_rows.push_back(reshape(tape, dist, {b, 1, cfg_.vocab_size}));
        soft_rows.push_back(reshape(tape, soft, {b, 1, cfg_.hidden}));
        if (step + 1 < steps)
            input_pieces.push_back(
                reshape(tape, scale(tape, soft, emb_scale), {b, 1, cfg_.hidden}));
    }
    SoftSequence seq;
    seq.dists = concat_time(tape, dist_rows);
    seq.soft_embs = concat_time(tape, soft_rows);
    seq.batch = b;
    seq.steps = steps;
    seq.mask.assign(static_cast<std::size_t>(b) * steps, 0.0);
    for (int bi = 0; bi < b; ++bi)
        for (int k = 0; k < steps_per_example[static_cast<std::size_t>(bi)]; ++k)
            seq.mask[static_cast<std::size_t>(bi) * steps + k] = 1.0;
    return seq;
}

LatentBatch Generator::reencode_soft(const SoftSequence& seq, int style, Tape* tape) const {
    auto x = scale(tape, seq.soft_embs, std::sqrt(static_cast<double>(cfg_.hidden)));
    x = add_time_table(tape, x, positional_);
    x = add_row(tape, x, style_row(style, tape));
    LatentBatch out;
    out.values = run_encoder(x, seq.mask, seq.batch, seq.steps, tape);
    out.mask = seq.mask;
    out.batch = seq.batch;
    out.time = seq.steps;
    return out;
}

Discriminator::Discriminator(int hidden, int mid_dim, std::uint64_t seed) : hidden_(hidden) {
    std::mt19937_64 rng(seed);
    auto w1 = make_tensor({hidden, mid_dim});
    auto w2 = make_tensor({mid_dim, 2});
    init_normal(*w1, rng, 0.02);
    init_normal(*w2, rng, 0.02);
    params_.add("disc.w1", w1);
    params_.add("disc.b1", make_tensor({mid_dim}));
    params_.add("disc.w2", w2);
    params_.add("disc.b2", make_tensor({2}));
}

TensorPtr Discriminator::logits(const LatentBatch& z, Tape* tape) const {
    if (z.values->rank() != 3 || z.values->dim(2) != hidden_)
        throw InvariantError("discriminator: latent hidden size mismatch");
    auto pooled = mean_pool_masked(tape, z.values, z.mask);
    auto h = relu(tape, add_bias(tape, matmul(tape, pooled, params_.get("disc.w1")),
                                 params_.get("disc.b1")));
    return add_bias(tape, matmul(tape, h, params_.get("disc.w2")), params_.get("disc.b2"));
}

}  // namespace csgan
