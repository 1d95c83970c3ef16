// Acceptance suite: one criterion per numeric argument (1..10), or all
// when run without arguments. Prints exactly one [PASS]/[FAIL] line per
// criterion and exits nonzero if any selected criterion fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "csgan/checkpoint.hpp"
#include "csgan/metrics.hpp"
#include "csgan/training.hpp"
#include "oracles.hpp"

using namespace csgan;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

TensorPtr randn(std::vector<int> shape, std::mt19937_64& rng, double sd = 1.0) {
    auto t = make_tensor(std::move(shape));
    std::normal_distribution<double> d(0.0, sd);
    for (auto& v : t->data) v = d(rng);
    return t;
}

// ---------------------------------------------------------------- 1 ----
bool crit1_metric_oracles(std::string& detail) {
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (int n = 1; n <= 8; ++n)
        for (int bits = 0; bits < (1 << n); ++bits) {
            std::vector<int> tags(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) tags[static_cast<std::size_t>(i)] = (bits >> i) & 1;
            const oracle::Utts utts{tags};
            const auto s = oracle::stream_of(utts);
            worst = std::max(worst, std::abs(m_index(s) - oracle::m_index_oracle(utts)));
            worst = std::max(worst,
                             std::abs(language_entropy(s) - oracle::entropy_oracle(utts)));
            if (n >= 2)
                worst = std::max(worst, std::abs(i_index(s) - oracle::i_index_oracle(utts)));
            const auto got = burstiness(s);
            const auto want = oracle::burstiness_oracle(utts);
            if (got.has_value() != want.has_value()) {
                detail = "burstiness definedness mismatch";
                return false;
            }
            if (got) worst = std::max(worst, std::abs(*got - *want));
        }
    const double dt = seconds_since(t0);
    std::ostringstream os;
    os << "max |err| " << worst << ", " << dt << " s";
    detail = os.str();
    return worst < 1e-9 && dt < 5.0;
}

// ---------------------------------------------------------------- 2 ----
bool crit2_spot_values(std::string& detail) {
    const auto s = oracle::stream_of({{0, 0, 1, 0, 1}});
    bool ok = true;
    ok = ok && std::abs(m_index(s) - 0.9231) < 1e-4;
    ok = ok && std::abs(language_entropy(s) - 0.9710) < 1e-4;
    ok = ok && i_index(s) == 0.75;
    ok = ok && std::abs(*burstiness(s) - (-0.4854)) < 1e-4;
    const auto alt = oracle::stream_of({{0, 1, 0, 1}});
    ok = ok && m_index(alt) == 1.0 && language_entropy(alt) == 1.0 && i_index(alt) == 1.0 &&
         *burstiness(alt) == -1.0;
    detail = "[m,m,e,m,e] and alternating stream";
    return ok;
}

// ---------------------------------------------------------------- 3 ----
// Every tensor op against central finite differences, then the full
// encode -> decode_soft -> reencode_soft -> discriminate chain.
bool fd_all_entries(const std::vector<TensorPtr>& inputs,
                    const std::function<TensorPtr(Tape*)>& loss_fn, double& worst) {
    for (auto& in : inputs) in->requires_grad = true;
    Tape tape;
    auto loss = loss_fn(&tape);
    for (auto& in : inputs) {
        in->ensure_grad();
        in->zero_grad();
    }
    tape.backward(loss);
    auto eval = [&loss_fn] {
        Tape t;
        return loss_fn(&t)->data[0];
    };
    for (auto& in : inputs)
        for (std::size_t i = 0; i < in->data.size(); ++i) {
            const double fd = oracle::central_diff(*in, i, eval);
            worst = std::max(worst, oracle::rel_err(in->grad[i], fd));
        }
    return worst < 1e-4;
}

bool crit3_gradients(std::string& detail) {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(303);
    double worst = 0.0;
    auto head = [](Tape* t, TensorPtr x) {
        const int cols = x->shape.back();
        auto flat = reshape(t, x, {static_cast<int>(x->size() / cols), cols});
        std::vector<int> targets(static_cast<std::size_t>(flat->dim(0)), 0);
        std::vector<double> w(targets.size(), 1.0);
        return cross_entropy(t, flat, targets, w);
    };
    bool ok = true;
    {
        auto a = randn({3, 4}, rng), b = randn({3, 4}, rng);
        ok &= fd_all_entries({a, b}, [&](Tape* t) { return head(t, add(t, a, b)); }, worst);
        ok &= fd_all_entries({a, b}, [&](Tape* t) { return head(t, sub(t, a, b)); }, worst);
        ok &= fd_all_entries({a, b}, [&](Tape* t) { return head(t, mul(t, a, b)); }, worst);
        ok &= fd_all_entries({a}, [&](Tape* t) { return head(t, scale(t, a, 1.3)); }, worst);
        ok &= fd_all_entries({a}, [&](Tape* t) { return head(t, relu(t, a)); }, worst);
    }
    {
        auto a = randn({2, 3, 4}, rng), w = randn({4, 5}, rng);
        ok &= fd_all_entries({a, w}, [&](Tape* t) { return head(t, matmul(t, a, w)); }, worst);
        auto p = randn({2, 3, 4}, rng), q = randn({2, 4, 5}, rng);
        ok &= fd_all_entries({p, q}, [&](Tape* t) { return head(t, bmm(t, p, q)); }, worst);
        ok &= fd_all_entries({p}, [&](Tape* t) { return head(t, transpose_last2(t, p)); }, worst);
        auto b5 = randn({4}, rng);
        ok &= fd_all_entries({a, b5}, [&](Tape* t) { return head(t, add_bias(t, a, b5)); },
                             worst);
        auto table = randn({3, 4}, rng);
        ok &= fd_all_entries({a, table},
                             [&](Tape* t) { return head(t, add_time_table(t, a, table)); },
                             worst);
        ok &= fd_all_entries({a, b5}, [&](Tape* t) { return head(t, add_row(t, a, b5)); }, worst);
    }
    {
        auto a = randn({4, 6}, rng), g = randn({6}, rng, 0.3), b = randn({6}, rng, 0.3);
        for (auto& v : g->data) v += 1.0;
        ok &= fd_all_entries({a, g, b},
                             [&](Tape* t) { return head(t, layer_norm(t, a, g, b)); }, worst);
        ok &= fd_all_entries({a}, [&](Tape* t) { return head(t, softmax(t, a, 0.7)); }, worst);
        ok &= fd_all_entries({a}, [&](Tape* t) {
            return cross_entropy(t, a, {2, 0, 4, 1}, {1.0, 1.0, 0.0, 1.0});
        }, worst);
    }
    {
        auto table = randn({9, 5}, rng);
        const std::vector<int> ids{1, 4, 4, 8, 0, 2};
        ok &= fd_all_entries({table}, [&](Tape* t) {
            return head(t, embedding_lookup(t, ids, {2, 3}, table));
        }, worst);
        auto x = randn({2, 3, 5}, rng);
        const std::vector<double> mask{1, 1, 0, 1, 0, 0};
        ok &= fd_all_entries({x}, [&](Tape* t) {
            return head(t, mean_pool_masked(t, x, mask));
        }, worst);
        auto a = randn({2, 2, 6}, rng), b = randn({2, 3, 6}, rng);
        ok &= fd_all_entries({a, b},
                             [&](Tape* t) { return head(t, concat_time(t, {a, b})); }, worst);
        ok &= fd_all_entries({b}, [&](Tape* t) { return head(t, slice_time(t, b, 1)); }, worst);
        ok &= fd_all_entries({a}, [&](Tape* t) { return head(t, split_heads(t, a, 3)); }, worst);
        auto c = randn({6, 2, 2}, rng);
        ok &= fd_all_entries({c}, [&](Tape* t) { return head(t, merge_heads(t, c, 3)); }, worst);
    }

    // full model chain at the pinned toy configuration
    TransformerConfig cfg;
    cfg.n_layers = 2;
    cfg.hidden = 8;
    cfg.n_heads = 2;
    cfg.ff_dim = 16;
    cfg.max_len = 6;
    cfg.vocab_size = 20;
    Generator gen(cfg, 33);
    Discriminator disc(8, 16, 34);
    SentenceRecord rec;
    rec.ids = {Vocabulary::kBos, 5, 6, 7, Vocabulary::kEos};
    rec.tags.assign(5, Lang::MATRIX);
    const std::vector<SentenceRecord> batch{rec};
    auto chain = [&](Tape* t) {
        const auto z = gen.encode(batch, 0, t);
        const auto seq = gen.decode_soft(z, 1, {4}, 1.0, t);
        const auto zr = gen.reencode_soft(seq, 1, t);
        auto logits = disc.logits(zr, t);
        return cross_entropy(t, logits, {1}, {1.0});
    };
    Tape tape;
    auto loss = chain(&tape);
    gen.params().zero_grads();
    disc.params().zero_grads();
    for (auto& p : gen.params().tensors()) p->ensure_grad();
    for (auto& p : disc.params().tensors()) p->ensure_grad();
    tape.backward(loss);
    auto eval_chain = [&] {
        Tape t;
        return chain(&t)->data[0];
    };
    auto sweep = [&](ParamStore& store) {
        for (auto& p : store.tensors()) {
            // sample a deterministic spread of entries from large tensors;
            // the 1e-6 floor keeps sub-resolution gradients (attention
            // paths contribute entries down to 1e-12) from being compared
            // against pure finite-difference roundoff
            const std::size_t n = p->data.size();
            const std::size_t stride = std::max<std::size_t>(1, n / 6);
            for (std::size_t i = 0; i < n; i += stride) {
                const double fd = oracle::central_diff(*p, i, eval_chain);
                worst = std::max(worst, oracle::rel_err(p->grad[i], fd, 1e-6));
            }
        }
    };
    sweep(gen.params());
    sweep(disc.params());
    const double dt = seconds_since(t0);
    std::ostringstream os;
    os << "max rel err " << worst << ", " << dt << " s";
    detail = os.str();
    return ok && worst < 1e-4 && dt < 120.0;
}

// ---------------------------------------------------------------- 4 ----
bool crit4_soft_limit(std::string& detail) {
    std::mt19937_64 rng(404);
    double worst = 0.0;
    // direct construction: logit margin exactly 20 over random tables
    for (int trial = 0; trial < 50; ++trial) {
        const int V = 20, H = 8;
        auto table = randn({V, H}, rng);
        const int k = static_cast<int>(rng() % V);
        auto logits = make_tensor({1, V});
        logits->data[static_cast<std::size_t>(k)] = 20.0;
        auto dist = softmax(nullptr, logits);
        auto soft = matmul(nullptr, dist, table);
        for (int j = 0; j < H; ++j)
            worst = std::max(worst, std::abs(soft->data[j] - table->data[k * H + j]));
    }

    // model path: verify the realized margin, then compare embeddings
    TransformerConfig cfg;
    cfg.n_layers = 2;
    cfg.hidden = 8;
    cfg.n_heads = 2;
    cfg.ff_dim = 16;
    cfg.max_len = 8;
    cfg.vocab_size = 20;
    Generator gen(cfg, 44);
    SentenceRecord rec;
    rec.ids = {Vocabulary::kBos, 5, 6, 7, 8, Vocabulary::kEos};
    rec.tags.assign(6, Lang::MATRIX);
    const auto z = gen.encode({rec}, 0, nullptr);
    const auto seq = gen.decode_soft(z, 0, {4}, 1e-4, nullptr);
    const auto& emb = gen.params().get("embedding")->data;
    int checked = 0;
    for (int t = 0; t < 4; ++t) {
        int amax = 0;
        double p1 = 0.0, p2 = 0.0;
        for (int j = 0; j < 20; ++j) {
            const double p = seq.dists->data[t * 20 + j];
            if (p > p1) {
                p2 = p1;
                p1 = p;
                amax = j;
            } else if (p > p2) {
                p2 = p;
            }
        }
        if (std::log(p1) - std::log(std::max(p2, 1e-300)) < 20.0) continue;  // margin not met
        ++checked;
        for (int j = 0; j < 8; ++j)
            worst = std::max(worst,
                             std::abs(seq.soft_embs->data[t * 8 + j] - emb[amax * 8 + j]));
    }
    std::ostringstream os;
    os << "max inf-norm gap " << worst << ", " << checked << "/4 decode steps above margin";
    detail = os.str();
    return worst < 1e-3 && checked >= 1;
}

// ---------------------------------------------------------------- 5 ----
bool crit5_stlr(std::string& detail) {
    StlrSchedule s{1e-3, 1000, 0.1, 32.0};
    const bool ok = std::abs(s.lr(0) - 3.125e-5) < 1e-12 &&
                    std::abs(s.lr(100) - 1e-3) < 1e-12 &&
                    std::abs(s.lr(1000) - 3.125e-5) < 1e-12;
    bool peak = true;
    for (int t = 0; t <= 1000; ++t) peak = peak && s.lr(t) <= s.lr(100) + 1e-15;
    std::ostringstream os;
    os << "lr(0)=" << s.lr(0) << " lr(100)=" << s.lr(100) << " lr(1000)=" << s.lr(1000);
    detail = os.str();
    return ok && peak;
}

// ---------------------------------------------------------------- 6 ----
double greedy_token_accuracy(const Generator& gen, const std::vector<SentenceRecord>& batch,
                             int style) {
    const auto z = gen.encode(batch, style, nullptr);
    const auto out = gen.decode_greedy(z, style, gen.config().max_len);
    std::int64_t match = 0, total = 0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& ref = batch[i].ids;
        for (std::size_t j = 1; j < ref.size(); ++j) {
            ++total;
            if (j < out[i].size() && out[i][j] == ref[j]) ++match;
        }
    }
    return static_cast<double>(match) / static_cast<double>(total);
}

bool crit6_overfit(std::string& detail) {
    const auto t0 = Clock::now();
    SynthConfig scfg;
    const auto lines = synth_lines(106, 32, scfg);
    const auto vocab = build_vocabulary(lines.matrix, lines.embedded, {}, 1);
    const auto corpora = synth_corpora(106, 32, scfg, vocab, 45);
    TransformerConfig cfg;  // paper dimensions
    cfg.vocab_size = vocab.size();
    Generator gen(cfg, 106);
    Adam opt;
    double loss_val = 1e9, acc = 0.0;
    int it = 0;
    for (; it < 2000; ++it) {
        Tape tape;
        auto loss = gen.reconstruction_loss(corpora.matrix, 0, &tape);
        loss_val = loss->data[0];
        gen.params().zero_grads();
        tape.backward(loss);
        clip_grad_norm(gen.params(), 5.0);
        opt.step(gen.params(), 1e-3);
        if (loss_val < 0.1 && it % 10 == 0) {
            acc = greedy_token_accuracy(gen, corpora.matrix, 0);
            if (acc >= 0.95) break;
        }
        if (seconds_since(t0) > 590.0) break;
    }
    if (acc < 0.95) acc = greedy_token_accuracy(gen, corpora.matrix, 0);
    const double dt = seconds_since(t0);
    std::ostringstream os;
    os << "loss " << loss_val << " nats/token, greedy acc " << acc << ", " << it + 1
       << " iters, " << dt << " s";
    detail = os.str();
    return loss_val < 0.1 && acc >= 0.95 && dt < 600.0;
}

// ---------------------------------------------------------------- 7 ----
TransformerConfig bench_model(int vocab) {
    TransformerConfig cfg;
    cfg.n_layers = 2;
    cfg.hidden = 32;
    cfg.n_heads = 4;
    cfg.ff_dim = 64;
    cfg.max_len = 10;
    cfg.vocab_size = vocab;
    return cfg;
}

double embedded_fraction(const std::vector<SentenceRecord>& records, const Vocabulary& vocab) {
    std::int64_t total = 0, emb = 0;
    for (const auto& rec : records)
        for (int id : rec.ids) {
            if (Vocabulary::is_special(id)) continue;
            ++total;
            if (vocab.lang_of(id) == Lang::EMBEDDED) ++emb;
        }
    return total == 0 ? 0.0 : static_cast<double>(emb) / static_cast<double>(total);
}

std::vector<SentenceRecord> greedy_transfer(const Generator& gen,
                                            const std::vector<SentenceRecord>& source, int style,
                                            const Vocabulary& vocab) {
    std::vector<SentenceRecord> out;
    const int chunk = 32;
    for (std::size_t at = 0; at < source.size(); at += chunk) {
        std::vector<SentenceRecord> batch(
            source.begin() + static_cast<std::ptrdiff_t>(at),
            source.begin() + static_cast<std::ptrdiff_t>(std::min(at + chunk, source.size())));
        const auto z = gen.encode(batch, style, nullptr);
        for (auto& ids : gen.decode_greedy(z, style, gen.config().max_len)) {
            SentenceRecord rec;
            rec.ids = std::move(ids);
            rec.tags = tag_tokens(rec.ids, vocab);
            out.push_back(std::move(rec));
        }
    }
    return out;
}

bool crit7_transfer_direction(std::string& detail) {
    int wins = 0;
    std::ostringstream os;
    for (std::uint64_t seed : {201ull, 202ull, 203ull}) {
        SynthConfig scfg;
        const auto lines = synth_lines(seed, 64, scfg);
        const auto vocab = build_vocabulary(lines.matrix, lines.embedded, {}, 1);
        const auto corpora = synth_corpora(seed, 64, scfg, vocab, 10);
        Generator gen(bench_model(vocab.size()), seed);
        Discriminator disc(32, 128, seed ^ 0x5deece66dULL);
        StageConfig cfg;
        cfg.batch_size = 8;
        cfg.pretrain_iters = 300;
        cfg.disc_warmup_iters = 300;
        cfg.total_iters = 300;
        cfg.adv_weight = 10.0;
        cfg.lr_disc = 1e-3;
        cfg.lr_gen_adv = 1e-4;
        cfg.seed = seed;
        Trainer trainer(gen, disc, cfg);
        trainer.train(corpora.matrix, corpora.embedded);
        const auto s_me = greedy_transfer(gen, corpora.matrix, 1, vocab);
        const auto s_mm = greedy_transfer(gen, corpora.matrix, 0, vocab);
        const double f_me = embedded_fraction(s_me, vocab);
        const double f_mm = embedded_fraction(s_mm, vocab);
        if (f_me > f_mm) ++wins;
        os << "seed " << seed << ": s_me " << f_me << " vs s_mm " << f_mm << "; ";
    }
    os << wins << "/3 seeds";
    detail = os.str();
    return wins >= 2;
}

// ---------------------------------------------------------------- 8 ----
bool crit8_figure2_trend(std::string& detail) {
    int wins = 0;
    std::ostringstream os;
    const auto t0 = Clock::now();
    for (std::uint64_t seed : {301ull, 302ull, 303ull}) {
        SynthConfig scfg;  // p_sw = 0.3 reference
        const auto lines = synth_lines(seed, 64, scfg);
        const auto vocab = build_vocabulary(lines.matrix, lines.embedded, lines.real_cs, 1);
        const auto corpora = synth_corpora(seed, 64, scfg, vocab, 10);
        PipelineConfig cfg;
        cfg.model = bench_model(vocab.size());
        cfg.stage1.batch_size = 8;
        cfg.stage1.pretrain_iters = 300;
        cfg.stage1.disc_warmup_iters = 300;
        cfg.stage1.total_iters = 300;
        cfg.stage1.adv_weight = 10.0;
        cfg.stage1.lr_disc = 1e-3;
        cfg.stage1.lr_gen_adv = 1e-4;
        cfg.stage1.seed = seed;
        cfg.stage2 = cfg.stage1;
        cfg.stage2.stage = 2;
        cfg.stage2.binding = {StyleId::ARTIFICIAL_CS, StyleId::NATURAL_CS};
        cfg.stage2.schedule = LrSchedule::STLR;
        cfg.stage2.pretrain_iters = 100;
        // STLR spends most of its horizon far below the base LR, so the
        // stage-2 adversarial phase needs the full 1e-3 peak to move.
        cfg.stage2.lr_gen_adv = 1e-3;
        const std::string out = "/tmp/csgan_accept8_" + std::to_string(seed);
        std::filesystem::remove_all(out);
        const auto result = run_pipeline(corpora, vocab, cfg, out);

        const auto neg_lines = read_lines(result.negatives_path);
        const auto negatives = encode_corpus(neg_lines, vocab, 10, Origin::GENERATED);
        Generator gen2(cfg.model, seed);
        load_checkpoint_into(gen2.params(), result.stage2_gen_ckpt);
        const auto stage2_out = greedy_transfer(gen2, negatives, 1, vocab);

        const double m_real = corpus_report(corpora.real_cs).m_index;
        const double m1 = corpus_report(negatives).m_index;
        const double m2 = corpus_report(stage2_out).m_index;
        if (std::abs(m2 - m_real) <= std::abs(m1 - m_real)) ++wins;
        os << "seed " << seed << ": |m1-r| " << std::abs(m1 - m_real) << " |m2-r| "
           << std::abs(m2 - m_real) << "; ";
        std::filesystem::remove_all(out);
    }
    const double dt = seconds_since(t0);
    os << wins << "/3 seeds, " << dt << " s";
    detail = os.str();
    return wins >= 2 && dt < 3.0 * 1800.0;
}

// ---------------------------------------------------------------- 9 ----
bool crit9_determinism(std::string& detail) {
    SynthConfig scfg;
    const auto lines = synth_lines(9, 24, scfg);
    const auto vocab = build_vocabulary(lines.matrix, lines.embedded, {}, 1);
    const auto corpora = synth_corpora(9, 24, scfg, vocab, 10);
    auto run = [&](const std::string& csv) {
        Generator gen(bench_model(vocab.size()), 9);
        Discriminator disc(32, 16, 10);
        StageConfig cfg;
        cfg.batch_size = 4;
        cfg.pretrain_iters = 3;
        cfg.total_iters = 5;
        cfg.seed = 9;
        Trainer trainer(gen, disc, cfg);
        write_loss_csv(csv, trainer.train(corpora.matrix, corpora.embedded));
        return gen.params().checksum();
    };
    const std::string csv1 = "/tmp/csgan_accept9_a.csv", csv2 = "/tmp/csgan_accept9_b.csv";
    const auto sum1 = run(csv1);
    const auto sum2 = run(csv2);
    std::ifstream f1(csv1), f2(csv2);
    std::stringstream s1, s2;
    s1 << f1.rdbuf();
    s2 << f2.rdbuf();
    const bool csv_equal = s1.str() == s2.str() && !s1.str().empty();

    // checkpoint save -> load -> forward is bit-identical
    Generator gen(bench_model(vocab.size()), 9);
    const std::string ckpt = "/tmp/csgan_accept9.ckpt";
    save_checkpoint(gen.params(), ckpt);
    Generator gen2(bench_model(vocab.size()), 77);
    load_checkpoint_into(gen2.params(), ckpt);
    const std::vector<SentenceRecord> probe(corpora.matrix.begin(), corpora.matrix.begin() + 4);
    const auto za = gen.encode(probe, 1, nullptr);
    const auto zb = gen2.encode(probe, 1, nullptr);
    const bool forward_equal = za.values->data == zb.values->data;
    std::remove(csv1.c_str());
    std::remove(csv2.c_str());
    std::remove(ckpt.c_str());
    std::ostringstream os;
    os << "loss CSVs " << (csv_equal ? "identical" : "DIFFER") << ", weights "
       << (sum1 == sum2 ? "identical" : "DIFFER") << ", reloaded forward "
       << (forward_equal ? "bit-identical" : "DIFFERS");
    detail = os.str();
    return csv_equal && sum1 == sum2 && forward_equal;
}

// --------------------------------------------------------------- 10 ----
bool crit10_freeze_contract(std::string& detail) {
    SynthConfig scfg;
    const auto lines = synth_lines(10, 24, scfg);
    const auto vocab = build_vocabulary(lines.matrix, lines.embedded, {}, 1);
    const auto corpora = synth_corpora(10, 24, scfg, vocab, 10);
    TransformerConfig mcfg;
    mcfg.n_layers = 1;
    mcfg.hidden = 8;
    mcfg.n_heads = 2;
    mcfg.ff_dim = 16;
    mcfg.max_len = 10;
    mcfg.vocab_size = vocab.size();
    Generator gen(mcfg, 10);
    Discriminator disc(8, 16, 11);
    StageConfig cfg;
    cfg.batch_size = 4;
    cfg.seed = 10;
    Trainer trainer(gen, disc, cfg);
    Batcher b0(corpora.matrix, 21), b1(corpora.embedded, 22);
    for (int it = 0; it < 100; ++it) {
        const auto d0 = b0.next(4), d1 = b1.next(4);
        const auto g_sum = gen.params().checksum();
        trainer.discriminator_step(d0, d1);
        if (gen.params().checksum() != g_sum) {
            detail = "D-step modified G at iteration " + std::to_string(it);
            return false;
        }
        const auto d_sum = disc.params().checksum();
        trainer.generator_step(b0.next(4), b1.next(4));
        if (disc.params().checksum() != d_sum) {
            detail = "G-step modified D at iteration " + std::to_string(it);
            return false;
        }
    }
    detail = "checksums stable across 100 D/G iteration pairs";
    return true;
}

struct Criterion {
    int id;
    const char* name;
    bool (*fn)(std::string&);
};

const Criterion kCriteria[] = {
    {1, "metric oracle equivalence", crit1_metric_oracles},
    {2, "derived metric spot values", crit2_spot_values},
    {3, "gradient correctness", crit3_gradients},
    {4, "continuous-softmax limit", crit4_soft_limit},
    {5, "STLR schedule", crit5_stlr},
    {6, "reconstruction overfit", crit6_overfit},
    {7, "stage-1 transfer direction", crit7_transfer_direction},
    {8, "two-stage M-index trend", crit8_figure2_trend},
    {9, "determinism and persistence", crit9_determinism},
    {10, "freeze contract", crit10_freeze_contract},
};

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    if (argc > 1) only = std::atoi(argv[1]);
    if (argc > 1 && (only < 1 || only > 10)) {
        std::cerr << "usage: acceptance [1..10]\n";
        return 2;
    }
    int failures = 0;
    for (const auto& c : kCriteria) {
        if (only != 0 && c.id != only) continue;
        std::string detail;
        bool ok = false;
        try {
            ok = c.fn(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << c.id << " (" << c.name
                  << "): " << detail << '\n';
        if (!ok) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
