#include "csgan/training.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "csgan/checkpoint.hpp"

namespace csgan {

namespace {

const char* schedule_name(LrSchedule s) { return s == LrSchedule::STLR ? "stlr" : "constant"; }

LrSchedule schedule_from_name(const std::string& s) {
    if (s == "constant") return LrSchedule::CONSTANT;
    if (s == "stlr") return LrSchedule::STLR;
    throw ConfigError("unknown schedule: " + s);
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::mt19937_64& rng) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    // hand-rolled Fisher-Yates so batch order is fixed by the seed alone
    for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng() % i]);
    return idx;
}

}  // namespace

void StageConfig::validate() const {
    if (stage != 1 && stage != 2) throw ConfigError("stage must be 1 or 2");
    binding.validate();
    if (lr_gen <= 0.0 || lr_disc <= 0.0) throw ConfigError("learning rates must be > 0");
    if (adv_weight < 0.0) throw ConfigError("adv_weight must be >= 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (total_iters < 0 || pretrain_iters < 0 || disc_warmup_iters < 0)
        throw ConfigError("iteration counts must be >= 0");
    if (temperature <= 0.0) throw ConfigError("temperature must be > 0");
}

std::string StageConfig::to_json_text() const {
    nlohmann::json j;
    j["stage"] = stage;
    j["style0"] = style_name(binding.style0);
    j["style1"] = style_name(binding.style1);
    j["lr_gen"] = lr_gen;
    j["lr_disc"] = lr_disc;
    j["schedule"] = schedule_name(schedule);
    j["pretrain_iters"] = pretrain_iters;
    j["adv_weight"] = adv_weight;
    j["batch_size"] = batch_size;
    j["total_iters"] = total_iters;
    j["seed"] = seed;
    j["temperature"] = temperature;
    j["clip_norm"] = clip_norm;
    j["stlr_cut_frac"] = stlr_cut_frac;
    j["stlr_ratio"] = stlr_ratio;
    j["disc_enabled"] = disc_enabled;
    j["mix_negatives"] = mix_negatives;
    j["disc_warmup_iters"] = disc_warmup_iters;
    j["lr_gen_adv"] = lr_gen_adv;
    return j.dump(2);
}

StageConfig StageConfig::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("bad stage config JSON: ") + e.what());
    }
    StageConfig c;
    c.stage = j.value("stage", c.stage);
    if (j.contains("style0")) c.binding.style0 = style_from_name(j["style0"].get<std::string>());
    if (j.contains("style1")) c.binding.style1 = style_from_name(j["style1"].get<std::string>());
    c.lr_gen = j.value("lr_gen", c.lr_gen);
    c.lr_disc = j.value("lr_disc", c.lr_disc);
    if (j.contains("schedule")) c.schedule = schedule_from_name(j["schedule"].get<std::string>());
    c.pretrain_iters = j.value("pretrain_iters", c.pretrain_iters);
    c.adv_weight = j.value("adv_weight", c.adv_weight);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.total_iters = j.value("total_iters", c.total_iters);
    c.seed = j.value("seed", c.seed);
    c.temperature = j.value("temperature", c.temperature);
    c.clip_norm = j.value("clip_norm", c.clip_norm);
    c.stlr_cut_frac = j.value("stlr_cut_frac", c.stlr_cut_frac);
    c.stlr_ratio = j.value("stlr_ratio", c.stlr_ratio);
    c.disc_enabled = j.value("disc_enabled", c.disc_enabled);
    c.mix_negatives = j.value("mix_negatives", c.mix_negatives);
    c.disc_warmup_iters = j.value("disc_warmup_iters", c.disc_warmup_iters);
    c.lr_gen_adv = j.value("lr_gen_adv", c.lr_gen_adv);
    c.validate();
    return c;
}

void write_loss_csv(const std::string& path, const std::vector<LossReport>& reports) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write loss CSV: " + path);
    os << "iter,L_G_matrix,L_G_embedded,L_D_matrix,L_D_embedded,L_adv,disc_acc\n";
    os.precision(12);
    for (const auto& r : reports)
        os << r.iter << ',' << r.l_g_matrix << ',' << r.l_g_embedded << ',' << r.l_d_matrix << ','
           << r.l_d_embedded << ',' << r.l_adv << ',' << r.disc_acc << '\n';
    if (!os) throw ConfigError("failed writing loss CSV: " + path);
}

Batcher::Batcher(const std::vector<SentenceRecord>& corpus, std::uint64_t seed)
    : corpus_(&corpus), rng_(seed) {
    if (corpus.empty()) throw ConfigError("cannot batch an empty corpus");
    reshuffle();
}

void Batcher::reshuffle() {
    order_ = shuffled_indices(corpus_->size(), rng_);
    pos_ = 0;
}

std::vector<SentenceRecord> Batcher::next(int n) {
    std::vector<SentenceRecord> batch;
    batch.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        if (pos_ >= order_.size()) reshuffle();
        batch.push_back((*corpus_)[order_[pos_++]]);
    }
    return batch;
}

Trainer::Trainer(Generator& gen, Discriminator& disc, StageConfig cfg)
    : gen_(gen), disc_(disc), cfg_(std::move(cfg)) {
    cfg_.validate();
}

double Trainer::gen_lr() const {
    const double base = cfg_.lr_gen_adv > 0.0 ? cfg_.lr_gen_adv : cfg_.lr_gen;
    if (cfg_.schedule == LrSchedule::CONSTANT) return base;
    StlrSchedule s{base, std::max(cfg_.total_iters, 1), cfg_.stlr_cut_frac, cfg_.stlr_ratio};
    return s.lr(std::min<std::int64_t>(sched_step_, s.total_steps));
}

double Trainer::disc_lr() const {
    if (cfg_.schedule == LrSchedule::CONSTANT) return cfg_.lr_disc;
    StlrSchedule s{cfg_.lr_disc, std::max(cfg_.total_iters, 1), cfg_.stlr_cut_frac,
                   cfg_.stlr_ratio};
    return s.lr(std::min<std::int64_t>(sched_step_, s.total_steps));
}

TensorPtr Trainer::reconstruction_terms(const std::vector<SentenceRecord>& batch0,
                                        const std::vector<SentenceRecord>& batch1, Tape* tape,
                                        double* same_style, double* cross_style) const {
    auto l00 = gen_.reconstruction_loss(batch0, 0, tape);
    auto l11 = gen_.reconstruction_loss(batch1, 1, tape);
    auto l01 = gen_.reconstruction_loss(batch0, 1, tape);
    auto l10 = gen_.reconstruction_loss(batch1, 0, tape);
    if (same_style) *same_style = 0.5 * (l00->data[0] + l11->data[0]);
    if (cross_style) *cross_style = 0.5 * (l01->data[0] + l10->data[0]);
    return add(tape, add(tape, l00, l11), add(tape, l01, l10));
}

LatentBatch Trainer::transfer_latent(const std::vector<SentenceRecord>& batch, int style,
                                     Tape* tape) const {
    const LatentBatch z = gen_.encode(batch, style, tape);
    const auto steps = Generator::soft_steps_for(batch, gen_.config().max_len);
    const SoftSequence seq = gen_.decode_soft(z, style, steps, cfg_.temperature, tape);
    return gen_.reencode_soft(seq, style, tape);
}

LatentBatch Trainer::reconstruction_latent(const std::vector<SentenceRecord>& batch, int style,
                                           Tape* tape) const {
    return transfer_latent(batch, style, tape);
}

LossReport Trainer::discriminator_step(const std::vector<SentenceRecord>& batch0,
                                       const std::vector<SentenceRecord>& batch1) {
    if (batch0.empty() || batch1.empty())
        throw InvariantError("discriminator_step: both batches must be nonempty");
    // latents computed off-tape: generator parameters stay frozen
    struct Group {
        LatentBatch z;
        int label;
    };
    std::vector<Group> groups;
    groups.push_back({gen_.encode(batch0, 0, nullptr), 0});
    groups.push_back({reconstruction_latent(batch0, 0, nullptr), 0});
    groups.push_back({transfer_latent(batch0, 1, nullptr), 0});  // z~_{0,1}, labeled by origin
    groups.push_back({gen_.encode(batch1, 1, nullptr), 1});
    groups.push_back({reconstruction_latent(batch1, 1, nullptr), 1});
    groups.push_back({transfer_latent(batch1, 0, nullptr), 1});  // z~_{1,0}, labeled by origin

    Tape tape;
    int total_n = 0;
    for (const auto& g : groups) total_n += g.z.batch;
    TensorPtr total;
    LossReport rep;
    int correct = 0;
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        const auto& g = groups[gi];
        auto logits = disc_.logits(g.z, &tape);
        for (int bi = 0; bi < g.z.batch; ++bi) {
            const double* row = logits->data.data() + static_cast<std::int64_t>(bi) * 2;
            if ((row[1] > row[0] ? 1 : 0) == g.label) ++correct;
        }
        std::vector<int> targets(static_cast<std::size_t>(g.z.batch), g.label);
        std::vector<double> weights(static_cast<std::size_t>(g.z.batch), 1.0);
        auto ce = cross_entropy(&tape, logits, targets, weights);
        if (gi == 0) rep.l_d_matrix = ce->data[0];
        if (gi == 3) rep.l_d_embedded = ce->data[0];
        auto weighted = scale(&tape, ce, static_cast<double>(g.z.batch) / total_n);
        total = total ? add(&tape, total, weighted) : weighted;
    }
    rep.disc_acc = static_cast<double>(correct) / total_n;
    disc_.params().zero_grads();
    tape.backward(total);
    clip_grad_norm(disc_.params(), cfg_.clip_norm);
    opt_disc_.step(disc_.params(), disc_lr());
    return rep;
}

LossReport Trainer::generator_step(const std::vector<SentenceRecord>& batch0,
                                   const std::vector<SentenceRecord>& batch1) {
    if (batch0.empty() || batch1.empty())
        throw InvariantError("generator_step: both batches must be nonempty");
    LossReport rep;
    Tape tape;
    auto total = reconstruction_terms(batch0, batch1, &tape, &rep.l_g_matrix, &rep.l_g_embedded);
    if (cfg_.adv_weight > 0.0) {
        // generator pushes transferred latents toward the TARGET style label
        auto zt01 = transfer_latent(batch0, 1, &tape);
        auto zt10 = transfer_latent(batch1, 0, &tape);
        auto logits01 = disc_.logits(zt01, &tape);
        auto logits10 = disc_.logits(zt10, &tape);
        std::vector<int> want1(static_cast<std::size_t>(zt01.batch), 1);
        std::vector<int> want0(static_cast<std::size_t>(zt10.batch), 0);
        std::vector<double> w01(static_cast<std::size_t>(zt01.batch), 1.0);
        std::vector<double> w10(static_cast<std::size_t>(zt10.batch), 1.0);
        auto adv = add(&tape, cross_entropy(&tape, logits01, want1, w01),
                       cross_entropy(&tape, logits10, want0, w10));
        rep.l_adv = adv->data[0];
        total = add(&tape, total, scale(&tape, adv, cfg_.adv_weight));
    }
    gen_.params().zero_grads();
    disc_.params().zero_grads();  // discarded; D never steps on these
    tape.backward(total);
    clip_grad_norm(gen_.params(), cfg_.clip_norm);
    opt_gen_.step(gen_.params(), gen_lr());
    return rep;
}

std::vector<LossReport> Trainer::pretrain(const std::vector<SentenceRecord>& corpus0,
                                          const std::vector<SentenceRecord>& corpus1) {
    if (corpus0.empty() || corpus1.empty())
        throw ConfigError("pretrain: both style corpora must be nonempty");
    Batcher b0(corpus0, cfg_.seed * 2654435761ULL + 1);
    Batcher b1(corpus1, cfg_.seed * 2654435761ULL + 2);
    std::vector<LossReport> reports;
    reports.reserve(static_cast<std::size_t>(cfg_.pretrain_iters));
    for (int it = 0; it < cfg_.pretrain_iters; ++it) {
        const auto batch0 = b0.next(cfg_.batch_size);
        const auto batch1 = b1.next(cfg_.batch_size);
        LossReport rep;
        Tape tape;
        auto total =
            reconstruction_terms(batch0, batch1, &tape, &rep.l_g_matrix, &rep.l_g_embedded);
        gen_.params().zero_grads();
        tape.backward(total);
        clip_grad_norm(gen_.params(), cfg_.clip_norm);
        opt_gen_.step(gen_.params(), cfg_.lr_gen);
        rep.iter = it;
        reports.push_back(rep);
    }
    return reports;
}

std::vector<LossReport> Trainer::train(const std::vector<SentenceRecord>& corpus0,
                                       const std::vector<SentenceRecord>& corpus1) {
    if (corpus0.empty() || corpus1.empty())
        throw ConfigError("train: both style corpora must be nonempty");
    std::vector<LossReport> warmup = pretrain(corpus0, corpus1);
    (void)warmup;
    Batcher b0(corpus0, cfg_.seed * 2654435761ULL + 1);
    Batcher b1(corpus1, cfg_.seed * 2654435761ULL + 2);
    if (cfg_.disc_enabled)
        for (int it = 0; it < cfg_.disc_warmup_iters; ++it)
            discriminator_step(b0.next(cfg_.batch_size), b1.next(cfg_.batch_size));
    std::vector<LossReport> reports;
    reports.reserve(static_cast<std::size_t>(cfg_.total_iters));
    for (int it = 0; it < cfg_.total_iters; ++it) {
        sched_step_ = it;
        LossReport rep;
        if (cfg_.disc_enabled) {
            const auto d0 = b0.next(cfg_.batch_size);
            const auto d1 = b1.next(cfg_.batch_size);
            const LossReport drep = discriminator_step(d0, d1);
            rep.l_d_matrix = drep.l_d_matrix;
            rep.l_d_embedded = drep.l_d_embedded;
            rep.disc_acc = drep.disc_acc;
        }
        const auto g0 = b0.next(cfg_.batch_size);
        const auto g1 = b1.next(cfg_.batch_size);
        const LossReport grep = generator_step(g0, g1);
        rep.l_g_matrix = grep.l_g_matrix;
        rep.l_g_embedded = grep.l_g_embedded;
        rep.l_adv = grep.l_adv;
        rep.iter = it;
        for (double v : {rep.l_g_matrix, rep.l_g_embedded, rep.l_d_matrix, rep.l_d_embedded,
                         rep.l_adv, rep.disc_acc})
            if (!std::isfinite(v)) throw NumericError("non-finite loss component in training");
        reports.push_back(rep);
    }
    return reports;
}

std::vector<SentenceRecord> generate_negatives(const Generator& gen,
                                               const std::vector<SentenceRecord>& matrix,
                                               const Vocabulary& vocab,
                                               const std::vector<SentenceRecord>* embedded,
                                               std::uint64_t mix_seed) {
    auto transfer = [&](const std::vector<SentenceRecord>& source, int style) {
        std::vector<SentenceRecord> out;
        out.reserve(source.size());
        const int chunk = 32;
        for (std::size_t at = 0; at < source.size(); at += chunk) {
            std::vector<SentenceRecord> batch(
                source.begin() + static_cast<std::ptrdiff_t>(at),
                source.begin() +
                    static_cast<std::ptrdiff_t>(std::min(at + chunk, source.size())));
            const LatentBatch z = gen.encode(batch, style, nullptr);
            for (auto& ids : gen.decode_greedy(z, style, gen.config().max_len)) {
                SentenceRecord rec;
                rec.ids = std::move(ids);
                rec.tags = tag_tokens(rec.ids, vocab);
                rec.origin = Origin::GENERATED;
                out.push_back(std::move(rec));
            }
        }
        return out;
    };
    std::vector<SentenceRecord> from_matrix = transfer(matrix, 1);
    if (!embedded) return from_matrix;
    // optional mixing experiment: random half of s_{m,e} and half of s_{e,m}
    std::vector<SentenceRecord> from_embedded = transfer(*embedded, 0);
    std::mt19937_64 rng(mix_seed);
    auto order_m = shuffled_indices(from_matrix.size(), rng);
    auto order_e = shuffled_indices(from_embedded.size(), rng);
    std::vector<SentenceRecord> mixed;
    const std::size_t half = from_matrix.size() / 2;
    for (std::size_t i = 0; i < half && i < order_m.size(); ++i)
        mixed.push_back(from_matrix[order_m[i]]);
    for (std::size_t i = 0; mixed.size() < from_matrix.size() && i < order_e.size(); ++i)
        mixed.push_back(from_embedded[order_e[i]]);
    return mixed;
}

std::uint64_t fnv1a_bytes(const void* data, std::size_t n) {
    const unsigned char* b = static_cast<const unsigned char*>(data);
    std::uint64_t h = 1469598103934665603ULL;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= b[i];
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t fnv1a_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot hash missing file: " + path);
    std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return fnv1a_bytes(bytes.data(), bytes.size());
}

void write_run_manifest(const std::string& path, const std::string& command,
                        const std::string& config_json, std::uint64_t seed,
                        const std::vector<std::pair<std::string, std::string>>& inputs,
                        const std::vector<std::pair<std::string, std::string>>& outputs) {
    nlohmann::json j;
    j["command"] = command;
    j["seed"] = seed;
    j["config"] = nlohmann::json::parse(config_json);
    for (const auto& [name, file] : inputs) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%016llx",
                      static_cast<unsigned long long>(fnv1a_file(file)));
        j["inputs"][name] = {{"path", file}, {"fnv1a", std::string(buf)}};
    }
    for (const auto& [name, file] : outputs) j["outputs"][name] = file;
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write manifest: " + path);
    os << j.dump(2) << '\n';
}

PipelineResult run_pipeline(const CorpusSet& corpora, const Vocabulary& vocab,
                            const PipelineConfig& cfg, const std::string& out_dir) {
    if (corpora.matrix.empty() || corpora.embedded.empty())
        throw ConfigError("pipeline requires nonempty matrix and embedded corpora");
    if (corpora.real_cs.empty()) throw ConfigError("pipeline requires a nonempty real-CS corpus");
    bool has_mixed = false;
    for (const auto& rec : corpora.real_cs) {
        bool m = false, e = false;
        for (Lang t : rec.tags) {
            m = m || t == Lang::MATRIX;
            e = e || t == Lang::EMBEDDED;
        }
        if (m && e) {
            has_mixed = true;
            break;
        }
    }
    if (!has_mixed)
        std::cerr << "warning: real-CS corpus contains no mixed-language sentence\n";

    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    PipelineResult result;

    // ---- Stage 1: matrix vs embedded styles ----
    Generator gen(cfg.model, cfg.stage1.seed);
    Discriminator disc(cfg.model.hidden, 128, cfg.stage1.seed ^ 0x5deece66dULL);
    {
        Trainer trainer(gen, disc, cfg.stage1);
        result.stage1_losses = trainer.train(corpora.matrix, corpora.embedded);
    }
    result.stage1_gen_ckpt = out_dir + "/stage1_gen.ckpt";
    result.stage1_disc_ckpt = out_dir + "/stage1_disc.ckpt";
    save_checkpoint(gen.params(), result.stage1_gen_ckpt);
    save_checkpoint(disc.params(), result.stage1_disc_ckpt);
    write_loss_csv(out_dir + "/stage1_losses.csv", result.stage1_losses);
    {
        nlohmann::json m;
        m["model"] = nlohmann::json::parse(cfg.model.to_json_text());
        m["stage"] = nlohmann::json::parse(cfg.stage1.to_json_text());
        std::ofstream os(out_dir + "/stage1_manifest.json");
        os << m.dump(2) << '\n';
    }

    // ---- negative examples: s_{m,e} via greedy transfer ----
    std::vector<SentenceRecord> negatives = generate_negatives(
        gen, corpora.matrix, vocab,
        cfg.stage1.mix_negatives ? &corpora.embedded : nullptr, cfg.stage1.seed);
    result.negatives_path = out_dir + "/negatives.txt";
    {
        std::vector<std::string> lines;
        lines.reserve(negatives.size());
        for (const auto& rec : negatives) lines.push_back(decode_to_text(rec.ids, vocab));
        write_lines(result.negatives_path, lines);
    }

    // ---- Stage 2: artificial vs natural CS styles, from Stage-1 weights ----
    Generator gen2(cfg.model, cfg.stage2.seed);
    Discriminator disc2(cfg.model.hidden, 128, cfg.stage2.seed ^ 0x5deece66dULL);
    load_checkpoint_into(gen2.params(), result.stage1_gen_ckpt);
    load_checkpoint_into(disc2.params(), result.stage1_disc_ckpt);
    {
        Trainer trainer(gen2, disc2, cfg.stage2);
        result.stage2_losses = trainer.train(negatives, corpora.real_cs);
    }
    result.stage2_gen_ckpt = out_dir + "/stage2_gen.ckpt";
    result.stage2_disc_ckpt = out_dir + "/stage2_disc.ckpt";
    save_checkpoint(gen2.params(), result.stage2_gen_ckpt);
    save_checkpoint(disc2.params(), result.stage2_disc_ckpt);
    write_loss_csv(out_dir + "/stage2_losses.csv", result.stage2_losses);
    {
        nlohmann::json m;
        m["model"] = nlohmann::json::parse(cfg.model.to_json_text());
        m["stage"] = nlohmann::json::parse(cfg.stage2.to_json_text());
        m["init_gen"] = result.stage1_gen_ckpt;
        m["init_disc"] = result.stage1_disc_ckpt;
        std::ofstream os(out_dir + "/stage2_manifest.json");
        os << m.dump(2) << '\n';
    }
    return result;
}

}  // namespace csgan
