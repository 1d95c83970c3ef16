#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "csgan/model.hpp"
#include "csgan/optim.hpp"
#include "csgan/synth.hpp"

namespace csgan {

enum class LrSchedule { CONSTANT, STLR };

struct StageConfig {
    int stage = 1;
    StyleBinding binding;  // stage 1: l_m/l_e, stage 2: l_a/l_n
    double lr_gen = 1e-3;
    double lr_disc = 1e-4;
    LrSchedule schedule = LrSchedule::CONSTANT;  // stage 2 uses STLR
    int pretrain_iters = 300;
    double adv_weight = 1.0;
    int batch_size = 32;
    int total_iters = 3000;
    std::uint64_t seed = 0;
    double temperature = 1.0;
    double clip_norm = 5.0;
    double stlr_cut_frac = 0.1;
    double stlr_ratio = 32.0;
    bool disc_enabled = true;
    // off by default: mixing s_{e,m} into the negatives pool
    bool mix_negatives = false;
    // discriminator-only iterations between pretraining and alternation,
    // so the classifier starts the game from a trained state
    int disc_warmup_iters = 0;
    // generator LR for the adversarial phase; <= 0 means reuse lr_gen
    double lr_gen_adv = 0.0;

    void validate() const;
    std::string to_json_text() const;
    static StageConfig from_json_text(const std::string& text);
};

struct LossReport {
    int iter = 0;
    double l_g_matrix = 0.0;    // same-style reconstruction
    double l_g_embedded = 0.0;  // cross-style reconstruction
    double l_d_matrix = 0.0;    // discriminator CE on real label-0 latents
    double l_d_embedded = 0.0;  // discriminator CE on real label-1 latents
    double l_adv = 0.0;
    double disc_acc = 0.0;
};

void write_loss_csv(const std::string& path, const std::vector<LossReport>& reports);

// Deterministic epoch-shuffled batch cycler.
class Batcher {
public:
    Batcher(const std::vector<SentenceRecord>& corpus, std::uint64_t seed);
    std::vector<SentenceRecord> next(int n);

private:
    void reshuffle();
    const std::vector<SentenceRecord>* corpus_;
    std::vector<std::size_t> order_;
    std::size_t pos_ = 0;
    std::mt19937_64 rng_;
};

// Alternating D/G training for one stage. corpus0 carries style0
// (discriminator label 0), corpus1 carries style1 (label 1).
class Trainer {
public:
    Trainer(Generator& gen, Discriminator& disc, StageConfig cfg);

    // Reconstruction-only warmup; no discriminator updates.
    std::vector<LossReport> pretrain(const std::vector<SentenceRecord>& corpus0,
                                     const std::vector<SentenceRecord>& corpus1);

    // One discriminator update with generator parameters frozen.
    LossReport discriminator_step(const std::vector<SentenceRecord>& batch0,
                                  const std::vector<SentenceRecord>& batch1);

    // One generator update (reconstruction + adversarial term) with
    // discriminator parameters frozen.
    LossReport generator_step(const std::vector<SentenceRecord>& batch0,
                              const std::vector<SentenceRecord>& batch1);

    // pretrain + total_iters alternating 1:1 D/G iterations.
    std::vector<LossReport> train(const std::vector<SentenceRecord>& corpus0,
                                  const std::vector<SentenceRecord>& corpus1);

private:
    double gen_lr() const;
    double disc_lr() const;
    TensorPtr reconstruction_terms(const std::vector<SentenceRecord>& batch0,
                                   const std::vector<SentenceRecord>& batch1, Tape* tape,
                                   double* same_style, double* cross_style) const;
    LatentBatch transfer_latent(const std::vector<SentenceRecord>& batch, int style,
                                Tape* tape) const;
    LatentBatch reconstruction_latent(const std::vector<SentenceRecord>& batch, int style,
                                      Tape* tape) const;

    Generator& gen_;
    Discriminator& disc_;
    StageConfig cfg_;
    Adam opt_gen_, opt_disc_;
    std::int64_t sched_step_ = 0;
};

// Greedy style transfer of every record in `matrix` to style1; outputs
// carry origin GENERATED. Optionally mixes in transfers of `embedded` to
// style0 (a random half-half subset).
std::vector<SentenceRecord> generate_negatives(const Generator& gen,
                                               const std::vector<SentenceRecord>& matrix,
                                               const Vocabulary& vocab,
                                               const std::vector<SentenceRecord>* embedded = nullptr,
                                               std::uint64_t mix_seed = 0);

struct PipelineConfig {
    TransformerConfig model;
    StageConfig stage1;
    StageConfig stage2;
};

struct PipelineResult {
    std::string stage1_gen_ckpt, stage1_disc_ckpt;
    std::string negatives_path;
    std::string stage2_gen_ckpt, stage2_disc_ckpt;
    std::vector<LossReport> stage1_losses, stage2_losses;
};

// Stage 1 -> negative generation -> Stage 2, persisting checkpoints,
// loss CSVs, and manifests under out_dir.
PipelineResult run_pipeline(const CorpusSet& corpora, const Vocabulary& vocab,
                            const PipelineConfig& cfg, const std::string& out_dir);

// FNV-1a content hash used in run manifests.
std::uint64_t fnv1a_file(const std::string& path);
std::uint64_t fnv1a_bytes(const void* data, std::size_t n);

void write_run_manifest(const std::string& path, const std::string& command,
                        const std::string& config_json, std::uint64_t seed,
                        const std::vector<std::pair<std::string, std::string>>& inputs,
                        const std::vector<std::pair<std::string, std::string>>& outputs);

}  // namespace csgan
