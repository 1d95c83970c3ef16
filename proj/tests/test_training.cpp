#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "csgan/checkpoint.hpp"
#include "csgan/training.hpp"

using namespace csgan;

namespace {

TransformerConfig tiny_model(int vocab) {
    TransformerConfig cfg;
    cfg.n_layers = 1;
    cfg.hidden = 8;
    cfg.n_heads = 2;
    cfg.ff_dim = 16;
    cfg.max_len = 8;
    cfg.vocab_size = vocab;
    return cfg;
}

struct Setup {
    Vocabulary vocab;
    CorpusSet corpora;
    TransformerConfig model;
};

Setup make_setup(std::uint64_t seed, int n = 24) {
    SynthConfig scfg;
    const auto lines = synth_lines(seed, n, scfg);
    Setup s;
    s.vocab = build_vocabulary(lines.matrix, lines.embedded, lines.real_cs, 1);
    s.corpora = synth_corpora(seed, n, scfg, s.vocab, 8);
    s.model = tiny_model(s.vocab.size());
    return s;
}

StageConfig quick_stage(std::uint64_t seed) {
    StageConfig cfg;
    cfg.batch_size = 4;
    cfg.pretrain_iters = 2;
    cfg.total_iters = 3;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("StageConfig: validation and JSON round trip") {
    StageConfig cfg = quick_stage(9);
    cfg.stage = 2;
    cfg.binding = {StyleId::ARTIFICIAL_CS, StyleId::NATURAL_CS};
    cfg.schedule = LrSchedule::STLR;
    cfg.adv_weight = 0.5;
    const auto parsed = StageConfig::from_json_text(cfg.to_json_text());
    CHECK(parsed.stage == 2);
    CHECK(parsed.binding.style0 == StyleId::ARTIFICIAL_CS);
    CHECK(parsed.schedule == LrSchedule::STLR);
    CHECK(parsed.adv_weight == doctest::Approx(0.5));
    CHECK(parsed.seed == 9);

    cfg.binding.style1 = StyleId::ARTIFICIAL_CS;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.binding.style1 = StyleId::NATURAL_CS;
    cfg.temperature = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK_THROWS_AS(StageConfig::from_json_text("nope"), ConfigError);
}

TEST_CASE("Batcher: deterministic epoch cover, rejects empty corpus") {
    std::vector<SentenceRecord> corpus(10);
    for (int i = 0; i < 10; ++i) corpus[static_cast<std::size_t>(i)].ids = {1, 10 + i, 2};
    Batcher a(corpus, 77), b(corpus, 77);
    std::multiset<int> seen;
    for (int k = 0; k < 5; ++k) {
        const auto ba = a.next(2), bb = b.next(2);
        for (std::size_t i = 0; i < ba.size(); ++i) {
            CHECK(ba[i].ids == bb[i].ids);
            seen.insert(ba[i].ids[1]);
        }
    }
    // one full epoch touches every record exactly once
    CHECK(seen.size() == 10);
    for (int i = 0; i < 10; ++i) CHECK(seen.count(10 + i) == 1);

    const std::vector<SentenceRecord> empty;
    CHECK_THROWS_AS(Batcher(empty, 1), ConfigError);
}

TEST_CASE("freeze contract: D-steps never touch G, G-steps never touch D") {
    const auto s = make_setup(5);
    Generator gen(s.model, 5);
    Discriminator disc(s.model.hidden, 16, 6);
    Trainer trainer(gen, disc, quick_stage(5));
    const auto b0 = std::vector<SentenceRecord>(s.corpora.matrix.begin(),
                                                s.corpora.matrix.begin() + 4);
    const auto b1 = std::vector<SentenceRecord>(s.corpora.embedded.begin(),
                                                s.corpora.embedded.begin() + 4);
    for (int k = 0; k < 3; ++k) {
        const auto g_sum = gen.params().checksum();
        const auto d_before = disc.params().checksum();
        trainer.discriminator_step(b0, b1);
        CHECK(gen.params().checksum() == g_sum);
        CHECK(disc.params().checksum() != d_before);

        const auto d_sum = disc.params().checksum();
        const auto g_before = gen.params().checksum();
        trainer.generator_step(b0, b1);
        CHECK(disc.params().checksum() == d_sum);
        CHECK(gen.params().checksum() != g_before);
    }
}

TEST_CASE("training is deterministic: same seed, same losses, same weights") {
    const auto s = make_setup(11);
    auto run = [&] {
        Generator gen(s.model, 11);
        Discriminator disc(s.model.hidden, 16, 12);
        Trainer trainer(gen, disc, quick_stage(11));
        auto reports = trainer.train(s.corpora.matrix, s.corpora.embedded);
        return std::make_pair(reports, gen.params().checksum());
    };
    const auto [r1, sum1] = run();
    const auto [r2, sum2] = run();
    CHECK(sum1 == sum2);
    REQUIRE(r1.size() == r2.size());
    for (std::size_t i = 0; i < r1.size(); ++i) {
        CHECK(r1[i].l_g_matrix == r2[i].l_g_matrix);
        CHECK(r1[i].l_g_embedded == r2[i].l_g_embedded);
        CHECK(r1[i].l_d_matrix == r2[i].l_d_matrix);
        CHECK(r1[i].l_adv == r2[i].l_adv);
        CHECK(r1[i].disc_acc == r2[i].disc_acc);
    }
}

TEST_CASE("with the adversary off, train reduces to reconstruction pretraining") {
    const auto s = make_setup(13);
    StageConfig plain = quick_stage(13);
    plain.pretrain_iters = 0;
    plain.total_iters = 4;
    plain.disc_enabled = false;
    plain.adv_weight = 0.0;

    Generator gen_a(s.model, 13);
    Discriminator disc_a(s.model.hidden, 16, 14);
    Trainer ta(gen_a, disc_a, plain);
    const auto reports_a = ta.train(s.corpora.matrix, s.corpora.embedded);

    StageConfig warm = quick_stage(13);
    warm.pretrain_iters = 4;
    Generator gen_b(s.model, 13);
    Discriminator disc_b(s.model.hidden, 16, 14);
    Trainer tb(gen_b, disc_b, warm);
    const auto reports_b = tb.pretrain(s.corpora.matrix, s.corpora.embedded);

    CHECK(gen_a.params().checksum() == gen_b.params().checksum());
    REQUIRE(reports_a.size() == reports_b.size());
    for (std::size_t i = 0; i < reports_a.size(); ++i) {
        CHECK(reports_a[i].l_g_matrix == reports_b[i].l_g_matrix);
        CHECK(reports_a[i].l_g_embedded == reports_b[i].l_g_embedded);
        CHECK(reports_a[i].l_adv == 0.0);
        CHECK(reports_a[i].l_d_matrix == 0.0);
    }
}

TEST_CASE("zero-iteration training leaves parameters untouched") {
    const auto s = make_setup(17);
    Generator gen(s.model, 17);
    Discriminator disc(s.model.hidden, 16, 18);
    StageConfig cfg = quick_stage(17);
    cfg.pretrain_iters = 0;
    cfg.total_iters = 0;
    const auto g_sum = gen.params().checksum();
    const auto d_sum = disc.params().checksum();
    Trainer trainer(gen, disc, cfg);
    const auto reports = trainer.train(s.corpora.matrix, s.corpora.embedded);
    CHECK(reports.empty());
    CHECK(gen.params().checksum() == g_sum);
    CHECK(disc.params().checksum() == d_sum);
}

TEST_CASE("train emits one report per iteration with sequential indices") {
    const auto s = make_setup(19);
    Generator gen(s.model, 19);
    Discriminator disc(s.model.hidden, 16, 20);
    StageConfig cfg = quick_stage(19);
    cfg.total_iters = 5;
    Trainer trainer(gen, disc, cfg);
    const auto reports = trainer.train(s.corpora.matrix, s.corpora.embedded);
    REQUIRE(reports.size() == 5);
    for (int i = 0; i < 5; ++i) {
        CHECK(reports[static_cast<std::size_t>(i)].iter == i);
        CHECK(reports[static_cast<std::size_t>(i)].l_g_matrix >= 0.0);
        CHECK(reports[static_cast<std::size_t>(i)].l_d_matrix >= 0.0);
        CHECK(reports[static_cast<std::size_t>(i)].disc_acc >= 0.0);
        CHECK(reports[static_cast<std::size_t>(i)].disc_acc <= 1.0);
    }
}

TEST_CASE("loss CSV: exact header and one row per report") {
    std::vector<LossReport> reports(3);
    reports[1].iter = 1;
    reports[2].iter = 2;
    reports[2].l_adv = 0.5;
    const std::string path = "/tmp/csgan_losses_test.csv";
    write_loss_csv(path, reports);
    std::ifstream is(path);
    std::string line;
    REQUIRE(std::getline(is, line));
    CHECK(line == "iter,L_G_matrix,L_G_embedded,L_D_matrix,L_D_embedded,L_adv,disc_acc");
    int rows = 0;
    while (std::getline(is, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 3);
    std::remove(path.c_str());
}

TEST_CASE("generate_negatives: one output per input, deterministic, well formed") {
    const auto s = make_setup(23);
    Generator gen(s.model, 23);
    const auto neg1 = generate_negatives(gen, s.corpora.matrix, s.vocab);
    const auto neg2 = generate_negatives(gen, s.corpora.matrix, s.vocab);
    REQUIRE(neg1.size() == s.corpora.matrix.size());
    REQUIRE(neg2.size() == neg1.size());
    for (std::size_t i = 0; i < neg1.size(); ++i) {
        CHECK(neg1[i].ids == neg2[i].ids);
        CHECK(neg1[i].origin == Origin::GENERATED);
        CHECK(neg1[i].ids.front() == Vocabulary::kBos);
        CHECK(neg1[i].ids.back() == Vocabulary::kEos);
        CHECK(neg1[i].tags.size() == neg1[i].ids.size());
    }
    // mixing keeps the pool the same size
    const auto mixed = generate_negatives(gen, s.corpora.matrix, s.vocab, &s.corpora.embedded, 3);
    CHECK(mixed.size() == s.corpora.matrix.size());
}

TEST_CASE("pipeline: rejects an empty real-CS corpus") {
    const auto s = make_setup(29);
    CorpusSet broken = s.corpora;
    broken.real_cs.clear();
    PipelineConfig cfg;
    cfg.model = s.model;
    cfg.stage1 = quick_stage(29);
    cfg.stage2 = quick_stage(29);
    cfg.stage2.stage = 2;
    cfg.stage2.binding = {StyleId::ARTIFICIAL_CS, StyleId::NATURAL_CS};
    CHECK_THROWS_AS(run_pipeline(broken, s.vocab, cfg, "/tmp/csgan_pipe_broken"), ConfigError);
}

TEST_CASE("pipeline: micro run persists checkpoints, negatives, and loss CSVs") {
    const auto s = make_setup(31, 16);
    PipelineConfig cfg;
    cfg.model = s.model;
    cfg.stage1 = quick_stage(31);
    cfg.stage1.pretrain_iters = 1;
    cfg.stage1.total_iters = 2;
    cfg.stage2 = cfg.stage1;
    cfg.stage2.stage = 2;
    cfg.stage2.binding = {StyleId::ARTIFICIAL_CS, StyleId::NATURAL_CS};
    cfg.stage2.schedule = LrSchedule::STLR;
    const std::string out = "/tmp/csgan_pipe_micro";
    std::filesystem::remove_all(out);
    const auto result = run_pipeline(s.corpora, s.vocab, cfg, out);
    for (const std::string& f :
         {result.stage1_gen_ckpt, result.stage1_disc_ckpt, result.negatives_path,
          result.stage2_gen_ckpt, result.stage2_disc_ckpt, out + "/stage1_losses.csv",
          out + "/stage2_losses.csv", out + "/stage1_manifest.json",
          out + "/stage2_manifest.json"}) {
        CHECK(std::filesystem::exists(f));
    }
    CHECK(result.stage1_losses.size() == 2);
    CHECK(result.stage2_losses.size() == 2);
    // stage-1 checkpoint loads back into a fresh generator
    Generator reload(s.model, 999);
    load_checkpoint_into(reload.params(), result.stage2_gen_ckpt);
    CHECK(read_lines(result.negatives_path).size() == s.corpora.matrix.size());
    std::filesystem::remove_all(out);
}

TEST_CASE("run manifest records command, seed, and input hashes") {
    const std::string input = "/tmp/csgan_manifest_input.txt";
    write_lines(input, {"a b c"});
    const std::string path = "/tmp/csgan_manifest_test.json";
    write_run_manifest(path, "train", "{\"x\":1}", 42, {{"corpus", input}},
                       {{"ckpt", "/tmp/out.ckpt"}});
    std::ifstream is(path);
    std::stringstream ss;
    ss << is.rdbuf();
    const std::string text = ss.str();
    CHECK(text.find("\"command\": \"train\"") != std::string::npos);
    CHECK(text.find("\"seed\": 42") != std::string::npos);
    CHECK(text.find("fnv1a") != std::string::npos);
    std::remove(input.c_str());
    std::remove(path.c_str());
}
