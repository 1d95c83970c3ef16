// Single operator-facing binary. Subcommands cover the whole pipeline:
//   synth -> vocab -> train --stage 1 -> negatives -> train --stage 2
//   -> generate -> evaluate -> report
// Exit codes: 0 success, 2 configuration error, 3 runtime failure. Every
// error also emits a machine-parseable `error_code=` line on stderr.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "csgan/checkpoint.hpp"
#include "csgan/metrics.hpp"
#include "csgan/training.hpp"

using namespace csgan;

namespace {

[[noreturn]] void fail(int code, const std::string& error_code, const std::string& msg) {
    std::cerr << msg << '\n' << "error_code=" << error_code << '\n';
    std::exit(code);
}

std::string slurp(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read file: " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write file: " + path);
    os << text;
}

int style_index(const std::string& s) {
    if (s == "0" || s == "1") return s[0] - '0';
    switch (style_from_name(s)) {
        case StyleId::MATRIX:
        case StyleId::ARTIFICIAL_CS:
            return 0;
        case StyleId::EMBEDDED:
        case StyleId::NATURAL_CS:
            return 1;
    }
    throw ConfigError("unknown style: " + s);
}

// Shared flag bundle: JSON config files plus per-field overrides.
struct ModelFlags {
    std::string config_path;
    int layers = -1, hidden = -1, heads = -1, ff = -1, max_len = -1;

    void attach(CLI::App* cmd) {
        cmd->add_option("--model-config", config_path, "transformer config JSON file");
        cmd->add_option("--layers", layers, "encoder/decoder layers");
        cmd->add_option("--hidden", hidden, "hidden dimension");
        cmd->add_option("--heads", heads, "attention heads");
        cmd->add_option("--ff", ff, "feed-forward dimension");
        cmd->add_option("--max-len", max_len, "maximum sequence length");
    }
    TransformerConfig resolve(int vocab_size) const {
        TransformerConfig cfg;
        if (!config_path.empty()) cfg = TransformerConfig::from_json_text(slurp(config_path));
        if (layers > 0) cfg.n_layers = layers;
        if (hidden > 0) cfg.hidden = hidden;
        if (heads > 0) cfg.n_heads = heads;
        if (ff > 0) cfg.ff_dim = ff;
        if (max_len > 0) cfg.max_len = max_len;
        cfg.vocab_size = vocab_size;
        cfg.validate();
        return cfg;
    }
};

struct StageFlags {
    std::string config_path;
    int pretrain_iters = -1, total_iters = -1, batch_size = -1, disc_warmup = -1;
    double lr_gen = -1.0, lr_disc = -1.0, adv_weight = -1.0, temperature = -1.0;
    double lr_gen_adv = -1.0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "stage config JSON file");
        cmd->add_option("--pretrain-iters", pretrain_iters, "generator warmup iterations");
        cmd->add_option("--iters", total_iters, "adversarial iterations");
        cmd->add_option("--batch-size", batch_size, "sentences per batch");
        cmd->add_option("--lr-gen", lr_gen, "generator learning rate");
        cmd->add_option("--lr-disc", lr_disc, "discriminator learning rate");
        cmd->add_option("--lr-gen-adv", lr_gen_adv,
                        "generator learning rate for the adversarial phase");
        cmd->add_option("--disc-warmup", disc_warmup,
                        "discriminator-only iterations before alternation");
        cmd->add_option("--adv-weight", adv_weight, "adversarial loss weight");
        cmd->add_option("--temperature", temperature, "continuous-softmax temperature");
    }
    StageConfig resolve(int stage, std::uint64_t seed) const {
        StageConfig cfg;
        if (!config_path.empty()) cfg = StageConfig::from_json_text(slurp(config_path));
        cfg.stage = stage;
        cfg.seed = seed;
        if (stage == 2) {
            cfg.binding = {StyleId::ARTIFICIAL_CS, StyleId::NATURAL_CS};
            cfg.schedule = LrSchedule::STLR;
        }
        if (pretrain_iters >= 0) cfg.pretrain_iters = pretrain_iters;
        if (total_iters >= 0) cfg.total_iters = total_iters;
        if (batch_size > 0) cfg.batch_size = batch_size;
        if (lr_gen > 0) cfg.lr_gen = lr_gen;
        if (lr_disc > 0) cfg.lr_disc = lr_disc;
        if (lr_gen_adv > 0) cfg.lr_gen_adv = lr_gen_adv;
        if (disc_warmup >= 0) cfg.disc_warmup_iters = disc_warmup;
        if (adv_weight >= 0) cfg.adv_weight = adv_weight;
        if (temperature > 0) cfg.temperature = temperature;
        cfg.validate();
        return cfg;
    }
};

std::vector<SentenceRecord> load_corpus(const std::string& path, const Vocabulary& vocab,
                                        int max_len, Origin origin) {
    return encode_corpus(read_lines(path), vocab, max_len, origin);
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
            rec.origin = Origin::GENERATED;
            out.push_back(std::move(rec));
        }
    }
    return out;
}

// ------------------------------------------------------------ commands

int cmd_synth(std::uint64_t seed, const std::string& out_dir, int n,
              const std::string& config_path, double p_sw) {
    SynthConfig cfg;
    if (!config_path.empty()) cfg = SynthConfig::from_json_file(config_path);
    if (p_sw >= 0.0) cfg.p_sw = p_sw;
    std::filesystem::create_directories(out_dir);
    const auto lines = synth_lines(seed, n, cfg);
    write_lines(out_dir + "/matrix.txt", lines.matrix);
    write_lines(out_dir + "/embedded.txt", lines.embedded);
    write_lines(out_dir + "/real_cs.txt", lines.real_cs);
    write_run_manifest(out_dir + "/synth_manifest.json", "synth", cfg.to_json_text(), seed, {},
                       {{"matrix", out_dir + "/matrix.txt"},
                        {"embedded", out_dir + "/embedded.txt"},
                        {"real_cs", out_dir + "/real_cs.txt"}});
    return 0;
}

int cmd_vocab(const std::string& matrix, const std::string& embedded, const std::string& cs,
              int min_count, const std::string& out) {
    const auto cs_lines = cs.empty() ? std::vector<std::string>{} : read_lines(cs);
    const auto vocab = build_vocabulary(read_lines(matrix), read_lines(embedded), cs_lines,
                                        min_count);
    vocab.save(out);
    std::vector<std::pair<std::string, std::string>> inputs{{"matrix", matrix},
                                                            {"embedded", embedded}};
    if (!cs.empty()) inputs.push_back({"cs", cs});
    nlohmann::json cfg;
    cfg["min_count"] = min_count;
    cfg["vocab_size"] = vocab.size();
    write_run_manifest(out + ".manifest.json", "vocab", cfg.dump(), 0, inputs, {{"vocab", out}});
    return 0;
}

int cmd_pretrain(const std::string& matrix, const std::string& embedded,
                 const std::string& vocab_path, const std::string& out_dir, std::uint64_t seed,
                 const ModelFlags& mf, const StageFlags& sf) {
    const auto vocab = Vocabulary::load(vocab_path);
    const auto model = mf.resolve(vocab.size());
    StageConfig stage = sf.resolve(1, seed);
    stage.total_iters = 0;  // warmup only
    const auto c0 = load_corpus(matrix, vocab, model.max_len, Origin::MATRIX_CORPUS);
    const auto c1 = load_corpus(embedded, vocab, model.max_len, Origin::EMBEDDED_CORPUS);
    std::filesystem::create_directories(out_dir);
    Generator gen(model, seed);
    Discriminator disc(model.hidden, 128, seed ^ 0x5deece66dULL);
    Trainer trainer(gen, disc, stage);
    const auto losses = trainer.pretrain(c0, c1);
    save_checkpoint(gen.params(), out_dir + "/pretrain_gen.ckpt");
    write_loss_csv(out_dir + "/pretrain_losses.csv", losses);
    nlohmann::json cfg;
    cfg["model"] = nlohmann::json::parse(model.to_json_text());
    cfg["stage"] = nlohmann::json::parse(stage.to_json_text());
    write_run_manifest(out_dir + "/pretrain_manifest.json", "pretrain", cfg.dump(), seed,
                       {{"matrix", matrix}, {"embedded", embedded}, {"vocab", vocab_path}},
                       {{"gen_ckpt", out_dir + "/pretrain_gen.ckpt"},
                        {"losses", out_dir + "/pretrain_losses.csv"}});
    return 0;
}

int cmd_train(int stage, const std::string& corpus0, const std::string& corpus1,
              const std::string& vocab_path, const std::string& init, const std::string& init_disc,
              const std::string& out_dir, std::uint64_t seed, const ModelFlags& mf,
              const StageFlags& sf) {
    if (stage == 2 && init.empty())
        fail(2, "MISSING_STAGE1_INIT", "train --stage 2 requires --init <stage-1 checkpoint>");
    const auto vocab = Vocabulary::load(vocab_path);
    const auto model = mf.resolve(vocab.size());
    const StageConfig cfg = sf.resolve(stage, seed);
    const Origin o0 = stage == 1 ? Origin::MATRIX_CORPUS : Origin::GENERATED;
    const Origin o1 = stage == 1 ? Origin::EMBEDDED_CORPUS : Origin::REAL_CS;
    const auto c0 = load_corpus(corpus0, vocab, model.max_len, o0);
    const auto c1 = load_corpus(corpus1, vocab, model.max_len, o1);
    std::filesystem::create_directories(out_dir);
    Generator gen(model, seed);
    Discriminator disc(model.hidden, 128, seed ^ 0x5deece66dULL);
    if (!init.empty()) load_checkpoint_into(gen.params(), init);
    if (!init_disc.empty()) load_checkpoint_into(disc.params(), init_disc);
    Trainer trainer(gen, disc, cfg);
    const auto losses = trainer.train(c0, c1);
    const std::string tag = "stage" + std::to_string(stage);
    save_checkpoint(gen.params(), out_dir + "/" + tag + "_gen.ckpt");
    save_checkpoint(disc.params(), out_dir + "/" + tag + "_disc.ckpt");
    write_loss_csv(out_dir + "/" + tag + "_losses.csv", losses);
    nlohmann::json j;
    j["model"] = nlohmann::json::parse(model.to_json_text());
    j["stage"] = nlohmann::json::parse(cfg.to_json_text());
    std::vector<std::pair<std::string, std::string>> inputs{
        {"corpus0", corpus0}, {"corpus1", corpus1}, {"vocab", vocab_path}};
    if (!init.empty()) inputs.push_back({"init", init});
    if (!init_disc.empty()) inputs.push_back({"init_disc", init_disc});
    write_run_manifest(out_dir + "/" + tag + "_manifest.json", "train", j.dump(), seed, inputs,
                       {{"gen_ckpt", out_dir + "/" + tag + "_gen.ckpt"},
                        {"disc_ckpt", out_dir + "/" + tag + "_disc.ckpt"},
                        {"losses", out_dir + "/" + tag + "_losses.csv"}});
    return 0;
}

int cmd_negatives(const std::string& init, const std::string& matrix,
                  const std::string& vocab_path, const std::string& out, bool mix,
                  const std::string& embedded, std::uint64_t seed, const ModelFlags& mf) {
    const auto vocab = Vocabulary::load(vocab_path);
    const auto model = mf.resolve(vocab.size());
    Generator gen(model, 0);
    load_checkpoint_into(gen.params(), init);
    const auto src = load_corpus(matrix, vocab, model.max_len, Origin::MATRIX_CORPUS);
    std::vector<SentenceRecord> emb;
    if (mix) {
        if (embedded.empty()) throw ConfigError("--mix requires --embedded");
        emb = load_corpus(embedded, vocab, model.max_len, Origin::EMBEDDED_CORPUS);
    }
    const auto negatives = generate_negatives(gen, src, vocab, mix ? &emb : nullptr, seed);
    std::vector<std::string> lines;
    lines.reserve(negatives.size());
    for (const auto& rec : negatives) lines.push_back(decode_to_text(rec.ids, vocab));
    write_lines(out, lines);
    nlohmann::json cfg;
    cfg["mix"] = mix;
    std::vector<std::pair<std::string, std::string>> inputs{
        {"init", init}, {"matrix", matrix}, {"vocab", vocab_path}};
    if (mix) inputs.push_back({"embedded", embedded});
    write_run_manifest(out + ".manifest.json", "negatives", cfg.dump(), seed, inputs,
                       {{"negatives", out}});
    return 0;
}

int cmd_generate(const std::string& init, const std::string& vocab_path,
                 const std::string& source, const std::string& matrix_file,
                 const std::string& embedded_file, const std::string& negatives_file,
                 const std::string& style, const std::string& out, const ModelFlags& mf) {
    const auto vocab = Vocabulary::load(vocab_path);
    const auto model = mf.resolve(vocab.size());
    Generator gen(model, 0);
    load_checkpoint_into(gen.params(), init);
    std::string src_path;
    if (source == "matrix") src_path = matrix_file;
    else if (source == "embedded") src_path = embedded_file;
    else if (source == "negatives") src_path = negatives_file;
    else src_path = source;
    if (src_path.empty())
        throw ConfigError("--source " + source + " requires the matching --" + source +
                          "-file path");
    const auto src = load_corpus(src_path, vocab, model.max_len, Origin::MATRIX_CORPUS);
    const auto transferred = greedy_transfer(gen, src, style_index(style), vocab);
    std::vector<std::string> lines;
    lines.reserve(transferred.size());
    for (const auto& rec : transferred) lines.push_back(decode_to_text(rec.ids, vocab));
    write_lines(out, lines);
    nlohmann::json cfg;
    cfg["source"] = source;
    cfg["style"] = style;
    write_run_manifest(out + ".manifest.json", "generate", cfg.dump(), 0,
                       {{"init", init}, {"vocab", vocab_path}, {"source_corpus", src_path}},
                       {{"generated", out}});
    return 0;
}

int cmd_evaluate(const std::string& input, const std::string& vocab_path, const std::string& name,
                 const std::string& out_json, const std::string& out_csv) {
    const auto vocab = Vocabulary::load(vocab_path);
    const auto records = load_corpus(input, vocab, 1 << 20, Origin::REAL_CS);
    const auto rep = corpus_report(records);
    if (!out_json.empty()) write_text(out_json, rep.to_json_text(name));
    if (!out_csv.empty())
        write_text(out_csv, std::string(CsMetricsReport::csv_header()) + "\n" +
                                rep.to_csv_row(name) + "\n");
    std::cout << rep.to_json_text(name) << '\n';
    return 0;
}

int cmd_report(const std::string& reference, const std::vector<std::string>& candidates,
               const std::string& out) {
    const auto ref = CsMetricsReport::from_json_file(reference);
    std::vector<std::pair<std::string, CsMetricsReport>> named;
    for (const auto& spec : candidates) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos)
            throw ConfigError("candidate must be name=report.json: " + spec);
        named.emplace_back(spec.substr(0, eq),
                           CsMetricsReport::from_json_file(spec.substr(eq + 1)));
    }
    const auto rows = compare_reports(named, ref);
    const std::string csv = comparison_csv(rows, ref);
    if (!out.empty()) write_text(out, csv);
    std::cout << csv;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-stage adversarial code-switched text generation"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a deterministic bilingual toy benchmark");
    std::uint64_t synth_seed = 0;
    std::string synth_out = "data";
    int synth_n = 2000;
    std::string synth_cfg;
    double synth_psw = -1.0;
    synth->add_option("--seed", synth_seed, "RNG seed")->required();
    synth->add_option("--out", synth_out, "output directory");
    synth->add_option("--n", synth_n, "sentences per corpus");
    synth->add_option("--synth-config", synth_cfg, "synth config JSON file");
    synth->add_option("--p-sw", synth_psw, "per-token switch probability");

    // vocab
    auto* vocab = app.add_subcommand("vocab", "build the shared partitioned vocabulary");
    std::string v_matrix, v_embedded, v_cs, v_out = "vocab.tsv";
    int v_min_count = 1;
    vocab->add_option("--matrix", v_matrix, "matrix-language corpus")->required();
    vocab->add_option("--embedded", v_embedded, "embedded-language corpus")->required();
    vocab->add_option("--cs", v_cs, "real code-switched corpus");
    vocab->add_option("--min-count", v_min_count, "minimum token frequency");
    vocab->add_option("--out", v_out, "vocabulary output path");

    // pretrain
    auto* pre = app.add_subcommand("pretrain", "reconstruction-only generator warmup");
    std::string p_matrix, p_embedded, p_vocab, p_out = "runs/pretrain";
    std::uint64_t p_seed = 0;
    ModelFlags p_mf;
    StageFlags p_sf;
    pre->add_option("--matrix", p_matrix, "style-0 corpus")->required();
    pre->add_option("--embedded", p_embedded, "style-1 corpus")->required();
    pre->add_option("--vocab", p_vocab, "vocabulary file")->required();
    pre->add_option("--out", p_out, "run directory");
    pre->add_option("--seed", p_seed, "RNG seed")->required();
    p_mf.attach(pre);
    p_sf.attach(pre);

    // train
    auto* train = app.add_subcommand("train", "adversarial training for one stage");
    int t_stage = 1;
    std::string t_c0, t_c1, t_vocab, t_init, t_init_disc, t_out = "runs/train";
    std::uint64_t t_seed = 0;
    ModelFlags t_mf;
    StageFlags t_sf;
    train->add_option("--stage", t_stage, "1 (matrix/embedded) or 2 (artificial/natural CS)")
        ->required();
    train->add_option("--corpus0", t_c0, "style-0 corpus (stage 1: matrix, stage 2: negatives)")
        ->required();
    train->add_option("--corpus1", t_c1, "style-1 corpus (stage 1: embedded, stage 2: real CS)")
        ->required();
    train->add_option("--vocab", t_vocab, "vocabulary file")->required();
    train->add_option("--init", t_init, "generator checkpoint to start from");
    train->add_option("--init-disc", t_init_disc, "discriminator checkpoint to start from");
    train->add_option("--out", t_out, "run directory");
    train->add_option("--seed", t_seed, "RNG seed")->required();
    t_mf.attach(train);
    t_sf.attach(train);

    // negatives
    auto* neg = app.add_subcommand("negatives", "greedy matrix->embedded style transfer");
    std::string n_init, n_matrix, n_vocab, n_embedded, n_out = "negatives.txt";
    bool n_mix = false;
    std::uint64_t n_seed = 0;
    ModelFlags n_mf;
    neg->add_option("--init", n_init, "stage-1 generator checkpoint")->required();
    neg->add_option("--matrix", n_matrix, "matrix-language corpus")->required();
    neg->add_option("--vocab", n_vocab, "vocabulary file")->required();
    neg->add_option("--out", n_out, "output text file");
    neg->add_flag("--mix", n_mix, "mix in embedded->matrix transfers (half/half)");
    neg->add_option("--embedded", n_embedded, "embedded corpus (with --mix)");
    neg->add_option("--seed", n_seed, "mixing shuffle seed");
    n_mf.attach(neg);

    // generate
    auto* gen = app.add_subcommand("generate", "greedy style transfer from a chosen source");
    std::string g_init, g_vocab, g_source, g_style = "1", g_out = "generated.txt";
    std::string g_matrix, g_embedded, g_negatives;
    ModelFlags g_mf;
    gen->add_option("--init", g_init, "generator checkpoint")->required();
    gen->add_option("--vocab", g_vocab, "vocabulary file")->required();
    gen->add_option("--source", g_source, "matrix|embedded|negatives|<file>")->required();
    gen->add_option("--matrix-file", g_matrix, "path used when --source matrix");
    gen->add_option("--embedded-file", g_embedded, "path used when --source embedded");
    gen->add_option("--negatives-file", g_negatives, "path used when --source negatives");
    gen->add_option("--style", g_style, "target style: 0|1 or l_m|l_e|l_a|l_n");
    gen->add_option("--out", g_out, "output text file");
    g_mf.attach(gen);

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "code-switching metrics for a text corpus");
    std::string e_input, e_vocab, e_name = "corpus", e_json, e_csv;
    eval->add_option("--input", e_input, "text corpus to score")->required();
    eval->add_option("--vocab", e_vocab, "vocabulary file")->required();
    eval->add_option("--name", e_name, "corpus label");
    eval->add_option("--out-json", e_json, "report JSON output path");
    eval->add_option("--out-csv", e_csv, "report CSV output path");

    // report
    auto* rep = app.add_subcommand("report", "distance table of candidates vs the reference");
    std::string r_reference, r_out;
    std::vector<std::string> r_candidates;
    rep->add_option("--reference", r_reference, "real-CS reference report JSON")->required();
    rep->add_option("--candidate", r_candidates, "name=report.json (repeatable)")->required();
    rep->add_option("--out", r_out, "comparison CSV output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        std::cerr << "error_code=BAD_ARGS\n";
        return rc == 0 ? 0 : 2;
    }

    try {
        if (synth->parsed())
            return cmd_synth(synth_seed, synth_out, synth_n, synth_cfg, synth_psw);
        if (vocab->parsed()) return cmd_vocab(v_matrix, v_embedded, v_cs, v_min_count, v_out);
        if (pre->parsed())
            return cmd_pretrain(p_matrix, p_embedded, p_vocab, p_out, p_seed, p_mf, p_sf);
        if (train->parsed())
            return cmd_train(t_stage, t_c0, t_c1, t_vocab, t_init, t_init_disc, t_out, t_seed,
                             t_mf, t_sf);
        if (neg->parsed())
            return cmd_negatives(n_init, n_matrix, n_vocab, n_out, n_mix, n_embedded, n_seed,
                                 n_mf);
        if (gen->parsed())
            return cmd_generate(g_init, g_vocab, g_source, g_matrix, g_embedded, g_negatives,
                                g_style, g_out, g_mf);
        if (eval->parsed()) return cmd_evaluate(e_input, e_vocab, e_name, e_json, e_csv);
        if (rep->parsed()) return cmd_report(r_reference, r_candidates, r_out);
    } catch (const ConfigError& e) {
        fail(2, "CONFIG_ERROR", e.what());
    } catch (const NumericError& e) {
        fail(3, "NUMERIC_ERROR", e.what());
    } catch (const std::exception& e) {
        fail(3, "RUNTIME_ERROR", e.what());
    }
    return 0;
}
