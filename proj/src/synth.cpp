#include "csgan/synth.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <unordered_set>

#include <json.hpp>

namespace csgan {

namespace {

struct ToyVocab {
    std::vector<std::string> nouns, verbs, mods;

    const std::vector<std::string>& of_class(const std::string& cls) const {
        if (cls == "N") return nouns;
        if (cls == "V") return verbs;
        if (cls == "M") return mods;
        throw ConfigError("unknown template slot class: " + cls);
    }
    std::size_t total() const { return nouns.size() + verbs.size() + mods.size(); }
};

ToyVocab make_toy_vocab(const std::string& prefix, int size) {
    if (size < 30) throw ConfigError("toy vocabulary must have at least 30 tokens");
    ToyVocab v;
    const int n_nouns = (size * 2) / 5, n_verbs = size / 3;
    for (int i = 0; i < n_nouns; ++i) v.nouns.push_back(prefix + "noun" + std::to_string(i));
    for (int i = 0; i < n_verbs; ++i) v.verbs.push_back(prefix + "verb" + std::to_string(i));
    for (int i = 0; i < size - n_nouns - n_verbs; ++i)
        v.mods.push_back(prefix + "mod" + std::to_string(i));
    return v;
}

// rng()%n keeps sampling independent of the standard library's
// distribution implementations.
std::size_t pick(std::mt19937_64& rng, std::size_t n) { return rng() % n; }

std::string render(const std::vector<std::string>& tmpl, const ToyVocab& vocab,
                   std::mt19937_64& rng) {
    std::string out;
    for (const auto& cls : tmpl) {
        const auto& pool = vocab.of_class(cls);
        if (pool.empty()) throw ConfigError("template uses empty token class " + cls);
        if (!out.empty()) out += ' ';
        out += pool[pick(rng, pool.size())];
    }
    return out;
}

std::string render_cs(const std::vector<std::string>& tmpl, const ToyVocab& matrix,
                      const ToyVocab& embedded, double p_sw, std::mt19937_64& rng) {
    std::string out;
    for (const auto& cls : tmpl) {
        const auto& mpool = matrix.of_class(cls);
        const auto& epool = embedded.of_class(cls);
        // draw token and switch decision in a fixed order for determinism
        const std::size_t mi = pick(rng, mpool.size());
        const std::size_t ei = pick(rng, epool.size());
        const double u = static_cast<double>(rng()) / static_cast<double>(std::mt19937_64::max());
        if (!out.empty()) out += ' ';
        out += (u < p_sw) ? epool[ei] : mpool[mi];
    }
    return out;
}

std::vector<std::vector<std::string>> templates_from_json(const nlohmann::json& j) {
    std::vector<std::vector<std::string>> out;
    for (const auto& t : j) out.push_back(t.get<std::vector<std::string>>());
    return out;
}

}  // namespace

SynthConfig SynthConfig::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("bad synth config JSON: ") + e.what());
    }
    SynthConfig cfg;
    if (j.contains("vocab_size_m")) cfg.vocab_size_m = j["vocab_size_m"].get<int>();
    if (j.contains("vocab_size_e")) cfg.vocab_size_e = j["vocab_size_e"].get<int>();
    if (j.contains("p_sw")) cfg.p_sw = j["p_sw"].get<double>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("templates")) {
        const auto& t = j["templates"];
        if (t.contains("matrix")) cfg.matrix_templates = templates_from_json(t["matrix"]);
        if (t.contains("embedded")) cfg.embedded_templates = templates_from_json(t["embedded"]);
    }
    if (cfg.p_sw < 0.0 || cfg.p_sw > 1.0) throw ConfigError("p_sw must be in [0, 1]");
    if (cfg.matrix_templates.empty() || cfg.embedded_templates.empty())
        throw ConfigError("synth config needs at least one template per language");
    return cfg;
}

SynthConfig SynthConfig::from_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open synth config: " + path);
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return from_json_text(text);
}

std::string SynthConfig::to_json_text() const {
    nlohmann::json j;
    j["vocab_size_m"] = vocab_size_m;
    j["vocab_size_e"] = vocab_size_e;
    j["p_sw"] = p_sw;
    j["seed"] = seed;
    j["templates"]["matrix"] = matrix_templates;
    j["templates"]["embedded"] = embedded_templates;
    return j.dump(2);
}

SynthLines synth_lines(std::uint64_t seed, int n_sentences, const SynthConfig& cfg) {
    const ToyVocab mv = make_toy_vocab("m", cfg.vocab_size_m);
    const ToyVocab ev = make_toy_vocab("e", cfg.vocab_size_e);
    std::unordered_set<std::string> seen;
    for (const auto* pool : {&mv.nouns, &mv.verbs, &mv.mods})
        for (const auto& t : *pool) seen.insert(t);
    for (const auto* pool : {&ev.nouns, &ev.verbs, &ev.mods})
        for (const auto& t : *pool)
            if (!seen.insert(t).second)
                throw ConfigError("toy vocabularies overlap on token " + t);

    std::mt19937_64 rng(seed);
    SynthLines out;
    out.matrix.reserve(static_cast<std::size_t>(n_sentences));
    for (int i = 0; i < n_sentences; ++i)
        out.matrix.push_back(render(cfg.matrix_templates[pick(rng, cfg.matrix_templates.size())],
                                    mv, rng));
    for (int i = 0; i < n_sentences; ++i)
        out.embedded.push_back(
            render(cfg.embedded_templates[pick(rng, cfg.embedded_templates.size())], ev, rng));
    for (int i = 0; i < n_sentences; ++i)
        out.real_cs.push_back(
            render_cs(cfg.matrix_templates[pick(rng, cfg.matrix_templates.size())], mv, ev,
                      cfg.p_sw, rng));
    return out;
}

CorpusSet synth_corpora(std::uint64_t seed, int n_sentences, const SynthConfig& cfg,
                        const Vocabulary& vocab, int max_len) {
    const SynthLines lines = synth_lines(seed, n_sentences, cfg);
    CorpusSet set;
    set.matrix = encode_corpus(lines.matrix, vocab, max_len, Origin::MATRIX_CORPUS);
    set.embedded = encode_corpus(lines.embedded, vocab, max_len, Origin::EMBEDDED_CORPUS);
    set.real_cs = encode_corpus(lines.real_cs, vocab, max_len, Origin::REAL_CS);
    return set;
}

}  // namespace csgan
