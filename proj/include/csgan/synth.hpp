#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "csgan/corpus.hpp"

namespace csgan {

// Deterministic bilingual toy-corpus generator. Two disjoint vocabularies
// with template grammars of different word orders (SVO-like matrix frames
// vs SOV-like embedded frames); synthetic code-switched text is produced
// by lexical replacement inside matrix frames at rate p_sw.
struct SynthConfig {
    int vocab_size_m = 40;
    int vocab_size_e = 40;
    // template slots: "N" noun, "V" verb, "M" modifier
    std::vector<std::vector<std::string>> matrix_templates = {
        {"N", "V", "N"}, {"N", "V", "M", "N"}, {"M", "N", "V", "N"},
        {"N", "V", "N", "M", "N"}, {"N", "M", "V", "N"}};
    std::vector<std::vector<std::string>> embedded_templates = {
        {"N", "N", "V"}, {"N", "M", "N", "V"}, {"M", "N", "N", "V"},
        {"N", "N", "M", "V"}, {"N", "M", "N", "N", "V"}};
    double p_sw = 0.3;
    std::uint64_t seed = 0;

    static SynthConfig from_json_text(const std::string& text);
    static SynthConfig from_json_file(const std::string& path);
    std::string to_json_text() const;
};

struct SynthLines {
    std::vector<std::string> matrix;
    std::vector<std::string> embedded;
    std::vector<std::string> real_cs;
};

SynthLines synth_lines(std::uint64_t seed, int n_sentences, const SynthConfig& cfg);

// Encodes the generated lines against a vocabulary built from them.
CorpusSet synth_corpora(std::uint64_t seed, int n_sentences, const SynthConfig& cfg,
                        const Vocabulary& vocab, int max_len = 45);

}  // namespace csgan
