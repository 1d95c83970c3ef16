#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "csgan/corpus.hpp"

namespace csgan {

// Pooled token-language tags with utterance boundaries. Only MATRIX and
// EMBEDDED tags appear; SPECIAL is dropped and SHARED resolved upstream.
struct TagStream {
    std::vector<Lang> tags;
    std::vector<std::size_t> boundaries;  // start index of each utterance, sorted

    static TagStream from_records(const std::vector<SentenceRecord>& records,
                                  Lang default_lang = Lang::MATRIX);
    std::size_t n_utterances() const { return boundaries.size(); }
};

struct CsMetricsReport {
    double m_index = 0.0;
    double lang_entropy = 0.0;
    double i_index = 0.0;
    std::optional<double> burstiness;  // nullopt == UNDEFINED (< 2 spans)
    std::int64_t n_tokens = 0;
    std::int64_t n_switches = 0;
    std::int64_t n_spans = 0;

    std::string to_json_text(const std::string& name) const;
    static CsMetricsReport from_json_file(const std::string& path);
    std::string to_csv_row(const std::string& name) const;
    static const char* csv_header();
};

// Language-balance index: (1 - sum p_j^2) / ((k-1) sum p_j^2), k = 2.
double m_index(const TagStream& stream);
// Shannon entropy of the token-language distribution, in bits.
double language_entropy(const TagStream& stream);
// Fraction of within-utterance adjacent pairs whose tags differ.
double i_index(const TagStream& stream);
// (sigma - mu) / (sigma + mu) over monolingual span lengths (population
// standard deviation); UNDEFINED with fewer than 2 spans.
std::optional<double> burstiness(const TagStream& stream);

// Monolingual span lengths, never crossing utterance boundaries.
std::vector<std::int64_t> span_lengths(const TagStream& stream);

CsMetricsReport corpus_report(const std::vector<SentenceRecord>& records,
                              Lang default_lang = Lang::MATRIX);

struct ComparisonRow {
    std::string name;
    CsMetricsReport report;
    double d_m_index = 0.0;
    double d_lang_entropy = 0.0;
    double d_i_index = 0.0;
    std::optional<double> d_burstiness;  // nullopt when either side UNDEFINED
};

// Absolute distances of each candidate to the reference, per metric.
std::vector<ComparisonRow> compare_reports(
    const std::vector<std::pair<std::string, CsMetricsReport>>& candidates,
    const CsMetricsReport& reference);

std::string comparison_csv(const std::vector<ComparisonRow>& rows,
                           const CsMetricsReport& reference);

}  // namespace csgan
