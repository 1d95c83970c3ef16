#include "csgan/metrics.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace csgan {

TagStream TagStream::from_records(const std::vector<SentenceRecord>& records, Lang default_lang) {
    TagStream stream;
    for (const auto& rec : records) {
        if (rec.ids.size() != rec.tags.size())
            throw InvariantError("TagStream: record ids/tags length mismatch");
        std::vector<Lang> utt;
        for (std::size_t i = 0; i < rec.tags.size(); ++i) {
            Lang t = rec.tags[i];
            if (t == Lang::SPECIAL) continue;
            if (t == Lang::SHARED) t = default_lang;
            utt.push_back(t);
        }
        if (utt.empty()) continue;
        stream.boundaries.push_back(stream.tags.size());
        stream.tags.insert(stream.tags.end(), utt.begin(), utt.end());
    }
    return stream;
}

namespace {

void require_nonempty(const TagStream& s, const char* op) {
    if (s.tags.empty()) throw InvariantError(std::string(op) + ": empty tag stream");
}

// utterance extent [start, end) for utterance u
std::pair<std::size_t, std::size_t> extent(const TagStream& s, std::size_t u) {
    const std::size_t start = s.boundaries[u];
    const std::size_t end = (u + 1 < s.boundaries.size()) ? s.boundaries[u + 1] : s.tags.size();
    return {start, end};
}

std::array<double, 2> lang_fractions(const TagStream& s) {
    double nm = 0, ne = 0;
    for (Lang t : s.tags) (t == Lang::MATRIX ? nm : ne) += 1.0;
    const double n = nm + ne;
    return {nm / n, ne / n};
}

}  // namespace

double m_index(const TagStream& stream) {
    require_nonempty(stream, "m_index");
    const auto p = lang_fractions(stream);
    const double sum_sq = p[0] * p[0] + p[1] * p[1];
    return (1.0 - sum_sq) / sum_sq;  // k = 2, so (k-1) = 1
}

double language_entropy(const TagStream& stream) {
    require_nonempty(stream, "language_entropy");
    const auto p = lang_fractions(stream);
    double h = 0.0;
    for (double pj : p)
        if (pj > 0.0) h -= pj * std::log2(pj);
    return h;
}

double i_index(const TagStream& stream) {
    require_nonempty(stream, "i_index");
    std::int64_t pairs = 0, switches = 0;
    for (std::size_t u = 0; u < stream.n_utterances(); ++u) {
        const auto [start, end] = extent(stream, u);
        for (std::size_t i = start + 1; i < end; ++i) {
            ++pairs;
            if (stream.tags[i] != stream.tags[i - 1]) ++switches;
        }
    }
    if (pairs == 0) throw InvariantError("i_index: no within-utterance adjacent pairs");
    return static_cast<double>(switches) / static_cast<double>(pairs);
}

std::vector<std::int64_t> span_lengths(const TagStream& stream) {
    std::vector<std::int64_t> spans;
    for (std::size_t u = 0; u < stream.n_utterances(); ++u) {
        const auto [start, end] = extent(stream, u);
        std::int64_t run = 0;
        for (std::size_t i = start; i < end; ++i) {
            if (i == start || stream.tags[i] == stream.tags[i - 1]) {
                ++run;
            } else {
                spans.push_back(run);
                run = 1;
            }
        }
        if (run > 0) spans.push_back(run);
    }
    return spans;
}

std::optional<double> burstiness(const TagStream& stream) {
    const auto spans = span_lengths(stream);
    if (spans.size() < 2) return std::nullopt;
    double mu = 0.0;
    for (auto s : spans) mu += static_cast<double>(s);
    mu /= static_cast<double>(spans.size());
    double var = 0.0;
    for (auto s : spans) var += (static_cast<double>(s) - mu) * (static_cast<double>(s) - mu);
    var /= static_cast<double>(spans.size());  // population variance
    const double sigma = std::sqrt(var);
    return (sigma - mu) / (sigma + mu);
}

CsMetricsReport corpus_report(const std::vector<SentenceRecord>& records, Lang default_lang) {
    const TagStream stream = TagStream::from_records(records, default_lang);
    if (stream.tags.empty()) throw InvariantError("corpus_report: no non-special tokens");
    CsMetricsReport rep;
    rep.m_index = m_index(stream);
    rep.lang_entropy = language_entropy(stream);
    std::int64_t pairs = 0;
    for (std::size_t u = 0; u < stream.n_utterances(); ++u) {
        const auto s = stream.boundaries[u];
        const auto e = (u + 1 < stream.boundaries.size()) ? stream.boundaries[u + 1]
                                                          : stream.tags.size();
        pairs += static_cast<std::int64_t>(e - s) - 1;
    }
    rep.i_index = pairs > 0 ? i_index(stream) : 0.0;
    rep.burstiness = burstiness(stream);
    rep.n_tokens = static_cast<std::int64_t>(stream.tags.size());
    const auto spans = span_lengths(stream);
    rep.n_spans = static_cast<std::int64_t>(spans.size());
    rep.n_switches = rep.n_spans - static_cast<std::int64_t>(stream.n_utterances());
    return rep;
}

const char* CsMetricsReport::csv_header() {
    return "corpus,m_index,lang_entropy,i_index,burstiness,n_tokens,n_switches,n_spans";
}

std::string CsMetricsReport::to_csv_row(const std::string& name) const {
    std::ostringstream os;
    os.precision(10);
    os << name << ',' << m_index << ',' << lang_entropy << ',' << i_index << ',';
    if (burstiness) os << *burstiness;
    else os << "UNDEFINED";
    os << ',' << n_tokens << ',' << n_switches << ',' << n_spans;
    return os.str();
}

std::string CsMetricsReport::to_json_text(const std::string& name) const {
    nlohmann::json j;
    j["corpus"] = name;
    j["m_index"] = m_index;
    j["lang_entropy"] = lang_entropy;
    j["i_index"] = i_index;
    if (burstiness) j["burstiness"] = *burstiness;
    else j["burstiness"] = nullptr;
    j["n_tokens"] = n_tokens;
    j["n_switches"] = n_switches;
    j["n_spans"] = n_spans;
    return j.dump(2);
}

CsMetricsReport CsMetricsReport::from_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open metrics report: " + path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("bad metrics report JSON: ") + e.what());
    }
    CsMetricsReport rep;
    rep.m_index = j.at("m_index").get<double>();
    rep.lang_entropy = j.at("lang_entropy").get<double>();
    rep.i_index = j.at("i_index").get<double>();
    if (!j.at("burstiness").is_null()) rep.burstiness = j["burstiness"].get<double>();
    rep.n_tokens = j.value("n_tokens", 0);
    rep.n_switches = j.value("n_switches", 0);
    rep.n_spans = j.value("n_spans", 0);
    return rep;
}

std::vector<ComparisonRow> compare_reports(
    const std::vector<std::pair<std::string, CsMetricsReport>>& candidates,
    const CsMetricsReport& reference) {
    if (candidates.empty()) throw InvariantError("compare_reports: no candidates");
    std::vector<ComparisonRow> rows;
    rows.reserve(candidates.size());
    for (const auto& [name, rep] : candidates) {
        ComparisonRow row;
        row.name = name;
        row.report = rep;
        row.d_m_index = std::abs(rep.m_index - reference.m_index);
        row.d_lang_entropy = std::abs(rep.lang_entropy - reference.lang_entropy);
        row.d_i_index = std::abs(rep.i_index - reference.i_index);
        if (rep.burstiness && reference.burstiness)
            row.d_burstiness = std::abs(*rep.burstiness - *reference.burstiness);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows,
                           const CsMetricsReport& reference) {
    std::ostringstream os;
    os.precision(10);
    os << CsMetricsReport::csv_header()
       << ",distance_m_index,distance_lang_entropy,distance_i_index,distance_burstiness\n";
    os << reference.to_csv_row("real_cs_reference") << ",0,0,0,0\n";
    for (const auto& row : rows) {
        os << row.report.to_csv_row(row.name) << ',' << row.d_m_index << ','
           << row.d_lang_entropy << ',' << row.d_i_index << ',';
        if (row.d_burstiness) os << *row.d_burstiness;
        else os << "UNDEFINED";
        os << '\n';
    }
    return os.str();
}

}  // namespace csgan
