#include "csgan/corpus.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

namespace csgan {

const char* lang_name(Lang l) {
    switch (l) {
        case Lang::MATRIX: return "MATRIX";
        case Lang::EMBEDDED: return "EMBEDDED";
        case Lang::SHARED: return "SHARED";
        case Lang::SPECIAL: return "SPECIAL";
    }
    return "?";
}

Lang lang_from_name(const std::string& s) {
    if (s == "MATRIX") return Lang::MATRIX;
    if (s == "EMBEDDED") return Lang::EMBEDDED;
    if (s == "SHARED") return Lang::SHARED;
    if (s == "SPECIAL") return Lang::SPECIAL;
    throw ConfigError("unknown language tag: " + s);
}

Vocabulary::Vocabulary() {
    add("<pad>", Lang::SPECIAL);
    add("<bos>", Lang::SPECIAL);
    add("<eos>", Lang::SPECIAL);
    add("<unk>", Lang::SPECIAL);
}

int Vocabulary::add(const std::string& token, Lang lang) {
    auto it = token_to_id_.find(token);
    if (it != token_to_id_.end()) return it->second;
    const int id = size();
    token_to_id_[token] = id;
    id_to_token_.push_back(token);
    lang_of_id_.push_back(lang);
    return id;
}

int Vocabulary::id_of(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token_of(int id) const {
    if (id < 0 || id >= size()) throw InvariantError("Vocabulary: id out of range");
    return id_to_token_[static_cast<std::size_t>(id)];
}

Lang Vocabulary::lang_of(int id) const {
    if (id < 0 || id >= size()) throw InvariantError("Vocabulary: id out of range");
    return lang_of_id_[static_cast<std::size_t>(id)];
}

void Vocabulary::save(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write vocabulary: " + path);
    os << "CSVOCAB 1\n";
    for (int id = 0; id < size(); ++id)
        os << id << '\t' << id_to_token_[static_cast<std::size_t>(id)] << '\t'
           << lang_name(lang_of_id_[static_cast<std::size_t>(id)]) << '\n';
    if (!os) throw ConfigError("failed writing vocabulary: " + path);
}

Vocabulary Vocabulary::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open vocabulary: " + path);
    std::string header;
    std::getline(is, header);
    if (header != "CSVOCAB 1") throw ConfigError("bad vocabulary header in " + path);
    Vocabulary v;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string id_str, token, tag;
        if (!std::getline(ls, id_str, '\t') || !std::getline(ls, token, '\t') ||
            !std::getline(ls, tag))
            throw ConfigError("malformed vocabulary line in " + path);
        const int id = std::stoi(id_str);
        if (id < 4) {
            if (token != v.token_of(id)) throw ConfigError("special token mismatch in " + path);
            continue;
        }
        if (v.add(token, lang_from_name(tag)) != id)
            throw ConfigError("non-dense vocabulary ids in " + path);
    }
    return v;
}

std::vector<std::string> tokenize_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream is(line);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

Vocabulary build_vocabulary(const std::vector<std::string>& matrix_lines,
                            const std::vector<std::string>& embedded_lines,
                            const std::vector<std::string>& cs_lines, int min_count) {
    auto has_content = [](const std::vector<std::string>& lines) {
        for (const auto& l : lines)
            if (!tokenize_ws(l).empty()) return true;
        return false;
    };
    if (!has_content(matrix_lines)) throw ConfigError("matrix corpus is empty");
    if (!has_content(embedded_lines)) throw ConfigError("embedded corpus is empty");

    std::unordered_map<std::string, int> counts;
    std::unordered_set<std::string> in_matrix, in_embedded;
    std::vector<std::string> order;  // first-seen order across all three lists
    auto scan = [&](const std::vector<std::string>& lines, std::unordered_set<std::string>* seen) {
        for (const auto& line : lines)
            for (auto& tok : tokenize_ws(line)) {
                if (counts.find(tok) == counts.end()) order.push_back(tok);
                ++counts[tok];
                if (seen) seen->insert(tok);
            }
    };
    scan(matrix_lines, &in_matrix);
    scan(embedded_lines, &in_embedded);
    scan(cs_lines, nullptr);

    Vocabulary vocab;
    for (const auto& tok : order) {
        if (counts[tok] < min_count) continue;
        const bool m = in_matrix.count(tok) != 0, e = in_embedded.count(tok) != 0;
        Lang lang;
        if (m && e) lang = Lang::SHARED;
        else if (m) lang = Lang::MATRIX;
        else if (e) lang = Lang::EMBEDDED;
        else lang = Lang::SHARED;  // cs-only token, no monolingual evidence
        vocab.add(tok, lang);
    }
    return vocab;
}

SentenceRecord encode_sentence(const std::string& line, const Vocabulary& vocab, int max_len,
                               Origin origin, Lang default_lang) {
    if (max_len < 2) throw InvariantError("encode_sentence: max_len must be >= 2");
    SentenceRecord rec;
    rec.origin = origin;
    rec.ids.push_back(Vocabulary::kBos);
    const auto tokens = tokenize_ws(line);
    const int keep = std::min<int>(static_cast<int>(tokens.size()), max_len - 2);
    for (int i = 0; i < keep; ++i) rec.ids.push_back(vocab.id_of(tokens[static_cast<std::size_t>(i)]));
    rec.ids.push_back(Vocabulary::kEos);
    rec.tags = tag_tokens(rec.ids, vocab, default_lang);
    return rec;
}

std::vector<Lang> tag_tokens(const std::vector<int>& ids, const Vocabulary& vocab,
                             Lang default_lang) {
    std::vector<Lang> tags;
    tags.reserve(ids.size());
    for (int id : ids) {
        if (id < 0 || id >= vocab.size())
            throw InvariantError("tag_tokens: id out of vocabulary range");
        Lang l = vocab.lang_of(id);
        if (l == Lang::SHARED) l = default_lang;
        tags.push_back(l);
    }
    return tags;
}

std::string decode_to_text(const std::vector<int>& ids, const Vocabulary& vocab) {
    std::string out;
    for (int id : ids) {
        if (Vocabulary::is_special(id) && id != Vocabulary::kUnk) continue;
        if (!out.empty()) out += ' ';
        out += vocab.token_of(id);
    }
    return out;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open corpus file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write corpus file: " + path);
    for (const auto& line : lines) os << line << '\n';
    if (!os) throw ConfigError("failed writing corpus file: " + path);
}

std::vector<SentenceRecord> encode_corpus(const std::vector<std::string>& lines,
                                          const Vocabulary& vocab, int max_len, Origin origin,
                                          Lang default_lang) {
    std::vector<SentenceRecord> out;
    out.reserve(lines.size());
    for (const auto& line : lines) {
        if (tokenize_ws(line).empty()) continue;
        out.push_back(encode_sentence(line, vocab, max_len, origin, default_lang));
    }
    return out;
}

}  // namespace csgan
