#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "csgan/errors.hpp"

namespace csgan {

enum class Lang { MATRIX, EMBEDDED, SHARED, SPECIAL };

const char* lang_name(Lang l);
Lang lang_from_name(const std::string& s);

// Shared word-level vocabulary with a language partition. Ids are dense;
// the four specials are pinned at the front.
class Vocabulary {
public:
    static constexpr int kPad = 0;
    static constexpr int kBos = 1;
    static constexpr int kEos = 2;
    static constexpr int kUnk = 3;

    Vocabulary();

    int add(const std::string& token, Lang lang);
    int id_of(const std::string& token) const;  // kUnk when absent
    const std::string& token_of(int id) const;
    Lang lang_of(int id) const;
    bool contains(const std::string& token) const { return token_to_id_.count(token) != 0; }
    int size() const { return static_cast<int>(id_to_token_.size()); }
    static bool is_special(int id) { return id >= 0 && id <= kUnk; }

    void save(const std::string& path) const;
    static Vocabulary load(const std::string& path);

private:
    std::unordered_map<std::string, int> token_to_id_;
    std::vector<std::string> id_to_token_;
    std::vector<Lang> lang_of_id_;
};

enum class Origin { MATRIX_CORPUS, EMBEDDED_CORPUS, REAL_CS, GENERATED };

struct SentenceRecord {
    std::vector<int> ids;    // BOS ... EOS, length <= max_len
    std::vector<Lang> tags;  // one per id
    Origin origin = Origin::MATRIX_CORPUS;

    int content_length() const {
        int n = 0;
        for (int id : ids)
            if (!Vocabulary::is_special(id)) ++n;
        return n;
    }
};

struct CorpusSet {
    std::vector<SentenceRecord> matrix;
    std::vector<SentenceRecord> embedded;
    std::vector<SentenceRecord> real_cs;
    std::vector<SentenceRecord> negatives;
};

std::vector<std::string> tokenize_ws(const std::string& line);

// Frequency-filtered vocabulary over whitespace tokens; partition comes
// from which monolingual list(s) a token occurs in.
Vocabulary build_vocabulary(const std::vector<std::string>& matrix_lines,
                            const std::vector<std::string>& embedded_lines,
                            const std::vector<std::string>& cs_lines, int min_count = 1);

SentenceRecord encode_sentence(const std::string& line, const Vocabulary& vocab, int max_len = 45,
                               Origin origin = Origin::MATRIX_CORPUS,
                               Lang default_lang = Lang::MATRIX);

// Partition lookup per id; SHARED resolves to default_lang.
std::vector<Lang> tag_tokens(const std::vector<int>& ids, const Vocabulary& vocab,
                             Lang default_lang = Lang::MATRIX);

std::string decode_to_text(const std::vector<int>& ids, const Vocabulary& vocab);

std::vector<std::string> read_lines(const std::string& path);
void write_lines(const std::string& path, const std::vector<std::string>& lines);

std::vector<SentenceRecord> encode_corpus(const std::vector<std::string>& lines,
                                          const Vocabulary& vocab, int max_len, Origin origin,
                                          Lang default_lang = Lang::MATRIX);

}  // namespace csgan
