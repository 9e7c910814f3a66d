#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace vground {

// Fixed vocabulary: token per line, line number = id. Ids 0 and 1 are the
// reserved pad and out-of-vocabulary markers.
class Vocabulary {
public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;

    static const Vocabulary& builtin();
    static Vocabulary from_tokens(std::vector<std::string> tokens);
    static Vocabulary from_file(const std::string& path);
    void save(const std::string& path) const;

    int id(const std::string& token) const;  // kUnk when absent
    const std::string& token(int id) const;
    size_t size() const { return tokens_.size(); }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;
};

// Lowercases and splits on whitespace, breaking punctuation out as separate
// tokens ("Park here." -> park, here, .).
std::vector<std::string> split_tokens(const std::string& text);

// Whitespace-delimited word count of the raw text.
size_t word_count(const std::string& text);

struct TokenizeResult {
    std::vector<int> ids;
    bool truncated = false;
};

// Maps text through the vocabulary, truncating to max_len. Empty text is a
// validation error. Padding is left to batch assembly.
TokenizeResult tokenize(const std::string& text, const Vocabulary& vocab, size_t max_len);

std::string detokenize(const std::vector<int>& ids, const Vocabulary& vocab);

}  // namespace vground
