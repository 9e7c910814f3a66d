#include "vground/text.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "vground/error.hpp"
#include "vground/util.hpp"

namespace vground {

namespace {

bool is_punct(char c) {
    switch (c) {
        case '.':
        case ',':
        case '!':
        case '?':
        case ';':
        case ':':
        case '\'':
        case '"':
        case '(':
        case ')':
            return true;
        default:
            return false;
    }
}

// Token list covering the synthetic command templates plus common driving
// vocabulary, so generated corpora tokenize without OOV fallbacks.
std::vector<std::string> builtin_tokens() {
    return {
        "<pad>", "<unk>",
        ".", ",", "!", "?", ";", ":", "'", "\"",
        // colors
        "red", "blue", "green", "white", "black", "yellow",
        // object kinds
        "car", "truck", "bus", "van", "sign", "shelter", "cone", "building",
        // zones
        "left", "middle", "right", "center",
        // imperative verbs
        "park", "turn", "stop", "pull", "drive", "drop", "follow", "pass", "slow",
        "make", "go", "take", "head", "keep", "move", "back", "proceed", "continue",
        // urgency markers
        "hurry", "quick", "quickly", "now", "wait", "hold", "rush", "emergency", "immediately",
        // glue words
        "the", "a", "an", "to", "at", "on", "in", "by", "of", "up", "me", "us", "off",
        "behind", "beside", "next", "near", "toward", "towards", "over", "there", "here",
        "is", "are", "was", "be", "we", "our", "you", "your", "it", "its", "that", "this",
        "and", "then", "please", "side", "area", "spot", "destination", "target", "place",
        "where", "should", "need", "can", "see", "just", "down", "intersection", "road",
        "street", "crossing", "one", "two", "standing", "parked", "waiting", "ahead",
        "front", "with", "for", "which", "talked", "about", "earlier", "while", "heading",
        "from", "station", "across", "town", "before", "after", "people", "stood", "evening",
        "my", "stolen", "bike", "looks", "like", "wow", "bus-stop",
    };
}

}  // namespace

const Vocabulary& Vocabulary::builtin() {
    static const Vocabulary v = Vocabulary::from_tokens(builtin_tokens());
    return v;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
    Vocabulary v;
    v.tokens_ = std::move(tokens);
    if (v.tokens_.size() < 2)
        throw ValidationError("vocabulary must contain at least the pad and OOV entries");
    for (size_t i = 0; i < v.tokens_.size(); ++i) {
        auto [it, inserted] = v.index_.emplace(v.tokens_[i], static_cast<int>(i));
        if (!inserted) throw ValidationError("vocabulary has duplicate token: " + v.tokens_[i]);
    }
    return v;
}

Vocabulary Vocabulary::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open vocabulary file: " + path);
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        tokens.push_back(line);
    }
    return from_tokens(std::move(tokens));
}

void Vocabulary::save(const std::string& path) const {
    std::ostringstream out;
    for (const auto& t : tokens_) out << t << "\n";
    write_file(path, out.str());
}

int Vocabulary::id(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
    if (id < 0 || static_cast<size_t>(id) >= tokens_.size())
        throw ValidationError("token id out of range: " + std::to_string(id));
    return tokens_[static_cast<size_t>(id)];
}

std::vector<std::string> split_tokens(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) {
            out.push_back(lowercase(cur));
            cur.clear();
        }
    };
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            flush();
        } else if (is_punct(c)) {
            flush();
            out.push_back(std::string(1, c));
        } else {
            cur.push_back(c);
        }
    }
    flush();
    return out;
}

size_t word_count(const std::string& text) {
    std::istringstream in(text);
    std::string w;
    size_t n = 0;
    while (in >> w) ++n;
    return n;
}

TokenizeResult tokenize(const std::string& text, const Vocabulary& vocab, size_t max_len) {
    if (text.empty() || split_tokens(text).empty())
        throw ValidationError("tokenize: empty text");
    TokenizeResult res;
    for (const auto& tok : split_tokens(text)) {
        if (res.ids.size() >= max_len) {
            res.truncated = true;
            break;
        }
        res.ids.push_back(vocab.id(tok));
    }
    return res;
}

std::string detokenize(const std::vector<int>& ids, const Vocabulary& vocab) {
    std::string out;
    for (size_t i = 0; i < ids.size(); ++i) {
        if (i) out += " ";
        out += vocab.token(ids[i]);
    }
    return out;
}

}  // namespace vground
