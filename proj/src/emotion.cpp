#include "vground/emotion.hpp"

#include <unordered_set>

#include <json.hpp>
#include <httplib.h>

#include "vground/error.hpp"
#include "vground/text.hpp"

namespace vground {

const char* emotion_label(EmotionCategory c) {
    switch (c) {
        case EmotionCategory::Urgent: return "urgent";
        case EmotionCategory::Commanding: return "commanding";
        case EmotionCategory::Informative: return "informative";
    }
    return "informative";
}

std::optional<EmotionCategory> parse_emotion_label(const std::string& label) {
    if (label == "urgent") return EmotionCategory::Urgent;
    if (label == "commanding") return EmotionCategory::Commanding;
    if (label == "informative") return EmotionCategory::Informative;
    return std::nullopt;
}

namespace {

const std::unordered_set<std::string>& urgency_words() {
    static const std::unordered_set<std::string> s = {
        "hurry", "quick", "quickly", "now", "rush", "emergency", "immediately"};
    return s;
}

// stop/wait only signal urgency when used as the verb of a clause;
// "the bus stop" must stay informative.
const std::unordered_set<std::string>& urgency_verbs() {
    static const std::unordered_set<std::string> s = {"stop", "wait"};
    return s;
}

const std::unordered_set<std::string>& imperative_verbs() {
    static const std::unordered_set<std::string> s = {
        "park", "turn", "stop", "pull", "drive", "drop", "follow", "pass", "slow",
        "make", "go",   "take", "head", "keep",  "move", "back",   "proceed", "continue"};
    return s;
}

bool is_clause_boundary(const std::string& tok) {
    return tok == "." || tok == "!" || tok == "?" || tok == ";" || tok == ",";
}

}  // namespace

EmotionCategory classify_emotion_rule(const std::string& text) {
    const auto toks = split_tokens(text);
    if (toks.empty()) throw ValidationError("classify_emotion: empty command");

    if (text.find('!') != std::string::npos) return EmotionCategory::Urgent;

    bool clause_start = true;
    for (size_t i = 0; i < toks.size(); ++i) {
        const std::string& t = toks[i];
        if (urgency_words().count(t)) return EmotionCategory::Urgent;
        if (t == "hold" && i + 1 < toks.size() && toks[i + 1] == "on") return EmotionCategory::Urgent;
        if (clause_start && urgency_verbs().count(t)) return EmotionCategory::Urgent;
        clause_start = is_clause_boundary(t);
    }

    // Imperative head of the first clause, skipping politeness and punctuation.
    for (const auto& t : toks) {
        if (t == "please" || is_clause_boundary(t) || t == "'" || t == "\"") continue;
        if (imperative_verbs().count(t)) return EmotionCategory::Commanding;
        break;
    }
    return EmotionCategory::Informative;
}

const std::vector<EmotionExample>& builtin_emotion_examples() {
    using E = EmotionCategory;
    static const std::vector<EmotionExample> fixture = {
        // urgent
        {"Wow hold on! That looks like my stolen bike over there! Drop me off next to it.", E::Urgent},
        {"Hurry! Park behind the red car on the left.", E::Urgent},
        {"Quick, pull over by the white van.", E::Urgent},
        {"Stop right there, the gate is closing.", E::Urgent},
        {"Wait, that is our turn coming up.", E::Urgent},
        {"Drop me off now, right by the entrance.", E::Urgent},
        {"Get over immediately, we are late.", E::Urgent},
        {"Hold on, I think I see my friend near the bus.", E::Urgent},
        {"Drive to the curb quickly please.", E::Urgent},
        {"That truck is about to hit us, brake now!", E::Urgent},
        // commanding
        {"Make a left turn at the next intersection.", E::Commanding},
        {"Park behind the red car on the left.", E::Commanding},
        {"Pull up to the blue truck in the middle.", E::Commanding},
        {"Drive to the shelter on the right side.", E::Commanding},
        {"Drop me off by the green van.", E::Commanding},
        {"Follow the black car ahead of us.", E::Commanding},
        {"Pass the bus and keep to the right.", E::Commanding},
        {"Slow down near the crossing.", E::Commanding},
        {"Take the second exit at the roundabout.", E::Commanding},
        {"Turn right after the white building.", E::Commanding},
        // informative
        {"The bus stop is the blue shelter on the right side.", E::Informative},
        {"The destination is the red car on the left.", E::Informative},
        {"Our target is the white truck in the middle.", E::Informative},
        {"There is a parking spot behind the green bus.", E::Informative},
        {"The blue van near the corner is where we should be.", E::Informative},
        {"That shelter on the right marks the pickup point.", E::Informative},
        {"My friend is standing beside the black car.", E::Informative},
        {"The second driveway on the left belongs to us.", E::Informative},
        {"A yellow sign sits just before our street.", E::Informative},
        {"The place we need is across from the station.", E::Informative},
    };
    return fixture;
}

namespace {

class HttpEmotionTransport : public EmotionTransport {
public:
    HttpEmotionTransport(std::string base_url, std::string path)
        : base_(std::move(base_url)), path_(std::move(path)) {}

    std::optional<std::string> post(const std::string& request_json,
                                    std::chrono::milliseconds timeout) override {
        httplib::Client cli(base_);
        const time_t sec = timeout.count() / 1000;
        const time_t usec = (timeout.count() % 1000) * 1000;
        cli.set_connection_timeout(sec, usec);
        cli.set_read_timeout(sec, usec);
        cli.set_write_timeout(sec, usec);
        auto res = cli.Post(path_, request_json, "application/json");
        if (!res || res->status != 200) return std::nullopt;
        return res->body;
    }

private:
    std::string base_;
    std::string path_;
};

}  // namespace

std::shared_ptr<EmotionTransport> make_http_emotion_transport(const std::string& base_url,
                                                              const std::string& path) {
    return std::make_shared<HttpEmotionTransport>(base_url, path);
}

EmotionClassifier::EmotionClassifier(Mode mode, std::shared_ptr<EmotionTransport> transport,
                                     std::chrono::milliseconds timeout)
    : mode_(mode), transport_(std::move(transport)), timeout_(timeout) {
    if (mode_ == Mode::External && !transport_)
        throw ValidationError("external emotion classifier requires a transport");
}

EmotionCategory EmotionClassifier::classify(const std::string& text) const {
    if (mode_ == Mode::External && transport_) {
        nlohmann::json req = {{"text", text}};
        auto body = transport_->post(req.dump(), timeout_);
        if (body) {
            auto parsed = nlohmann::json::parse(*body, nullptr, false);
            if (!parsed.is_discarded() && parsed.contains("label") && parsed["label"].is_string()) {
                if (auto cat = parse_emotion_label(parsed["label"].get<std::string>())) return *cat;
            }
        }
        ++fallbacks_;
    }
    return classify_emotion_rule(text);
}

}  // namespace vground
