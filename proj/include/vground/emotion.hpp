#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace vground {

enum class EmotionCategory { Urgent = 0, Commanding = 1, Informative = 2 };

const char* emotion_label(EmotionCategory c);  // "urgent" / "commanding" / "informative"
std::optional<EmotionCategory> parse_emotion_label(const std::string& label);

// Deterministic rule-based classifier, total over non-empty text.
// Priority: Urgent > Commanding > Informative.
//   Urgent     - exclamation mark anywhere; an urgency word (hurry, quick,
//                quickly, now, rush, emergency, immediately); the bigram
//                "hold on"; or stop/wait in clause-initial (verb) position.
//   Commanding - first token of the first clause is a driving imperative
//                (park, turn, stop, pull, drive, drop, follow, pass, slow,
//                make, go, take, head, keep, move, back, proceed, continue).
//   Informative otherwise.
EmotionCategory classify_emotion_rule(const std::string& text);

struct EmotionExample {
    std::string text;
    EmotionCategory expected;
};
// 30-command labelled fixture exercised by the test and acceptance suites.
const std::vector<EmotionExample>& builtin_emotion_examples();

// Pluggable transport for an external classifier. Request body is
// {"text": "<command>"}; the response must be {"label": "urgent"|"commanding"|
// "informative"}. Returns nullopt on transport failure or timeout.
class EmotionTransport {
public:
    virtual ~EmotionTransport() = default;
    virtual std::optional<std::string> post(const std::string& request_json,
                                            std::chrono::milliseconds timeout) = 0;
};

// HTTP POST transport (endpoint path on a host:port base url).
std::shared_ptr<EmotionTransport> make_http_emotion_transport(const std::string& base_url,
                                                              const std::string& path = "/classify");

// Classifier facade. In External mode a transport failure, timeout, or
// malformed response falls back to the rule-based path and bumps
// fallback_count so callers can surface it.
class EmotionClassifier {
public:
    enum class Mode { Rule, External };

    EmotionClassifier() = default;
    EmotionClassifier(Mode mode, std::shared_ptr<EmotionTransport> transport,
                      std::chrono::milliseconds timeout = std::chrono::milliseconds(2000));

    EmotionCategory classify(const std::string& text) const;

    Mode mode() const { return mode_; }
    size_t fallback_count() const { return fallbacks_; }

private:
    Mode mode_ = Mode::Rule;
    std::shared_ptr<EmotionTransport> transport_;
    std::chrono::milliseconds timeout_{2000};
    mutable size_t fallbacks_ = 0;
};

}  // namespace vground
