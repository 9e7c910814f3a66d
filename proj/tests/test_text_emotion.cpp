#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "vground/emotion.hpp"
#include "vground/error.hpp"
#include "vground/text.hpp"

using namespace vground;

TEST_CASE("tokenizer lowercases and separates punctuation") {
    const auto toks = split_tokens("Park here.");
    REQUIRE(toks.size() == 3);
    CHECK(toks[0] == "park");
    CHECK(toks[1] == "here");
    CHECK(toks[2] == ".");

    const auto& vocab = Vocabulary::builtin();
    auto res = tokenize("Park here.", vocab, 60);
    CHECK(!res.truncated);
    CHECK(detokenize(res.ids, vocab) == "park here .");
}

TEST_CASE("tokenizer truncates to max length and records it") {
    std::string text;
    for (int i = 0; i < 70; ++i) text += "park ";
    const auto res = tokenize(text, Vocabulary::builtin(), 60);
    CHECK(res.ids.size() == 60);
    CHECK(res.truncated);
}

TEST_CASE("unknown words round-trip as the OOV marker") {
    const auto& vocab = Vocabulary::builtin();
    auto res = tokenize("park zeppelin", vocab, 60);
    REQUIRE(res.ids.size() == 2);
    CHECK(res.ids[1] == Vocabulary::kUnk);
    CHECK(detokenize(res.ids, vocab) == "park <unk>");
}

TEST_CASE("empty text is a validation error") {
    CHECK_THROWS_AS(tokenize("", Vocabulary::builtin(), 60), ValidationError);
    CHECK_THROWS_AS(tokenize("   ", Vocabulary::builtin(), 60), ValidationError);
}

TEST_CASE("word_count is whitespace-delimited") {
    CHECK(word_count("Park here.") == 2);
    CHECK(word_count("  a  b c ") == 3);
    CHECK(word_count("") == 0);
}

TEST_CASE("vocabulary file round trip, line number = id") {
    const auto& vocab = Vocabulary::builtin();
    const std::string path =
        (std::filesystem::temp_directory_path() / "vground_vocab_test.txt").string();
    vocab.save(path);
    Vocabulary loaded = Vocabulary::from_file(path);
    CHECK(loaded.size() == vocab.size());
    CHECK(loaded.token(0) == "<pad>");
    CHECK(loaded.token(1) == "<unk>");
    CHECK(loaded.id("park") == vocab.id("park"));
    CHECK(loaded.id("definitely-not-a-token") == Vocabulary::kUnk);
    std::remove(path.c_str());
}

TEST_CASE("emotion classifier reproduces the exemplar commands") {
    CHECK(classify_emotion_rule(
              "Wow hold on! That looks like my stolen bike over there! Drop me off next to it.") ==
          EmotionCategory::Urgent);
    CHECK(classify_emotion_rule("Make a left turn at the next intersection.") ==
          EmotionCategory::Commanding);
    CHECK(classify_emotion_rule("The bus stop is the blue shelter on the right side.") ==
          EmotionCategory::Informative);
}

TEST_CASE("emotion classifier agrees with the 30-command fixture") {
    for (const auto& ex : builtin_emotion_examples()) {
        INFO(ex.text);
        CHECK(classify_emotion_rule(ex.text) == ex.expected);
    }
    CHECK(builtin_emotion_examples().size() == 30);
}

TEST_CASE("emotion classifier is pure and total") {
    CHECK_THROWS_AS(classify_emotion_rule(""), ValidationError);
    const char* garbage[] = {"zzz qqq", "9 9 9", "...", "stopwatch near the bus stop",
                             "the waiting area is ahead"};
    for (const char* text : garbage) {
        const EmotionCategory a = classify_emotion_rule(text);
        const EmotionCategory b = classify_emotion_rule(text);
        CHECK(a == b);
    }
    // stop/wait are only urgent in verb position
    CHECK(classify_emotion_rule("stopwatch near the bus stop") == EmotionCategory::Informative);
    CHECK(classify_emotion_rule("Stop here.") == EmotionCategory::Urgent);
    CHECK(classify_emotion_rule("Please park by the gate.") == EmotionCategory::Commanding);
}

namespace {

class FakeTransport : public EmotionTransport {
public:
    explicit FakeTransport(std::optional<std::string> reply) : reply_(std::move(reply)) {}
    std::optional<std::string> post(const std::string& request,
                                    std::chrono::milliseconds) override {
        last_request = request;
        return reply_;
    }
    std::string last_request;

private:
    std::optional<std::string> reply_;
};

}  // namespace

TEST_CASE("external classifier consumes the documented schema") {
    auto transport = std::make_shared<FakeTransport>(std::string("{\"label\":\"urgent\"}"));
    EmotionClassifier clf(EmotionClassifier::Mode::External, transport);
    CHECK(clf.classify("Park behind the red car on the left.") == EmotionCategory::Urgent);
    CHECK(clf.fallback_count() == 0);
    CHECK(transport->last_request.find("\"text\"") != std::string::npos);
}

TEST_CASE("external classifier failures fall back to the rule path") {
    SUBCASE("transport failure") {
        EmotionClassifier clf(EmotionClassifier::Mode::External,
                              std::make_shared<FakeTransport>(std::nullopt));
        CHECK(clf.classify("Park behind the red car on the left.") == EmotionCategory::Commanding);
        CHECK(clf.fallback_count() == 1);
    }
    SUBCASE("malformed response") {
        EmotionClassifier clf(EmotionClassifier::Mode::External,
                              std::make_shared<FakeTransport>(std::string("not json")));
        CHECK(clf.classify("Hurry! Park behind the red car.") == EmotionCategory::Urgent);
        CHECK(clf.fallback_count() == 1);
    }
    SUBCASE("unknown label") {
        EmotionClassifier clf(EmotionClassifier::Mode::External,
                              std::make_shared<FakeTransport>(std::string("{\"label\":\"angry\"}")));
        CHECK(clf.classify("The bus stop is ahead.") == EmotionCategory::Informative);
        CHECK(clf.fallback_count() == 1);
    }
}

TEST_CASE("emotion labels round trip") {
    for (EmotionCategory c :
         {EmotionCategory::Urgent, EmotionCategory::Commanding, EmotionCategory::Informative}) {
        auto parsed = parse_emotion_label(emotion_label(c));
        REQUIRE(parsed.has_value());
        CHECK(*parsed == c);
    }
    CHECK(!parse_emotion_label("angry").has_value());
}
