#include <doctest.h>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "harness/errors.hpp"
#include "harness/evaluator.hpp"
#include "support/oracles.hpp"

using namespace harness;

namespace {

std::filesystem::path fixture(const char* rel) {
    return std::filesystem::path(HARNESS_TEST_FIXTURES) / rel;
}

struct Pair {
    std::string prediction;
    std::vector<std::string> answers;
    bool expected = false;
};

std::vector<Pair> load_pairs() {
    std::ifstream in(fixture("eval/pairs.json"));
    REQUIRE(in.good());
    nlohmann::json j = nlohmann::json::parse(in);
    std::vector<Pair> pairs;
    for (const auto& e : j.at("pairs")) {
        Pair p;
        p.prediction = e.at("prediction").get<std::string>();
        for (const auto& a : e.at("answers")) p.answers.push_back(a.get<std::string>());
        p.expected = e.at("expected").get<bool>();
        pairs.push_back(std::move(p));
    }
    return pairs;
}

}  // namespace

TEST_CASE("normalize folds case, punctuation and whitespace") {
    CHECK(normalize("  The ANSWER  is\tParis. ") == "the answer is paris");
    CHECK(normalize("“Hello” — it’s me…") == "hello - it's me");
    CHECK(normalize("４２") == "42");
    CHECK(normalize("ﬁnal ﬂight") == "final flight");
    CHECK(normalize("CAFÉ") == "café");
    CHECK(normalize("a b　c d") == "a b c d");
    CHECK(normalize("(bracketed), [noted]!") == "bracketed noted");
    CHECK(normalize("co-op isn't 275,000") == "co-op isn't 275,000");
    CHECK(normalize("") == "");
    CHECK(normalize(" .,!? ") == "");
}

TEST_CASE("normalize strips punctuation only at word edges") {
    CHECK(normalize("kmittle@dwrite.com.") == "kmittle@dwrite.com");
    CHECK(normalize("'quoted'") == "quoted");
    CHECK(normalize("3.14") == "3.14");
    CHECK(normalize("...dots...") == "dots");
}

TEST_CASE("normalize replaces invalid UTF-8 with the replacement character") {
    std::string bad = "ab\xC3";
    bad += "cd";
    std::string out = normalize(bad);
    CHECK(out.find("ab") == 0);
    CHECK(out.find("cd") != std::string::npos);
    CHECK(out.find("\xEF\xBF\xBD") != std::string::npos);
}

TEST_CASE("normalize is idempotent on fixture text") {
    for (const Pair& p : load_pairs()) {
        std::string once = normalize(p.prediction);
        CHECK(normalize(once) == once);
        for (const std::string& a : p.answers) {
            std::string ra = normalize(a);
            CHECK(normalize(ra) == ra);
        }
    }
}

TEST_CASE("normalize matches the independent oracle on fixture and random text") {
    for (const Pair& p : load_pairs()) {
        CHECK(normalize(p.prediction) == testsupport::oracle_normalize(p.prediction));
        for (const std::string& a : p.answers) {
            CHECK(normalize(a) == testsupport::oracle_normalize(a));
        }
    }

    std::mt19937_64 rng(11);
    const std::string alphabet =
        "abcXYZ 019 .,!?;:'\"()[]-\t\n"
        "‘’“”–—… ＡｊﬁÉß";
    for (int trial = 0; trial < 500; ++trial) {
        std::string s;
        int len = static_cast<int>(rng() % 40);
        for (int i = 0; i < len; ++i) s += alphabet[rng() % alphabet.size()];
        CAPTURE(s);
        std::string mine = normalize(s);
        CHECK(mine == testsupport::oracle_normalize(s));
        CHECK(normalize(mine) == mine);
    }
}

TEST_CASE("is_correct agrees with the labeled fixture and the oracle") {
    std::vector<Pair> pairs = load_pairs();
    REQUIRE(pairs.size() == 200);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        CAPTURE(i);
        CAPTURE(pairs[i].prediction);
        CHECK(is_correct(pairs[i].prediction, pairs[i].answers) == pairs[i].expected);

        CHECK(testsupport::oracle_contains(pairs[i].prediction, pairs[i].answers) ==
              pairs[i].expected);
    }
}

TEST_CASE("substring mode matches inside words, word-boundary mode does not") {
    std::vector<std::string> answers = {"23"};
    CHECK(is_correct("1234", answers, MatchMode::substring));
    CHECK_FALSE(is_correct("1234", answers, MatchMode::word_boundary));
    CHECK(is_correct("value 23 here", answers, MatchMode::word_boundary));
    CHECK(is_correct("23", answers, MatchMode::word_boundary));
    CHECK(is_correct("ends with 23", answers, MatchMode::word_boundary));
    CHECK(is_correct("(23)", answers, MatchMode::word_boundary));

    std::vector<std::string> phrase = {"blue whale"};
    CHECK(is_correct("a blue whale surfaced", phrase, MatchMode::word_boundary));
    CHECK_FALSE(is_correct("a blue whalesong", phrase, MatchMode::word_boundary));
}

TEST_CASE("answers that normalize to nothing never match") {
    CHECK_FALSE(is_correct("anything at all", {""}));
    CHECK_FALSE(is_correct("anything at all", {" . "}));
    CHECK_FALSE(is_correct("", {""}));
    CHECK(is_correct("anything at all", {".", "anything"}));
}

TEST_CASE("aggregate groups by dataset, model and source and conserves counts") {
    std::vector<EvalRecord> records;
    auto push = [&](const char* ds, const char* model, const char* src, bool ok) {
        EvalRecord r;
        r.sample_id = "s" + std::to_string(records.size());
        r.dataset = ds;
        r.model_id = model;
        r.ocr_source = src;
        r.correct = ok;
        records.push_back(r);
    };
    push("docvqa", "m1", "easy", true);
    push("docvqa", "m1", "easy", false);
    push("docvqa", "m1", "easy", true);
    push("docvqa", "m2", "easy", false);
    push("textvqa", "m1", "easy", true);
    push("textvqa", "m1", "hard", true);

    std::map<MetricKey, Metrics> by_cell = aggregate(records);
    CHECK(by_cell.size() == 4);
    Metrics m = by_cell.at({"docvqa", "m1", "easy"});
    CHECK(m.total == 3);
    CHECK(m.correct == 2);
    CHECK(m.accuracy() == doctest::Approx(2.0 / 3.0));
    CHECK(by_cell.at({"docvqa", "m2", "easy"}).total == 1);

    std::size_t total = 0;
    std::size_t correct = 0;
    for (const auto& [key, metrics] : by_cell) {
        total += metrics.total;
        correct += metrics.correct;
    }
    CHECK(total == records.size());
    CHECK(correct == 4);
}

TEST_CASE("accuracy formats with four decimals") {
    CHECK(format_accuracy(0.66) == "0.6600");
    CHECK(format_accuracy(1.0) == "1.0000");
    CHECK(format_accuracy(0.0) == "0.0000");
    CHECK(format_accuracy(1.0 / 3.0) == "0.3333");
    CHECK(format_accuracy(2.0 / 3.0) == "0.6667");
}

TEST_CASE("records round-trip through JSON lines") {
    EvalRecord r;
    r.sample_id = "q-17";
    r.dataset = "stvqa";
    r.model_id = "mock:echo-answer";
    r.ocr_source = "base";
    r.ocr_source_kind = SourceKind::groundtruth_override;
    r.prediction = "The answer is “yes”.";
    r.correct = true;
    r.prompt_hash = std::string(64, 'a');
    r.latency_ms = 314;

    std::string line = record_to_json_line(r, true);
    CHECK(line.find('\n') == std::string::npos);
    EvalRecord back = record_from_json_line(line);
    CHECK(back.sample_id == r.sample_id);
    CHECK(back.dataset == r.dataset);
    CHECK(back.model_id == r.model_id);
    CHECK(back.ocr_source == r.ocr_source);
    CHECK(back.ocr_source_kind == r.ocr_source_kind);
    CHECK(back.prediction == r.prediction);
    CHECK(back.correct == r.correct);
    CHECK(back.prompt_hash == r.prompt_hash);
    CHECK(back.latency_ms == 314);

    std::string stable = record_to_json_line(r, false);
    CHECK(stable.find("latency_ms") == std::string::npos);
    CHECK(record_from_json_line(stable).latency_ms == 0);
}

TEST_CASE("record key order is fixed so logs diff cleanly") {
    EvalRecord r;
    r.sample_id = "s";
    r.dataset = "docvqa";
    r.model_id = "m";
    r.ocr_source = "o";
    std::string line = record_to_json_line(r);
    std::size_t a = line.find("\"sample_id\"");
    std::size_t b = line.find("\"dataset\"");
    std::size_t c = line.find("\"model_id\"");
    std::size_t d = line.find("\"prediction\"");
    std::size_t e = line.find("\"prompt_hash\"");
    REQUIRE(a != std::string::npos);
    CHECK(a < b);
    CHECK(b < c);
    CHECK(c < d);
    CHECK(d < e);
}

TEST_CASE("write_records and read_records preserve order and content") {
    std::vector<EvalRecord> records(3);
    records[0].sample_id = "a";
    records[1].sample_id = "b";
    records[2].sample_id = "c";
    for (auto& r : records) {
        r.dataset = "docvqa";
        r.model_id = "m";
        r.ocr_source = "o";
        r.prompt_hash = std::string(64, '0');
    }
    records[1].correct = true;

    std::stringstream buf;
    write_records(buf, records);
    std::vector<EvalRecord> back = read_records(buf);
    REQUIRE(back.size() == 3);
    CHECK(back[0].sample_id == "a");
    CHECK(back[1].correct);
    CHECK(back[2].sample_id == "c");
}

TEST_CASE("malformed record lines are rejected") {
    CHECK_THROWS_AS(record_from_json_line("not json"), MalformedSyntaxError);
    CHECK_THROWS_AS(record_from_json_line("{\"sample_id\": 5}"), SchemaError);
    CHECK_THROWS_AS(record_from_json_line("{}"), SchemaError);
}
