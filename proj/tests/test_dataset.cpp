#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "harness/dataset.hpp"
#include "harness/errors.hpp"

using namespace harness;

namespace {

std::filesystem::path fixture(const char* rel) {
    return std::filesystem::path(HARNESS_TEST_FIXTURES) / rel;
}

std::filesystem::path temp_json(const std::string& name, const std::string& content) {
    std::filesystem::path p = std::filesystem::temp_directory_path() / name;
    std::ofstream out(p, std::ios::trunc);
    out << content;
    return p;
}

}  // namespace

TEST_CASE("docvqa annotations load with stringified ids and basename image ids") {
    std::vector<Sample> samples =
        load_dataset(fixture("datasets/docvqa/val_v1.0_withQT.json"), DatasetId::docvqa);
    REQUIRE(samples.size() == 5);
    CHECK(samples[0].sample_id == "49153");
    CHECK(samples[0].image_id == "pybv0228_81");
    CHECK(samples[0].question == "What is the 'actual' value per 1000, during the year 1975?");
    CHECK(samples[0].answers == std::vector<std::string>{"0.28"});
    CHECK(samples[0].dataset == DatasetId::docvqa);
    // Two questions on one image keep distinct sample ids, same image id.
    CHECK(samples[1].image_id == "txpp0227_1");
    CHECK(samples[2].image_id == "txpp0227_1");
    CHECK(samples[1].sample_id != samples[2].sample_id);
    CHECK(samples[1].answers.size() == 2);
}

TEST_CASE("a dataset directory resolves the conventional file for the split") {
    std::vector<Sample> from_dir =
        load_dataset(fixture("datasets/docvqa"), DatasetId::docvqa, Split::val);
    std::vector<Sample> from_file =
        load_dataset(fixture("datasets/docvqa/val_v1.0_withQT.json"), DatasetId::docvqa);
    CHECK(from_dir == from_file);
    CHECK_THROWS_AS(load_dataset(fixture("datasets/docvqa"), DatasetId::docvqa, Split::train),
                    IoError);
}

TEST_CASE("stvqa annotations accept file_path or file_name for the image") {
    std::vector<Sample> samples =
        load_dataset(fixture("datasets/stvqa"), DatasetId::stvqa, Split::val);
    REQUIRE(samples.size() == 3);
    CHECK(samples[0].sample_id == "301");
    CHECK(samples[0].image_id == "img_5023");
    CHECK(samples[2].image_id == "img_5102");
    CHECK(samples[1].answers == std::vector<std::string>{"73", "no. 73"});
    CHECK(samples[0].dataset == DatasetId::stvqa);
}

TEST_CASE("textvqa annotations keep image ids verbatim") {
    std::vector<Sample> samples =
        load_dataset(fixture("datasets/textvqa"), DatasetId::textvqa, Split::val);
    REQUIRE(samples.size() == 2);
    CHECK(samples[0].sample_id == "34602");
    CHECK(samples[0].image_id == "0054c91397f2fe05");
    CHECK(samples[0].answers.size() == 10);
    CHECK(samples[1].question == "what time does the clock read?");
}

TEST_CASE("textvqa per-annotator answer objects flatten to strings") {
    auto p = temp_json("textvqa_objs.json", R"({"data": [{
        "question_id": 1, "image_id": "img01", "question": "what is shown?",
        "answers": [{"answer": "a cat", "answer_confidence": "yes"},
                    {"answer": "cat", "answer_confidence": "maybe"}]}]})");
    std::vector<Sample> samples = load_dataset(p, DatasetId::textvqa);
    REQUIRE(samples.size() == 1);
    CHECK(samples[0].answers == std::vector<std::string>{"a cat", "cat"});
}

TEST_CASE("ocrvqa expands per-image question lists and filters by split") {
    std::vector<Sample> val = load_dataset(fixture("datasets/ocrvqa"), DatasetId::ocrvqa, Split::val);
    REQUIRE(val.size() == 3);
    // Map iteration order is the JSON library's; ids are key#index.
    std::vector<std::string> ids;
    for (const Sample& s : val) ids.push_back(s.sample_id);
    std::sort(ids.begin(), ids.end());
    CHECK(ids == std::vector<std::string>{"0521866720#0", "B000A0S46K#0", "B000A0S46K#1"});
    for (const Sample& s : val) {
        CHECK(s.image_id == s.sample_id.substr(0, s.sample_id.find('#')));
        CHECK(s.answers.size() == 1);
        CHECK(s.dataset == DatasetId::ocrvqa);
    }

    std::vector<Sample> train =
        load_dataset(fixture("datasets/ocrvqa"), DatasetId::ocrvqa, Split::train);
    REQUIRE(train.size() == 1);
    CHECK(train[0].sample_id == "B00BT0J8ZS#0");
    std::vector<Sample> test =
        load_dataset(fixture("datasets/ocrvqa"), DatasetId::ocrvqa, Split::test);
    CHECK(test.size() == 2);
}

TEST_CASE("ocrvqa rejects mismatched question and answer lists") {
    auto p = temp_json("ocrvqa_bad.json",
                       R"({"K1": {"questions": ["a?", "b?"], "answers": ["only one"], "split": 2}})");
    CHECK_THROWS_AS(load_dataset(p, DatasetId::ocrvqa, Split::val), SchemaError);
}

TEST_CASE("duplicate sample ids are rejected") {
    auto p = temp_json("docvqa_dup.json", R"({"data": [
        {"questionId": 7, "question": "q1?", "answers": ["a"], "image": "x/i1.png"},
        {"questionId": 7, "question": "q2?", "answers": ["b"], "image": "x/i2.png"}]})");
    CHECK_THROWS_AS(load_dataset(p, DatasetId::docvqa), SchemaError);
}

TEST_CASE("records with missing or empty fields are rejected") {
    CHECK_THROWS_AS(load_dataset(temp_json("d1.json", R"({"data": [
        {"questionId": 1, "question": "q?", "answers": [], "image": "i.png"}]})"),
                                 DatasetId::docvqa),
                    SchemaError);
    CHECK_THROWS_AS(load_dataset(temp_json("d2.json", R"({"data": [
        {"questionId": 1, "question": "q?", "answers": ["  "], "image": "i.png"}]})"),
                                 DatasetId::docvqa),
                    SchemaError);
    CHECK_THROWS_AS(load_dataset(temp_json("d3.json", R"({"data": [
        {"questionId": 1, "answers": ["a"], "image": "i.png"}]})"),
                                 DatasetId::docvqa),
                    SchemaError);
    CHECK_THROWS_AS(load_dataset(temp_json("d4.json", R"({"data": [
        {"questionId": 1, "question": "q?", "answers": ["a"]}]})"),
                                 DatasetId::docvqa),
                    SchemaError);
    CHECK_THROWS_AS(load_dataset(temp_json("d5.json", R"({"rows": []})"), DatasetId::docvqa),
                    SchemaError);
}

TEST_CASE("missing files and malformed JSON raise distinct errors") {
    CHECK_THROWS_AS(load_dataset("/nonexistent/anno.json", DatasetId::docvqa), IoError);
    CHECK_THROWS_AS(load_dataset(temp_json("bad_syntax.json", "{"), DatasetId::docvqa),
                    MalformedSyntaxError);
}

TEST_CASE("sample_subset draws distinct items and keeps file order") {
    std::vector<Sample> samples =
        load_dataset(fixture("datasets/docvqa"), DatasetId::docvqa, Split::val);
    std::vector<Sample> sub = sample_subset(samples, 3, 42);
    REQUIRE(sub.size() == 3);
    CHECK(sub == sample_subset(samples, 3, 42));

    // Items appear in their original relative order.
    std::size_t prev = 0;
    for (const Sample& s : sub) {
        std::size_t pos = 0;
        while (samples[pos].sample_id != s.sample_id) ++pos;
        CHECK(pos >= prev);
        prev = pos + 1;
    }

    CHECK(sample_subset(samples, static_cast<int>(samples.size()), 0) == samples);
    CHECK_THROWS_AS(sample_subset(samples, 0, 0), ConfigError);
    CHECK_THROWS_AS(sample_subset(samples, 6, 0), ConfigError);
}

TEST_CASE("dataset and split names round-trip") {
    for (const char* name : {"docvqa", "ocrvqa", "stvqa", "textvqa"}) {
        CHECK(to_string(dataset_id_from_string(name)) == name);
    }
    CHECK_THROWS_AS(dataset_id_from_string("vqav2"), ConfigError);
    for (const char* name : {"train", "val", "test"}) {
        CHECK(to_string(split_from_string(name)) == name);
    }
    CHECK(split_from_string("validation") == Split::val);
    CHECK_THROWS_AS(split_from_string("dev"), ConfigError);
}
