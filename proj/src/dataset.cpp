#include "harness/dataset.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <unordered_set>

#include "harness/errors.hpp"
#include "harness/rng.hpp"

namespace harness {
namespace {

using json = nlohmann::json;

std::string trim(const std::string& s) {
    std::size_t begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    std::size_t end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::string image_basename(const std::string& path) {
    std::size_t slash = path.find_last_of("/\\");
    std::string name = slash == std::string::npos ? path : path.substr(slash + 1);
    std::size_t dot = name.find_last_of('.');
    if (dot != std::string::npos && dot > 0) name = name.substr(0, dot);
    return name;
}

[[noreturn]] void record_error(std::size_t index, const std::string& what) {
    throw SchemaError(what, index);
}

void validate_sample(const Sample& sample, std::size_t index) {
    if (sample.question.empty()) record_error(index, "question is empty");
    if (sample.answers.empty()) record_error(index, "answers array is empty");
    for (const std::string& a : sample.answers) {
        if (trim(a).empty()) record_error(index, "answer is empty after trimming");
    }
    if (sample.image_id.empty()) record_error(index, "image id is empty");
    if (sample.sample_id.empty()) record_error(index, "sample id is empty");
}

std::vector<std::string> answers_from_json(const json& j, std::size_t index) {
    if (!j.is_array()) record_error(index, "'answers' must be an array");
    std::vector<std::string> answers;
    answers.reserve(j.size());
    for (const json& a : j) {
        if (a.is_string()) {
            answers.push_back(a.get<std::string>());
        } else if (a.is_object() && a.contains("answer") && a["answer"].is_string()) {
            // TextVQA-style per-annotator objects.
            answers.push_back(a["answer"].get<std::string>());
        } else {
            record_error(index, "answer entry must be a string");
        }
    }
    return answers;
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open annotation file: " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw MalformedSyntaxError("not valid JSON: " + path.string());
    return j;
}

std::string id_to_string(const json& j, std::size_t index, const char* field) {
    if (j.is_string()) return j.get<std::string>();
    if (j.is_number_integer()) return std::to_string(j.get<long long>());
    record_error(index, std::string("'") + field + "' must be a string or integer");
}

/// DocVQA and StVQA share the {"data": [...]} layout; they differ in the
/// image path field.
std::vector<Sample> load_data_array(const json& root, DatasetId id, const char* id_field,
                                    std::initializer_list<const char*> image_fields) {
    if (!root.is_object() || !root.contains("data") || !root["data"].is_array()) {
        throw SchemaError("annotation file must contain a 'data' array");
    }
    const json& data = root["data"];
    std::vector<Sample> samples;
    samples.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const json& rec = data[i];
        if (!rec.is_object()) record_error(i, "record must be an object");
        Sample s;
        s.dataset = id;
        if (!rec.contains(id_field)) record_error(i, std::string("missing '") + id_field + "'");
        s.sample_id = id_to_string(rec[id_field], i, id_field);
        for (const char* field : image_fields) {
            if (rec.contains(field) && rec[field].is_string()) {
                s.image_id = image_basename(rec[field].get<std::string>());
                break;
            }
        }
        if (!rec.contains("question") || !rec["question"].is_string()) {
            record_error(i, "missing string field 'question'");
        }
        s.question = rec["question"].get<std::string>();
        if (!rec.contains("answers")) record_error(i, "missing field 'answers'");
        s.answers = answers_from_json(rec["answers"], i);
        validate_sample(s, i);
        samples.push_back(std::move(s));
    }
    return samples;
}

std::vector<Sample> load_textvqa(const json& root) {
    if (!root.is_object() || !root.contains("data") || !root["data"].is_array()) {
        throw SchemaError("annotation file must contain a 'data' array");
    }
    const json& data = root["data"];
    std::vector<Sample> samples;
    samples.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const json& rec = data[i];
        if (!rec.is_object()) record_error(i, "record must be an object");
        Sample s;
        s.dataset = DatasetId::textvqa;
        if (!rec.contains("question_id")) record_error(i, "missing 'question_id'");
        s.sample_id = id_to_string(rec["question_id"], i, "question_id");
        if (!rec.contains("image_id") || !rec["image_id"].is_string()) {
            record_error(i, "missing string field 'image_id'");
        }
        s.image_id = rec["image_id"].get<std::string>();
        if (!rec.contains("question") || !rec["question"].is_string()) {
            record_error(i, "missing string field 'question'");
        }
        s.question = rec["question"].get<std::string>();
        if (!rec.contains("answers")) record_error(i, "missing field 'answers'");
        s.answers = answers_from_json(rec["answers"], i);
        validate_sample(s, i);
        samples.push_back(std::move(s));
    }
    return samples;
}

int split_code(Split split) {
    switch (split) {
        case Split::train: return 1;
        case Split::val: return 2;
        case Split::test: return 3;
    }
    return 2;
}

std::vector<Sample> load_ocrvqa(const json& root, Split split) {
    if (!root.is_object()) throw SchemaError("OCRVQA annotations must be a JSON map");
    std::vector<Sample> samples;
    std::size_t index = 0;
    for (const auto& [key, rec] : root.items()) {
        if (!rec.is_object()) record_error(index, "entry '" + key + "' must be an object");
        if (rec.contains("split") && rec["split"].is_number_integer() &&
            rec["split"].get<int>() != split_code(split)) {
            ++index;
            continue;
        }
        if (!rec.contains("questions") || !rec["questions"].is_array() ||
            !rec.contains("answers") || !rec["answers"].is_array()) {
            record_error(index, "entry '" + key + "' needs parallel 'questions' and 'answers' arrays");
        }
        const json& questions = rec["questions"];
        const json& answers = rec["answers"];
        if (questions.size() != answers.size()) {
            record_error(index, "entry '" + key + "': questions and answers lengths differ");
        }
        for (std::size_t q = 0; q < questions.size(); ++q) {
            if (!questions[q].is_string() || !answers[q].is_string()) {
                record_error(index, "entry '" + key + "': question and answer must be strings");
            }
            Sample s;
            s.dataset = DatasetId::ocrvqa;
            s.sample_id = key + "#" + std::to_string(q);
            s.image_id = key;
            s.question = questions[q].get<std::string>();
            s.answers = {answers[q].get<std::string>()};
            validate_sample(s, index);
            samples.push_back(std::move(s));
        }
        ++index;
    }
    return samples;
}

std::filesystem::path resolve_annotation_file(const std::filesystem::path& path, DatasetId id,
                                              Split split) {
    if (std::filesystem::is_regular_file(path)) return path;
    if (!std::filesystem::is_directory(path)) {
        throw IoError("annotation path does not exist: " + path.string());
    }
    std::vector<std::string> candidates;
    std::string split_name(to_string(split));
    switch (id) {
        case DatasetId::docvqa:
            candidates = {split_name + "_v1.0_withQT.json", split_name + "_v1.0.json",
                          split_name + ".json"};
            break;
        case DatasetId::ocrvqa:
            candidates = {"dataset.json"};
            break;
        case DatasetId::stvqa:
            candidates = {split_name + "_task_3.json", split_name + "_task3.json",
                          split_name + ".json"};
            break;
        case DatasetId::textvqa:
            candidates = {"TextVQA_0.5.1_" + split_name + ".json", split_name + ".json"};
            break;
    }
    for (const std::string& name : candidates) {
        std::filesystem::path candidate = path / name;
        if (std::filesystem::is_regular_file(candidate)) return candidate;
    }
    throw IoError("no " + std::string(to_string(id)) + " annotation file found under " +
                  path.string());
}

void check_unique_ids(const std::vector<Sample>& samples) {
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!seen.insert(samples[i].sample_id).second) {
            record_error(i, "duplicate sample id '" + samples[i].sample_id + "'");
        }
    }
}

}  // namespace

DatasetId dataset_id_from_string(std::string_view s) {
    if (s == "docvqa") return DatasetId::docvqa;
    if (s == "ocrvqa") return DatasetId::ocrvqa;
    if (s == "stvqa") return DatasetId::stvqa;
    if (s == "textvqa") return DatasetId::textvqa;
    throw ConfigError("unknown dataset '" + std::string(s) + "'");
}

std::string_view to_string(DatasetId id) {
    switch (id) {
        case DatasetId::docvqa: return "docvqa";
        case DatasetId::ocrvqa: return "ocrvqa";
        case DatasetId::stvqa: return "stvqa";
        case DatasetId::textvqa: return "textvqa";
    }
    return "docvqa";
}

Split split_from_string(std::string_view s) {
    if (s == "train") return Split::train;
    if (s == "val" || s == "validation") return Split::val;
    if (s == "test") return Split::test;
    throw ConfigError("unknown split '" + std::string(s) + "'");
}

std::string_view to_string(Split split) {
    switch (split) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "val";
}

std::vector<Sample> load_dataset(const std::filesystem::path& path, DatasetId id, Split split) {
    std::filesystem::path file = resolve_annotation_file(path, id, split);
    json root = read_json_file(file);
    std::vector<Sample> samples;
    switch (id) {
        case DatasetId::docvqa:
            samples = load_data_array(root, id, "questionId", {"image", "image_id"});
            break;
        case DatasetId::stvqa:
            samples = load_data_array(root, id, "question_id", {"file_path", "file_name"});
            break;
        case DatasetId::textvqa:
            samples = load_textvqa(root);
            break;
        case DatasetId::ocrvqa:
            samples = load_ocrvqa(root, split);
            break;
    }
    check_unique_ids(samples);
    return samples;
}

std::vector<Sample> sample_subset(const std::vector<Sample>& samples, int n, std::uint64_t seed) {
    if (n < 1 || static_cast<std::size_t>(n) > samples.size()) {
        throw ConfigError("subset size " + std::to_string(n) + " out of range for " +
                          std::to_string(samples.size()) + " samples");
    }
    std::vector<std::size_t> indices =
        draw_without_replacement(samples.size(), static_cast<std::size_t>(n), seed);
    std::sort(indices.begin(), indices.end());
    std::vector<Sample> out;
    out.reserve(indices.size());
    for (std::size_t idx : indices) out.push_back(samples[idx]);
    return out;
}

}  // namespace harness
