#include "harness/prompt.hpp"

#include <nlohmann/json.hpp>

#include <fstream>

#include "harness/errors.hpp"
#include "harness/rng.hpp"

namespace harness {
namespace {

using json = nlohmann::json;

std::string substitute(std::string_view tmpl, std::string_view ocr, std::string_view question,
                       std::string_view examples) {
    std::string out;
    out.reserve(tmpl.size() + ocr.size() + question.size() + examples.size());
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        std::size_t open = tmpl.find('{', pos);
        if (open == std::string_view::npos) {
            out.append(tmpl.substr(pos));
            break;
        }
        out.append(tmpl.substr(pos, open - pos));
        std::size_t close = tmpl.find('}', open);
        std::string_view key = tmpl.substr(open + 1, close - open - 1);
        if (key == "ocr") {
            out.append(ocr);
        } else if (key == "question") {
            out.append(question);
        } else if (key == "examples") {
            out.append(examples);
        }
        pos = close + 1;
    }
    return out;
}

}  // namespace

const std::string_view kDocVqaTemplate =
    "There is a document image. The image can be formulated in the following Markdown format "
    "{ocr}. Please answer the question {question} following the examples {examples}";

const std::string_view kGenericTemplate =
    "There is an image. You can see some texts on it. The other model tells you that these texts "
    "may be {ocr}. Please answer the question {question} following the examples {examples}";

TemplateId template_id_from_string(std::string_view s) {
    if (s == "docvqa") return TemplateId::docvqa;
    if (s == "generic") return TemplateId::generic;
    throw ConfigError("unknown template '" + std::string(s) + "' (expected docvqa or generic)");
}

std::string_view to_string(TemplateId id) {
    return id == TemplateId::docvqa ? "docvqa" : "generic";
}

const std::vector<Shot>& default_shots() {
    static const std::vector<Shot> shots = {
        {"How many conferences were held in the fall of 1968?",
         "According to the image, question and guidance, there are four conferences were held in "
         "the fall of 1968."},
        {"What is the Email id of Karen D Mittleman, PhD?",
         "Based on the given image and guidance, the answer should be kmittle@dwrite.com."},
        {"What is the circulation of the journal ‘RN’?", "The answer is 275,000."},
    };
    return shots;
}

std::string render_shots(std::span<const Shot> shots) {
    std::string out;
    for (std::size_t i = 0; i < shots.size(); ++i) {
        if (i) out += '\n';
        out += "Question: ";
        out += shots[i].question;
        out += "\nAnswer: ";
        out += shots[i].answer;
    }
    return out;
}

std::string render_template(TemplateId id, std::string_view ocr_text, std::string_view question,
                            std::string_view shots_text) {
    std::string_view tmpl = id == TemplateId::docvqa ? kDocVqaTemplate : kGenericTemplate;
    return substitute(tmpl, ocr_text, question, shots_text);
}

std::vector<Shot> select_shots(const std::vector<Shot>& pool, int k, std::uint64_t seed) {
    if (k < 0 || static_cast<std::size_t>(k) > pool.size()) {
        throw InsufficientPoolError("requested " + std::to_string(k) + " shots from a pool of " +
                                    std::to_string(pool.size()));
    }
    std::vector<Shot> out;
    out.reserve(static_cast<std::size_t>(k));
    for (std::size_t idx : draw_without_replacement(pool.size(), static_cast<std::size_t>(k), seed)) {
        out.push_back(pool[idx]);
    }
    return out;
}

Prompt build_prompt(TemplateId id, std::string_view ocr_text, std::string_view question,
                    std::span<const Shot> shots, std::size_t char_budget) {
    if (question.empty()) throw ConfigError("question must be non-empty");
    for (const Shot& s : shots) {
        if (s.question.empty() || s.answer.empty()) {
            throw ConfigError("shot question and answer must be non-empty");
        }
    }
    std::string shots_text = render_shots(shots);
    std::size_t fixed_len = render_template(id, "", question, shots_text).size();
    if (fixed_len > char_budget) {
        throw BudgetError("prompt of " + std::to_string(fixed_len) +
                          " chars exceeds budget " + std::to_string(char_budget) +
                          " before any OCR text");
    }
    std::size_t retained = std::min(ocr_text.size(), char_budget - fixed_len);

    Prompt prompt;
    prompt.template_id = id;
    prompt.truncated = retained < ocr_text.size();
    prompt.ocr_text_chars = static_cast<int>(retained);
    prompt.shot_count = static_cast<int>(shots.size());
    prompt.rendered = render_template(id, ocr_text.substr(0, retained), question, shots_text);
    return prompt;
}

std::vector<Shot> load_shot_pool(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open shot pool: " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw MalformedSyntaxError("shot pool is not valid JSON: " + path.string());
    if (!j.is_array()) throw SchemaError("shot pool must be a JSON array");
    std::vector<Shot> pool;
    pool.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        const json& entry = j[i];
        if (!entry.is_object() || !entry.contains("question") || !entry.contains("answer") ||
            !entry["question"].is_string() || !entry["answer"].is_string()) {
            throw SchemaError("shot must be {\"question\", \"answer\"}", i);
        }
        Shot shot{entry["question"].get<std::string>(), entry["answer"].get<std::string>()};
        if (shot.question.empty() || shot.answer.empty()) {
            throw SchemaError("shot question and answer must be non-empty", i);
        }
        pool.push_back(std::move(shot));
    }
    return pool;
}

}  // namespace harness
