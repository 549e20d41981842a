#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace harness {

/// One in-context question/answer example.
struct Shot {
    std::string question;
    std::string answer;

    bool operator==(const Shot&) const = default;
};

enum class TemplateId { docvqa, generic };

TemplateId template_id_from_string(std::string_view s);
std::string_view to_string(TemplateId id);

/// Instruction templates with {ocr}, {question} and {examples} placeholders.
extern const std::string_view kDocVqaTemplate;
extern const std::string_view kGenericTemplate;

struct Prompt {
    TemplateId template_id = TemplateId::generic;
    std::string rendered;
    int shot_count = 0;
    int ocr_text_chars = 0;  // OCR characters retained after any truncation
    bool truncated = false;
};

/// The three fixed examples used by default.
const std::vector<Shot>& default_shots();

/// "Question: ...\nAnswer: ..." blocks joined by newlines.
std::string render_shots(std::span<const Shot> shots);

/// Pure placeholder substitution, no budget handling.
std::string render_template(TemplateId id, std::string_view ocr_text, std::string_view question,
                            std::string_view shots_text);

/// k distinct shots drawn without replacement from a seeded generator.
/// Same (pool, k, seed) always selects the same shots in the same order.
std::vector<Shot> select_shots(const std::vector<Shot>& pool, int k, std::uint64_t seed);

/// Assembles the full prompt. When the total would exceed char_budget the
/// OCR text is cut at its tail; template, shots and question are never cut.
/// Throws BudgetError when they alone do not fit.
Prompt build_prompt(TemplateId id, std::string_view ocr_text, std::string_view question,
                    std::span<const Shot> shots, std::size_t char_budget);

/// Loads a JSON shot pool: [{"question": str, "answer": str}, ...].
std::vector<Shot> load_shot_pool(const std::filesystem::path& path);

}  // namespace harness
