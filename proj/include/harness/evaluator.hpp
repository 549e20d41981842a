#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "harness/ocr_store.hpp"

namespace harness {

/// Identifies the text-normalization rules baked into normalize(). Recorded in
/// run metadata so scores from different harness builds are comparable only
/// when the version strings agree.
inline constexpr std::string_view kNormalizationVersion = "norm-1";

/// Canonicalizes text for containment matching:
///   - common Unicode punctuation folds to its ASCII form (curly quotes,
///     dashes, ellipsis, fullwidth forms, common ligatures),
///   - non-breaking and typographic spaces fold to a plain space,
///   - ASCII and Latin-1 letters lowercase,
///   - whitespace runs collapse to a single space, ends trimmed,
///   - punctuation in `.,!?;:'"()[]` is stripped greedily from word edges.
/// Idempotent: normalize(normalize(x)) == normalize(x).
std::string normalize(std::string_view text);

enum class MatchMode {
    substring,      ///< answer may appear anywhere in the prediction
    word_boundary,  ///< answer must align with token boundaries
};

/// Containment accuracy for one sample: true when any normalized reference
/// answer occurs inside the normalized prediction. An answer that normalizes
/// to the empty string never matches.
bool is_correct(std::string_view prediction, const std::vector<std::string>& answers,
                MatchMode mode = MatchMode::substring);

/// One scored trial. `ocr_source` is the configured source name (for report
/// rows); `ocr_source_kind` says whether tokens came from an external engine
/// file or a groundtruth override.
struct EvalRecord {
    std::string sample_id;
    std::string dataset;
    std::string model_id;
    std::string ocr_source;
    SourceKind ocr_source_kind = SourceKind::external_file;
    std::string prediction;
    bool correct = false;
    std::string prompt_hash;
    std::int64_t latency_ms = 0;
};

struct Metrics {
    std::size_t total = 0;
    std::size_t correct = 0;

    double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / total; }
};

/// Group key for aggregation: one report cell per (dataset, model, source).
struct MetricKey {
    std::string dataset;
    std::string model_id;
    std::string ocr_source;

    bool operator<(const MetricKey& other) const {
        if (dataset != other.dataset) return dataset < other.dataset;
        if (model_id != other.model_id) return model_id < other.model_id;
        return ocr_source < other.ocr_source;
    }
};

std::map<MetricKey, Metrics> aggregate(const std::vector<EvalRecord>& records);

/// Fixed four-decimal rendering used by every report surface.
std::string format_accuracy(double accuracy);

/// Serializes one record as a single-line JSON object with a fixed key order.
/// `include_latency` is off for canonical run logs, which must be byte-stable
/// across repeated runs.
std::string record_to_json_line(const EvalRecord& record, bool include_latency = false);

EvalRecord record_from_json_line(const std::string& line);

void write_records(std::ostream& out, const std::vector<EvalRecord>& records,
                   bool include_latency = false);

std::vector<EvalRecord> read_records(std::istream& in);

}  // namespace harness
