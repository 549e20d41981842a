#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace harness {

enum class DatasetId { docvqa, ocrvqa, stvqa, textvqa };

DatasetId dataset_id_from_string(std::string_view s);
std::string_view to_string(DatasetId id);

enum class Split { train, val, test };

Split split_from_string(std::string_view s);
std::string_view to_string(Split split);

/// One VQA item. `answers` keeps every reference answer verbatim; all
/// normalization happens in the evaluator.
struct Sample {
    std::string sample_id;
    std::string image_id;
    std::string question;
    std::vector<std::string> answers;
    DatasetId dataset = DatasetId::docvqa;

    bool operator==(const Sample&) const = default;
};

/// Loads a published annotation file into canonical samples.
///
/// `path` may be the annotation file itself or a dataset root directory,
/// in which case the conventional file name of the chosen split is looked
/// up. image ids are the image file's base name without extension so they
/// match OCR corpus keys; OCRVQA keeps its map keys.
///
/// The split parameter selects the annotation file when `path` is a
/// directory, and filters records for OCRVQA whose single file carries a
/// per-record split field.
std::vector<Sample> load_dataset(const std::filesystem::path& path, DatasetId id,
                                 Split split = Split::val);

/// n distinct samples drawn with a seeded generator, returned in their
/// original order. Stable for fixed (samples, n, seed).
std::vector<Sample> sample_subset(const std::vector<Sample>& samples, int n, std::uint64_t seed);

}  // namespace harness
