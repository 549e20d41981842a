#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "harness/dataset.hpp"
#include "harness/evaluator.hpp"
#include "harness/gateway.hpp"
#include "harness/layout.hpp"
#include "harness/ocr_store.hpp"
#include "harness/prompt.hpp"

namespace harness {

struct DatasetConfig {
    std::string name;  ///< one of docvqa, ocrvqa, stvqa, textvqa
    DatasetId id = DatasetId::docvqa;
    std::filesystem::path path;
    Split split = Split::val;
};

struct OcrSourceConfig {
    std::string name;
    std::filesystem::path corpus;
    OcrFormat format = OcrFormat::canonical;
    std::optional<std::filesystem::path> corrections;
    double min_confidence = 0.0;
};

/// How one dataset's documents become prompt text.
struct RouteConfig {
    SerializerOptions serializer;
    TemplateId template_id = TemplateId::generic;
};

struct PromptPolicy {
    int shots_k = 3;
    std::uint64_t shots_seed = 0;
    std::optional<std::filesystem::path> shot_pool;
    std::size_t char_budget = 32768;
};

struct SubsetConfig {
    int n = 0;
    std::uint64_t seed = 0;
};

struct ExperimentConfig {
    std::vector<DatasetConfig> datasets;
    std::vector<ModelConfig> models;
    std::vector<OcrSourceConfig> ocr_sources;
    std::map<std::string, RouteConfig> routes;  ///< keyed by dataset name
    PromptPolicy prompt;
    std::optional<SubsetConfig> subset;
    std::filesystem::path output_dir;
    std::filesystem::path cache_dir;  ///< defaults to output_dir / "cache"
    int max_in_flight = 4;
    std::string raw_text;  ///< original config document, embedded in run metadata

    /// Effective route for a dataset: the configured override, else markdown +
    /// document template for docvqa and plain + generic template for the rest.
    RouteConfig route_for(const std::string& dataset_name) const;

    void validate() const;
};

/// Parses and validates a declarative JSON experiment config. Input paths
/// resolve against the config file's directory; output_dir resolves against
/// the working directory.
ExperimentConfig load_config(const std::filesystem::path& file);

struct TrialSpec {
    std::string sample_id;
    std::string dataset;
    std::string model_id;
    std::string ocr_source;

    /// Stable identity used for resume matching and log ordering.
    std::string key() const;
};

struct RunPlan {
    std::vector<TrialSpec> trials;
    std::string plan_hash;
};

/// Expands the config into the full trial matrix: datasets x samples x models
/// x ocr sources, subset applied per dataset first. Equal configs always
/// produce equal plans and equal hashes.
RunPlan plan_runs(const ExperimentConfig& cfg);

struct ExecuteOptions {
    /// Executes at most this many pending trials, then stops; the journal
    /// keeps what finished so a later call resumes. Used to test resumption.
    std::size_t max_trials = static_cast<std::size_t>(-1);
    /// Replaces every model's transport; intended for tests.
    BackendFn backend_override;
    Clock* clock = nullptr;  ///< defaults to the process steady clock
};

struct RunResult {
    std::vector<EvalRecord> records;  ///< canonical order (sorted by trial key)
    std::size_t trial_errors = 0;
    std::size_t executed = 0;   ///< trials run by this invocation
    std::size_t resumed = 0;    ///< trials satisfied by the journal
    std::filesystem::path run_dir;
};

/// Runs every trial not already completed in the run directory's journal.
/// Progress is journaled immediately per trial; on completion the canonical
/// run log, reports, and metadata are (re)written. Per-trial failures are
/// recorded and skipped.
RunResult execute(const RunPlan& plan, const ExperimentConfig& cfg,
                  const ExecuteOptions& opts = {});

struct ReportBundle {
    std::filesystem::path markdown;
    std::filesystem::path csv;
    std::filesystem::path metadata;
};

/// Writes report.md (accuracy grid, methods x datasets), report.csv (one row
/// per dataset/model/source cell), and metadata.json into `out_dir`.
/// `dataset_order` fixes the grid's column order; unknown datasets found in
/// records are appended alphabetically.
ReportBundle emit_report(const std::vector<EvalRecord>& records,
                         const std::vector<std::string>& dataset_order,
                         const std::string& plan_hash, const std::string& config_text,
                         std::size_t trial_errors, const std::filesystem::path& out_dir);

/// Rebuilds the report bundle from a run directory's canonical log.
ReportBundle regenerate_report(const std::filesystem::path& run_dir);

/// Reads the canonical run log: a header object line, then one record per
/// line. Returns the records and fills `plan_hash` from the header.
std::vector<EvalRecord> read_run_log(const std::filesystem::path& file, std::string* plan_hash);

inline const char* kRunLogName = "records.jsonl";
inline const char* kJournalName = "journal.jsonl";

}  // namespace harness
