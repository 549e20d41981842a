#include <CLI11.hpp>

#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include "harness/errors.hpp"
#include "harness/layout.hpp"
#include "harness/ocr_store.hpp"
#include "harness/orchestrator.hpp"

namespace {

namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitTrialErrors = 2;
constexpr int kExitFatal = 3;

int cmd_run(const std::string& config_path, const std::string& output_dir, long long max_trials) {
    harness::ExperimentConfig cfg = harness::load_config(config_path);
    if (!output_dir.empty()) {
        bool cache_followed_output = cfg.cache_dir == cfg.output_dir / "cache";
        cfg.output_dir = output_dir;
        if (cache_followed_output) cfg.cache_dir = cfg.output_dir / "cache";
    }
    harness::RunPlan plan = harness::plan_runs(cfg);
    harness::ExecuteOptions opts;
    if (max_trials >= 0) opts.max_trials = static_cast<std::size_t>(max_trials);
    harness::RunResult result = harness::execute(plan, cfg, opts);

    std::cout << "plan_hash: " << plan.plan_hash << "\n"
              << "trials planned: " << plan.trials.size() << "\n"
              << "resumed from journal: " << result.resumed << "\n"
              << "executed now: " << result.executed << "\n"
              << "records: " << result.records.size() << "\n"
              << "trial errors: " << result.trial_errors << "\n"
              << "run dir: " << result.run_dir.string() << "\n";
    if (!result.records.empty()) {
        std::cout << "report: " << (result.run_dir / "report.md").string() << "\n";
    }
    return result.trial_errors > 0 ? kExitTrialErrors : kExitOk;
}

int cmd_plan(const std::string& config_path) {
    harness::ExperimentConfig cfg = harness::load_config(config_path);
    harness::RunPlan plan = harness::plan_runs(cfg);
    std::cout << "trials: " << plan.trials.size() << "\n"
              << "plan_hash: " << plan.plan_hash << "\n";
    return kExitOk;
}

int cmd_report(const std::string& run_dir) {
    harness::ReportBundle bundle = harness::regenerate_report(run_dir);
    std::cout << "report: " << bundle.markdown.string() << "\n"
              << "csv: " << bundle.csv.string() << "\n"
              << "metadata: " << bundle.metadata.string() << "\n";
    return kExitOk;
}

int cmd_validate_ocr(const std::string& corpus_path, const std::string& format) {
    harness::OcrFormat fmt = harness::ocr_format_from_string(format);
    try {
        harness::OcrCorpus corpus = harness::load_corpus(corpus_path, fmt);
        std::size_t tokens = 0;
        for (const auto& [id, doc] : corpus) tokens += doc.tokens.size();
        std::cout << "OK: " << corpus.size() << " documents, " << tokens << " tokens\n";
        return kExitOk;
    } catch (const harness::MalformedSyntaxError& e) {
        std::cerr << "INVALID (syntax): " << e.what() << "\n";
    } catch (const harness::SchemaError& e) {
        std::cerr << "INVALID (schema): " << e.what() << "\n";
    }
    return kExitConfig;
}

int cmd_serialize(const std::string& corpus_path, const std::string& image_id,
                  const std::string& mode, const std::string& format) {
    harness::OcrCorpus corpus =
        harness::load_corpus(corpus_path, harness::ocr_format_from_string(format));
    auto it = corpus.find(image_id);
    if (it == corpus.end()) {
        throw harness::ConfigError("image '" + image_id + "' not found in corpus");
    }
    harness::SerializerOptions opts;
    opts.mode = harness::serializer_mode_from_string(mode);
    std::cout << harness::serialize(it->second, opts) << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Text-rich VQA evaluation harness"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output_dir;
    long long max_trials = -1;
    CLI::App* run = app.add_subcommand("run", "Plan and execute an experiment config");
    run->add_option("--config", config_path, "experiment config file")->required();
    run->add_option("--output-dir", output_dir, "override the config's output directory");
    run->add_option("--max-trials", max_trials, "stop after this many new trials (for testing)");

    std::string plan_config;
    CLI::App* plan = app.add_subcommand("plan", "Print the trial count and plan hash");
    plan->add_option("--config", plan_config, "experiment config file")->required();

    std::string run_dir;
    CLI::App* report = app.add_subcommand("report", "Rebuild reports from a run directory");
    report->add_option("--run", run_dir, "run directory with records.jsonl")->required();

    std::string corpus_path;
    std::string corpus_format = "canonical";
    CLI::App* validate = app.add_subcommand("validate-ocr", "Check an OCR corpus file");
    validate->add_option("--corpus", corpus_path, "OCR corpus file")->required();
    validate->add_option("--format", corpus_format, "canonical or paddle");

    std::string ser_corpus;
    std::string ser_image;
    std::string ser_mode = "plain";
    std::string ser_format = "canonical";
    CLI::App* serialize = app.add_subcommand("serialize", "Print one document's serialization");
    serialize->add_option("--corpus", ser_corpus, "OCR corpus file")->required();
    serialize->add_option("--image", ser_image, "image id to serialize")->required();
    serialize->add_option("--mode", ser_mode, "markdown or plain");
    serialize->add_option("--format", ser_format, "canonical or paddle");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, output_dir, max_trials);
        if (plan->parsed()) return cmd_plan(plan_config);
        if (report->parsed()) return cmd_report(run_dir);
        if (validate->parsed()) return cmd_validate_ocr(corpus_path, corpus_format);
        if (serialize->parsed()) return cmd_serialize(ser_corpus, ser_image, ser_mode, ser_format);
    } catch (const harness::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const harness::SchemaError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const harness::MalformedSyntaxError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const harness::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitFatal;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFatal;
    }
    return kExitConfig;
}
