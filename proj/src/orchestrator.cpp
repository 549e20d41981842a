#include "harness/orchestrator.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <ctime>
#include <fstream>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "harness/errors.hpp"
#include "harness/hashing.hpp"

namespace harness {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& context) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : allowed) {
            if (it.key() == k) {
                known = true;
                break;
            }
        }
        if (!known) throw ConfigError(context + ": unknown key '" + it.key() + "'");
    }
}

std::string get_string(const json& obj, const char* key, const std::string& context) {
    if (!obj.contains(key) || !obj[key].is_string() || obj[key].get<std::string>().empty()) {
        throw ConfigError(context + ": '" + key + "' must be a non-empty string");
    }
    return obj[key].get<std::string>();
}

double get_number(const json& obj, const char* key, double fallback, const std::string& context) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number()) throw ConfigError(context + ": '" + key + "' must be a number");
    return obj[key].get<double>();
}

int get_int(const json& obj, const char* key, int fallback, const std::string& context) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number_integer()) {
        throw ConfigError(context + ": '" + key + "' must be an integer");
    }
    return obj[key].get<int>();
}

std::uint64_t get_uint64(const json& obj, const char* key, std::uint64_t fallback,
                         const std::string& context) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number_unsigned() && !obj[key].is_number_integer()) {
        throw ConfigError(context + ": '" + key + "' must be a non-negative integer");
    }
    if (obj[key].is_number_integer() && obj[key].get<std::int64_t>() < 0) {
        throw ConfigError(context + ": '" + key + "' must be a non-negative integer");
    }
    return obj[key].get<std::uint64_t>();
}

/// Input paths in the config resolve against the config file's directory.
fs::path resolve_input(const fs::path& base, const std::string& value) {
    fs::path p(value);
    if (p.is_absolute()) return p.lexically_normal();
    return (base / p).lexically_normal();
}

RouteConfig default_route(const std::string& dataset_name) {
    RouteConfig r;
    if (dataset_name == "docvqa") {
        r.serializer.mode = SerializerMode::markdown;
        r.template_id = TemplateId::docvqa;
    } else {
        r.serializer.mode = SerializerMode::plain;
        r.template_id = TemplateId::generic;
    }
    return r;
}

std::string iso_utc_now() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string record_key(const EvalRecord& r) {
    return r.dataset + "/" + r.sample_id + "/" + r.model_id + "/" + r.ocr_source;
}

bool record_less(const EvalRecord& a, const EvalRecord& b) {
    if (a.dataset != b.dataset) return a.dataset < b.dataset;
    if (a.sample_id != b.sample_id) return a.sample_id < b.sample_id;
    if (a.model_id != b.model_id) return a.model_id < b.model_id;
    return a.ocr_source < b.ocr_source;
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file_atomic(const fs::path& path, const std::string& content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out << content;
        if (!out.flush()) throw IoError("cannot flush " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("cannot replace " + path.string() + ": " + ec.message());
}

std::string csv_field(const std::string& value) {
    if (value.find_first_of(",\"\n") == std::string::npos) return value;
    std::string out = "\"";
    for (char c : value) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

/// Per-dataset resources shared by all workers during execute().
struct DatasetRuntime {
    RouteConfig route;
    std::unordered_map<std::string, const Sample*> samples;  ///< by sample_id
};

struct SourceRuntime {
    OcrCorpus corpus;
    OcrCorrectionSet corrections;
    bool has_corrections = false;
    double min_confidence = 0.0;
    SourceKind kind = SourceKind::external_file;
};

}  // namespace

RouteConfig ExperimentConfig::route_for(const std::string& dataset_name) const {
    auto it = routes.find(dataset_name);
    if (it != routes.end()) return it->second;
    return default_route(dataset_name);
}

void ExperimentConfig::validate() const {
    if (datasets.empty()) throw ConfigError("config needs at least one dataset");
    if (models.empty()) throw ConfigError("config needs at least one model");
    if (ocr_sources.empty()) throw ConfigError("config needs at least one ocr source");
    if (output_dir.empty()) throw ConfigError("config needs an output_dir");
    if (max_in_flight < 1) throw ConfigError("max_in_flight must be at least 1");

    std::unordered_set<std::string> seen;
    for (const DatasetConfig& d : datasets) {
        if (!seen.insert("d:" + d.name).second) {
            throw ConfigError("duplicate dataset '" + d.name + "'");
        }
        if (!fs::exists(d.path)) {
            throw ConfigError("dataset '" + d.name + "': path does not exist: " + d.path.string());
        }
    }
    for (const ModelConfig& m : models) {
        m.validate();
        if (!seen.insert("m:" + m.model_id).second) {
            throw ConfigError("duplicate model '" + m.model_id + "'");
        }
    }
    for (const OcrSourceConfig& s : ocr_sources) {
        if (s.name.empty()) throw ConfigError("ocr source needs a name");
        if (!seen.insert("s:" + s.name).second) {
            throw ConfigError("duplicate ocr source '" + s.name + "'");
        }
        if (!fs::is_regular_file(s.corpus)) {
            throw ConfigError("ocr source '" + s.name +
                              "': corpus file does not exist: " + s.corpus.string());
        }
        if (s.corrections && !fs::is_regular_file(*s.corrections)) {
            throw ConfigError("ocr source '" + s.name +
                              "': corrections file does not exist: " + s.corrections->string());
        }
        if (s.min_confidence < 0.0 || s.min_confidence > 1.0) {
            throw ConfigError("ocr source '" + s.name + "': min_confidence must be in [0, 1]");
        }
    }
    for (const auto& [name, route] : routes) {
        dataset_id_from_string(name);
        route.serializer.validate();
    }
    if (prompt.shots_k < 0) throw ConfigError("prompt.shots_k must not be negative");
    if (!prompt.shot_pool && prompt.shots_k > 3) {
        throw ConfigError("prompt.shots_k exceeds the 3 built-in examples; configure a shot_pool");
    }
    if (prompt.shot_pool && !fs::is_regular_file(*prompt.shot_pool)) {
        throw ConfigError("prompt.shot_pool does not exist: " + prompt.shot_pool->string());
    }
    if (prompt.char_budget < 1) throw ConfigError("prompt.char_budget must be positive");
    if (subset && subset->n < 1) throw ConfigError("subset.n must be positive");
}

ExperimentConfig load_config(const fs::path& file) {
    ExperimentConfig cfg;
    cfg.raw_text = read_text_file(file);
    json root = json::parse(cfg.raw_text, nullptr, false);
    if (root.is_discarded() || !root.is_object()) {
        throw ConfigError("config must be a JSON object: " + file.string());
    }
    fs::path base = file.parent_path();
    check_keys(root,
               {"datasets", "models", "ocr_sources", "serializer", "prompt", "subset", "output_dir",
                "cache_dir", "max_in_flight"},
               "config");

    if (!root.contains("datasets") || !root["datasets"].is_array()) {
        throw ConfigError("config: 'datasets' must be an array");
    }
    for (const json& d : root["datasets"]) {
        if (!d.is_object()) throw ConfigError("config: dataset entries must be objects");
        check_keys(d, {"name", "path", "split"}, "dataset");
        DatasetConfig ds;
        ds.name = get_string(d, "name", "dataset");
        ds.id = dataset_id_from_string(ds.name);
        ds.path = resolve_input(base, get_string(d, "path", "dataset '" + ds.name + "'"));
        if (d.contains("split")) {
            ds.split = split_from_string(get_string(d, "split", "dataset '" + ds.name + "'"));
        }
        cfg.datasets.push_back(std::move(ds));
    }

    if (!root.contains("models") || !root["models"].is_array()) {
        throw ConfigError("config: 'models' must be an array");
    }
    for (const json& m : root["models"]) {
        if (!m.is_object()) throw ConfigError("config: model entries must be objects");
        check_keys(m,
                   {"model_id", "endpoint", "temperature", "max_output_tokens", "timeout_ms",
                    "max_retries", "requests_per_minute"},
                   "model");
        ModelConfig mc;
        mc.model_id = get_string(m, "model_id", "model");
        std::string ctx = "model '" + mc.model_id + "'";
        mc.endpoint = get_string(m, "endpoint", ctx);
        mc.temperature = get_number(m, "temperature", mc.temperature, ctx);
        mc.max_output_tokens = get_int(m, "max_output_tokens", mc.max_output_tokens, ctx);
        mc.timeout_ms = get_int(m, "timeout_ms", mc.timeout_ms, ctx);
        mc.max_retries = get_int(m, "max_retries", mc.max_retries, ctx);
        mc.requests_per_minute = get_int(m, "requests_per_minute", mc.requests_per_minute, ctx);
        cfg.models.push_back(std::move(mc));
    }

    if (!root.contains("ocr_sources") || !root["ocr_sources"].is_array()) {
        throw ConfigError("config: 'ocr_sources' must be an array");
    }
    for (const json& s : root["ocr_sources"]) {
        if (!s.is_object()) throw ConfigError("config: ocr_sources entries must be objects");
        check_keys(s, {"name", "corpus", "format", "corrections", "min_confidence"}, "ocr source");
        OcrSourceConfig sc;
        sc.name = get_string(s, "name", "ocr source");
        std::string ctx = "ocr source '" + sc.name + "'";
        sc.corpus = resolve_input(base, get_string(s, "corpus", ctx));
        if (s.contains("format")) sc.format = ocr_format_from_string(get_string(s, "format", ctx));
        if (s.contains("corrections")) {
            sc.corrections = resolve_input(base, get_string(s, "corrections", ctx));
        }
        sc.min_confidence = get_number(s, "min_confidence", 0.0, ctx);
        cfg.ocr_sources.push_back(std::move(sc));
    }

    if (root.contains("serializer")) {
        if (!root["serializer"].is_object()) {
            throw ConfigError("config: 'serializer' must map dataset names to options");
        }
        for (auto it = root["serializer"].begin(); it != root["serializer"].end(); ++it) {
            const std::string& name = it.key();
            dataset_id_from_string(name);
            const json& o = it.value();
            if (!o.is_object()) throw ConfigError("serializer '" + name + "' must be an object");
            check_keys(o,
                       {"mode", "template", "line_overlap_threshold", "column_gap_factor",
                        "table_min_rows", "table_min_cols"},
                       "serializer '" + name + "'");
            std::string ctx = "serializer '" + name + "'";
            RouteConfig route = default_route(name);
            if (o.contains("mode")) {
                route.serializer.mode = serializer_mode_from_string(get_string(o, "mode", ctx));
            }
            if (o.contains("template")) {
                route.template_id = template_id_from_string(get_string(o, "template", ctx));
            }
            route.serializer.line_overlap_threshold =
                get_number(o, "line_overlap_threshold", route.serializer.line_overlap_threshold, ctx);
            route.serializer.column_gap_factor =
                get_number(o, "column_gap_factor", route.serializer.column_gap_factor, ctx);
            route.serializer.table_min_rows =
                get_int(o, "table_min_rows", route.serializer.table_min_rows, ctx);
            route.serializer.table_min_cols =
                get_int(o, "table_min_cols", route.serializer.table_min_cols, ctx);
            cfg.routes[name] = route;
        }
    }

    if (root.contains("prompt")) {
        const json& p = root["prompt"];
        if (!p.is_object()) throw ConfigError("config: 'prompt' must be an object");
        check_keys(p, {"shots_k", "shots_seed", "shot_pool", "char_budget"}, "prompt");
        cfg.prompt.shots_k = get_int(p, "shots_k", cfg.prompt.shots_k, "prompt");
        cfg.prompt.shots_seed = get_uint64(p, "shots_seed", cfg.prompt.shots_seed, "prompt");
        if (p.contains("shot_pool")) {
            cfg.prompt.shot_pool = resolve_input(base, get_string(p, "shot_pool", "prompt"));
        }
        int budget = get_int(p, "char_budget", static_cast<int>(cfg.prompt.char_budget), "prompt");
        if (budget < 1) throw ConfigError("prompt: 'char_budget' must be positive");
        cfg.prompt.char_budget = static_cast<std::size_t>(budget);
    }

    if (root.contains("subset")) {
        const json& s = root["subset"];
        if (!s.is_object()) throw ConfigError("config: 'subset' must be an object");
        check_keys(s, {"n", "seed"}, "subset");
        SubsetConfig sub;
        sub.n = get_int(s, "n", 0, "subset");
        sub.seed = get_uint64(s, "seed", 0, "subset");
        cfg.subset = sub;
    }

    cfg.output_dir = fs::path(get_string(root, "output_dir", "config"));
    if (root.contains("cache_dir")) {
        cfg.cache_dir = fs::path(get_string(root, "cache_dir", "config"));
    } else {
        cfg.cache_dir = cfg.output_dir / "cache";
    }
    cfg.max_in_flight = get_int(root, "max_in_flight", cfg.max_in_flight, "config");

    cfg.validate();
    return cfg;
}

std::string TrialSpec::key() const {
    return dataset + "/" + sample_id + "/" + model_id + "/" + ocr_source;
}

RunPlan plan_runs(const ExperimentConfig& cfg) {
    cfg.validate();
    RunPlan plan;
    for (const DatasetConfig& ds : cfg.datasets) {
        std::vector<Sample> samples = load_dataset(ds.path, ds.id, ds.split);
        if (samples.empty()) throw ConfigError("dataset '" + ds.name + "' has no samples");
        if (cfg.subset) samples = sample_subset(samples, cfg.subset->n, cfg.subset->seed);
        for (const Sample& s : samples) {
            for (const ModelConfig& m : cfg.models) {
                for (const OcrSourceConfig& src : cfg.ocr_sources) {
                    plan.trials.push_back(TrialSpec{s.sample_id, ds.name, m.model_id, src.name});
                }
            }
        }
    }

    // The hash covers every knob that changes trial outcomes plus the expanded
    // matrix itself, so equal configs agree and any semantic edit differs.
    ojson m;
    m["v"] = 1;
    m["datasets"] = ojson::array();
    for (const DatasetConfig& ds : cfg.datasets) {
        m["datasets"].push_back(ojson{{"name", ds.name}, {"split", std::string(to_string(ds.split))}});
    }
    m["models"] = ojson::array();
    for (const ModelConfig& mc : cfg.models) {
        m["models"].push_back(ojson{{"model_id", mc.model_id},
                                    {"endpoint", mc.endpoint},
                                    {"temperature", mc.temperature},
                                    {"max_output_tokens", mc.max_output_tokens}});
    }
    m["ocr_sources"] = ojson::array();
    for (const OcrSourceConfig& s : cfg.ocr_sources) {
        m["ocr_sources"].push_back(ojson{{"name", s.name},
                                         {"format", s.format == OcrFormat::paddle ? "paddle" : "canonical"},
                                         {"min_confidence", s.min_confidence},
                                         {"corrections", s.corrections.has_value()}});
    }
    m["routes"] = ojson::object();
    for (const DatasetConfig& ds : cfg.datasets) {
        RouteConfig r = cfg.route_for(ds.name);
        m["routes"][ds.name] =
            ojson{{"mode", r.serializer.mode == SerializerMode::markdown ? "markdown" : "plain"},
                  {"template", std::string(to_string(r.template_id))},
                  {"line_overlap_threshold", r.serializer.line_overlap_threshold},
                  {"column_gap_factor", r.serializer.column_gap_factor},
                  {"table_min_rows", r.serializer.table_min_rows},
                  {"table_min_cols", r.serializer.table_min_cols}};
    }
    m["prompt"] = ojson{{"shots_k", cfg.prompt.shots_k},
                        {"shots_seed", cfg.prompt.shots_seed},
                        {"char_budget", cfg.prompt.char_budget},
                        {"pool_sha", cfg.prompt.shot_pool
                                         ? sha256_hex(read_text_file(*cfg.prompt.shot_pool))
                                         : std::string()}};
    if (cfg.subset) {
        m["subset"] = ojson{{"n", cfg.subset->n}, {"seed", cfg.subset->seed}};
    } else {
        m["subset"] = nullptr;
    }
    m["trials"] = ojson::array();
    for (const TrialSpec& t : plan.trials) m["trials"].push_back(t.key());
    plan.plan_hash = sha256_hex(m.dump());
    return plan;
}

namespace {

std::vector<Shot> shots_for_run(const PromptPolicy& policy) {
    if (policy.shot_pool) {
        return select_shots(load_shot_pool(*policy.shot_pool), policy.shots_k, policy.shots_seed);
    }
    std::vector<Shot> shots = default_shots();
    if (static_cast<std::size_t>(policy.shots_k) > shots.size()) {
        throw ConfigError("prompt.shots_k exceeds the built-in examples");
    }
    shots.resize(static_cast<std::size_t>(policy.shots_k));
    return shots;
}

}  // namespace

RunResult execute(const RunPlan& plan, const ExperimentConfig& cfg, const ExecuteOptions& opts) {
    cfg.validate();
    Clock& clock = opts.clock ? *opts.clock : steady_clock();

    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec) throw IoError("cannot create output dir " + cfg.output_dir.string() + ": " + ec.message());
    fs::path journal_path = cfg.output_dir / kJournalName;

    // Journal entries from earlier invocations of the same plan count as done;
    // lines that fail to parse (a crash can truncate the last one) are skipped.
    std::map<std::string, EvalRecord> done;
    if (fs::exists(journal_path)) {
        std::ifstream in(journal_path);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            json j = json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.is_object()) continue;
            if (j.value("type", "") != "record" || j.value("plan_hash", "") != plan.plan_hash) continue;
            if (!j.contains("record") || !j["record"].is_object()) continue;
            try {
                EvalRecord r = record_from_json_line(j["record"].dump());
                done[record_key(r)] = std::move(r);
            } catch (const Error&) {
                continue;
            }
        }
    }

    std::vector<const TrialSpec*> pending;
    for (const TrialSpec& t : plan.trials) {
        if (!done.count(t.key())) pending.push_back(&t);
    }
    if (opts.max_trials < pending.size()) pending.resize(opts.max_trials);

    // Shared read-only runtime state, loaded once.
    std::unordered_map<std::string, DatasetRuntime> by_dataset;
    std::vector<std::vector<Sample>> sample_storage;
    for (const DatasetConfig& ds : cfg.datasets) {
        std::vector<Sample> samples = load_dataset(ds.path, ds.id, ds.split);
        if (cfg.subset) samples = sample_subset(samples, cfg.subset->n, cfg.subset->seed);
        sample_storage.push_back(std::move(samples));
        DatasetRuntime rt;
        rt.route = cfg.route_for(ds.name);
        rt.route.serializer.validate();
        for (const Sample& s : sample_storage.back()) rt.samples[s.sample_id] = &s;
        by_dataset[ds.name] = std::move(rt);
    }
    std::unordered_map<std::string, SourceRuntime> by_source;
    for (const OcrSourceConfig& s : cfg.ocr_sources) {
        SourceRuntime rt;
        rt.corpus = load_corpus(s.corpus, s.format);
        if (s.corrections) {
            rt.corrections = load_corrections(*s.corrections);
            rt.has_corrections = true;
            rt.kind = SourceKind::groundtruth_override;
        }
        rt.min_confidence = s.min_confidence;
        by_source[s.name] = std::move(rt);
    }
    std::vector<Shot> shots = shots_for_run(cfg.prompt);

    ResponseCache cache(cfg.cache_dir.empty() ? cfg.output_dir / "cache" : cfg.cache_dir);
    std::unordered_map<std::string, std::unique_ptr<ModelGateway>> gateways;
    for (const ModelConfig& m : cfg.models) {
        gateways[m.model_id] = std::make_unique<ModelGateway>(m, clock, opts.backend_override);
    }

    std::ofstream journal(journal_path, std::ios::app);
    if (!journal) throw IoError("cannot open journal " + journal_path.string());
    std::mutex journal_mutex;
    auto journal_append = [&](const ojson& j) {
        std::lock_guard<std::mutex> lock(journal_mutex);
        journal << j.dump() << '\n';
        journal.flush();
    };
    journal_append(ojson{{"type", "start"},
                         {"plan_hash", plan.plan_hash},
                         {"pending", pending.size()},
                         {"time", iso_utc_now()}});

    std::vector<EvalRecord> fresh(pending.size());
    std::vector<char> fresh_ok(pending.size(), 0);
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> error_count{0};

    auto run_trial = [&](const TrialSpec& t) -> EvalRecord {
        auto ds_it = by_dataset.find(t.dataset);
        if (ds_it == by_dataset.end()) throw Error("dataset '" + t.dataset + "' not configured");
        const DatasetRuntime& ds = ds_it->second;
        auto sample_it = ds.samples.find(t.sample_id);
        if (sample_it == ds.samples.end()) {
            throw Error("sample '" + t.sample_id + "' not found in dataset '" + t.dataset + "'");
        }
        const Sample& sample = *sample_it->second;
        auto src_it = by_source.find(t.ocr_source);
        if (src_it == by_source.end()) throw Error("ocr source '" + t.ocr_source + "' not configured");
        const SourceRuntime& src = src_it->second;
        auto doc_it = src.corpus.find(sample.image_id);
        if (doc_it == src.corpus.end()) {
            throw Error("no OCR document for image '" + sample.image_id + "' in source '" +
                        t.ocr_source + "'");
        }
        OcrDocument doc = doc_it->second;
        if (src.has_corrections) doc = apply_override(doc, src.corrections);
        if (src.min_confidence > 0.0) doc = filter_by_confidence(doc, src.min_confidence);
        std::string ocr_text = serialize(doc, ds.route.serializer);
        Prompt prompt =
            build_prompt(ds.route.template_id, ocr_text, sample.question, shots, cfg.prompt.char_budget);
        ModelGateway& gw = *gateways.at(t.model_id);
        ModelAnswer answer = gw.cached_complete(prompt.rendered, cache);

        EvalRecord r;
        r.sample_id = t.sample_id;
        r.dataset = t.dataset;
        r.model_id = t.model_id;
        r.ocr_source = t.ocr_source;
        r.ocr_source_kind = src.kind;
        r.prediction = answer.text;
        r.correct = is_correct(answer.text, sample.answers);
        r.prompt_hash = answer.prompt_hash;
        r.latency_ms = answer.latency_ms;
        return r;
    };

    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= pending.size()) return;
            const TrialSpec& t = *pending[i];
            try {
                EvalRecord r = run_trial(t);
                journal_append(ojson{{"type", "record"},
                                     {"plan_hash", plan.plan_hash},
                                     {"key", t.key()},
                                     {"record", json::parse(record_to_json_line(r, true))},
                                     {"time", iso_utc_now()}});
                fresh[i] = std::move(r);
                fresh_ok[i] = 1;
            } catch (const std::exception& e) {
                error_count.fetch_add(1);
                journal_append(ojson{{"type", "error"},
                                     {"plan_hash", plan.plan_hash},
                                     {"key", t.key()},
                                     {"message", e.what()},
                                     {"time", iso_utc_now()}});
            }
        }
    };

    if (!pending.empty()) {
        std::size_t n_threads =
            std::min<std::size_t>(static_cast<std::size_t>(cfg.max_in_flight), pending.size());
        std::vector<std::thread> threads;
        threads.reserve(n_threads);
        for (std::size_t i = 0; i < n_threads; ++i) threads.emplace_back(worker);
        for (std::thread& th : threads) th.join();
    }

    RunResult result;
    result.run_dir = cfg.output_dir;
    result.trial_errors = error_count.load();
    result.executed = pending.size();
    result.resumed = done.size();
    for (auto& [key, r] : done) result.records.push_back(std::move(r));
    for (std::size_t i = 0; i < fresh.size(); ++i) {
        if (fresh_ok[i]) result.records.push_back(std::move(fresh[i]));
    }
    std::sort(result.records.begin(), result.records.end(), record_less);

    // Canonical run log: header plus records in trial-key order, no volatile
    // fields, so equal plans always produce byte-identical files.
    std::string log_text =
        ojson{{"plan_hash", plan.plan_hash},
              {"normalization", std::string(kNormalizationVersion)},
              {"records", result.records.size()}}
            .dump() +
        "\n";
    for (const EvalRecord& r : result.records) log_text += record_to_json_line(r, false) + "\n";
    write_text_file_atomic(cfg.output_dir / kRunLogName, log_text);

    std::vector<std::string> dataset_order;
    for (const DatasetConfig& ds : cfg.datasets) dataset_order.push_back(ds.name);
    if (!result.records.empty()) {
        emit_report(result.records, dataset_order, plan.plan_hash, cfg.raw_text,
                    result.trial_errors, cfg.output_dir);
    }
    return result;
}

ReportBundle emit_report(const std::vector<EvalRecord>& records,
                         const std::vector<std::string>& dataset_order,
                         const std::string& plan_hash, const std::string& config_text,
                         std::size_t trial_errors, const fs::path& out_dir) {
    if (records.empty()) throw ConfigError("cannot report on an empty record set");
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create report dir " + out_dir.string() + ": " + ec.message());

    std::map<MetricKey, Metrics> metrics = aggregate(records);

    // Grid columns: configured order first, then anything else found in the
    // records, alphabetically.
    std::vector<std::string> columns;
    std::unordered_set<std::string> seen_columns;
    for (const std::string& name : dataset_order) {
        if (seen_columns.insert(name).second) columns.push_back(name);
    }
    for (const auto& [key, m] : metrics) {
        if (seen_columns.insert(key.dataset).second) columns.push_back(key.dataset);
    }

    // Grid rows: one per ocr source + model combination, labeled the way
    // OCR+LLM method stacks are usually reported.
    std::map<std::string, std::pair<std::string, std::string>> rows;  // label -> (model, source)
    for (const auto& [key, m] : metrics) {
        rows[key.ocr_source + "+" + key.model_id] = {key.model_id, key.ocr_source};
    }

    std::string md;
    md += "# Accuracy\n\n";
    md += "| Method |";
    for (const std::string& c : columns) md += " " + c + " |";
    md += "\n| --- |";
    for (std::size_t i = 0; i < columns.size(); ++i) md += " --- |";
    md += "\n";
    for (const auto& [label, ids] : rows) {
        md += "| " + label + " |";
        for (const std::string& c : columns) {
            auto it = metrics.find(MetricKey{c, ids.first, ids.second});
            md += it == metrics.end() ? " - |" : " " + format_accuracy(it->second.accuracy()) + " |";
        }
        md += "\n";
    }
    md += "\n";
    md += "Records: " + std::to_string(records.size()) + "\n";
    md += "Trial errors: " + std::to_string(trial_errors) + "\n";
    md += "Plan: " + plan_hash + "\n";
    md += "Normalization: " + std::string(kNormalizationVersion) + "\n";

    std::string csv = "dataset,model_id,ocr_source,n,n_correct,accuracy\n";
    for (const auto& [key, m] : metrics) {
        csv += csv_field(key.dataset) + "," + csv_field(key.model_id) + "," +
               csv_field(key.ocr_source) + "," + std::to_string(m.total) + "," +
               std::to_string(m.correct) + "," + format_accuracy(m.accuracy()) + "\n";
    }

    ojson meta;
    meta["plan_hash"] = plan_hash;
    meta["normalization_version"] = std::string(kNormalizationVersion);
    meta["records"] = records.size();
    meta["trial_errors"] = trial_errors;
    meta["generated_at"] = iso_utc_now();
    json cfg_json = json::parse(config_text, nullptr, false);
    if (!cfg_json.is_discarded()) {
        meta["config"] = cfg_json;
    } else {
        meta["config"] = config_text;
    }

    ReportBundle bundle;
    bundle.markdown = out_dir / "report.md";
    bundle.csv = out_dir / "report.csv";
    bundle.metadata = out_dir / "metadata.json";
    write_text_file_atomic(bundle.markdown, md);
    write_text_file_atomic(bundle.csv, csv);
    write_text_file_atomic(bundle.metadata, meta.dump(2) + "\n");
    return bundle;
}

ReportBundle regenerate_report(const fs::path& run_dir) {
    fs::path log = run_dir / kRunLogName;
    if (!fs::is_regular_file(log)) throw IoError("no run log at " + log.string());
    std::string plan_hash;
    std::vector<EvalRecord> records = read_run_log(log, &plan_hash);
    if (records.empty()) throw ConfigError("run log has no records: " + log.string());

    std::string config_text;
    std::size_t trial_errors = 0;
    fs::path meta_path = run_dir / "metadata.json";
    if (fs::is_regular_file(meta_path)) {
        json meta = json::parse(read_text_file(meta_path), nullptr, false);
        if (!meta.is_discarded() && meta.is_object()) {
            if (meta.contains("config")) config_text = meta["config"].dump(2);
            trial_errors = meta.value("trial_errors", std::size_t{0});
        }
    }

    std::vector<std::string> dataset_order;
    std::unordered_set<std::string> seen;
    for (const EvalRecord& r : records) {
        if (seen.insert(r.dataset).second) dataset_order.push_back(r.dataset);
    }
    std::sort(dataset_order.begin(), dataset_order.end());
    return emit_report(records, dataset_order, plan_hash, config_text, trial_errors, run_dir);
}

std::vector<EvalRecord> read_run_log(const fs::path& file, std::string* plan_hash) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open run log " + file.string());
    std::vector<EvalRecord> records;
    std::string line;
    bool first = true;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (first) {
            first = false;
            json j = json::parse(line, nullptr, false);
            if (!j.is_discarded() && j.is_object() && !j.contains("sample_id")) {
                if (plan_hash) *plan_hash = j.value("plan_hash", "");
                continue;
            }
            if (plan_hash) plan_hash->clear();
        }
        try {
            records.push_back(record_from_json_line(line));
        } catch (const Error& e) {
            throw SchemaError(file.string() + " line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return records;
}

}  // namespace harness
