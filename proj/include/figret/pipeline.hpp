#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "figret/corpus.hpp"
#include "figret/curriculum.hpp"
#include "figret/encoder.hpp"
#include "figret/evaluation.hpp"
#include "figret/index.hpp"
#include "figret/mock_teacher.hpp"
#include "figret/scoring.hpp"
#include "figret/teacher.hpp"

namespace figret {

struct CorpusSpec {
    int n_units = 4000;
    int n_docs = 2000;
    int n_queries = 500;
    GenerationProfile profile;
};

struct PipelineConfig {
    std::size_t pool_size = 1000;
    std::size_t top_k = 8;
    int iterations = 2;
    std::size_t batch_size = 128;
    /// Queries at the end of the corpus held out from the pool for evaluation.
    std::size_t heldout = 200;
    std::uint64_t seed = 7;
    std::string teacher = "mock";
    std::size_t teacher_concurrency = 4;
    std::size_t exemplar_count = 2;
    double t1 = 2.0;
    double t2 = 0.2;
    EncoderConfig encoder;
    MockTeacherConfig mock;
    CorpusSpec corpus;
    std::string base_url;
    std::string chat_model = "gpt-3.5-turbo";
    int max_retries = 3;
    std::string templates_dir;

    void validate() const;

    /// Values used for transformer-scale runs: pool of 10,000 and a 5e-6
    /// learning rate.
    static PipelineConfig transformer_scale();
};

json to_json(const PipelineConfig& c);
/// Missing keys keep their defaults; unknown keys are rejected.
PipelineConfig pipeline_config_from_json(const json& j);

enum class Stage { none, collect, score, construct, train, assess };

std::string_view to_string(Stage s);
Stage stage_from_string(std::string_view s);

/// Persisted progress marker (state.json).
struct RunState {
    int iteration = 0;  // iteration the last completed stage belongs to
    Stage stage = Stage::none;
    std::optional<double> threshold;
    bool threshold_fallback = false;
    /// Encoder version the current pool was collected with.
    std::uint64_t collect_version = 0;
    /// Encoder version produced by the last completed training stage.
    std::uint64_t trained_version = 0;
    std::size_t exemplars_before_assess = 0;
    /// Query ids that must receive guidance in the next iteration.
    std::vector<std::string> requeue;

    bool operator==(const RunState&) const = default;
};

json to_json(const RunState& s);
RunState run_state_from_json(const json& j);

struct MetricEvent {
    std::string stage;
    int iteration = 0;
    std::string key;
    json value;
};

/// metrics.jsonl: {stage, iteration, key, value, timestamp}. The timestamp is
/// a logical clock (event position) so identical runs give identical logs.
/// Re-running a stage replaces its earlier events.
class MetricsLog {
public:
    static MetricsLog load(const std::filesystem::path& path);
    void replace(const std::string& stage, int iteration, std::vector<MetricEvent> events);
    void save(const std::filesystem::path& path) const;
    const std::vector<MetricEvent>& events() const { return events_; }

private:
    std::vector<MetricEvent> events_;
};

// Functional stages, independent of the run directory.

/// One unscored entry per query (up to pool_size) with the retriever's top-k.
std::vector<SamplePoolEntry> collect(const Corpus& corpus, const EncoderModel& model, const RetrievalIndex& index,
                                     std::span<const Query> queries, const PipelineConfig& config,
                                     const std::string& id_prefix = "");

/// Scores every unscored entry, up to `concurrency` teacher calls at once.
void score_pool(std::vector<SamplePoolEntry>& pool, Teacher& teacher, const Corpus& corpus, std::size_t concurrency);

/// Guidance + preference triplets for every selected entry, in pool order.
std::vector<GuidanceTriplet> construct_guidance(const std::vector<SamplePoolEntry>& pool, Teacher& teacher,
                                                const Corpus& corpus, const EncoderModel& model,
                                                ExemplarStore& exemplars, const PipelineConfig& config);

struct TrainSummary {
    std::size_t batches = 0;
    std::vector<double> losses;
};

/// One curriculum-ordered pass: ceil(N / batch_size) steps, step t drawing
/// its batch from combined_weights(t).
TrainSummary train_curriculum(EncoderModel& model, const std::vector<GuidanceTriplet>& triplets,
                              const PipelineConfig& config, int iteration);

struct AssessSummary {
    std::size_t reassessed = 0;
    std::size_t well_learned = 0;
    std::size_t regressed = 0;
    std::size_t failed = 0;
    std::vector<std::string> requeue;
};

/// Re-retrieves and re-scores every selected entry with the trained encoder.
/// ndcg >= threshold -> well_learned (and stored as exemplar); ndcg below the
/// entry's baseline -> regressed (requeued). Teacher failures leave the
/// entry selected and requeue it.
AssessSummary assess(std::vector<SamplePoolEntry>& pool, const EncoderModel& model, const RetrievalIndex& index,
                     Teacher& teacher, const Corpus& corpus, double threshold, ExemplarStore& exemplars,
                     const PipelineConfig& config);

using TeacherFactory = std::function<std::unique_ptr<Teacher>(const Corpus&, const PipelineConfig&)>;

/// Mock or HTTP teacher per `config.teacher`.
std::unique_ptr<Teacher> make_teacher(const Corpus& corpus, const PipelineConfig& config);

/// File-backed pipeline over a run directory:
///   config.json corpus.jsonl pool.jsonl triplets.jsonl model.ckpt
///   model.init.ckpt exemplars.jsonl metrics.jsonl state.json
/// Each stage checks the stage order, writes its outputs atomically and then
/// advances state.json, so a stage can be re-run after an interruption.
class Pipeline {
public:
    Pipeline(std::filesystem::path run_dir, PipelineConfig config, TeacherFactory factory = make_teacher);

    /// Writes config.json, generating corpus.jsonl and the initial model if
    /// they are missing.
    void init();
    void gen_corpus();

    void collect();
    void score();
    void construct();
    void train();
    void assess();
    /// Alignment NDCG on held-out queries for the current model (and, on the
    /// first call, the initial model) plus win rates against the initial model.
    void evaluate();

    /// Resumes from state.json and completes `iterations` iterations.
    void run(int iterations);

    RunState state() const;
    const PipelineConfig& config() const { return config_; }
    const std::filesystem::path& run_dir() const { return dir_; }

    std::filesystem::path path(const char* name) const { return dir_ / name; }

private:
    const Corpus& corpus();
    Teacher& teacher();
    std::vector<Query> training_queries();
    std::vector<Query> heldout_queries();
    void require(Stage stage, std::initializer_list<Stage> allowed, const char* name) const;
    void save_state(const RunState& s) const;
    void log(const std::string& stage, int iteration, std::vector<MetricEvent> events) const;

    std::filesystem::path dir_;
    PipelineConfig config_;
    TeacherFactory factory_;
    std::optional<Corpus> corpus_;
    std::unique_ptr<Teacher> teacher_;
};

}  // namespace figret
