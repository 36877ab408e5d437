#include "figret/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <spdlog/spdlog.h>

#include "figret/error.hpp"
#include "figret/guidance.hpp"
#include "figret/http_teacher.hpp"
#include "figret/parallel.hpp"

namespace figret {

// ---------------------------------------------------------------- config

void PipelineConfig::validate() const {
    if (pool_size < batch_size) throw ConfigError("pool_size must be >= batch_size");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (iterations < 1) throw ConfigError("iterations must be >= 1");
    if (top_k < 1) throw ConfigError("top_k must be >= 1");
    if (teacher != "mock" && teacher != "http") throw ConfigError("teacher must be 'mock' or 'http'");
    if (teacher_concurrency < 1) throw ConfigError("teacher_concurrency must be >= 1");
    if (!(t1 > 0.0) || !(t2 > 0.0)) throw ConfigError("curriculum temperatures must be > 0");
    if (!(encoder.learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
    if (encoder.temperature && !(*encoder.temperature > 0.0)) throw ConfigError("encoder temperature must be > 0");
    if (max_retries < 1) throw ConfigError("max_retries must be >= 1");
    mock.validate();
    corpus.profile.validate();
}

PipelineConfig PipelineConfig::transformer_scale() {
    PipelineConfig c;
    c.pool_size = 10000;
    c.encoder = EncoderConfig::transformer_preset();
    return c;
}

namespace {

class Reader {
public:
    Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw ConfigError(where_ + " must be a JSON object");
    }

    template <typename T>
    void get(const char* key, T& slot) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            slot = j_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(where_ + "." + key + ": " + e.what());
        }
    }

    const json* child(const char* key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    void finish() const {
        for (const auto& [k, _] : j_.items())
            if (!seen_.contains(k)) throw ConfigError("unknown config key " + where_ + "." + k);
    }

private:
    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

}  // namespace

json to_json(const PipelineConfig& c) {
    const auto& p = c.corpus.profile;
    return json{
        {"pool_size", c.pool_size},
        {"top_k", c.top_k},
        {"iterations", c.iterations},
        {"batch_size", c.batch_size},
        {"heldout", c.heldout},
        {"seed", c.seed},
        {"teacher", c.teacher},
        {"teacher_concurrency", c.teacher_concurrency},
        {"exemplar_count", c.exemplar_count},
        {"curriculum", {{"t1", c.t1}, {"t2", c.t2}}},
        {"encoder",
         {{"feature_dim", c.encoder.feature_dim},
          {"embed_dim", c.encoder.embed_dim},
          {"similarity", to_string(c.encoder.kind)},
          {"temperature", c.encoder.temperature ? json(*c.encoder.temperature) : json(nullptr)},
          {"learning_rate", c.encoder.learning_rate},
          {"init_scale", c.encoder.init_scale}}},
        {"mock",
         {{"extra_units", c.mock.extra_units},
          {"rho_dense", c.mock.rho_dense},
          {"rho_sparse", c.mock.rho_sparse},
          {"jaccard_threshold", c.mock.jaccard_threshold}}},
        {"corpus",
         {{"n_units", c.corpus.n_units},
          {"n_docs", c.corpus.n_docs},
          {"n_queries", c.corpus.n_queries},
          {"units_per_doc", {p.units_per_doc.min, p.units_per_doc.max}},
          {"noise_fraction", {p.noise_fraction.min, p.noise_fraction.max}},
          {"gold_per_query", {p.gold_per_query.min, p.gold_per_query.max}},
          {"units_per_subject", p.units_per_subject},
          {"n_relations", p.n_relations},
          {"n_objects", p.n_objects},
          {"answer_spread", p.answer_spread}}},
        {"chat", {{"base_url", c.base_url}, {"model", c.chat_model}, {"max_retries", c.max_retries}}},
        {"templates_dir", c.templates_dir},
    };
}

PipelineConfig pipeline_config_from_json(const json& j) {
    PipelineConfig c;
    Reader r(j, "config");
    r.get("pool_size", c.pool_size);
    r.get("top_k", c.top_k);
    r.get("iterations", c.iterations);
    r.get("batch_size", c.batch_size);
    r.get("heldout", c.heldout);
    r.get("seed", c.seed);
    r.get("teacher", c.teacher);
    r.get("teacher_concurrency", c.teacher_concurrency);
    r.get("exemplar_count", c.exemplar_count);
    r.get("templates_dir", c.templates_dir);
    if (const auto* cur = r.child("curriculum")) {
        Reader cr(*cur, "config.curriculum");
        cr.get("t1", c.t1);
        cr.get("t2", c.t2);
        cr.finish();
    }
    if (const auto* enc = r.child("encoder")) {
        Reader er(*enc, "config.encoder");
        er.get("feature_dim", c.encoder.feature_dim);
        er.get("embed_dim", c.encoder.embed_dim);
        std::string kind = std::string(to_string(c.encoder.kind));
        er.get("similarity", kind);
        c.encoder.kind = similarity_kind_from_string(kind);
        if (const auto* t = er.child("temperature"); t && !t->is_null()) c.encoder.temperature = t->get<double>();
        er.get("learning_rate", c.encoder.learning_rate);
        er.get("init_scale", c.encoder.init_scale);
        er.finish();
    }
    if (const auto* m = r.child("mock")) {
        Reader mr(*m, "config.mock");
        mr.get("extra_units", c.mock.extra_units);
        mr.get("rho_dense", c.mock.rho_dense);
        mr.get("rho_sparse", c.mock.rho_sparse);
        mr.get("jaccard_threshold", c.mock.jaccard_threshold);
        mr.finish();
    }
    if (const auto* cj = r.child("corpus")) {
        Reader cr(*cj, "config.corpus");
        auto& p = c.corpus.profile;
        cr.get("n_units", c.corpus.n_units);
        cr.get("n_docs", c.corpus.n_docs);
        cr.get("n_queries", c.corpus.n_queries);
        std::array<int, 2> upd{p.units_per_doc.min, p.units_per_doc.max};
        std::array<double, 2> nf{p.noise_fraction.min, p.noise_fraction.max};
        std::array<int, 2> gpq{p.gold_per_query.min, p.gold_per_query.max};
        cr.get("units_per_doc", upd);
        cr.get("noise_fraction", nf);
        cr.get("gold_per_query", gpq);
        p.units_per_doc = {upd[0], upd[1]};
        p.noise_fraction = {nf[0], nf[1]};
        p.gold_per_query = {gpq[0], gpq[1]};
        cr.get("units_per_subject", p.units_per_subject);
        cr.get("n_relations", p.n_relations);
        cr.get("n_objects", p.n_objects);
        cr.get("answer_spread", p.answer_spread);
        cr.finish();
    }
    if (const auto* ch = r.child("chat")) {
        Reader hr(*ch, "config.chat");
        hr.get("base_url", c.base_url);
        hr.get("model", c.chat_model);
        hr.get("max_retries", c.max_retries);
        hr.finish();
    }
    r.finish();
    return c;
}

// ---------------------------------------------------------------- state

std::string_view to_string(Stage s) {
    switch (s) {
        case Stage::none: return "none";
        case Stage::collect: return "collect";
        case Stage::score: return "score";
        case Stage::construct: return "construct";
        case Stage::train: return "train";
        case Stage::assess: return "assess";
    }
    return "none";
}

Stage stage_from_string(std::string_view s) {
    for (auto st : {Stage::none, Stage::collect, Stage::score, Stage::construct, Stage::train, Stage::assess})
        if (to_string(st) == s) return st;
    throw ParseError("unknown stage '" + std::string(s) + "'");
}

json to_json(const RunState& s) {
    return json{{"iteration", s.iteration},
                {"stage", to_string(s.stage)},
                {"threshold", s.threshold ? json(*s.threshold) : json(nullptr)},
                {"threshold_fallback", s.threshold_fallback},
                {"collect_version", s.collect_version},
                {"trained_version", s.trained_version},
                {"exemplars_before_assess", s.exemplars_before_assess},
                {"requeue", s.requeue}};
}

RunState run_state_from_json(const json& j) {
    RunState s;
    s.iteration = j.at("iteration").get<int>();
    s.stage = stage_from_string(j.at("stage").get<std::string>());
    if (!j.at("threshold").is_null()) s.threshold = j.at("threshold").get<double>();
    s.threshold_fallback = j.value("threshold_fallback", false);
    s.collect_version = j.value("collect_version", std::uint64_t{0});
    s.trained_version = j.value("trained_version", std::uint64_t{0});
    s.exemplars_before_assess = j.value("exemplars_before_assess", std::size_t{0});
    s.requeue = j.value("requeue", std::vector<std::string>{});
    return s;
}

// ---------------------------------------------------------------- metrics

MetricsLog MetricsLog::load(const std::filesystem::path& path) {
    MetricsLog log;
    if (!std::filesystem::exists(path)) return log;
    for_each_jsonl(path, [&](const json& j, std::size_t) {
        log.events_.push_back({j.at("stage").get<std::string>(), j.at("iteration").get<int>(),
                               j.at("key").get<std::string>(), j.at("value")});
    });
    return log;
}

void MetricsLog::replace(const std::string& stage, int iteration, std::vector<MetricEvent> events) {
    std::erase_if(events_, [&](const MetricEvent& e) { return e.stage == stage && e.iteration == iteration; });
    for (auto& e : events) {
        e.stage = stage;
        e.iteration = iteration;
        events_.push_back(std::move(e));
    }
}

void MetricsLog::save(const std::filesystem::path& path) const {
    std::string out;
    for (std::size_t i = 0; i < events_.size(); ++i) {
        ordered_json j;
        j["stage"] = events_[i].stage;
        j["iteration"] = events_[i].iteration;
        j["key"] = events_[i].key;
        j["value"] = events_[i].value;
        j["timestamp"] = i;
        out += j.dump() + '\n';
    }
    atomic_write(path, out);
}

// ---------------------------------------------------------------- stages

std::vector<SamplePoolEntry> collect(const Corpus& corpus, const EncoderModel& model, const RetrievalIndex& index,
                                     std::span<const Query> queries, const PipelineConfig& config,
                                     const std::string& id_prefix) {
    (void)corpus;
    if (index.encoder_version() != model.version()) throw StaleIndexError("collect needs an index built with the current encoder");
    if (queries.size() < config.pool_size)
        spdlog::warn("only {} queries available for a pool of {}", queries.size(), config.pool_size);
    const auto n = std::min(queries.size(), config.pool_size);
    std::vector<SamplePoolEntry> pool;
    pool.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        SamplePoolEntry e;
        e.id = id_prefix + queries[i].id;
        e.query = queries[i];
        for (const auto& hit : index.retrieve(model, queries[i].text, config.top_k)) e.doc_ids.push_back(hit.doc_id);
        pool.push_back(std::move(e));
    }
    return pool;
}

void score_pool(std::vector<SamplePoolEntry>& pool, Teacher& teacher, const Corpus& corpus, std::size_t concurrency) {
    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < pool.size(); ++i)
        if (pool[i].status == EntryStatus::unscored) todo.push_back(i);
    auto scored = parallel_map<SamplePoolEntry>(todo.size(), concurrency, [&](std::size_t k) {
        auto e = pool[todo[k]];
        score_entry(e, teacher, corpus);
        return e;
    });
    for (std::size_t k = 0; k < todo.size(); ++k) pool[todo[k]] = std::move(scored[k]);
}

std::vector<GuidanceTriplet> construct_guidance(const std::vector<SamplePoolEntry>& pool, Teacher& teacher,
                                                const Corpus& corpus, const EncoderModel& model,
                                                ExemplarStore& exemplars, const PipelineConfig& config) {
    std::vector<const SamplePoolEntry*> selected;
    for (const auto& e : pool)
        if (e.status == EntryStatus::selected) selected.push_back(&e);
    std::vector<std::vector<Exemplar>> shots;
    shots.reserve(selected.size());
    for (const auto* e : selected) shots.push_back(exemplars.nearest(model, e->query.text, config.exemplar_count));

    auto per_entry = parallel_map<std::vector<GuidanceTriplet>>(
        selected.size(), config.teacher_concurrency, [&](std::size_t i) {
            return build_all(GuidanceContext{*selected[i], corpus, teacher, shots[i]});
        });
    std::vector<GuidanceTriplet> out;
    for (auto& v : per_entry) out.insert(out.end(), std::make_move_iterator(v.begin()), std::make_move_iterator(v.end()));
    return out;
}

TrainSummary train_curriculum(EncoderModel& model, const std::vector<GuidanceTriplet>& triplets,
                              const PipelineConfig& config, int iteration) {
    TrainSummary summary;
    if (triplets.empty()) return summary;
    const std::size_t n = triplets.size();
    const std::size_t steps = (n + config.batch_size - 1) / config.batch_size;

    std::vector<int> labels;
    std::vector<double> difficulty;
    for (const auto& t : triplets) {
        labels.push_back(t.label());
        difficulty.push_back(t.difficulty);
    }
    CurriculumConfig cc{config.t1, config.t2, steps, AnnealSchedule::linear, config.seed};

    for (std::size_t step = 0; step < steps; ++step) {
        const auto weights = combined_weights(labels, difficulty, step, cc);
        const auto size = std::min(config.batch_size, n - step * config.batch_size);
        const auto picks = sample_batch(
            weights, size, derive_seed(config.seed, {0x747261696eULL, static_cast<std::uint64_t>(iteration), step}));
        std::vector<const GuidanceTriplet*> batch;
        batch.reserve(picks.size());
        for (auto i : picks) batch.push_back(&triplets[i]);
        Rng rng(derive_seed(config.seed, {0x647261777aULL, static_cast<std::uint64_t>(iteration), step}));
        const auto r = train_step(model, batch, config.encoder.learning_rate, rng);
        summary.losses.push_back(r.mean_loss);
        ++summary.batches;
    }
    return summary;
}

AssessSummary assess(std::vector<SamplePoolEntry>& pool, const EncoderModel& model, const RetrievalIndex& index,
                     Teacher& teacher, const Corpus& corpus, double threshold, ExemplarStore& exemplars,
                     const PipelineConfig& config) {
    AssessSummary summary;
    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        const auto s = pool[i].status;
        if (s == EntryStatus::selected || s == EntryStatus::well_learned || s == EntryStatus::regressed)
            todo.push_back(i);
    }

    struct Outcome {
        std::vector<std::string> doc_ids;
        std::optional<ScoresVerdict> verdict;
    };
    auto outcomes = parallel_map<Outcome>(todo.size(), config.teacher_concurrency, [&](std::size_t k) {
        const auto& e = pool[todo[k]];
        Outcome o;
        std::vector<Document> docs;
        for (const auto& hit : index.retrieve(model, e.query.text, config.top_k)) {
            o.doc_ids.push_back(hit.doc_id);
            docs.push_back(corpus.document(hit.doc_id));
        }
        try {
            auto v = teacher.score_documents(e.query, docs, {});
            check_scores(v, docs);
            o.verdict = std::move(v);
        } catch (const TeacherProtocolError& err) {
            spdlog::warn("reassessing {} failed: {}", e.id, err.what());
        } catch (const TransportError& err) {
            spdlog::warn("reassessing {} failed: {}", e.id, err.what());
        }
        return o;
    });

    for (std::size_t k = 0; k < todo.size(); ++k) {
        auto& e = pool[todo[k]];
        auto& o = outcomes[k];
        ++summary.reassessed;
        if (!o.verdict) {
            e.status = EntryStatus::selected;
            ++summary.failed;
            summary.requeue.push_back(e.query.id);
            continue;
        }
        const double before = e.baseline_ndcg.value_or(e.ndcg.value_or(0.0));
        e.doc_ids = std::move(o.doc_ids);
        apply_scores(e, *o.verdict);
        e.baseline_ndcg = before;
        if (*e.ndcg >= threshold) {
            e.status = EntryStatus::well_learned;
            ++summary.well_learned;
            Exemplar ex;
            ex.query = e.query;
            for (const auto& id : e.doc_ids) ex.docs.push_back(corpus.document(id));
            ex.verdict = *o.verdict;
            exemplars.insert(std::move(ex));
        } else if (*e.ndcg < before) {
            e.status = EntryStatus::regressed;
            ++summary.regressed;
            summary.requeue.push_back(e.query.id);
        } else {
            e.status = EntryStatus::selected;
        }
    }
    return summary;
}

std::unique_ptr<Teacher> make_teacher(const Corpus& corpus, const PipelineConfig& config) {
    if (config.teacher == "mock") return std::make_unique<MockTeacher>(corpus, config.mock);
    ChatConfig chat;
    chat.base_url = config.base_url;
    chat.model = config.chat_model;
    chat.api_key = api_key_from_env();
    auto templates =
        config.templates_dir.empty() ? PromptTemplates::builtin() : PromptTemplates::load(config.templates_dir);
    return std::make_unique<HttpTeacher>(std::make_shared<HttpTransport>(chat), config.chat_model, std::move(templates),
                                         config.max_retries);
}

// ---------------------------------------------------------------- pipeline

Pipeline::Pipeline(std::filesystem::path run_dir, PipelineConfig config, TeacherFactory factory)
    : dir_(std::move(run_dir)), config_(std::move(config)), factory_(std::move(factory)) {
    config_.validate();
}

RunState Pipeline::state() const {
    const auto p = dir_ / "state.json";
    if (!std::filesystem::exists(p)) return {};
    try {
        return run_state_from_json(json::parse(read_file(p)));
    } catch (const json::exception& e) {
        throw ParseError(p.string() + ": " + e.what());
    }
}

void Pipeline::save_state(const RunState& s) const { atomic_write(dir_ / "state.json", to_json(s).dump(2) + "\n"); }

void Pipeline::log(const std::string& stage, int iteration, std::vector<MetricEvent> events) const {
    auto m = MetricsLog::load(dir_ / "metrics.jsonl");
    m.replace(stage, iteration, std::move(events));
    m.save(dir_ / "metrics.jsonl");
}

void Pipeline::require(Stage stage, std::initializer_list<Stage> allowed, const char* name) const {
    const auto s = state();
    if (std::find(allowed.begin(), allowed.end(), s.stage) != allowed.end()) return;
    std::string want;
    for (auto a : allowed) {
        if (a == stage) continue;
        if (!want.empty()) want += " or ";
        want += to_string(a);
    }
    throw StageOrderError(std::string(name) + " must run after " + want + "; the run directory is at stage '" +
                          std::string(to_string(s.stage)) + "'");
}

const Corpus& Pipeline::corpus() {
    if (!corpus_) {
        const auto p = dir_ / "corpus.jsonl";
        if (!std::filesystem::exists(p)) throw StageOrderError("no corpus in " + dir_.string() + "; run gen-corpus first");
        corpus_ = read_jsonl(p);
    }
    return *corpus_;
}

Teacher& Pipeline::teacher() {
    if (!teacher_) teacher_ = factory_(corpus(), config_);
    return *teacher_;
}

std::vector<Query> Pipeline::training_queries() {
    const auto& qs = corpus().queries();
    if (config_.heldout >= qs.size())
        throw ConfigError("heldout (" + std::to_string(config_.heldout) + ") must be smaller than the query count (" +
                          std::to_string(qs.size()) + ")");
    return {qs.begin(), qs.end() - static_cast<std::ptrdiff_t>(config_.heldout)};
}

std::vector<Query> Pipeline::heldout_queries() {
    const auto& qs = corpus().queries();
    if (config_.heldout >= qs.size() || config_.heldout == 0)
        throw ConfigError("heldout must be in [1, query count)");
    return {qs.end() - static_cast<std::ptrdiff_t>(config_.heldout), qs.end()};
}

void Pipeline::gen_corpus() {
    std::filesystem::create_directories(dir_);
    const auto& c = config_.corpus;
    auto generated = generate_synthetic(config_.seed, c.n_units, c.n_docs, c.n_queries, c.profile);
    write_jsonl(generated, dir_ / "corpus.jsonl");
    corpus_ = std::move(generated);
    teacher_.reset();
}

void Pipeline::init() {
    std::filesystem::create_directories(dir_);
    atomic_write(dir_ / "config.json", to_json(config_).dump(2) + "\n");
    if (!std::filesystem::exists(dir_ / "corpus.jsonl")) gen_corpus();
    if (!std::filesystem::exists(dir_ / "model.init.ckpt")) {
        const auto model = EncoderModel::initialize(config_.encoder, config_.seed);
        model.save(dir_ / "model.init.ckpt");
        if (!std::filesystem::exists(dir_ / "model.ckpt")) model.save(dir_ / "model.ckpt");
    }
}

void Pipeline::collect() {
    require(Stage::collect, {Stage::none, Stage::assess, Stage::collect}, "collect");
    auto s = state();
    if (s.stage != Stage::collect) ++s.iteration;
    if (!std::filesystem::exists(dir_ / "model.ckpt")) init();
    const auto model = EncoderModel::load(dir_ / "model.ckpt");
    const auto index = RetrievalIndex::build(model, corpus());
    const auto queries = training_queries();
    auto pool = figret::collect(corpus(), model, index, queries, config_, "i" + std::to_string(s.iteration) + ":");
    write_pool(pool, dir_ / "pool.jsonl");
    log("collect", s.iteration, {{"", 0, "pool_size", pool.size()}});
    s.stage = Stage::collect;
    s.collect_version = model.version();
    s.threshold.reset();
    save_state(s);
    spdlog::info("iteration {}: collected {} pool entries", s.iteration, pool.size());
}

void Pipeline::score() {
    require(Stage::score, {Stage::collect, Stage::score}, "score");
    auto s = state();
    auto pool = read_pool(dir_ / "pool.jsonl");
    for (auto& e : pool) {
        e.scores.clear();
        e.ndcg.reset();
        e.baseline_ndcg.reset();
        e.status = EntryStatus::unscored;
    }
    score_pool(pool, teacher(), corpus(), config_.teacher_concurrency);
    const auto th = select_threshold(pool);

    const std::set<std::string> requeue(s.requeue.begin(), s.requeue.end());
    std::size_t requeued = 0;
    for (auto& e : pool) {
        if (e.status != EntryStatus::selected && requeue.contains(e.query.id)) {
            e.status = EntryStatus::selected;
            ++requeued;
        }
        e.baseline_ndcg = e.ndcg;
    }
    double mean = 0.0;
    for (const auto& e : pool) mean += *e.ndcg;
    mean /= static_cast<double>(pool.size());

    write_pool(pool, dir_ / "pool.jsonl");
    log("score", s.iteration,
        {{"", 0, "threshold", th.threshold},
         {"", 0, "threshold_fallback", th.fallback},
         {"", 0, "selected", th.selected + requeued},
         {"", 0, "requeued", requeued},
         {"", 0, "mean_pool_ndcg", mean}});
    s.stage = Stage::score;
    s.threshold = th.threshold;
    s.threshold_fallback = th.fallback;
    save_state(s);
    spdlog::info("iteration {}: threshold {:.4f}, {} entries selected", s.iteration, th.threshold,
                 th.selected + requeued);
}

void Pipeline::construct() {
    require(Stage::construct, {Stage::score, Stage::construct}, "construct");
    auto s = state();
    const auto pool = read_pool(dir_ / "pool.jsonl");
    const auto model = EncoderModel::load(dir_ / "model.ckpt");
    auto exemplars = ExemplarStore::load(dir_ / "exemplars.jsonl");
    const auto triplets = construct_guidance(pool, teacher(), corpus(), model, exemplars, config_);
    write_triplets(triplets, dir_ / "triplets.jsonl");

    std::map<std::string, std::size_t> by_kind;
    for (const auto& t : triplets)
        ++by_kind[t.origin == Origin::preference ? std::string("preference") : std::string(to_string(t.objective))];
    std::vector<MetricEvent> events{{"", 0, "triplets", triplets.size()}, {"", 0, "exemplars_available", exemplars.size()}};
    for (const auto& [k, v] : by_kind) events.push_back({"", 0, "triplets/" + k, v});
    log("construct", s.iteration, std::move(events));
    s.stage = Stage::construct;
    save_state(s);
    spdlog::info("iteration {}: constructed {} triplets", s.iteration, triplets.size());
}

void Pipeline::train() {
    require(Stage::train, {Stage::construct, Stage::train}, "train");
    auto s = state();
    auto model = EncoderModel::load(dir_ / "model.ckpt");
    if (model.version() == s.collect_version) {
        model.save(dir_ / "model.prev.ckpt");
    } else {
        model = EncoderModel::load(dir_ / "model.prev.ckpt");
        if (model.version() != s.collect_version)
            throw StageOrderError("cannot recover the pre-training encoder for iteration " + std::to_string(s.iteration));
    }
    const auto triplets = read_triplets(dir_ / "triplets.jsonl");
    const auto summary = train_curriculum(model, triplets, config_, s.iteration);
    model.save(dir_ / "model.ckpt");

    double mean = 0.0;
    for (double l : summary.losses) mean += l;
    if (!summary.losses.empty()) mean /= static_cast<double>(summary.losses.size());
    std::vector<MetricEvent> events{{"", 0, "batches", summary.batches}, {"", 0, "mean_loss", mean}};
    if (!summary.losses.empty()) {
        events.push_back({"", 0, "first_loss", summary.losses.front()});
        events.push_back({"", 0, "last_loss", summary.losses.back()});
    }
    events.push_back({"", 0, "encoder_version", model.version()});
    log("train", s.iteration, std::move(events));
    s.stage = Stage::train;
    s.trained_version = model.version();
    s.exemplars_before_assess = ExemplarStore::load(dir_ / "exemplars.jsonl").size();
    save_state(s);
    spdlog::info("iteration {}: trained {} batches, mean loss {:.4f}", s.iteration, summary.batches, mean);
}

void Pipeline::assess() {
    require(Stage::assess, {Stage::train, Stage::assess}, "assess");
    auto s = state();
    if (!s.threshold) throw StageOrderError("no threshold recorded; run score first");
    auto pool = read_pool(dir_ / "pool.jsonl");
    const auto model = EncoderModel::load(dir_ / "model.ckpt");
    if (model.version() != s.trained_version)
        throw StageOrderError("model.ckpt does not match the trained encoder for iteration " + std::to_string(s.iteration));
    const auto index = RetrievalIndex::build(model, corpus());

    auto loaded = ExemplarStore::load(dir_ / "exemplars.jsonl");
    ExemplarStore exemplars;
    for (std::size_t i = 0; i < std::min(loaded.size(), s.exemplars_before_assess); ++i)
        exemplars.insert(loaded.exemplars()[i]);

    const auto summary = figret::assess(pool, model, index, teacher(), corpus(), *s.threshold, exemplars, config_);
    write_pool(pool, dir_ / "pool.jsonl");
    exemplars.save(dir_ / "exemplars.jsonl");
    log("assess", s.iteration,
        {{"", 0, "reassessed", summary.reassessed},
         {"", 0, "well_learned", summary.well_learned},
         {"", 0, "regressed", summary.regressed},
         {"", 0, "failed", summary.failed},
         {"", 0, "exemplars", exemplars.size()}});
    s.stage = Stage::assess;
    s.requeue = summary.requeue;
    save_state(s);
    spdlog::info("iteration {}: {} well learned, {} regressed of {} reassessed", s.iteration, summary.well_learned,
                 summary.regressed, summary.reassessed);
}

void Pipeline::evaluate() {
    if (!std::filesystem::exists(dir_ / "model.ckpt") || !std::filesystem::exists(dir_ / "model.init.ckpt"))
        throw StageOrderError("no encoder in " + dir_.string() + "; run collect or run first");
    const auto s = state();
    const auto heldout = heldout_queries();
    const auto model = EncoderModel::load(dir_ / "model.ckpt");
    const auto index = RetrievalIndex::build(model, corpus());
    const double align = alignment_ndcg(model, index, teacher(), heldout, corpus(), config_.top_k);

    std::vector<MetricEvent> events{{"", 0, "alignment_ndcg", align}, {"", 0, "encoder_version", model.version()}};
    const auto initial = EncoderModel::load(dir_ / "model.init.ckpt");
    if (initial.version() != model.version()) {
        const auto init_index = RetrievalIndex::build(initial, corpus());
        const auto rates = objective_winrates(initial, init_index, model, index, heldout, corpus());
        events.push_back({"", 0, "objective_winrates", to_json(rates)});
    }
    log("eval", s.iteration, std::move(events));
    spdlog::info("iteration {}: held-out alignment NDCG@{} = {:.4f}", s.iteration, config_.top_k, align);
}

void Pipeline::run(int iterations) {
    if (iterations < 1) throw ConfigError("iterations must be >= 1");
    init();
    const auto has_eval = [&](int it) {
        const auto m = MetricsLog::load(dir_ / "metrics.jsonl");
        return std::any_of(m.events().begin(), m.events().end(),
                           [&](const MetricEvent& e) { return e.stage == "eval" && e.iteration == it; });
    };
    for (;;) {
        const auto s = state();
        if ((s.stage == Stage::none || s.stage == Stage::assess) && !has_eval(s.iteration)) evaluate();
        if (s.stage == Stage::assess && s.iteration >= iterations) break;
        switch (s.stage) {
            case Stage::none:
            case Stage::assess: collect(); break;
            case Stage::collect: score(); break;
            case Stage::score: construct(); break;
            case Stage::construct: train(); break;
            case Stage::train: assess(); break;
        }
    }
    report(dir_);
}

}  // namespace figret
