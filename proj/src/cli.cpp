#include "figret/cli.hpp"

#include <cstdlib>
#include <optional>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "figret/error.hpp"
#include "figret/io.hpp"
#include "figret/pipeline.hpp"

namespace figret {

namespace {

struct GlobalOptions {
    std::string config_path;
    std::string run_dir = "run";
    std::optional<std::uint64_t> seed;
    std::string teacher;
    std::string base_url;
    bool quiet = false;
};

PipelineConfig load_config(const GlobalOptions& g) {
    PipelineConfig c;
    if (!g.config_path.empty()) {
        json j;
        try {
            j = json::parse(read_file(g.config_path));
        } catch (const json::exception& e) {
            throw ConfigError(g.config_path + ": " + e.what());
        }
        c = pipeline_config_from_json(j);
    } else if (std::filesystem::exists(std::filesystem::path(g.run_dir) / "config.json")) {
        // Resuming a run directory keeps the configuration it was started with.
        c = pipeline_config_from_json(json::parse(read_file(std::filesystem::path(g.run_dir) / "config.json")));
    }
    if (g.seed) c.seed = *g.seed;
    if (!g.teacher.empty()) c.teacher = g.teacher;
    if (!g.base_url.empty()) c.base_url = g.base_url;
    c.validate();
    if (c.teacher == "http") {
        if (c.base_url.empty()) throw ConfigError("--teacher http needs --base-url (or chat.base_url in the config)");
        if (!std::getenv("FIGRET_API_KEY"))
            throw ConfigError("--teacher http needs the FIGRET_API_KEY environment variable");
    }
    return c;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Retriever fine-tuning with teacher feedback on a synthetic corpus", "figret"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    app.add_option("--config", g.config_path, "JSON configuration file")->check(CLI::ExistingFile);
    app.add_option("--run-dir", g.run_dir, "Run directory")->capture_default_str();
    app.add_option("--seed", g.seed, "Base random seed");
    app.add_option("--teacher", g.teacher, "Teacher backend")->check(CLI::IsMember({"mock", "http"}));
    app.add_option("--base-url", g.base_url, "Chat-completions service base URL for --teacher http");
    app.add_flag("--quiet,-q", g.quiet, "Only log warnings");

    auto* gen = app.add_subcommand("gen-corpus", "Generate the synthetic corpus into the run directory");
    auto* col = app.add_subcommand("collect", "Retrieve top-k documents for the pool queries");
    auto* sco = app.add_subcommand("score", "Score the pool with the teacher and select entries");
    auto* con = app.add_subcommand("construct", "Build guidance and preference triplets");
    auto* tra = app.add_subcommand("train", "Train the encoder with the curriculum");
    auto* ass = app.add_subcommand("assess", "Re-score selected entries with the trained encoder");
    auto* eva = app.add_subcommand("eval", "Held-out alignment NDCG and objective win rates");
    auto* rep = app.add_subcommand("report", "Summarize metrics.jsonl into report.json and report.txt");
    auto* run = app.add_subcommand("run", "Run (or resume) the full loop");
    int iterations = 0;
    run->add_option("--iterations,-n", iterations, "Iterations to complete (default: config)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "figret: " << e.what() << "\n" << "Run 'figret --help' for usage.\n";
        return 1;
    }

    spdlog::set_level(g.quiet ? spdlog::level::warn : spdlog::level::info);
    try {
        if (rep->parsed()) {
            const auto r = report(g.run_dir);
            out << r.text;
            return 0;
        }
        auto config = load_config(g);
        Pipeline p(g.run_dir, config);
        if (gen->parsed()) {
            p.gen_corpus();
            p.init();
        } else if (col->parsed()) {
            p.init();
            p.collect();
        } else if (sco->parsed()) {
            p.score();
        } else if (con->parsed()) {
            p.construct();
        } else if (tra->parsed()) {
            p.train();
        } else if (ass->parsed()) {
            p.assess();
        } else if (eva->parsed()) {
            p.evaluate();
        } else if (run->parsed()) {
            p.run(iterations > 0 ? iterations : config.iterations);
            out << report(g.run_dir).text;
        }
    } catch (const Error& e) {
        err << "figret: " << e.kind() << " error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "figret: error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

}  // namespace figret
