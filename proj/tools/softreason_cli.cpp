// Command-line harness: runs the latent-space search and its baselines over JSONL datasets.

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "softreason/softreason.hpp"

namespace fs = std::filesystem;
using namespace softreason;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitTransport = 2;
constexpr int kExitInternal = 3;

/// Collects flags that were actually given and turns them into config-file keys.
struct Overrides {
    nlohmann::json values = nlohmann::json::object();
    std::vector<std::function<void()>> commits;

    template <typename T>
    CLI::Option* add(CLI::App* app, const std::string& key, const std::string& help) {
        auto value = std::make_shared<T>();
        auto* opt = app->add_option("--" + key, *value, help);
        commits.emplace_back([this, value, opt, key] {
            if (opt->count() > 0) values[key] = *value;
        });
        return opt;
    }

    void flag(CLI::App* app, const std::string& key, const std::string& help) {
        auto* opt = app->add_flag("--" + key, help);
        commits.emplace_back([this, opt, key] {
            if (opt->count() > 0) values[key] = true;
        });
    }

    nlohmann::json collect() {
        for (auto& c : commits) c();
        return values;
    }
};

struct CommonArgs {
    std::string config;
    std::size_t synthetic_questions = 0;
    Overrides overrides;
};

void add_common(CLI::App* app, CommonArgs& args) {
    app->add_option("--config", args.config, "JSON config file; flags override it")->check(CLI::ExistingFile);
    app->add_option("--synthetic-questions", args.synthetic_questions,
                    "use N generated questions instead of --dataset (synthetic backend only)");
    auto& o = args.overrides;
    o.add<std::string>(app, "dataset", "JSONL dataset path");
    o.add<std::string>(app, "dataset-name", "label used in plot data");
    o.add<std::string>(app, "backend", "generation backend")->check(CLI::IsMember({"http", "synthetic"}));
    o.add<std::string>(app, "endpoint", "HTTP backend base URL");
    o.add<long>(app, "embedding-dim", "embedding dimension D");
    o.add<double>(app, "timeout", "HTTP timeout in seconds");
    o.add<std::string>(app, "acquisition", "acquisition function")->check(CLI::IsMember({"ei", "adaptive-ei", "pi", "ucb"}));
    o.add<double>(app, "ucb-beta", "UCB exploration weight");
    o.add<long>(app, "d", "latent dimension");
    o.add<double>(app, "sigma", "perturbation scale");
    o.add<std::size_t>(app, "k", "samples per iteration");
    o.add<std::size_t>(app, "max-iters", "maximum iterations K");
    o.add<double>(app, "epsilon", "convergence threshold");
    o.add<double>(app, "delta", "adaptive-EI confidence");
    o.add<double>(app, "lambda", "GP noise constant");
    o.add<std::size_t>(app, "pool-size", "acquisition candidate pool size M");
    o.add<std::string>(app, "placement", "injection position")->check(CLI::IsMember({"first", "middle", "last"}));
    o.add<std::size_t>(app, "inject-count", "number of injected tokens m");
    o.add<std::string>(app, "verifier", "verifier strategy")
        ->check(CLI::IsMember({"single-judge", "multi-judge", "single-generate", "multi-generate"}));
    o.add<std::string>(app, "coherence", "coherence mode")->check(CLI::IsMember({"log-sum", "hierarchical"}));
    o.add<std::size_t>(app, "seeds", "number of seeds");
    o.add<std::size_t>(app, "parallelism", "questions in flight");
    o.add<std::uint64_t>(app, "master-seed", "master random seed");
    o.add<std::size_t>(app, "max-tokens", "generation length cap");
    o.add<double>(app, "sc-temperature", "self-consistency sampling temperature");
    o.add<std::string>(app, "out", "output directory");
    o.add<std::string>(app, "prompts", "directory with prompt template overrides");
    o.add<std::uint64_t>(app, "world-seed", "synthetic world seed");
    o.add<std::size_t>(app, "regions", "synthetic answer regions");
    o.add<double>(app, "verifier-accuracy", "synthetic verifier accuracy");
    o.add<double>(app, "greedy-correct-rate", "synthetic greedy accuracy");
    o.add<double>(app, "sharpness", "synthetic coherence sharpness");
    o.flag(app, "include-anchor", "make the unperturbed anchor the first initial point");
}

RunSettings resolve(CommonArgs& args) {
    RunSettings s = args.config.empty() ? RunSettings{} : load_settings(args.config);
    apply_json(s, args.overrides.collect());
    if (const char* token = std::getenv("SOFTREASON_API_TOKEN")) s.backend.http.auth_token = token;
    return s;
}

std::vector<DatasetItem> resolve_dataset(const RunSettings& s, std::size_t synthetic_questions) {
    if (synthetic_questions > 0) {
        if (s.backend.kind != "synthetic") throw ValidationError("--synthetic-questions requires the synthetic backend");
        return to_dataset(SyntheticWorld(s.backend.world).make_questions(synthetic_questions));
    }
    if (s.dataset.empty()) throw ValidationError("no dataset: pass --dataset or --synthetic-questions");
    std::vector<std::string> warnings;
    auto items = load_dataset(s.dataset, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    return items;
}

PromptTemplates resolve_templates(const RunSettings& s) {
    return s.prompts.empty() ? PromptTemplates::builtin() : PromptTemplates::load(s.prompts);
}

void print_report(const MetricsReport& r) {
    std::cout << fmt::format("accuracy         {:.4f} +/- {:.4f}\n", r.accuracy.mean, r.accuracy.stddev)
              << fmt::format("coverage         {:.4f} +/- {:.4f}\n", r.coverage.mean, r.coverage.stddev)
              << fmt::format("strict coverage  {:.4f} +/- {:.4f}\n", r.strict_coverage.mean, r.strict_coverage.stddev);
    std::cout << "terminated at iteration:";
    for (const auto& [k, f] : r.iteration_histogram) std::cout << fmt::format(" {}:{:.3f}", k, f);
    std::cout << fmt::format("\ntokens in/out    {}/{}\ngeneration calls {}\n", r.input_tokens, r.output_tokens,
                             r.generation_calls);
    if (!r.failed_ids.empty()) std::cout << fmt::format("failed questions {}\n", r.failed_ids.size());
}

int run_method(CommonArgs& args, Method method) {
    auto s = resolve(args);
    s.experiment.method = method;
    const auto dataset = resolve_dataset(s, args.synthetic_questions);
    const auto backend = make_backend(s.backend, dataset);
    const auto templates = resolve_templates(s);
    fs::create_directories(s.out);
    std::ofstream(fs::path(s.out) / "config.json") << to_json(s).dump(2) << "\n";
    const auto result = run_experiment(s.experiment, dataset, *backend, fs::path(s.out), templates);
    print_report(result.report);
    std::cout << "wrote " << s.out << "\n";
    return kExitOk;
}

int run_calibration(CommonArgs& args, std::size_t limit, std::vector<double> grid) {
    auto s = resolve(args);
    auto dataset = resolve_dataset(s, args.synthetic_questions);
    if (limit > 0 && dataset.size() > limit) dataset.resize(limit);
    const auto backend = make_backend(s.backend, dataset);
    if (grid.empty()) grid = default_sigma_grid();
    const auto rows = calibrate_sigma(s.experiment, dataset, *backend, grid, resolve_templates(s));
    std::string csv = "sigma,accuracy,coverage\n";
    for (const auto& r : rows) {
        csv += fmt::format("{},{},{}\n", r.sigma, r.accuracy, r.coverage);
        std::cout << fmt::format("sigma {:<6} accuracy {:.4f} coverage {:.4f}\n", r.sigma, r.accuracy, r.coverage);
    }
    fs::create_directories(s.out);
    std::ofstream(fs::path(s.out) / "calibration.csv") << csv;
    std::cout << "best sigma " << best_sigma(rows).sigma << "\n";
    return kExitOk;
}

int run_metrics(const std::string& logs, const std::string& dataset_path, const std::string& out) {
    const auto dataset = load_dataset(dataset_path);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(logs)) {
        const auto name = entry.path().filename().string();
        if (name.starts_with("runs_seed") && name.ends_with(".jsonl")) files.push_back(entry.path());
    }
    if (files.empty()) throw ValidationError("no runs_seed*.jsonl files in " + logs);
    std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
        auto index = [](const fs::path& p) {
            const auto stem = p.stem().string();
            return std::stoul(stem.substr(std::string("runs_seed").size()));
        };
        return index(a) < index(b);
    });
    std::vector<SeedMetrics> seeds;
    for (std::size_t i = 0; i < files.size(); ++i) {
        seeds.push_back(compute_seed_metrics(read_run_log(files[i]), dataset, i));
    }
    const auto report = aggregate(std::move(seeds));
    print_report(report);
    if (!out.empty()) {
        std::ofstream(out) << to_json(report).dump(2) << "\n";
    }
    return kExitOk;
}

int run_synth_dataset(CommonArgs& args, std::size_t count, const std::string& path) {
    auto s = resolve(args);
    const SyntheticWorld world(s.backend.world);
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    for (const auto& q : world.make_questions(count)) {
        out << nlohmann::json{{"id", q.id}, {"question", q.question}, {"gold_answer", q.gold_answer}}.dump() << "\n";
    }
    std::cout << "wrote " << count << " questions to " << path << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Latent-space Bayesian optimization of LLM answers"};
    app.require_subcommand(1);

    CommonArgs run_args;
    auto* run = app.add_subcommand("run", "run the latent-space search over a dataset");
    add_common(run, run_args);

    CommonArgs sc_args;
    auto* sc = app.add_subcommand("baseline-sc", "self-consistency baseline (k*K samples, majority vote)");
    add_common(sc, sc_args);

    CommonArgs rnd_args;
    auto* rnd = app.add_subcommand("baseline-random", "random latent perturbations without BO, majority vote");
    add_common(rnd, rnd_args);

    CommonArgs cal_args;
    std::size_t cal_limit = 20;
    std::vector<double> cal_grid;
    auto* cal = app.add_subcommand("calibrate-sigma", "sweep the perturbation scale on a dataset prefix");
    add_common(cal, cal_args);
    cal->add_option("--limit", cal_limit, "questions used (0 = all)");
    cal->add_option("--grid", cal_grid, "sigma values (default 0.1 0.3 1 3)");

    std::string logs;
    std::string metrics_dataset;
    std::string metrics_out;
    auto* metrics = app.add_subcommand("metrics", "recompute metrics from run logs");
    metrics->add_option("--logs", logs, "directory holding runs_seed*.jsonl")->required()->check(CLI::ExistingDirectory);
    metrics->add_option("--dataset", metrics_dataset, "dataset the runs used")->required()->check(CLI::ExistingFile);
    metrics->add_option("--out", metrics_out, "write the report JSON here");

    CommonArgs synth_args;
    std::size_t synth_count = 200;
    std::string synth_path = "synthetic.jsonl";
    auto* synth = app.add_subcommand("synth-dataset", "write a dataset whose gold answers match the synthetic world");
    add_common(synth, synth_args);
    synth->add_option("--count", synth_count, "number of questions");
    synth->add_option("--path", synth_path, "output JSONL path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (*run) return run_method(run_args, Method::soft_reasoning);
        if (*sc) return run_method(sc_args, Method::self_consistency);
        if (*rnd) return run_method(rnd_args, Method::random_perturbation);
        if (*cal) return run_calibration(cal_args, cal_limit, cal_grid);
        if (*metrics) return run_metrics(logs, metrics_dataset, metrics_out);
        if (*synth) return run_synth_dataset(synth_args, synth_count, synth_path);
    } catch (const TransportError& e) {
        std::cerr << "transport error: " << e.what() << "\n";
        return kExitTransport;
    } catch (const CapabilityError& e) {
        std::cerr << "backend capability error: " << e.what() << "\n";
        return kExitTransport;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitInternal;
}
