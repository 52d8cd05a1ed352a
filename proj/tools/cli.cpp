#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

#include "ssgp/ssgp.hpp"

namespace ssgp::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::string> split_kernels(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ';')) {
        const auto view = detail::trim(part);
        if (!view.empty()) out.emplace_back(view);
    }
    return out;
}

template <typename T>
T config_value(const json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config file '" + path + "': " + e.what());
    }
}

const std::string& single_input(const RunConfig& cfg) {
    if (cfg.inputs.size() != 1) throw ConfigError(cfg.command + ": exactly one --input is required");
    return cfg.inputs.front();
}

void require(const std::string& value, const char* flag, const std::string& command) {
    if (value.empty()) throw ConfigError(command + ": " + flag + " is required");
}

double median_spacing(std::span<const double> ts) {
    if (ts.size() < 2) return 1.0;
    std::vector<double> gaps;
    for (std::size_t i = 1; i < ts.size(); ++i) gaps.push_back(ts[i] - ts[i - 1]);
    std::nth_element(gaps.begin(), gaps.begin() + static_cast<long>(gaps.size() / 2), gaps.end());
    return gaps[gaps.size() / 2];
}

std::vector<double> scaled(std::span<const double> ts, double scale) {
    std::vector<double> out(ts.begin(), ts.end());
    for (double& t : out) t /= scale;
    return out;
}

ScoreOptions score_options(const RunConfig& cfg) {
    ScoreOptions o;
    o.robust = cfg.robust;
    o.log_rho = cfg.log_rho;
    o.rule = cfg.rule == "per-dimension" ? SkipRule::per_dimension : SkipRule::joint;
    return o;
}

struct Trained {
    FactorModel model;
    int iterations = 0;
};

Trained fit_em_cli(const RunConfig& cfg, std::span<const double> ts, const MatrixXd& y, std::vector<KernelSpec> kernels,
                   Index k_count, std::ostream& err) {
    EmConfig em;
    em.num_latents = k_count;
    em.kernels = std::move(kernels);
    em.mode = parse_loading_mode(cfg.mode);
    em.max_iters = cfg.max_iters;
    em.tol = cfg.tol;
    em.threads = cfg.threads;
    Trained out;
    em.on_iteration = [&err, &out](int iter, const FactorModel&, const LatentPosterior& post) {
        err << "em: iteration " << iter << " log-likelihood " << post.log_likelihood << '\n';
        out.iterations = iter + 1;
    };
    out.model = fit_em(ts, y, em);
    return out;
}

Trained fit_standardized(const RunConfig& cfg, std::span<const double> ts, const MatrixXd& y, std::ostream& err) {
    if (y.rows() == 1) {
        if (cfg.kernels.size() > 1) throw ConfigError("univariate series take a single kernel expression");
        const KernelSpec spec = parse_kernel(cfg.kernels.empty() ? kUnivariateKernel : cfg.kernels.front());
        UnivariateFitOptions options;
        options.max_outer = cfg.max_iters;
        auto fit = fit_univariate(ts, y.row(0).transpose(), spec, options);
        err << "fit_univariate: log-likelihood " << fit.initial_log_likelihood << " -> " << fit.final_log_likelihood
            << " after " << fit.iterations << " iterations\n";
        return {std::move(fit.model), fit.iterations};
    }
    Index k_count = cfg.latents;
    if (!cfg.latents_explicit && k_count > y.rows()) {
        err << "note: reducing latents from " << k_count << " to " << y.rows() << " (D = " << y.rows() << ")\n";
        k_count = y.rows();
    }
    std::vector<KernelSpec> kernels;
    for (const auto& k : cfg.kernels) kernels.push_back(parse_kernel(k));
    if (kernels.empty()) {
        const auto defaults = default_latent_kernels();
        for (Index k = 0; k < k_count; ++k) kernels.push_back(defaults[static_cast<std::size_t>(k) % defaults.size()]);
    }
    if (kernels.size() != 1 && static_cast<Index>(kernels.size()) != k_count)
        throw ConfigError("--kernels gives " + std::to_string(kernels.size()) + " expressions for " +
                          std::to_string(k_count) + " latents");
    Trained out = fit_em_cli(cfg, ts, y, kernels, k_count, err);
    if (!cfg.refine_kernels) return out;

    // The orthogonal likelihood factorizes over latents given C^T (y - d), so each kernel can be
    // refitted on its own projected series; EM then reruns with the refined kernels.
    if (out.model.mode != LoadingMode::orthogonal) throw ConfigError("--refine-kernels requires orthogonal mode");
    const MatrixXd projected = out.model.loading.transpose() * (y.colwise() - out.model.offset);
    std::vector<KernelSpec> refined;
    for (Index k = 0; k < k_count; ++k) {
        UnivariateFitOptions options;
        options.max_outer = cfg.max_iters;
        options.initial_noise = out.model.noise(0);
        const auto& spec = out.model.latent_specs[static_cast<std::size_t>(k)];
        const auto fit = fit_univariate(ts, projected.row(k).transpose(), spec, options);
        refined.push_back(fit.model.latent_specs.front());
        err << "refine: latent " << k << " " << to_string(refined.back()) << '\n';
    }
    return fit_em_cli(cfg, ts, y, refined, k_count, err);
}

/// Standardizes on train, then fits a univariate ssGP (D = 1) or GPFA by EM.
Trained train_model(const RunConfig& cfg, const LabeledSeries& train, std::ostream& err) {
    const auto st = standardize(train.values, MatrixXd());
    const double time_scale = median_spacing(train.timestamps);
    if (!(time_scale > 0.0)) throw InputError("training timestamps have zero median spacing");
    const auto ts = scaled(train.timestamps, time_scale);
    Trained out = fit_standardized(cfg, ts, st.train, err);
    if (cfg.robust_training) {
        OnlineScorer scorer(out.model, score_options(cfg));
        MatrixXd masked = st.train;
        long dropped = 0;
        for (Index t = 0; t < masked.cols(); ++t) {
            const auto p = scorer.step(ts[static_cast<std::size_t>(t)], st.train.col(t));
            if (!p.accepted && !std::isnan(p.score)) {
                masked.col(t).setConstant(kNaN);
                ++dropped;
            }
        }
        err << "robust training: refitting without " << dropped << " rejected rows\n";
        if (dropped > 0) out = fit_standardized(cfg, ts, masked, err);
    }
    out.model.standardization = Standardization{st.mean, st.scale};
    out.model.time_scale = time_scale;
    return out;
}

json log_json(const std::vector<double>& log) {
    json a = json::array();
    for (double v : log) a.push_back(std::isfinite(v) ? json(v) : json(nullptr));
    return a;
}

json report_json(const EvalReport& r, bool sweep) {
    return json{{"mode", sweep ? "sweep" : "threshold"},
                {"threshold", r.threshold},
                {"precision", r.precision},
                {"recall", r.recall},
                {"f1", r.f1},
                {"true_positives", r.true_positives},
                {"false_positives", r.false_positives},
                {"false_negatives", r.false_negatives}};
}

EvalReport evaluate(std::span<const LabeledScores> series, const RunConfig& cfg) {
    long positives = 0;
    for (const auto& s : series) positives += std::count(s.labels.begin(), s.labels.end(), 1);
    if (positives == 0) throw EvaluationError("no positive labels, recall is undefined");
    return cfg.threshold ? range_adjusted_metrics(series, *cfg.threshold) : best_f1_sweep(series);
}

void write_output(const RunConfig& cfg, const json& doc, std::ostream& out) {
    out << doc.dump(2) << '\n';
    if (!cfg.output.empty()) {
        std::ofstream file(cfg.output);
        if (!file) throw InputError("cannot write '" + cfg.output + "'");
        file << doc.dump(2) << '\n';
    }
}

int cmd_train(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    require(cfg.model, "--model", "train");
    const LabeledSeries train = load_csv(single_input(cfg));
    Trained t = train_model(cfg, train, err);
    save_model(cfg.model, t.model);
    out << json{{"command", "train"},
                {"model", cfg.model},
                {"dims", t.model.obs_dim()},
                {"latents", t.model.num_latents()},
                {"mode", to_string(t.model.mode)},
                {"rows", train.length()},
                {"iterations", t.iterations},
                {"time_scale", t.model.time_scale},
                {"final_log_likelihood", t.model.training_log.empty() ? json(nullptr) : json(t.model.training_log.back())},
                {"training_log", log_json(t.model.training_log)}}
               .dump()
        << '\n';
    return kExitOk;
}

/// Streams input rows through the scorer and writes one CSV row per input row.
/// `explain` swaps the marginal columns for the projected latents.
int cmd_stream(const RunConfig& cfg, std::ostream& out, std::ostream& err, bool explain) {
    require(cfg.model, "--model", cfg.command);
    const FactorModel model = load_model(cfg.model);
    const std::string& input = single_input(cfg);
    std::ifstream in(input);
    if (!in) throw InputError("cannot open '" + input + "'");
    CsvReader reader(in, input);
    if (reader.dims() != model.obs_dim())
        throw ShapeError(input + ": " + std::to_string(reader.dims()) + " value columns, model expects " +
                         std::to_string(model.obs_dim()));

    std::ofstream file;
    if (!cfg.output.empty()) {
        file.open(cfg.output);
        if (!file) throw InputError("cannot write '" + cfg.output + "'");
    }
    std::ostream& csv = cfg.output.empty() ? out : file;
    const Index k_count = model.num_latents();
    csv << reader.timestamp_column() << ",score";
    if (explain) {
        for (Index k = 0; k < k_count; ++k) csv << ",latent_" << k;
    } else {
        for (const auto& c : reader.columns()) csv << ",nll_" << c;
        csv << ",accepted";
    }
    for (Index k = 0; k < k_count; ++k) csv << ",latent_nll_" << k;
    csv << ",reconstruction_error";
    if (explain) csv << ",top_latent";
    if (reader.has_labels()) csv << ',' << reader.label_column();
    csv << '\n';

    OnlineScorer scorer(model, score_options(cfg));
    CsvRow row;
    long rows = 0, rejected = 0;
    std::vector<long> top_counts(static_cast<std::size_t>(k_count), 0);
    std::string line;
    while (reader.next(row)) {
        const VectorXd y = model.standardization ? model.standardization->apply(row.values) : row.values;
        const ScoredPoint p = scorer.step(row.timestamp / model.time_scale, y);
        ++rows;
        if (!p.accepted) ++rejected;
        const auto& a = p.attribution;
        line = row.timestamp_text;
        line += ',';
        line += format_number(p.score);
        if (explain) {
            for (Index k = 0; k < k_count; ++k) (line += ',') += format_number(a.projected_latents(k));
        } else {
            for (Index i = 0; i < p.marginal_scores.size(); ++i) (line += ',') += format_number(p.marginal_scores(i));
            line += p.accepted ? ",1" : ",0";
        }
        for (Index k = 0; k < k_count; ++k) (line += ',') += format_number(a.per_latent_nll(k));
        (line += ',') += format_number(a.reconstruction_error);
        if (explain) {
            Index top = -1;
            if (!a.per_latent_nll.hasNaN()) {
                a.per_latent_nll.maxCoeff(&top);
                if (row.label != 0) ++top_counts[static_cast<std::size_t>(top)];
            }
            line += ',';
            if (top >= 0) line += std::to_string(top);
        }
        if (row.label >= 0) (line += ',') += std::to_string(row.label);
        line += '\n';
        csv << line;
    }
    csv.flush();
    if (!csv) throw InputError("write failed for score output");
    err << cfg.command << ": " << rows << " rows, " << rejected << " not absorbed by the filter\n";
    if (!cfg.output.empty()) {
        json summary{{"command", cfg.command}, {"output", cfg.output}, {"rows", rows}, {"rejected", rejected}};
        if (explain) summary["top_latent_counts"] = top_counts;
        out << summary.dump() << '\n';
    }
    return kExitOk;
}

int cmd_eval(const RunConfig& cfg, std::ostream& out) {
    if (cfg.inputs.empty()) throw ConfigError("eval: at least one --input score file is required");
    std::vector<std::vector<double>> scores;
    std::vector<std::vector<int>> labels;
    for (const auto& path : cfg.inputs) {
        const LabeledSeries s = load_csv(path);
        const auto it = std::find(s.columns.begin(), s.columns.end(), "score");
        if (it == s.columns.end()) throw InputError(path + ": no 'score' column");
        if (!s.has_labels()) throw InputError(path + ": no label column (is_anomaly)");
        const Index col = it - s.columns.begin();
        scores.emplace_back(s.values.row(col).begin(), s.values.row(col).end());
        labels.push_back(s.labels);
    }
    std::vector<LabeledScores> series;
    for (std::size_t i = 0; i < scores.size(); ++i) series.push_back({scores[i], labels[i]});
    json doc = report_json(evaluate(series, cfg), !cfg.threshold);
    if (!cfg.curve.empty()) {
        std::vector<EvalReport> curve;
        best_f1_sweep(series, &curve);
        std::ofstream f(cfg.curve);
        if (!f) throw InputError("cannot write '" + cfg.curve + "'");
        f << "threshold,precision,recall,f1,true_positives,false_positives,false_negatives\n";
        for (const auto& r : curve)
            f << format_number(r.threshold) << ',' << format_number(r.precision) << ',' << format_number(r.recall) << ','
              << format_number(r.f1) << ',' << r.true_positives << ',' << r.false_positives << ',' << r.false_negatives
              << '\n';
    }
    doc["command"] = "eval";
    doc["series"] = series.size();
    write_output(cfg, doc, out);
    return kExitOk;
}

int cmd_synth(const RunConfig& cfg, std::ostream& out) {
    require(cfg.output, "--output", "synth");
    const fs::path dir = cfg.output;
    fs::create_directories(dir);
    const std::string scenario = cfg.scenario.empty() ? "fig2" : cfg.scenario;
    json files = json::array();
    auto emit = [&](const std::string& name, const LabeledSeries& s) {
        write_csv(dir / name, s);
        files.push_back({{"path", (dir / name).string()},
                         {"rows", s.length()},
                         {"dims", s.dims()},
                         {"anomalous_rows", std::count(s.labels.begin(), s.labels.end(), 1)}});
    };
    if (scenario == "univariate") {
        const NoiseScale scale = cfg.noise_scale == "stddev" ? NoiseScale::stddev : NoiseScale::variance;
        emit("series.csv", gen_univariate(cfg.length > 0 ? cfg.length : 300, cfg.seed, false, scale));
    } else if (scenario == "fig2") {
        const LabeledSeries s = robustness_scenario(cfg.seed);
        emit("train.csv", s.slice(0, 60));
        emit("test.csv", s);
    } else if (scenario == "fig1") {
        const auto sc = explain_scenario(cfg.seed, cfg.length > 0 ? cfg.length : 1200);
        emit("train.csv", sc.train.series);
        emit("test.csv", sc.test.series);
    } else {
        throw ConfigError("unknown scenario '" + scenario + "' (univariate, fig1, fig2)");
    }
    out << json{{"command", "synth"}, {"scenario", scenario}, {"seed", cfg.seed}, {"files", files}}.dump() << '\n';
    return kExitOk;
}

std::vector<BenchmarkSeries> scenario_series(const RunConfig& cfg) {
    const std::string scenario = cfg.scenario.empty() ? "fig2" : cfg.scenario;
    BenchmarkSeries b;
    b.name = scenario;
    if (scenario == "fig2") {
        const LabeledSeries s = robustness_scenario(cfg.seed);
        b.train = s.slice(0, 60);
        b.test = s;
    } else if (scenario == "fig1") {
        const auto sc = explain_scenario(cfg.seed, cfg.length > 0 ? cfg.length : 1200);
        b.train = sc.train.series;
        b.test = sc.test.series;
    } else {
        throw ConfigError("pipeline: unknown scenario '" + scenario + "' (fig1, fig2)");
    }
    return {std::move(b)};
}

int cmd_pipeline(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    std::vector<BenchmarkSeries> corpus;
    std::string source;
    if (!cfg.inputs.empty()) {
        corpus = load_benchmark_layout(single_input(cfg), parse_dataset_layout(cfg.dataset_layout));
        source = cfg.dataset_layout;
    } else {
        corpus = scenario_series(cfg);
        source = "synthetic";
    }
    if (corpus.empty()) throw InputError("pipeline: no series found");

    std::vector<std::vector<double>> scores;
    json per_series = json::array();
    for (const auto& b : corpus) {
        err << "pipeline: " << b.name << " (D = " << b.train.dims() << ", train " << b.train.length() << ", test "
            << b.test.length() << ")\n";
        if (!b.test.has_labels()) throw InputError("pipeline: test series '" + b.name + "' has no labels");
        const Trained t = train_model(cfg, b.train, err);
        OnlineScorer scorer(t.model, score_options(cfg));
        std::vector<double> s;
        s.reserve(static_cast<std::size_t>(b.test.length()));
        for (Index i = 0; i < b.test.length(); ++i)
            s.push_back(scorer.step(b.test.timestamps[static_cast<std::size_t>(i)] / t.model.time_scale,
                                    t.model.standardization->apply(b.test.values.col(i)))
                            .score);
        json entry{{"name", b.name},
                   {"dims", b.train.dims()},
                   {"latents", t.model.num_latents()},
                   {"train_length", b.train.length()},
                   {"test_length", b.test.length()},
                   {"final_log_likelihood", t.model.training_log.back()}};
        const LabeledScores one{s, b.test.labels};
        if (std::count(b.test.labels.begin(), b.test.labels.end(), 1) > 0)
            entry["report"] = report_json(evaluate(std::span<const LabeledScores>(&one, 1), cfg), !cfg.threshold);
        else
            entry["report"] = nullptr;
        per_series.push_back(std::move(entry));
        scores.push_back(std::move(s));
    }
    std::vector<LabeledScores> series;
    for (std::size_t i = 0; i < corpus.size(); ++i) series.push_back({scores[i], corpus[i].test.labels});
    json doc{{"command", "pipeline"},
             {"source", source},
             {"series", per_series},
             {"overall", report_json(evaluate(series, cfg), !cfg.threshold)}};
    write_output(cfg, doc, out);
    return kExitOk;
}

struct EarlyExit {
    int code;
};

RunConfig parse(const std::vector<std::string>& args, std::ostream* out, std::ostream* err) {
    CLI::App app{"State-space GP factor analysis: training, streaming anomaly scoring, evaluation", "ssgp"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    RunConfig cfg;
    std::string config_path, kernels_text, threshold_text;
    double rho = 1e-12;
    bool sweep = false;
    std::map<std::string, std::map<std::string, CLI::Option*>> by_command;

    auto add_common = [&](CLI::App* sub) {
        auto& opts = by_command[sub->get_name()];
        sub->add_option("--config", config_path, "JSON file mirroring these flags");
        opts["input"] = sub->add_option("--input", cfg.inputs, "input CSV, score file or dataset root");
        opts["output"] = sub->add_option("--output", cfg.output, "output path");
        opts["model"] = sub->add_option("--model", cfg.model, "model JSON path");
        opts["kernels"] = sub->add_option("--kernels", kernels_text, "kernel expressions separated by ';'");
        opts["latents"] = sub->add_option("--latents", cfg.latents, "number of latent processes K")->check(CLI::PositiveNumber);
        opts["mode"] = sub->add_option("--mode", cfg.mode, "loading constraint")
                           ->check(CLI::IsMember({"orthogonal", "unconstrained"}));
        opts["rho"] = sub->add_option("--rho", rho, "likelihood threshold for the robust filter")
                          ->check(CLI::PositiveNumber);
        opts["log_rho"] = sub->add_option("--log-rho", cfg.log_rho, "log-likelihood threshold for the robust filter");
        opts["rho"]->excludes(opts["log_rho"]);
        opts["robust"] = sub->add_flag("--robust,!--no-robust", cfg.robust, "skip updates on improbable points");
        opts["rule"] = sub->add_option("--rule", cfg.rule, "robust skip rule")
                           ->check(CLI::IsMember({"joint", "per-dimension"}));
        opts["max_iters"] = sub->add_option("--max-iters", cfg.max_iters, "EM / optimizer iterations")
                                ->check(CLI::NonNegativeNumber);
        opts["tol"] = sub->add_option("--tol", cfg.tol, "EM relative tolerance")->check(CLI::NonNegativeNumber);
        opts["seed"] = sub->add_option("--seed", cfg.seed, "generator seed");
        opts["threshold"] = sub->add_option("--threshold", threshold_text, "fixed score threshold");
        opts["sweep"] = sub->add_flag("--sweep", sweep, "best-F1 threshold sweep (default)");
        opts["threshold"]->excludes(opts["sweep"]);
        opts["dataset_layout"] = sub->add_option("--dataset-layout", cfg.dataset_layout, "benchmark directory layout")
                                     ->check(CLI::IsMember({"csv", "nab", "nasa", "smd"}));
        opts["scenario"] = sub->add_option("--scenario", cfg.scenario, "synthetic scenario: univariate, fig1, fig2");
        opts["length"] = sub->add_option("--length", cfg.length, "synthetic series length")->check(CLI::PositiveNumber);
        opts["noise_scale"] = sub->add_option("--noise-scale", cfg.noise_scale, "read 0.15 as variance or stddev")
                                  ->check(CLI::IsMember({"variance", "stddev"}));
        opts["threads"] = sub->add_option("--threads", cfg.threads, "E-step worker threads")->check(CLI::PositiveNumber);
        opts["robust_training"] =
            sub->add_flag("--robust-training", cfg.robust_training, "refit without points the robust scorer rejects");
        opts["refine_kernels"] =
            sub->add_flag("--refine-kernels", cfg.refine_kernels, "refit latent kernel hyperparameters (orthogonal)");
        opts["curve"] = sub->add_option("--curve", cfg.curve, "eval: write the per-threshold curve CSV");
    };
    for (const char* name : {"train", "score", "explain", "eval", "synth", "pipeline"}) {
        static const std::map<std::string, std::string> about{
            {"train", "fit a model on a training CSV"},
            {"score", "stream a CSV through a trained model"},
            {"explain", "per-point latent attribution"},
            {"eval", "range-adjusted precision/recall/F1 of score files"},
            {"synth", "write synthetic datasets"},
            {"pipeline", "train, score and evaluate a corpus or a synthetic scenario"}};
        add_common(app.add_subcommand(name, about.at(name)));
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (out == nullptr) throw ConfigError(e.what());
        throw EarlyExit{app.exit(e, *out, *err) == 0 ? kExitOk : kExitUsage};
    }
    cfg.command = app.get_subcommands().front()->get_name();

    const auto& opts = by_command.at(cfg.command);
    const auto given = [&](const char* key) { return opts.at(key)->count() > 0; };
    if (!config_path.empty()) {
        const json j = read_json_file(config_path);
        if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
        static const std::vector<std::string> known{
            "input",     "output", "model", "kernels", "latents",        "mode",     "rho",    "log_rho",     "robust",
            "rule",      "max_iters", "tol", "seed",   "threshold",      "sweep",    "dataset_layout", "scenario",
            "length",    "noise_scale", "threads", "robust_training", "refine_kernels", "curve"};
        for (const auto& [key, value] : j.items())
            if (std::find(known.begin(), known.end(), key) == known.end())
                throw ConfigError("config file: unknown key '" + key + "'");
        if (j.contains("rho") && j.contains("log_rho")) throw ConfigError("config file: rho and log_rho are exclusive");
        if (j.contains("threshold") && j.value("sweep", false))
            throw ConfigError("config file: threshold and sweep are exclusive");

        if (!given("input") && j.contains("input")) {
            const auto& v = j["input"];
            cfg.inputs = v.is_array() ? config_value<std::vector<std::string>>(j, "input")
                                      : std::vector<std::string>{config_value<std::string>(j, "input")};
        }
        if (!given("output") && j.contains("output")) cfg.output = config_value<std::string>(j, "output");
        if (!given("model") && j.contains("model")) cfg.model = config_value<std::string>(j, "model");
        if (!given("kernels") && j.contains("kernels")) {
            if (j["kernels"].is_array()) cfg.kernels = config_value<std::vector<std::string>>(j, "kernels");
            else cfg.kernels = split_kernels(config_value<std::string>(j, "kernels"));
        }
        if (!given("latents") && j.contains("latents")) {
            cfg.latents = config_value<int>(j, "latents");
            cfg.latents_explicit = true;
        }
        if (!given("mode") && j.contains("mode")) cfg.mode = config_value<std::string>(j, "mode");
        if (!given("rho") && !given("log_rho")) {
            if (j.contains("rho")) {
                const double r = config_value<double>(j, "rho");
                if (!(r > 0.0)) throw ConfigError("config file: rho must be positive");
                cfg.log_rho = std::log(r);
            }
            if (j.contains("log_rho")) cfg.log_rho = config_value<double>(j, "log_rho");
        }
        if (!given("robust") && j.contains("robust")) cfg.robust = config_value<bool>(j, "robust");
        if (!given("rule") && j.contains("rule")) cfg.rule = config_value<std::string>(j, "rule");
        if (!given("max_iters") && j.contains("max_iters")) cfg.max_iters = config_value<int>(j, "max_iters");
        if (!given("tol") && j.contains("tol")) cfg.tol = config_value<double>(j, "tol");
        if (!given("seed") && j.contains("seed")) cfg.seed = config_value<std::uint64_t>(j, "seed");
        if (!given("threshold") && !given("sweep") && j.contains("threshold"))
            cfg.threshold = config_value<double>(j, "threshold");
        if (!given("dataset_layout") && j.contains("dataset_layout"))
            cfg.dataset_layout = config_value<std::string>(j, "dataset_layout");
        if (!given("scenario") && j.contains("scenario")) cfg.scenario = config_value<std::string>(j, "scenario");
        if (!given("length") && j.contains("length")) cfg.length = config_value<long>(j, "length");
        if (!given("noise_scale") && j.contains("noise_scale"))
            cfg.noise_scale = config_value<std::string>(j, "noise_scale");
        if (!given("threads") && j.contains("threads")) cfg.threads = config_value<int>(j, "threads");
        if (!given("robust_training") && j.contains("robust_training"))
            cfg.robust_training = config_value<bool>(j, "robust_training");
        if (!given("refine_kernels") && j.contains("refine_kernels"))
            cfg.refine_kernels = config_value<bool>(j, "refine_kernels");
        if (!given("curve") && j.contains("curve")) cfg.curve = config_value<std::string>(j, "curve");
    }
    if (given("kernels")) cfg.kernels = split_kernels(kernels_text);
    if (given("latents")) cfg.latents_explicit = true;
    if (given("rho")) cfg.log_rho = std::log(rho);
    if (given("threshold")) {
        const auto v = detail::parse_double(threshold_text);
        if (!v) throw ConfigError("--threshold: not a number '" + threshold_text + "'");
        cfg.threshold = *v;
    }
    if (given("sweep")) cfg.threshold.reset();

    if (cfg.mode != "orthogonal" && cfg.mode != "unconstrained") throw ConfigError("unknown mode '" + cfg.mode + "'");
    if (cfg.rule != "joint" && cfg.rule != "per-dimension") throw ConfigError("unknown rule '" + cfg.rule + "'");
    if (cfg.noise_scale != "variance" && cfg.noise_scale != "stddev")
        throw ConfigError("unknown noise scale '" + cfg.noise_scale + "'");
    if (cfg.latents < 1 || cfg.max_iters < 0 || cfg.threads < 1 || !(cfg.tol >= 0.0))
        throw ConfigError("latents and threads must be positive, max_iters and tol non-negative");
    if (!std::isfinite(cfg.log_rho)) throw ConfigError("log_rho must be finite");
    for (const auto& k : cfg.kernels) parse_kernel(k);
    return cfg;
}

}  // namespace

RunConfig parse_args(const std::vector<std::string>& args) { return parse(args, nullptr, nullptr); }

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    try {
        const RunConfig cfg = parse(args, &out, &err);
        if (cfg.command == "train") return cmd_train(cfg, out, err);
        if (cfg.command == "score") return cmd_stream(cfg, out, err, false);
        if (cfg.command == "explain") return cmd_stream(cfg, out, err, true);
        if (cfg.command == "eval") return cmd_eval(cfg, out);
        if (cfg.command == "synth") return cmd_synth(cfg, out);
        if (cfg.command == "pipeline") return cmd_pipeline(cfg, out, err);
        throw ConfigError("unknown command '" + cfg.command + "'");
    } catch (const EarlyExit& e) {
        return e.code;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const EvaluationError& e) {
        err << "evaluation error: " << e.what() << '\n';
        return kExitEvaluation;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
}

}  // namespace ssgp::cli
