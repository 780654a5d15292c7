#include "pnlss/pipeline.hpp"

#include "pnlss/errors.hpp"
#include "pnlss/log.hpp"
#include "pnlss/optimizer.hpp"
#include "pnlss/version.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pnlss {

namespace fs = std::filesystem;
using io::Json;

namespace {

// Rethrows with the stage name prepended while keeping the error category.
template <typename Fn>
auto run_stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
    log::info("case study: " + name);
    try {
        return fn();
    } catch (const ConfigError& e) {
        throw ConfigError(name + ": " + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError(name + ": " + e.what());
    } catch (const IoError& e) {
        throw IoError(name + ": " + e.what());
    } catch (const std::exception& e) {
        throw std::runtime_error(name + ": " + e.what());
    }
}

Json to_json(const DuffingParams& p) {
    return {{"mass", p.mass}, {"damping", p.damping}, {"alpha", p.alpha},         {"beta", p.beta},
            {"fs", p.fs},     {"noise_std", p.noise_std}, {"seed", p.seed}};
}

DuffingParams duffing_params_from_json(const Json& j) {
    DuffingParams p;
    p.mass = j.at("mass").get<double>();
    p.damping = j.at("damping").get<double>();
    p.alpha = j.at("alpha").get<double>();
    p.beta = j.at("beta").get<double>();
    p.fs = j.at("fs").get<double>();
    p.noise_std = j.at("noise_std").get<double>();
    p.seed = j.at("seed").get<std::uint64_t>();
    return p;
}

Json benchmark_to_json(const BenchmarkConfig& c) {
    return {{"params", to_json(c.params)},
            {"train", io::to_json(c.train)},
            {"settle_periods", c.settle_periods},
            {"val_a_start", c.val_a_start},
            {"val_a_end", c.val_a_end},
            {"val_length", c.val_length},
            {"val_t2", c.val_t2},
            {"substeps", c.substeps}};
}

BenchmarkConfig benchmark_from_json(const Json& j) {
    BenchmarkConfig c;
    c.params = duffing_params_from_json(j.at("params"));
    c.train = io::multisine_config_from_json(j.at("train"));
    c.settle_periods = j.at("settle_periods").get<std::size_t>();
    c.val_a_start = j.at("val_a_start").get<double>();
    c.val_a_end = j.at("val_a_end").get<double>();
    c.val_length = j.at("val_length").get<std::size_t>();
    c.val_t2 = j.at("val_t2").get<std::size_t>();
    c.substeps = j.at("substeps").get<int>();
    return c;
}

double rrmse(const PnlssModel& model, const ConcatenatedRecord& data) {
    const SimulationResult sim = simulate(model, data.u);
    if (sim.diverged) return std::numeric_limits<double>::infinity();
    return pooled(relative_rms_error(data.y, sim.y, data.cost_mask()));
}

double db20(double v) { return 20.0 * std::log10(std::max(v, 1e-300)); }
double db10(double v) { return 10.0 * std::log10(std::max(v, 1e-300)); }

} // namespace

void CaseStudyConfig::validate() const {
    benchmark.validate();
    if (orders.empty()) throw ConfigError("case study: no candidate orders");
    if (std::find(orders.begin(), orders.end(), model_order) == orders.end())
        throw ConfigError("case study: model_order must be one of the candidate orders");
    if (lm_iterations == 0) throw ConfigError("case study: lm_iterations must be positive");
    if (!(lambda0 > 0.0)) throw ConfigError("case study: lambda0 must be positive");
}

Json to_json(const CaseStudyConfig& c) {
    return {{"benchmark", benchmark_to_json(c.benchmark)},
            {"orders", c.orders},
            {"model_order", c.model_order},
            {"subspace_iterations", c.subspace_iterations},
            {"frf_weighting", std::string(to_string(c.frf_weighting))},
            {"nx", c.nx},
            {"ny", c.ny},
            {"lm_iterations", c.lm_iterations},
            {"lambda0", c.lambda0}};
}

CaseStudyConfig case_study_config_from_json(const Json& j) {
    try {
        CaseStudyConfig c;
        c.benchmark = benchmark_from_json(j.at("benchmark"));
        c.orders = j.at("orders").get<std::vector<std::size_t>>();
        c.model_order = j.at("model_order").get<std::size_t>();
        c.subspace_iterations = j.at("subspace_iterations").get<std::size_t>();
        c.frf_weighting = parse_frf_weighting(j.at("frf_weighting").get<std::string>());
        c.nx = j.at("nx").get<std::vector<int>>();
        c.ny = j.at("ny").get<std::vector<int>>();
        c.lm_iterations = j.at("lm_iterations").get<std::size_t>();
        c.lambda0 = j.at("lambda0").get<double>();
        return c;
    } catch (const Json::exception& e) {
        throw IoError(std::string("invalid case-study config: ") + e.what());
    }
}

Json to_json(const CaseStudyReport& r) {
    return {{"model_order", r.model_order},
            {"linear_train_rrmse", r.linear_train_rrmse},
            {"linear_val_rrmse", r.linear_val_rrmse},
            {"pnlss_train_rrmse", r.pnlss_train_rrmse},
            {"pnlss_val_rrmse", r.pnlss_val_rrmse},
            {"selected_index", r.selected_index},
            {"trace_length", r.trace_length},
            {"stop_reason", r.stop_reason}};
}

CaseStudyReport case_study_report_from_json(const Json& j) {
    try {
        CaseStudyReport r;
        r.model_order = j.at("model_order").get<std::size_t>();
        r.linear_train_rrmse = j.at("linear_train_rrmse").get<double>();
        r.linear_val_rrmse = j.at("linear_val_rrmse").get<double>();
        r.pnlss_train_rrmse = j.at("pnlss_train_rrmse").get<double>();
        r.pnlss_val_rrmse = j.at("pnlss_val_rrmse").get<double>();
        r.selected_index = j.at("selected_index").get<std::size_t>();
        r.trace_length = j.at("trace_length").get<std::size_t>();
        r.stop_reason = j.at("stop_reason").get<std::string>();
        return r;
    } catch (const Json::exception& e) {
        throw IoError(std::string("invalid report: ") + e.what());
    }
}

Json to_json(const PipelineManifest& m) {
    Json steps = Json::array();
    for (const auto& s : m.steps)
        steps.push_back(
            {{"command", s.command}, {"inputs", s.inputs}, {"outputs", s.outputs}, {"config_hash", s.config_hash}});
    return {{"tool_version", m.tool_version},
            {"steps", std::move(steps)},
            {"config", m.config},
            {"report_hash", m.report_hash}};
}

PipelineManifest manifest_from_json(const Json& j) {
    try {
        PipelineManifest m;
        m.tool_version = j.at("tool_version").get<std::string>();
        m.config = j.at("config");
        m.report_hash = j.at("report_hash").get<std::string>();
        for (const auto& s : j.at("steps"))
            m.steps.push_back({s.at("command").get<std::string>(), s.at("inputs").get<std::vector<std::string>>(),
                               s.at("outputs").get<std::vector<std::string>>(),
                               s.at("config_hash").get<std::string>()});
        return m;
    } catch (const Json::exception& e) {
        throw IoError(std::string("invalid manifest: ") + e.what());
    }
}

CaseStudyReport run_case_study(const fs::path& workdir, const CaseStudyConfig& config, std::size_t threads) {
    config.validate();
    std::error_code ec;
    fs::create_directories(workdir, ec);
    if (ec) throw IoError("cannot create " + workdir.string() + ": " + ec.message());

    const Json cfg = to_json(config);
    PipelineManifest manifest;
    manifest.tool_version = kVersion;
    manifest.config = cfg;
    auto step = [&](std::string command, std::vector<std::string> in, std::vector<std::string> out, const Json& c) {
        manifest.steps.push_back({std::move(command), std::move(in), std::move(out), io::config_hash(c)});
    };

    const Benchmark bench = run_stage("duffing", [&] {
        Benchmark b = make_benchmark(config.benchmark);
        io::write_record(workdir / "train" / "record.csv", b.train);
        io::write_concatenated(workdir / "validation" / "record.csv", b.validation);
        return b;
    });
    step("duffing", {}, {"train/record.csv", "train/record.json", "validation/record.csv", "validation/record.json"},
         cfg.at("benchmark"));

    const FrfEstimate frf = run_stage("bla", [&] {
        FrfEstimate f = estimate_bla(bench.train);
        io::write_json(workdir / "frf.json", io::to_json(f));
        io::write_json(workdir / "noise_covariance.json", io::to_json(output_noise_covariance(bench.train)));
        return f;
    });
    step("bla", {"train/record.csv"}, {"frf.json", "noise_covariance.json"}, Json::object());

    const Json subspace_cfg{{"orders", config.orders},
                            {"iterations", config.subspace_iterations},
                            {"weighting", std::string(to_string(config.frf_weighting))}};
    const LinearStateSpace linear = run_stage("subspace", [&] {
        SubspaceConfig sc;
        sc.orders = config.orders;
        sc.lm_iterations = config.subspace_iterations;
        sc.weighting = config.frf_weighting;
        auto results = loop_orders(frf, sc, threads);
        io::write_json(workdir / "linmodels.json", io::linmodels_to_json(results));
        const OrderResult& chosen = results.at(config.model_order);
        if (!chosen.ok())
            throw NumericalError("order " + std::to_string(config.model_order) + " failed: " + chosen.error);
        return *chosen.model;
    });
    step("subspace", {"frf.json"}, {"linmodels.json"}, subspace_cfg);

    const Json init_cfg{{"order", config.model_order},
                        {"nx", config.nx},
                        {"ny", config.ny},
                        {"state_rule", "statesonly"},
                        {"output_rule", "none"}};
    const PnlssModel model0 = run_stage("init", [&] {
        PnlssModel m = init_from_linear(linear, config.nx, config.ny, ActiveSelection::states_only(),
                                        ActiveSelection::none());
        io::write_json(workdir / "init.json", io::to_json(m));
        return m;
    });
    step("init", {"linmodels.json"}, {"init.json"}, init_cfg);

    const std::size_t N = config.benchmark.train.N;
    const ConcatenatedRecord train = concatenate({average_periods(bench.train)}, N, 0);
    const Json opt_cfg{
        {"t1", N}, {"t2", 0}, {"iters", config.lm_iterations}, {"lambda0", config.lambda0}, {"weighting", "uniform"}};
    const OptimizationTrace trace = run_stage("optimize", [&] {
        LmConfig lc;
        lc.max_iterations = config.lm_iterations;
        lc.lambda0 = config.lambda0;
        OptimizationTrace t = optimize(model0, train, lc);
        io::write_trace(workdir / "trace", t);
        return t;
    });
    step("optimize", {"init.json", "train/record.csv"}, {"trace/trace.json"}, opt_cfg);

    CaseStudyReport report = run_stage("validate", [&] {
        const ModelSelection sel = select_best(trace, bench.validation);
        io::write_json(workdir / "best.json", io::to_json(sel.model));
        write_validation_errors(workdir / "validation_errors.csv", bench.validation, linear, sel.model);
        const PnlssModel linear_model = init_from_linear(linear, {}, {}, ActiveSelection::none(),
                                                         ActiveSelection::none());
        CaseStudyReport r;
        r.model_order = linear.order();
        r.linear_train_rrmse = rrmse(linear_model, train);
        r.linear_val_rrmse = rrmse(linear_model, bench.validation);
        r.pnlss_train_rrmse = rrmse(sel.model, train);
        r.pnlss_val_rrmse = sel.rel_rmse;
        r.selected_index = sel.index;
        r.trace_length = trace.models.size();
        r.stop_reason = trace.stop_reason;
        return r;
    });
    step("validate", {"trace/trace.json", "validation/record.csv"}, {"best.json", "validation_errors.csv"},
         Json::object());

    const std::string report_text = to_json(report).dump(2) + "\n";
    io::write_text(workdir / "report.json", report_text);
    manifest.report_hash = io::config_hash(Json(report_text));
    io::write_json(workdir / "manifest.json", to_json(manifest));
    return report;
}

ReplayResult replay_manifest(const fs::path& manifest_path, const fs::path& workdir, std::size_t threads) {
    const fs::path source = fs::is_directory(manifest_path) ? manifest_path / "manifest.json" : manifest_path;
    const PipelineManifest manifest = manifest_from_json(io::read_json(source));
    const fs::path origin = source.parent_path();

    ReplayResult result;
    for (const auto& s : manifest.steps)
        for (const auto& lists : {s.inputs, s.outputs})
            for (const auto& f : lists)
                if (!fs::exists(origin / f)) result.missing.push_back(f);
    result.inputs_present = result.missing.empty();
    if (manifest.tool_version != kVersion)
        log::warn("manifest written by version " + manifest.tool_version + ", replaying with " + kVersion);

    result.report = run_case_study(workdir, case_study_config_from_json(manifest.config), threads);
    const std::string text = io::read_text(workdir / "report.json");
    result.report_identical = io::config_hash(Json(text)) == manifest.report_hash;
    return result;
}

PlotArtifact parse_plot_artifact(std::string_view name) {
    if (name == "frf") return PlotArtifact::Frf;
    if (name == "distortion") return PlotArtifact::Distortion;
    if (name == "validation" || name == "validation-errors") return PlotArtifact::ValidationErrors;
    throw ConfigError("unknown plot artifact '" + std::string(name) + "'");
}

void write_frf_plot(const fs::path& csv, const FrfEstimate& frf) {
    const bool siso = frf.outputs == 1 && frf.inputs == 1;
    std::vector<std::string> header{"line", "freq_hz"};
    for (const char* name : {"mag_db_G", "mag_db_covGML_diag", "mag_db_covGn_diag"})
        for (std::size_t i = 0; i < frf.outputs; ++i)
            for (std::size_t j = 0; j < frf.inputs; ++j)
                header.push_back(siso ? name
                                      : std::string(name) + "_" + std::to_string(i + 1) + "_" + std::to_string(j + 1));

    const auto pm = static_cast<Eigen::Index>(frf.outputs * frf.inputs);
    Matrix values(static_cast<Eigen::Index>(frf.lines.size()), 2 + 3 * pm);
    for (std::size_t k = 0; k < frf.lines.size(); ++k) {
        const auto row = static_cast<Eigen::Index>(k);
        values(row, 0) = frf.lines[k];
        values(row, 1) = frf.frequency(k);
        for (std::size_t i = 0; i < frf.outputs; ++i)
            for (std::size_t j = 0; j < frf.inputs; ++j) {
                // Covariances are of vec(G), column-major: entry (i, j) sits at j * p + i.
                const auto e = static_cast<Eigen::Index>(i * frf.inputs + j);
                const auto v = static_cast<Eigen::Index>(j * frf.outputs + i);
                values(row, 2 + e) = db20(std::abs(frf.G[k](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
                values(row, 2 + pm + e) = k < frf.cov_total.size() ? db10(frf.cov_total[k](v, v).real()) : NAN;
                values(row, 2 + 2 * pm + e) = k < frf.cov_noise.size() ? db10(frf.cov_noise[k](v, v).real()) : NAN;
            }
    }
    io::write_table(csv, header, values);
}

void write_distortion_csv(const fs::path& csv, const DistortionSpectrum& spectrum, std::size_t N, double fs) {
    std::ostringstream out;
    out << "line,freq_hz,class,level\n";
    for (std::size_t i = 0; i < spectrum.lines.size(); ++i)
        out << spectrum.lines[i] << ',' << io::format_double(spectrum.lines[i] * fs / static_cast<double>(N)) << ','
            << to_string(spectrum.classes[i]) << ',' << io::format_double(spectrum.level[i]) << '\n';
    io::write_text(csv, out.str());
}

void write_validation_errors(const fs::path& csv, const ConcatenatedRecord& data, const LinearStateSpace& linear,
                             const PnlssModel& model) {
    const Matrix y_lin = simulate_linear(linear, data.u, Vector::Zero(static_cast<Eigen::Index>(linear.order())));
    const SimulationResult sim = simulate(model, data.u);
    const std::vector<bool> mask = data.cost_mask();
    std::ostringstream out;
    out << "sample,time_s,output,y_true,err_linear,err_pnlss\n";
    for (Eigen::Index t = 0; t < data.y.rows(); ++t) {
        if (!mask[static_cast<std::size_t>(t)]) continue;
        for (Eigen::Index i = 0; i < data.y.cols(); ++i) {
            out << t << ',' << io::format_double(static_cast<double>(t) / data.fs) << ',' << i + 1 << ','
                << io::format_double(data.y(t, i)) << ',' << io::format_double(data.y(t, i) - y_lin(t, i)) << ','
                << io::format_double(data.y(t, i) - sim.y(t, i)) << '\n';
        }
    }
    io::write_text(csv, out.str());
}

void emit_plot_data(PlotArtifact artifact, const fs::path& input, const fs::path& out) {
    switch (artifact) {
    case PlotArtifact::Frf:
        write_frf_plot(out, io::frf_from_json(io::read_json(input)));
        return;
    case PlotArtifact::Distortion: {
        const DataRecord rec = io::read_record(input);
        write_distortion_csv(out, classify_distortions(rec), rec.samples(), rec.fs());
        return;
    }
    case PlotArtifact::ValidationErrors: {
        if (!fs::is_directory(input))
            throw ConfigError("validation plot data needs a case-study work directory");
        const ConcatenatedRecord val = io::read_concatenated(input / "validation" / "record.csv");
        const PnlssModel init = io::pnlss_from_json(io::read_json(input / "init.json"));
        const PnlssModel best = io::pnlss_from_json(io::read_json(input / "best.json"));
        write_validation_errors(out, val, init.linear(), best);
        return;
    }
    }
}

} // namespace pnlss
