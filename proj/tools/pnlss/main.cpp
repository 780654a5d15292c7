#include "pnlss/errors.hpp"
#include "pnlss/io.hpp"
#include "pnlss/log.hpp"
#include "pnlss/optimizer.hpp"
#include "pnlss/pipeline.hpp"
#include "pnlss/version.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace pnlss;

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kNumerical = 3, kIo = 4 };

struct Globals {
    std::optional<std::uint64_t> seed;
    std::size_t threads = 1;
    std::string log_level = "warn";
};

fs::path record_file(const fs::path& p) {
    return p.extension() == ".csv" ? p : p / "record.csv";
}

// Multi-period records are averaged over periods and concatenated with t1
// prepended samples (default: one period); concatenated records are used as is.
ConcatenatedRecord load_time_data(const fs::path& path, std::optional<std::size_t> t1, std::size_t t2) {
    if (io::is_concatenated(path)) {
        if (t1) log::warn("--t1 ignored: data is already concatenated");
        return io::read_concatenated(path);
    }
    const DataRecord rec = io::read_record(path);
    if (!rec.periodic()) return concatenate({rec}, 0, t2);
    return concatenate({average_periods(rec)}, t1.value_or(rec.samples()), t2);
}

// Input columns are those whose header starts with 'u'; all columns otherwise.
Matrix input_columns(const io::Table& table) {
    std::vector<Eigen::Index> cols;
    for (std::size_t i = 0; i < table.header.size(); ++i)
        if (!table.header[i].empty() && table.header[i][0] == 'u') cols.push_back(static_cast<Eigen::Index>(i));
    if (cols.empty()) return table.values;
    Matrix u(table.values.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i) u.col(static_cast<Eigen::Index>(i)) = table.values.col(cols[i]);
    return u;
}

void add_gen_multisine(CLI::App& app, const Globals& g) {
    auto* cmd = app.add_subcommand("gen-multisine", "Generate random-phase multisine realizations");
    auto cfg = std::make_shared<MultisineConfig>();
    auto grid = std::make_shared<std::string>("odd");
    auto out = std::make_shared<std::string>();
    cmd->add_option("--n", cfg->N, "Samples per period")->required();
    cmd->add_option("--fs", cfg->fs, "Sampling frequency [Hz]")->required();
    cmd->add_option("--grid", *grid, "Excitation grid")->check(CLI::IsMember({"full", "odd", "random-odd"}));
    cmd->add_option("--group-size", cfg->grid.group_size, "Odd lines per detection group (random-odd)");
    cmd->add_option("--fmax-ratio", cfg->f_max_ratio, "Highest excited line as a fraction of Nyquist");
    cmd->add_option("--rms", cfg->rms, "Target RMS per realization");
    cmd->add_option("--realizations", cfg->R, "Number of realizations");
    cmd->add_option("--periods", cfg->P, "Periods per realization");
    cmd->add_option("--out", *out, "Output CSV")->required();
    cmd->callback([=, &g] {
        cfg->grid.kind = parse_grid_kind(*grid);
        if (g.seed) cfg->seed = *g.seed;
        io::write_signals(*out, *cfg, generate_multisine(*cfg));
    });
}

void add_bla(CLI::App& app) {
    auto* cmd = app.add_subcommand("bla", "Robust best linear approximation from a periodic record");
    auto in = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto noise_out = std::make_shared<std::string>();
    cmd->add_option("--in", *in, "Record CSV or directory")->required();
    cmd->add_option("--out", *out, "FRF JSON")->required();
    cmd->add_option("--noise-out", *noise_out, "Also write the output noise covariance (for invcov weighting)");
    cmd->callback([=] {
        const DataRecord rec = io::read_record(*in);
        io::write_json(*out, io::to_json(estimate_bla(rec)));
        if (!noise_out->empty()) io::write_json(*noise_out, io::to_json(output_noise_covariance(rec)));
    });
}

void add_distortion(CLI::App& app) {
    auto* cmd = app.add_subcommand("distortion", "Classify output levels on excited and detection lines");
    auto in = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    cmd->add_option("--in", *in, "Record CSV or directory (random-odd grid)")->required();
    cmd->add_option("--out", *out, "Spectrum CSV")->required();
    cmd->callback([=] {
        const DataRecord rec = io::read_record(*in);
        write_distortion_csv(*out, classify_distortions(rec), rec.samples(), rec.fs());
    });
}

void add_subspace(CLI::App& app, const Globals& g) {
    auto* cmd = app.add_subcommand("subspace", "Frequency-domain subspace estimation with LM refinement");
    auto frf = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto weighting = std::make_shared<std::string>("total");
    auto cfg = std::make_shared<SubspaceConfig>();
    cmd->add_option("--frf", *frf, "FRF JSON")->required();
    cmd->add_option("--orders", cfg->orders, "Candidate model orders")->delimiter(',')->required();
    cmd->add_option("--iters", cfg->lm_iterations, "LM refinement iterations");
    cmd->add_option("--block-rows", cfg->block_rows, "Block rows (0: max order + 2)");
    cmd->add_option("--weighting", *weighting, "FRF weighting")->check(CLI::IsMember({"total", "uniform"}));
    cmd->add_option("--out", *out, "Linear models JSON")->required();
    cmd->callback([=, &g] {
        cfg->weighting = parse_frf_weighting(*weighting);
        const auto results = loop_orders(io::frf_from_json(io::read_json(*frf)), *cfg, g.threads);
        io::write_json(*out, io::linmodels_to_json(results));
        bool any = false;
        for (const auto& [order, res] : results) {
            if (res.ok()) {
                any = true;
                std::cout << "order " << order << ": fit_cost " << io::format_double(res.fit_cost)
                          << (res.model->stable() ? "" : " (unstable)") << '\n';
            } else {
                std::cout << "order " << order << ": failed: " << res.error << '\n';
            }
        }
        if (!any) throw NumericalError("subspace: no order produced a model");
    });
}

void add_init(CLI::App& app) {
    auto* cmd = app.add_subcommand("init", "Polynomial nonlinear model with E = F = 0 from a linear model");
    auto linear = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto order = std::make_shared<std::size_t>(0);
    auto nx = std::make_shared<std::vector<int>>(std::vector<int>{2, 3});
    auto ny = std::make_shared<std::vector<int>>(std::vector<int>{2, 3});
    auto state_rule = std::make_shared<std::string>("statesonly");
    auto output_rule = std::make_shared<std::string>("none");
    cmd->add_option("--linear", *linear, "Linear model JSON or linear model list")->required();
    cmd->add_option("--order", *order, "Order to pick from a model list (0: the only or lowest-cost model)");
    cmd->add_option("--nx", *nx, "State equation degrees")->delimiter(',');
    cmd->add_option("--ny", *ny, "Output equation degrees")->delimiter(',');
    cmd->add_option("--state-rule", *state_rule, "Active state monomials: full|statesonly|inputsonly|none");
    cmd->add_option("--output-rule", *output_rule, "Active output monomials: full|statesonly|inputsonly|none");
    cmd->add_option("--out", *out, "Model JSON")->required();
    cmd->callback([=] {
        const io::Json doc = io::read_json(*linear);
        LinearStateSpace lin;
        if (doc.contains("models")) {
            const auto results = io::linmodels_from_json(doc);
            const OrderResult* pick = nullptr;
            if (*order != 0) {
                auto it = results.find(*order);
                if (it == results.end() || !it->second.ok())
                    throw ConfigError("init: order " + std::to_string(*order) + " not available");
                pick = &it->second;
            } else {
                for (const auto& [n, res] : results)
                    if (res.ok() && (!pick || res.fit_cost < pick->fit_cost)) pick = &res;
                if (!pick) throw ConfigError("init: model list holds no model");
            }
            lin = *pick->model;
        } else {
            lin = io::linear_from_json(doc);
        }
        const PnlssModel model = init_from_linear(lin, *nx, *ny, parse_active_rule(*state_rule),
                                                  parse_active_rule(*output_rule));
        io::write_json(*out, io::to_json(model));
    });
}

void add_optimize(CLI::App& app) {
    auto* cmd = app.add_subcommand("optimize", "Levenberg-Marquardt optimization of a polynomial model");
    auto model = std::make_shared<std::string>();
    auto data = std::make_shared<std::string>();
    auto trace = std::make_shared<std::string>();
    auto weighting = std::make_shared<std::string>("uniform");
    auto t1 = std::make_shared<std::optional<std::size_t>>();
    auto t2 = std::make_shared<std::size_t>(0);
    auto cfg = std::make_shared<LmConfig>();
    cmd->add_option("--model", *model, "Initial model JSON")->required();
    cmd->add_option("--data", *data, "Training record (CSV or directory)")->required();
    cmd->add_option("--t1", *t1, "Samples prepended per periodic segment (default: one period)");
    cmd->add_option("--t2", *t2, "Leading samples discarded per segment");
    cmd->add_option("--iters", cfg->max_iterations, "Maximum iterations");
    cmd->add_option("--lambda0", cfg->lambda0, "Initial damping");
    cmd->add_option("--weighting", *weighting, "uniform or invcov:<noise covariance JSON>");
    cmd->add_option("--trace", *trace, "Output directory for the optimization path")->required();
    cmd->callback([=] {
        const ConcatenatedRecord train = load_time_data(*data, *t1, *t2);
        if (weighting->rfind("invcov:", 0) == 0) {
            cfg->weighting = inverse_noise_weighting(
                io::noise_covariance_from_json(io::read_json(weighting->substr(7))));
        } else if (*weighting != "uniform") {
            throw ConfigError("unknown weighting '" + *weighting + "'");
        }
        const OptimizationTrace result = optimize(io::pnlss_from_json(io::read_json(*model)), train, *cfg);
        for (const auto& w : result.warnings) log::warn(w);
        io::write_trace(*trace, result);
        std::cout << "accepted models: " << result.models.size() << ", final cost "
                  << io::format_double(result.costs.back()) << ", stop: " << result.stop_reason << '\n';
    });
}

void add_simulate(CLI::App& app) {
    auto* cmd = app.add_subcommand("simulate", "Simulate a model on an input CSV");
    auto model = std::make_shared<std::string>();
    auto in = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    cmd->add_option("--model", *model, "Model JSON")->required();
    cmd->add_option("--in", *in, "Input CSV (u* columns, or all columns)")->required();
    cmd->add_option("--out", *out, "Output CSV")->required();
    cmd->callback([=] {
        const PnlssModel m = io::pnlss_from_json(io::read_json(*model));
        const Matrix u = input_columns(io::read_table(*in));
        if (static_cast<std::size_t>(u.cols()) != m.inputs())
            throw ConfigError("simulate: input has " + std::to_string(u.cols()) + " columns, model expects " +
                              std::to_string(m.inputs()));
        const SimulationResult sim = simulate(m, u);
        if (sim.diverged)
            throw NumericalError("simulation diverged at sample " + std::to_string(sim.diverged_at));
        std::vector<std::string> header{"sample"};
        for (std::size_t i = 0; i < m.outputs(); ++i) header.push_back("y_" + std::to_string(i + 1));
        Matrix values(sim.y.rows(), sim.y.cols() + 1);
        values.col(0) = Vector::LinSpaced(sim.y.rows(), 0.0, static_cast<double>(sim.y.rows() - 1));
        values.rightCols(sim.y.cols()) = sim.y;
        io::write_table(*out, header, values);
    });
}

void add_validate(CLI::App& app) {
    auto* cmd = app.add_subcommand("validate", "Relative RMS error of every trace model on validation data");
    auto trace = std::make_shared<std::string>();
    auto data = std::make_shared<std::string>();
    auto t2 = std::make_shared<std::size_t>(0);
    cmd->add_option("--trace", *trace, "Optimization trace directory")->required();
    cmd->add_option("--data", *data, "Validation record (CSV or directory)")->required();
    cmd->add_option("--t2", *t2, "Leading samples discarded (multi-period records only)");
    cmd->callback([=] {
        const OptimizationTrace tr = io::read_trace(*trace);
        const ConcatenatedRecord val = load_time_data(*data, std::nullopt, *t2);
        const std::vector<double> scores = validation_scores(tr, val);
        const ModelSelection best = select_best(tr, val);
        std::cout << "model,file,rel_rmse,selected\n";
        for (std::size_t i = 0; i < scores.size(); ++i) {
            char file[32];
            std::snprintf(file, sizeof file, "model_%04zu.json", i + 1);
            std::cout << i << ',' << file << ',' << (std::isfinite(scores[i]) ? io::format_double(scores[i]) : "inf")
                      << ',' << (i == best.index ? 1 : 0) << '\n';
        }
    });
}

void add_duffing(CLI::App& app, const Globals& g) {
    auto* cmd = app.add_subcommand("duffing", "Synthetic forced-Duffing training and validation data");
    auto preset = std::make_shared<std::string>("default");
    auto out_train = std::make_shared<std::string>();
    auto out_val = std::make_shared<std::string>();
    auto ingest = std::make_shared<std::string>();
    auto ingest_period = std::make_shared<std::size_t>(0);
    auto ingest_t2 = std::make_shared<std::size_t>(0);
    auto alpha = std::make_shared<std::optional<double>>();
    auto beta = std::make_shared<std::optional<double>>();
    auto c = std::make_shared<std::optional<double>>();
    auto fs_opt = std::make_shared<std::optional<double>>();
    auto rms = std::make_shared<std::optional<double>>();
    auto noise = std::make_shared<std::optional<double>>();
    cmd->add_option("--preset", *preset, "Parameter preset")->check(CLI::IsMember({"default"}));
    cmd->add_option("--out-train", *out_train, "Training record directory")->required();
    cmd->add_option("--out-val", *out_val, "Validation record directory");
    cmd->add_option("--alpha", *alpha, "Linear stiffness");
    cmd->add_option("--beta", *beta, "Cubic stiffness");
    cmd->add_option("--c", *c, "Damping");
    cmd->add_option("--fs", *fs_opt, "Sampling frequency [Hz]");
    cmd->add_option("--rms", *rms, "Training multisine RMS (validation envelope scales along)");
    cmd->add_option("--noise-std", *noise, "Output noise standard deviation");
    cmd->add_option("--ingest", *ingest, "Wrap measured u,y CSV data into the record format instead");
    cmd->add_option("--ingest-period", *ingest_period, "Period length of ingested data (0: not periodic)");
    cmd->add_option("--ingest-t2", *ingest_t2, "Leading samples to discard for non-periodic ingested data");
    cmd->callback([=, &g] {
        if (!ingest->empty()) {
            if (!*fs_opt) throw ConfigError("--ingest requires --fs");
            const io::Table t = io::read_table(*ingest);
            if (t.values.cols() < 2) throw ConfigError("ingested data needs an input and an output column");
            std::optional<Eigen::Index> ucol, ycol;
            for (std::size_t i = 0; i < t.header.size(); ++i) {
                const auto& h = t.header[i];
                if (!ucol && !h.empty() && (h[0] == 'u' || h == "V1")) ucol = static_cast<Eigen::Index>(i);
                if (!ycol && !h.empty() && (h[0] == 'y' || h == "V2")) ycol = static_cast<Eigen::Index>(i);
            }
            const Matrix u = t.values.col(ucol.value_or(0));
            const Matrix y = t.values.col(ycol.value_or(1));
            if (*ingest_period == 0) {
                io::write_concatenated(record_file(*out_train), single_segment(u, y, **fs_opt, *ingest_t2));
                return;
            }
            const auto N = *ingest_period;
            if (u.rows() % static_cast<Eigen::Index>(N) != 0)
                throw ConfigError("ingested length is not a multiple of --ingest-period");
            const std::size_t P = static_cast<std::size_t>(u.rows()) / N;
            DataRecord rec(1, P, N, 1, 1, **fs_opt, true);
            for (std::size_t p = 0; p < P; ++p) {
                rec.u(0, p) = u.middleRows(static_cast<Eigen::Index>(p * N), static_cast<Eigen::Index>(N));
                rec.y(0, p) = y.middleRows(static_cast<Eigen::Index>(p * N), static_cast<Eigen::Index>(N));
            }
            io::write_record(record_file(*out_train), rec);
            return;
        }
        BenchmarkConfig cfg = default_benchmark();
        if (*alpha) cfg.params.alpha = **alpha;
        if (*beta) cfg.params.beta = **beta;
        if (*c) cfg.params.damping = **c;
        if (*fs_opt) cfg.params.fs = cfg.train.fs = **fs_opt;
        if (*noise) cfg.params.noise_std = **noise;
        if (*rms) {
            const double scale = **rms / cfg.train.rms;
            cfg.train.rms = **rms;
            cfg.val_a_start *= scale;
            cfg.val_a_end *= scale;
        }
        if (g.seed) cfg.params.seed = cfg.train.seed = *g.seed;
        const Benchmark b = make_benchmark(cfg);
        io::write_record(record_file(*out_train), b.train);
        if (!out_val->empty()) io::write_concatenated(record_file(*out_val), b.validation);
        log::info("max relative inter-period deviation " + io::format_double(b.max_period_deviation));
    });
}

void add_case_study(CLI::App& app, const Globals& g) {
    auto* cmd = app.add_subcommand("case-study", "End-to-end Duffing identification with report and manifest");
    auto workdir = std::make_shared<std::string>();
    auto preset = std::make_shared<std::string>("duffing");
    auto config = std::make_shared<std::string>();
    auto replay = std::make_shared<std::string>();
    auto iters = std::make_shared<std::optional<std::size_t>>();
    cmd->add_option("--workdir", *workdir, "Directory receiving all artifacts")->required();
    cmd->add_option("--preset", *preset, "Case-study preset")->check(CLI::IsMember({"duffing"}));
    cmd->add_option("--config", *config, "Case-study config JSON (overrides the preset)");
    cmd->add_option("--iters", *iters, "LM iterations");
    cmd->add_option("--replay", *replay, "Replay a manifest (file or work directory) into --workdir");
    cmd->callback([=, &g] {
        if (!replay->empty()) {
            const ReplayResult r = replay_manifest(*replay, *workdir, g.threads);
            for (const auto& f : r.missing) std::cerr << "missing artifact: " << f << '\n';
            std::cout << "report " << (r.report_identical ? "identical" : "DIFFERS") << '\n';
            if (!r.inputs_present) throw IoError("manifest references missing files");
            if (!r.report_identical) throw NumericalError("replayed report differs from the recorded one");
            return;
        }
        CaseStudyConfig cfg = config->empty() ? CaseStudyConfig{} : case_study_config_from_json(io::read_json(*config));
        if (*iters) cfg.lm_iterations = **iters;
        if (g.seed) cfg.benchmark.params.seed = cfg.benchmark.train.seed = *g.seed;
        const CaseStudyReport report = run_case_study(*workdir, cfg, g.threads);
        std::cout << to_json(report).dump(2) << '\n';
    });
}

void add_emit_plot(CLI::App& app) {
    auto* cmd = app.add_subcommand("emit-plot", "Plot-ready CSV for an artifact");
    auto artifact = std::make_shared<std::string>();
    auto in = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    cmd->add_option("--artifact", *artifact, "frf | distortion | validation")->required();
    cmd->add_option("--in", *in, "frf.json, record, or case-study work directory")->required();
    cmd->add_option("--out", *out, "Output CSV")->required();
    cmd->callback([=] { emit_plot_data(parse_plot_artifact(*artifact), *in, *out); });
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Polynomial nonlinear state-space identification"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    Globals g;
    app.add_option("--seed", g.seed, "Seed overriding the configured one");
    app.add_option("--threads", g.threads, "Worker threads for parallel stages")->check(CLI::PositiveNumber);
    app.add_option("--log-level", g.log_level, "debug | info | warn | error | off");
    app.parse_complete_callback([&] { log::set_level(log::parse_level(g.log_level)); });

    add_gen_multisine(app, g);
    add_bla(app);
    add_distortion(app);
    add_subspace(app, g);
    add_init(app);
    add_optimize(app);
    add_simulate(app);
    add_validate(app);
    add_duffing(app, g);
    add_case_study(app, g);
    add_emit_plot(app);
    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kConfig;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kNumerical;
    }
    return kOk;
}
