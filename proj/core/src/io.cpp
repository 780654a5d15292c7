#include "pnlss/io.hpp"

#include "pnlss/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace pnlss::io {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) {
        while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
        while (!field.empty() && field.front() == ' ') field.erase(field.begin());
        fields.push_back(field);
    }
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

double parse_double(const std::string& s, const fs::path& path) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size())
        throw IoError("cannot parse number '" + s + "' in " + path.string());
    return v;
}

template <typename T>
T get(const Json& j, const char* key) {
    if (!j.contains(key)) throw IoError(std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw IoError(std::string("bad field '") + key + "': " + e.what());
    }
}

Json nullable(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }
double from_nullable(const Json& j) {
    return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

std::string model_file_name(std::size_t index) {
    std::ostringstream name;
    name << "model_" << std::setw(4) << std::setfill('0') << index << ".json";
    return name.str();
}

} // namespace

Json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const Json::exception& e) {
        throw IoError("invalid JSON in " + path.string() + ": " + e.what());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_json(const fs::path& path, const Json& doc) { write_text(path, doc.dump(2) + "\n"); }

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Json matrix_to_json(const Matrix& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const Json& j, Eigen::Index rows, Eigen::Index cols) {
    if (!j.is_array()) throw IoError("matrix must be an array of rows");
    const auto r = static_cast<Eigen::Index>(j.size());
    const Eigen::Index c = r == 0 ? (cols < 0 ? 0 : cols) : static_cast<Eigen::Index>(j.front().size());
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
        const auto& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != c) throw IoError("ragged matrix rows");
        for (Eigen::Index k = 0; k < c; ++k) m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
    }
    if ((rows >= 0 && m.rows() != rows) || (cols >= 0 && m.cols() != cols))
        throw IoError("matrix has unexpected shape");
    return m;
}

Json cmatrix_to_json(const CMatrix& m) { return {{"re", matrix_to_json(m.real())}, {"im", matrix_to_json(m.imag())}}; }

CMatrix cmatrix_from_json(const Json& j) {
    const Matrix re = matrix_from_json(j.at("re"));
    const Matrix im = matrix_from_json(j.at("im"), re.rows(), re.cols());
    CMatrix m(re.rows(), re.cols());
    m.real() = re;
    m.imag() = im;
    return m;
}

Json to_json(const LinearStateSpace& s) {
    Json j;
    j["format"] = "linear-state-space";
    j["n"] = s.order();
    j["m"] = s.inputs();
    j["p"] = s.outputs();
    j["fs"] = s.fs;
    j["A"] = matrix_to_json(s.A);
    j["B"] = matrix_to_json(s.B);
    j["C"] = matrix_to_json(s.C);
    j["D"] = matrix_to_json(s.D);
    j["stable"] = s.stable();
    j["warnings"] = s.warnings;
    return j;
}

LinearStateSpace linear_from_json(const Json& j) {
    try {
        const auto n = get<Eigen::Index>(j, "n"), m = get<Eigen::Index>(j, "m"), p = get<Eigen::Index>(j, "p");
        LinearStateSpace s(matrix_from_json(j.at("A"), n, n), matrix_from_json(j.at("B"), n, m),
                           matrix_from_json(j.at("C"), p, n), matrix_from_json(j.at("D"), p, m),
                           get<double>(j, "fs"));
        if (j.contains("warnings")) s.warnings = j.at("warnings").get<std::vector<std::string>>();
        return s;
    } catch (const Json::exception& e) {
        throw IoError(std::string("invalid linear model: ") + e.what());
    }
}

Json to_json(const PnlssModel& model) {
    Json j = to_json(model.linear());
    j["format"] = "pnlss-model";
    j["version"] = 1;
    j["E"] = matrix_to_json(model.E());
    j["F"] = matrix_to_json(model.F());
    j["state_exponents"] = model.state_basis().exponents;
    j["output_exponents"] = model.output_basis().exponents;
    j["active_state"] = model.active_state();
    j["active_output"] = model.active_output();
    j["x0"] = std::vector<double>(model.x0.data(), model.x0.data() + model.x0.size());
    return j;
}

PnlssModel pnlss_from_json(const Json& j) {
    try {
        LinearStateSpace lin = linear_from_json(j);
        const auto n = lin.order(), m = lin.inputs();
        auto sb = basis_from_exponents(n, m, get<std::vector<std::vector<int>>>(j, "state_exponents"));
        auto ob = basis_from_exponents(n, m, get<std::vector<std::vector<int>>>(j, "output_exponents"));
        PnlssModel model(std::move(lin), std::move(sb), std::move(ob), get<std::vector<bool>>(j, "active_state"),
                         get<std::vector<bool>>(j, "active_output"));
        const auto ne = static_cast<Eigen::Index>(model.state_basis().size());
        const auto nf = static_cast<Eigen::Index>(model.output_basis().size());
        model.set_E(matrix_from_json(j.at("E"), static_cast<Eigen::Index>(n), ne));
        model.set_F(matrix_from_json(j.at("F"), static_cast<Eigen::Index>(model.outputs()), nf));
        if (j.contains("x0")) {
            const auto x0 = j.at("x0").get<std::vector<double>>();
            if (x0.size() != n) throw IoError("x0 has wrong length");
            model.x0 = Eigen::Map<const Vector>(x0.data(), static_cast<Eigen::Index>(x0.size()));
        }
        return model;
    } catch (const Json::exception& e) {
        throw IoError(std::string("invalid PNLSS model: ") + e.what());
    } catch (const ConfigError& e) {
        throw IoError(std::string("inconsistent PNLSS model: ") + e.what());
    }
}

Json to_json(const FrfEstimate& frf) {
    Json j;
    j["format"] = "frf";
    j["N"] = frf.N;
    j["fs"] = frf.fs;
    j["p"] = frf.outputs;
    j["m"] = frf.inputs;
    j["R"] = frf.R;
    j["P"] = frf.P;
    j["lines"] = frf.lines;
    j["excluded_lines"] = frf.excluded_lines;
    j["dft_convention"] = "forward unnormalized sum";
    Json G = Json::array(), gml = Json::array(), gn = Json::array();
    for (std::size_t i = 0; i < frf.lines.size(); ++i) {
        G.push_back(cmatrix_to_json(frf.G[i]));
        if (i < frf.cov_total.size()) gml.push_back(cmatrix_to_json(frf.cov_total[i]));
        if (i < frf.cov_noise.size()) gn.push_back(cmatrix_to_json(frf.cov_noise[i]));
    }
    j["G"] = std::move(G);
    j["covGML"] = std::move(gml);
    j["covGn"] = std::move(gn);
    return j;
}

FrfEstimate frf_from_json(const Json& j) {
    try {
        FrfEstimate frf;
        frf.N = get<std::size_t>(j, "N");
        frf.fs = get<double>(j, "fs");
        frf.outputs = get<std::size_t>(j, "p");
        frf.inputs = get<std::size_t>(j, "m");
        frf.R = j.value("R", std::size_t{0});
        frf.P = j.value("P", std::size_t{0});
        frf.lines = get<LineSet>(j, "lines");
        if (j.contains("excluded_lines")) frf.excluded_lines = get<LineSet>(j, "excluded_lines");
        for (const auto& g : j.at("G")) frf.G.push_back(cmatrix_from_json(g));
        if (j.contains("covGML"))
            for (const auto& c : j.at("covGML")) frf.cov_total.push_back(cmatrix_from_json(c));
        if (j.contains("covGn"))
            for (const auto& c : j.at("covGn")) frf.cov_noise.push_back(cmatrix_from_json(c));
        frf.validate();
        return frf;
    } catch (const Json::exception& e) {
        throw IoError(std::string("invalid FRF file: ") + e.what());
    } catch (const ConfigError& e) {
        throw IoError(std::string("inconsistent FRF file: ") + e.what());
    }
}

Json to_json(const OutputNoiseCovariance& cov) {
    Json j;
    j["format"] = "output-noise-covariance";
    j["N"] = cov.N;
    j["lines"] = cov.lines;
    Json c = Json::array();
    for (const auto& m : cov.cov) c.push_back(cmatrix_to_json(m));
    j["cov"] = std::move(c);
    return j;
}

OutputNoiseCovariance noise_covariance_from_json(const Json& j) {
    try {
        OutputNoiseCovariance cov;
        cov.N = get<std::size_t>(j, "N");
        cov.lines = get<LineSet>(j, "lines");
        for (const auto& c : j.at("cov")) cov.cov.push_back(cmatrix_from_json(c));
        if (cov.cov.size() != cov.lines.size()) throw IoError("noise covariance: length mismatch");
        return cov;
    } catch (const Json::exception& e) {
        throw IoError(std::string("invalid noise covariance file: ") + e.what());
    }
}

Json to_json(const MultisineConfig& c) {
    return {{"N", c.N},
            {"fs", c.fs},
            {"grid", std::string(to_string(c.grid.kind))},
            {"group_size", c.grid.group_size},
            {"f_max_ratio", c.f_max_ratio},
            {"R", c.R},
            {"P", c.P},
            {"rms", c.rms},
            {"seed", c.seed}};
}

MultisineConfig multisine_config_from_json(const Json& j) {
    MultisineConfig c;
    c.N = get<std::size_t>(j, "N");
    c.fs = get<double>(j, "fs");
    c.grid.kind = parse_grid_kind(get<std::string>(j, "grid"));
    c.grid.group_size = j.value("group_size", c.grid.group_size);
    c.f_max_ratio = j.value("f_max_ratio", c.f_max_ratio);
    c.R = get<std::size_t>(j, "R");
    c.P = get<std::size_t>(j, "P");
    c.rms = get<double>(j, "rms");
    c.seed = j.value("seed", c.seed);
    return c;
}

Json linmodels_to_json(const std::map<std::size_t, OrderResult>& results) {
    Json models = Json::array();
    Json errors = Json::object();
    for (const auto& [order, res] : results) {
        if (!res.ok()) {
            errors[std::to_string(order)] = res.error;
            continue;
        }
        Json m = to_json(*res.model);
        m["fit_cost"] = res.fit_cost;
        m["singular_values"] = std::vector<double>(res.singular_values.data(),
                                                   res.singular_values.data() + res.singular_values.size());
        models.push_back(std::move(m));
    }
    return {{"format", "linear-models"}, {"models", std::move(models)}, {"errors", std::move(errors)}};
}

std::map<std::size_t, OrderResult> linmodels_from_json(const Json& j) {
    std::map<std::size_t, OrderResult> out;
    try {
        for (const auto& m : j.at("models")) {
            OrderResult res;
            res.model = linear_from_json(m);
            res.fit_cost = m.value("fit_cost", 0.0);
            const auto sv = m.value("singular_values", std::vector<double>{});
            res.singular_values = Eigen::Map<const Vector>(sv.data(), static_cast<Eigen::Index>(sv.size()));
            out[res.model->order()] = std::move(res);
        }
        if (j.contains("errors"))
            for (const auto& [order, msg] : j.at("errors").items())
                out[std::stoul(order)].error = msg.get<std::string>();
    } catch (const Json::exception& e) {
        throw IoError(std::string("invalid linear model list: ") + e.what());
    }
    return out;
}

void write_signals(const fs::path& csv, const MultisineConfig& config, const std::vector<ExcitationSignal>& signals) {
    std::ostringstream out;
    out << "realization,sample_index,u\n";
    for (std::size_t r = 0; r < signals.size(); ++r)
        for (Eigen::Index t = 0; t < signals[r].samples.size(); ++t)
            out << r << ',' << t << ',' << format_double(signals[r].samples(t)) << '\n';
    write_text(csv, out.str());

    Json side;
    side["kind"] = "multisine";
    side["config"] = to_json(config);
    side["prng"] = std::string(kPrngName);
    side["excited_lines"] = signals.empty() ? LineSet{} : signals.front().excited_lines;
    Json phases = Json::array(), amplitudes = Json::array();
    for (const auto& s : signals) {
        phases.push_back(s.phases);
        amplitudes.push_back(s.amplitude);
    }
    side["phases"] = std::move(phases);
    side["amplitude"] = std::move(amplitudes);
    write_json(sidecar_path(csv), side);
}

fs::path sidecar_path(const fs::path& csv) {
    fs::path p = csv;
    p.replace_extension(".json");
    return p;
}

fs::path resolve_record_path(const fs::path& path) {
    if (fs::is_directory(path)) return path / "record.csv";
    return path;
}

void write_record(const fs::path& csv, const DataRecord& rec) {
    rec.validate();
    std::ostringstream out;
    out << "realization,period,sample";
    for (std::size_t i = 0; i < rec.inputs(); ++i) out << ",u_" << i + 1;
    for (std::size_t i = 0; i < rec.outputs(); ++i) out << ",y_" << i + 1;
    out << '\n';
    for (std::size_t r = 0; r < rec.realizations(); ++r)
        for (std::size_t p = 0; p < rec.periods(); ++p) {
            const Matrix& u = rec.u(r, p);
            const Matrix& y = rec.y(r, p);
            for (Eigen::Index t = 0; t < u.rows(); ++t) {
                out << r << ',' << p << ',' << t;
                for (Eigen::Index i = 0; i < u.cols(); ++i) out << ',' << format_double(u(t, i));
                for (Eigen::Index i = 0; i < y.cols(); ++i) out << ',' << format_double(y(t, i));
                out << '\n';
            }
        }
    write_text(csv, out.str());

    Json side{{"kind", "record"},
              {"fs", rec.fs()},
              {"N", rec.samples()},
              {"R", rec.realizations()},
              {"P", rec.periods()},
              {"m", rec.inputs()},
              {"p", rec.outputs()},
              {"periodic", rec.periodic()},
              {"excited_lines", rec.excited_lines()}};
    if (rec.grid) {
        side["grid"] = std::string(to_string(rec.grid->kind));
        side["group_size"] = rec.grid->group_size;
    }
    write_json(sidecar_path(csv), side);
}

Table read_table(const fs::path& csv) {
    std::ifstream in(csv);
    if (!in) throw IoError("cannot open " + csv.string());
    Table table;
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty CSV " + csv.string());
    table.header = split_csv_line(line);
    std::vector<double> values;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != table.header.size())
            throw IoError("row " + std::to_string(rows + 2) + " of " + csv.string() + " has the wrong field count");
        for (const auto& f : fields) values.push_back(parse_double(f, csv));
        ++rows;
    }
    const auto cols = static_cast<Eigen::Index>(table.header.size());
    table.values = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        values.data(), static_cast<Eigen::Index>(rows), cols);
    return table;
}

void write_table(const fs::path& csv, const std::vector<std::string>& header, const Matrix& values) {
    std::ostringstream out;
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << '\n';
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
        for (Eigen::Index c = 0; c < values.cols(); ++c) out << (c ? "," : "") << format_double(values(r, c));
        out << '\n';
    }
    write_text(csv, out.str());
}

DataRecord read_record(const fs::path& path) {
    const fs::path csv = resolve_record_path(path);
    const Json side = read_json(sidecar_path(csv));
    if (side.value("kind", std::string("record")) != "record")
        throw IoError(csv.string() + " is not a multi-period record");
    const auto R = get<std::size_t>(side, "R"), P = get<std::size_t>(side, "P"), N = get<std::size_t>(side, "N");
    const auto m = get<std::size_t>(side, "m"), p = get<std::size_t>(side, "p");
    DataRecord rec(R, P, N, m, p, get<double>(side, "fs"), get<bool>(side, "periodic"),
                   side.value("excited_lines", LineSet{}));
    if (side.contains("grid")) {
        rec.grid = ExcitationGrid{parse_grid_kind(side.at("grid").get<std::string>()), side.value("group_size", 0)};
    }
    const Table t = read_table(csv);
    if (t.values.cols() != static_cast<Eigen::Index>(3 + m + p)) throw IoError(csv.string() + ": unexpected columns");
    if (static_cast<std::size_t>(t.values.rows()) != R * P * N) throw IoError(csv.string() + ": unexpected row count");
    for (Eigen::Index row = 0; row < t.values.rows(); ++row) {
        const auto r = static_cast<std::size_t>(t.values(row, 0));
        const auto per = static_cast<std::size_t>(t.values(row, 1));
        const auto s = static_cast<Eigen::Index>(t.values(row, 2));
        if (r >= R || per >= P || s < 0 || s >= static_cast<Eigen::Index>(N))
            throw IoError(csv.string() + ": index out of range on row " + std::to_string(row + 2));
        rec.u(r, per).row(s) = t.values.block(row, 3, 1, static_cast<Eigen::Index>(m));
        rec.y(r, per).row(s) = t.values.block(row, 3 + static_cast<Eigen::Index>(m), 1, static_cast<Eigen::Index>(p));
    }
    return rec;
}

void write_concatenated(const fs::path& csv, const ConcatenatedRecord& rec) {
    rec.validate();
    std::vector<std::string> header{"sample"};
    for (Eigen::Index i = 0; i < rec.u.cols(); ++i) header.push_back("u_" + std::to_string(i + 1));
    for (Eigen::Index i = 0; i < rec.y.cols(); ++i) header.push_back("y_" + std::to_string(i + 1));
    Matrix values(rec.u.rows(), 1 + rec.u.cols() + rec.y.cols());
    for (Eigen::Index t = 0; t < rec.u.rows(); ++t) values(t, 0) = static_cast<double>(t);
    values.middleCols(1, rec.u.cols()) = rec.u;
    values.rightCols(rec.y.cols()) = rec.y;
    write_table(csv, header, values);
    Json side{{"kind", "concatenated"},
              {"fs", rec.fs},
              {"m", rec.u.cols()},
              {"p", rec.y.cols()},
              {"segment_starts", rec.segment_starts},
              {"segment_lengths", rec.segment_lengths},
              {"prepend", rec.prepend},
              {"t2", rec.t2},
              {"periodic", rec.periodic}};
    write_json(sidecar_path(csv), side);
}

ConcatenatedRecord read_concatenated(const fs::path& path) {
    const fs::path csv = resolve_record_path(path);
    const Json side = read_json(sidecar_path(csv));
    if (side.value("kind", std::string()) != "concatenated") throw IoError(csv.string() + " is not a concatenated record");
    const auto m = get<Eigen::Index>(side, "m"), p = get<Eigen::Index>(side, "p");
    const Table t = read_table(csv);
    if (t.values.cols() != 1 + m + p) throw IoError(csv.string() + ": unexpected columns");
    ConcatenatedRecord rec;
    rec.u = t.values.middleCols(1, m);
    rec.y = t.values.rightCols(p);
    rec.fs = get<double>(side, "fs");
    rec.segment_starts = get<std::vector<std::size_t>>(side, "segment_starts");
    rec.segment_lengths = get<std::vector<std::size_t>>(side, "segment_lengths");
    rec.prepend = get<std::size_t>(side, "prepend");
    rec.t2 = get<std::size_t>(side, "t2");
    rec.periodic = side.value("periodic", false);
    try {
        rec.validate();
    } catch (const ConfigError& e) {
        throw IoError(csv.string() + ": " + e.what());
    }
    return rec;
}

bool is_concatenated(const fs::path& path) {
    const fs::path side = sidecar_path(resolve_record_path(path));
    if (!fs::exists(side)) return false;
    return read_json(side).value("kind", std::string()) == "concatenated";
}

void write_trace(const fs::path& dir, const OptimizationTrace& trace) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    for (std::size_t i = 0; i < trace.models.size(); ++i) write_json(dir / model_file_name(i + 1), to_json(trace.models[i]));
    Json steps = Json::array();
    for (const auto& s : trace.steps)
        steps.push_back({{"success", s.success},
                         {"lambda_before", s.lambda_before},
                         {"lambda_after", s.lambda_after},
                         {"trial_cost", nullable(s.trial_cost)}});
    Json doc{{"format", "pnlss-trace"},
             {"models", trace.models.size()},
             {"costs", trace.costs},
             {"lambdas", trace.lambdas},
             {"steps", std::move(steps)},
             {"stop_reason", trace.stop_reason},
             {"warnings", trace.warnings}};
    write_json(dir / "trace.json", doc);
}

OptimizationTrace read_trace(const fs::path& dir) {
    const Json doc = read_json(dir / "trace.json");
    OptimizationTrace trace;
    const auto count = get<std::size_t>(doc, "models");
    for (std::size_t i = 0; i < count; ++i) trace.models.push_back(pnlss_from_json(read_json(dir / model_file_name(i + 1))));
    trace.costs = get<std::vector<double>>(doc, "costs");
    trace.lambdas = get<std::vector<double>>(doc, "lambdas");
    for (const auto& s : doc.at("steps"))
        trace.steps.push_back({s.at("success").get<bool>(), s.at("lambda_before").get<double>(),
                               s.at("lambda_after").get<double>(), from_nullable(s.at("trial_cost"))});
    trace.stop_reason = doc.value("stop_reason", std::string());
    trace.warnings = doc.value("warnings", std::vector<std::string>{});
    return trace;
}

std::string config_hash(const Json& doc) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : doc.dump()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << h;
    return out.str();
}

} // namespace pnlss::io
