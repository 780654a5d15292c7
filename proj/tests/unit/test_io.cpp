#include "oracles.hpp"

#include "pnlss/errors.hpp"
#include "pnlss/io.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <limits>

using namespace pnlss;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "pnlss_io_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

LinearStateSpace awkward_linear() {
    // Values that need all 17 digits to survive a round trip.
    Matrix A(2, 2), B(2, 1), C(1, 2), D(1, 1);
    A << 0.1 + 0.2, -1.0 / 3.0, std::nextafter(0.5, 1.0), 1e-300;
    B << 2.0 / 7.0, 123456789.123456789;
    C << std::numbers::pi, -std::numbers::e;
    D << 5e-324;
    LinearStateSpace lin{A, B, C, D};
    lin.fs = 1000.0;
    return lin;
}

PnlssModel awkward_model() {
    PnlssModel m = init_from_linear(awkward_linear(), {2, 3}, {2}, ActiveSelection::states_only(),
                                    ActiveSelection::full());
    m.set_E(0, 1, 1.0 / 3.0);
    m.set_E(1, 3, -2e-17);
    m.set_F(0, 0, 0.7);
    m.x0 = Vector::Constant(2, 0.1);
    return m;
}

} // namespace

TEST_SUITE("io") {

TEST_CASE("format_double keeps every bit") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-310, 1.7976931348623157e308, std::nextafter(1.0, 2.0)})
        CHECK(std::strtod(io::format_double(v).c_str(), nullptr) == v);
}

TEST_CASE("linear model round trip is exact") {
    const LinearStateSpace lin = awkward_linear();
    const LinearStateSpace back = io::linear_from_json(io::to_json(lin));
    CHECK(back.A == lin.A);
    CHECK(back.B == lin.B);
    CHECK(back.C == lin.C);
    CHECK(back.D == lin.D);
    CHECK(back.fs == lin.fs);
}

TEST_CASE("PNLSS model round trip through a file is exact") {
    const fs::path dir = scratch("model");
    const PnlssModel m = awkward_model();
    io::write_json(dir / "m.json", io::to_json(m));
    const PnlssModel back = io::pnlss_from_json(io::read_json(dir / "m.json"));
    CHECK(back.parameters() == m.parameters());
    CHECK(back.E() == m.E());
    CHECK(back.F() == m.F());
    CHECK(back.state_basis().exponents == m.state_basis().exponents);
    CHECK(back.output_basis().exponents == m.output_basis().exponents);
    CHECK(back.active_state() == m.active_state());
    CHECK(back.active_output() == m.active_output());
    CHECK(back.x0 == m.x0);
}

TEST_CASE("malformed model documents raise IoError") {
    io::Json j = io::to_json(awkward_model());
    SUBCASE("missing field") { j.erase("A"); }
    SUBCASE("wrong shape") { j["B"] = io::Json::array({io::Json::array({1.0, 2.0})}); }
    SUBCASE("wrong type") { j["C"] = "not a matrix"; }
    SUBCASE("nonzero inactive column") {
        const auto active = awkward_model().active_state();
        const auto col = static_cast<std::size_t>(std::find(active.begin(), active.end(), false) - active.begin());
        REQUIRE(col < active.size());
        j["E"][0][col] = 1.0;
    }
    CHECK_THROWS_AS(io::pnlss_from_json(j), IoError);
}

TEST_CASE("unreadable files raise IoError") {
    const fs::path dir = scratch("bad");
    CHECK_THROWS_AS(io::read_json(dir / "missing.json"), IoError);
    io::write_text(dir / "broken.json", "{\"A\": [1, 2");
    CHECK_THROWS_AS(io::read_json(dir / "broken.json"), IoError);
    CHECK_THROWS_AS(io::read_record(dir / "missing.csv"), IoError);
}

TEST_CASE("FRF and noise covariance round trip") {
    FrfEstimate frf;
    frf.lines = {1, 3, 5};
    frf.N = 64;
    frf.fs = 10.0;
    frf.outputs = 2;
    frf.inputs = 1;
    frf.R = 4;
    frf.P = 2;
    frf.excluded_lines = {7};
    for (int k = 0; k < 3; ++k) {
        CMatrix G(2, 1);
        G << oracle::cplx(k, 1.0 / 3.0), oracle::cplx(-0.1, k * 0.7);
        frf.G.push_back(G);
        frf.cov_total.push_back(G * G.adjoint() + CMatrix::Identity(2, 2));
        frf.cov_noise.push_back(0.5 * CMatrix::Identity(2, 2));
    }
    const FrfEstimate back = io::frf_from_json(io::to_json(frf));
    CHECK(back.lines == frf.lines);
    CHECK(back.excluded_lines == frf.excluded_lines);
    CHECK(back.N == frf.N);
    CHECK(back.R == frf.R);
    CHECK(back.P == frf.P);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back.G[i] == frf.G[i]);
        CHECK(back.cov_total[i] == frf.cov_total[i]);
        CHECK(back.cov_noise[i] == frf.cov_noise[i]);
    }

    OutputNoiseCovariance cov;
    cov.N = 8;
    cov.lines = {0, 1, 2, 3, 4};
    for (int k = 0; k < 5; ++k) cov.cov.push_back(CMatrix::Identity(1, 1) * (0.1 * k + 1.0 / 3.0));
    const auto cback = io::noise_covariance_from_json(io::to_json(cov));
    CHECK(cback.lines == cov.lines);
    for (std::size_t i = 0; i < 5; ++i) CHECK(cback.cov[i] == cov.cov[i]);
}

TEST_CASE("multisine config round trip") {
    MultisineConfig c;
    c.N = 512;
    c.fs = 250.0;
    c.grid = ExcitationGrid::random_odd(3);
    c.f_max_ratio = 0.3;
    c.R = 2;
    c.P = 5;
    c.rms = 1.0 / 3.0;
    c.seed = 0xdeadbeefcafeULL;
    const MultisineConfig b = io::multisine_config_from_json(io::to_json(c));
    CHECK(b.N == c.N);
    CHECK(b.fs == c.fs);
    CHECK(b.grid.kind == c.grid.kind);
    CHECK(b.grid.group_size == c.grid.group_size);
    CHECK(b.f_max_ratio == c.f_max_ratio);
    CHECK(b.R == c.R);
    CHECK(b.P == c.P);
    CHECK(b.rms == c.rms);
    CHECK(b.seed == c.seed);
}

TEST_CASE("record CSV round trip is exact") {
    const fs::path dir = scratch("record");
    DataRecord rec(2, 3, 16, 1, 2, 100.0, true, {1, 3, 5});
    rec.grid = ExcitationGrid::odd();
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd;
    for (std::size_t r = 0; r < 2; ++r)
        for (std::size_t p = 0; p < 3; ++p) {
            for (auto& v : rec.u(r, p).reshaped()) v = nd(rng) / 3.0;
            for (auto& v : rec.y(r, p).reshaped()) v = nd(rng) * 1e-7;
        }
    io::write_record(dir / "record.csv", rec);
    CHECK(fs::exists(dir / "record.json"));
    const DataRecord back = io::read_record(io::resolve_record_path(dir));
    CHECK(back.realizations() == 2);
    CHECK(back.periods() == 3);
    CHECK(back.samples() == 16);
    CHECK(back.outputs() == 2);
    CHECK(back.fs() == 100.0);
    CHECK(back.periodic());
    CHECK(back.excited_lines() == rec.excited_lines());
    REQUIRE(back.grid.has_value());
    CHECK(back.grid->kind == GridKind::Odd);
    for (std::size_t r = 0; r < 2; ++r)
        for (std::size_t p = 0; p < 3; ++p) {
            CHECK(back.u(r, p) == rec.u(r, p));
            CHECK(back.y(r, p) == rec.y(r, p));
        }
}

TEST_CASE("concatenated CSV round trip keeps the transient bookkeeping") {
    const fs::path dir = scratch("concat");
    std::vector<DataRecord> recs;
    for (int s = 0; s < 2; ++s) {
        DataRecord rec(1, 1, 8, 1, 1, 50.0, true);
        for (Eigen::Index k = 0; k < 8; ++k) {
            rec.u(0, 0)(k, 0) = 1.0 / (k + 3.0 + s);
            rec.y(0, 0)(k, 0) = -0.1 * k * (s + 1);
        }
        recs.push_back(rec);
    }
    const ConcatenatedRecord c = concatenate(recs, 4, 2);
    io::write_concatenated(dir / "data.csv", c);
    CHECK(io::is_concatenated(dir / "data.csv"));
    const ConcatenatedRecord back = io::read_concatenated(dir / "data.csv");
    CHECK(back.u == c.u);
    CHECK(back.y == c.y);
    CHECK(back.segment_starts == c.segment_starts);
    CHECK(back.segment_lengths == c.segment_lengths);
    CHECK(back.prepend == c.prepend);
    CHECK(back.t2 == c.t2);
    CHECK(back.periodic == c.periodic);
    CHECK(back.cost_mask() == c.cost_mask());
}

TEST_CASE("table round trip and malformed rows") {
    const fs::path dir = scratch("table");
    Matrix v(3, 2);
    v << 1.0 / 3.0, -0.0, 1e-310, 2.0, 7.0, -1e300;
    io::write_table(dir / "t.csv", {"a", "b"}, v);
    const io::Table t = io::read_table(dir / "t.csv");
    CHECK(t.header == std::vector<std::string>{"a", "b"});
    CHECK(t.values == v);

    io::write_text(dir / "short.csv", "a,b\n1,2\n3\n");
    CHECK_THROWS_AS(io::read_table(dir / "short.csv"), IoError);
    io::write_text(dir / "text.csv", "a,b\n1,x\n");
    CHECK_THROWS_AS(io::read_table(dir / "text.csv"), IoError);
}

TEST_CASE("trace directory round trip") {
    const fs::path dir = scratch("trace");
    OptimizationTrace trace;
    PnlssModel m = awkward_model();
    for (int i = 0; i < 3; ++i) {
        m.set_E(0, 1, 0.1 * i + 1.0 / 3.0);
        trace.models.push_back(m);
        trace.costs.push_back(1.0 / (i + 1.0));
        trace.lambdas.push_back(std::pow(0.5, i));
    }
    trace.steps.push_back({true, 1.0, 0.5, 0.5});
    trace.steps.push_back({false, 0.5, 0.5 * std::sqrt(10.0), std::numeric_limits<double>::infinity()});
    trace.steps.push_back({true, 0.5 * std::sqrt(10.0), 0.25 * std::sqrt(10.0), 1.0 / 3.0});
    trace.stop_reason = "max_iterations";
    trace.warnings = {"fallback"};
    io::write_trace(dir, trace);
    CHECK(fs::exists(dir / "model_0001.json"));
    CHECK(fs::exists(dir / "model_0003.json"));
    CHECK_FALSE(fs::exists(dir / "model_0004.json"));

    const OptimizationTrace back = io::read_trace(dir);
    REQUIRE(back.models.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(back.models[i].parameters() == trace.models[i].parameters());
    CHECK(back.costs == trace.costs);
    CHECK(back.lambdas == trace.lambdas);
    REQUIRE(back.steps.size() == 3);
    CHECK(std::isinf(back.steps[1].trial_cost));
    CHECK_FALSE(back.steps[1].success);
    CHECK(back.steps[2].lambda_after == trace.steps[2].lambda_after);
    CHECK(back.stop_reason == trace.stop_reason);
    CHECK(back.warnings == trace.warnings);
}

TEST_CASE("linear model list keeps per-order errors") {
    std::map<std::size_t, OrderResult> res;
    res[2].model = awkward_linear();
    res[2].fit_cost = 1.0 / 3.0;
    res[2].singular_values = Vector::LinSpaced(4, 4.0, 1.0);
    res[3].error = "order 3: singular pencil";
    const auto back = io::linmodels_from_json(io::linmodels_to_json(res));
    REQUIRE(back.size() == 2);
    REQUIRE(back.at(2).ok());
    CHECK(back.at(2).model->A == res[2].model->A);
    CHECK(back.at(2).fit_cost == res[2].fit_cost);
    CHECK(back.at(2).singular_values == res[2].singular_values);
    CHECK_FALSE(back.at(3).ok());
    CHECK(back.at(3).error == res[3].error);
}

TEST_CASE("config hash is deterministic and content sensitive") {
    io::Json a = {{"x", 1}, {"y", {1, 2, 3}}};
    io::Json b = {{"y", {1, 2, 3}}, {"x", 1}};
    CHECK(io::config_hash(a) == io::config_hash(b));
    CHECK(io::config_hash(a).size() == 16);
    b["x"] = 2;
    CHECK(io::config_hash(a) != io::config_hash(b));
}

}
