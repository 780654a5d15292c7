#include "oracles.hpp"

#include "pnlss/errors.hpp"
#include "pnlss/signalgen.hpp"

#include <doctest.h>

using namespace pnlss;

namespace {

MultisineConfig config(std::size_t N, GridKind kind, double ratio = 0.9) {
    MultisineConfig c;
    c.N = N;
    c.fs = 1.0;
    c.grid.kind = kind;
    c.f_max_ratio = ratio;
    c.R = 1;
    c.P = 1;
    c.rms = 1.0;
    c.seed = 7;
    return c;
}

double rms(const Vector& v) { return std::sqrt(v.squaredNorm() / static_cast<double>(v.size())); }

} // namespace

TEST_SUITE("signalgen") {

TEST_CASE("excited lines of small grids") {
    CHECK(excited_line_set(config(20, GridKind::Odd)) == LineSet{1, 3, 5, 7, 9});
    CHECK(excited_line_set(config(20, GridKind::Full)) == LineSet{1, 2, 3, 4, 5, 6, 7, 8, 9});
}

TEST_CASE("odd grid reaching 200 Hz at N = 8192 holds 1342 lines") {
    MultisineConfig c = config(8192, GridKind::Odd);
    c.fs = 8192.0 * 200.0 / 2684.0; // about 610 Hz, line spacing fs / 8192
    c.f_max_ratio = 200.0 / (c.fs / 2.0);
    CHECK(excited_line_set(c).size() == 1342);
}

TEST_CASE("DC and Nyquist are never excited") {
    for (auto kind : {GridKind::Full, GridKind::Odd}) {
        const LineSet lines = excited_line_set(config(16, kind, 1.0));
        CHECK(lines.front() >= 1);
        CHECK(lines.back() < 8);
    }
}

TEST_CASE("random-odd grid drops exactly one line per complete group") {
    for (int group : {2, 3, 4, 5}) {
        MultisineConfig c = config(1024, GridKind::RandomOdd);
        c.grid.group_size = group;
        const LineSet odd = excited_line_set(config(1024, GridKind::Odd));
        const LineSet ro = excited_line_set(c);
        const std::size_t groups = odd.size() / static_cast<std::size_t>(group);
        CHECK(ro.size() == odd.size() - groups);
        for (std::size_t gidx = 0; gidx < groups; ++gidx) {
            int kept = 0;
            for (int i = 0; i < group; ++i) {
                const int line = odd[gidx * static_cast<std::size_t>(group) + static_cast<std::size_t>(i)];
                kept += std::binary_search(ro.begin(), ro.end(), line) ? 1 : 0;
            }
            CHECK(kept == group - 1);
        }
        CHECK(excited_line_set(c) == ro);
    }
}

TEST_CASE("random-odd detection lines depend on the seed") {
    MultisineConfig a = config(4096, GridKind::RandomOdd);
    MultisineConfig b = a;
    b.seed = 8;
    CHECK(excited_line_set(a) != excited_line_set(b));
}

TEST_CASE("empty excited band is a configuration error") {
    CHECK_THROWS_AS(excited_line_set(config(20, GridKind::Full, 0.05)), ConfigError);
    MultisineConfig bad = config(20, GridKind::Odd);
    bad.rms = 0.0;
    CHECK_THROWS_AS(generate_multisine(bad), ConfigError);
    bad = config(2, GridKind::Odd);
    CHECK_THROWS_AS(generate_multisine(bad), ConfigError);
}

TEST_CASE("single line synthesizes a sine with the given phase") {
    const std::size_t N = 64;
    const int lines[] = {1};
    const double amps[] = {0.7};
    const double phases[] = {1.1};
    const Vector s = synthesize_period(N, lines, amps, phases);
    for (std::size_t t = 0; t < N; ++t)
        CHECK(std::abs(s(static_cast<Eigen::Index>(t)) -
                       0.7 * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / N + 1.1)) < 1e-12);
}

TEST_CASE("periods repeat exactly and the RMS hits the target") {
    MultisineConfig c = config(256, GridKind::Odd);
    c.R = 3;
    c.P = 4;
    c.rms = 2.5;
    for (const auto& sig : generate_multisine(c)) {
        REQUIRE(sig.samples.size() == static_cast<Eigen::Index>(c.N * c.P));
        for (Eigen::Index t = 0; t + static_cast<Eigen::Index>(c.N) < sig.samples.size(); ++t)
            CHECK(sig.samples(t + static_cast<Eigen::Index>(c.N)) == sig.samples(t));
        CHECK(std::abs(rms(sig.samples) - c.rms) / c.rms < 1e-9);
    }
}

TEST_CASE("spectrum vanishes off the excited lines") {
    for (auto kind : {GridKind::Full, GridKind::Odd, GridKind::RandomOdd}) {
        MultisineConfig c = config(128, kind);
        c.R = 2;
        c.rms = 3.0;
        for (const auto& sig : generate_multisine(c)) {
            const auto X = oracle::naive_dft(oracle::to_std(sig.samples.head(static_cast<Eigen::Index>(c.N))));
            for (int k = 0; k < static_cast<int>(c.N); ++k) {
                const int folded = std::min(k, static_cast<int>(c.N) - k);
                const bool excited = std::binary_search(sig.excited_lines.begin(), sig.excited_lines.end(), folded);
                if (!excited) CHECK(std::abs(X[static_cast<std::size_t>(k)]) < 1e-10 * c.rms * c.N);
            }
        }
    }
}

TEST_CASE("realizations differ in phase but share the amplitude spectrum") {
    MultisineConfig c = config(512, GridKind::Odd);
    c.R = 9;
    const auto sigs = generate_multisine(c);
    std::vector<std::vector<oracle::cplx>> spectra;
    for (const auto& s : sigs) spectra.push_back(oracle::naive_dft(oracle::to_std(s.samples)));
    for (std::size_t a = 0; a < sigs.size(); ++a)
        for (std::size_t b = a + 1; b < sigs.size(); ++b) {
            CHECK(sigs[a].samples != sigs[b].samples);
            for (int k : sigs[a].excited_lines)
                CHECK(std::abs(std::abs(spectra[a][static_cast<std::size_t>(k)]) -
                               std::abs(spectra[b][static_cast<std::size_t>(k)])) <
                      1e-9 * std::abs(spectra[a][static_cast<std::size_t>(k)]));
        }
}

TEST_CASE("generation is deterministic in the seed") {
    MultisineConfig c = config(300, GridKind::RandomOdd);
    c.R = 2;
    const auto a = generate_multisine(c);
    const auto b = generate_multisine(c);
    for (std::size_t r = 0; r < a.size(); ++r) {
        CHECK(a[r].samples == b[r].samples);
        CHECK(a[r].phases == b[r].phases);
    }
    c.seed += 1;
    CHECK(generate_multisine(c)[0].samples != a[0].samples);
}

TEST_CASE("phases are uniform on [0, 2pi)") {
    MultisineConfig c = config(4096, GridKind::Full);
    c.R = 6;
    std::vector<int> bins(20, 0);
    std::size_t count = 0;
    for (const auto& sig : generate_multisine(c))
        for (double ph : sig.phases) {
            REQUIRE(ph >= 0.0);
            REQUIRE(ph < 2.0 * std::numbers::pi);
            ++bins[static_cast<std::size_t>(ph / (2.0 * std::numbers::pi) * 20.0)];
            ++count;
        }
    REQUIRE(count >= 10000);
    const double expected = static_cast<double>(count) / 20.0;
    double chi2 = 0.0;
    for (int b : bins) chi2 += (b - expected) * (b - expected) / expected;
    CHECK(chi2 < oracle::kChiSquare19_p001);
}

TEST_CASE("grid names parse") {
    CHECK(parse_grid_kind("random-odd") == GridKind::RandomOdd);
    CHECK(parse_grid_kind("odd") == GridKind::Odd);
    CHECK(parse_grid_kind("full") == GridKind::Full);
    CHECK_THROWS_AS(parse_grid_kind("even"), ConfigError);
}

}
