#include "pnlss/frf.hpp"

#include "pnlss/errors.hpp"
#include "pnlss/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace pnlss {

namespace {

// Per-block spectra restricted to a set of lines: result[line_idx] is rows x cols.
std::vector<CMatrix> block_spectra(const Matrix& block, const LineSet& lines) {
    const CMatrix full = spectral::dft_columns(block);
    std::vector<CMatrix> out;
    out.reserve(lines.size());
    for (int k : lines) out.emplace_back(full.row(k).transpose());
    return out;
}

double input_rms(const Matrix& u) {
    return std::sqrt(u.squaredNorm() / static_cast<double>(u.size()));
}

CMatrix sample_covariance(const std::vector<CVector>& samples, const CVector& mean) {
    const auto d = mean.size();
    CMatrix cov = CMatrix::Zero(d, d);
    for (const auto& s : samples) {
        const CVector c = s - mean;
        cov += c * c.adjoint();
    }
    return cov / static_cast<double>(samples.size() - 1);
}

} // namespace

void FrfEstimate::validate() const {
    if (lines.empty()) throw ConfigError("frf: no lines");
    if (G.size() != lines.size()) throw ConfigError("frf: G and lines differ in length");
    if (N == 0) throw ConfigError("frf: period length N missing");
    const auto d = static_cast<Eigen::Index>(outputs * inputs);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (G[i].rows() != static_cast<Eigen::Index>(outputs) || G[i].cols() != static_cast<Eigen::Index>(inputs))
            throw ConfigError("frf: G has inconsistent shape");
        if (!cov_total.empty() && (cov_total[i].rows() != d || cov_total[i].cols() != d))
            throw ConfigError("frf: covGML has inconsistent shape");
    }
    if (!cov_total.empty() && cov_total.size() != lines.size()) throw ConfigError("frf: covGML length mismatch");
    if (!cov_noise.empty() && cov_noise.size() != lines.size()) throw ConfigError("frf: covGn length mismatch");
}

FrfEstimate estimate_bla(const DataRecord& rec) {
    if (!rec.periodic()) throw ConfigError("estimate_bla: record is not periodic");
    if (rec.inputs() != 1) throw ConfigError("estimate_bla: only single-input records are supported");
    if (rec.realizations() < 2 || rec.periods() < 2)
        throw ConfigError("estimate_bla: need R >= 2 and P >= 2");
    if (rec.excited_lines().empty()) throw ConfigError("estimate_bla: record has no excited lines");

    const std::size_t R = rec.realizations(), P = rec.periods(), p = rec.outputs();
    const LineSet& candidates = rec.excited_lines();

    // G_rp(k) = Y_rp(k) / U_rp(k) per line, realization and period.
    std::vector<std::vector<std::vector<CVector>>> g(candidates.size(),
                                                     std::vector<std::vector<CVector>>(R));
    std::vector<bool> usable(candidates.size(), true);
    for (std::size_t r = 0; r < R; ++r) {
        for (std::size_t per = 0; per < P; ++per) {
            const auto U = block_spectra(rec.u(r, per), candidates);
            const auto Y = block_spectra(rec.y(r, per), candidates);
            const double floor = 1e-12 * input_rms(rec.u(r, per)) * static_cast<double>(rec.samples());
            for (std::size_t i = 0; i < candidates.size(); ++i) {
                const Complex u = U[i](0, 0);
                if (std::abs(u) < floor || !(std::abs(u) > 0.0)) {
                    usable[i] = false;
                    continue;
                }
                g[i][r].push_back(Y[i].col(0) / u);
            }
        }
    }

    FrfEstimate est;
    est.N = rec.samples();
    est.fs = rec.fs();
    est.outputs = p;
    est.inputs = 1;
    est.R = R;
    est.P = P;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (!usable[i]) {
            est.excluded_lines.push_back(candidates[i]);
            continue;
        }
        const auto d = static_cast<Eigen::Index>(p);
        struct PerRealization {
            CVector mean;
            CMatrix noise;
            std::vector<double> key;
        };
        std::vector<PerRealization> parts;
        for (std::size_t r = 0; r < R; ++r) {
            CVector mean = CVector::Zero(d);
            for (const auto& v : g[i][r]) mean += v;
            mean /= static_cast<double>(P);
            CMatrix noise = sample_covariance(g[i][r], mean);
            std::vector<double> key;
            for (const auto& c : mean) key.insert(key.end(), {c.real(), c.imag()});
            for (const auto& c : noise.reshaped()) key.insert(key.end(), {c.real(), c.imag()});
            parts.push_back({std::move(mean), std::move(noise), std::move(key)});
        }
        // Reduce in a canonical order so the estimate does not depend on how
        // the realizations are numbered.
        std::sort(parts.begin(), parts.end(), [](const auto& a, const auto& b) { return a.key < b.key; });
        std::vector<CVector> realization_means;
        CMatrix noise = CMatrix::Zero(d, d);
        for (auto& part : parts) {
            noise += part.noise;
            realization_means.push_back(std::move(part.mean));
        }
        CVector G = CVector::Zero(d);
        for (const auto& v : realization_means) G += v;
        G /= static_cast<double>(R);

        est.lines.push_back(candidates[i]);
        est.G.emplace_back(Eigen::Map<const CMatrix>(G.data(), d, 1));
        est.cov_noise.push_back(noise / static_cast<double>(R) / static_cast<double>(R * P));
        est.cov_total.push_back(sample_covariance(realization_means, G) / static_cast<double>(R));
    }
    if (est.lines.empty()) throw NumericalError("estimate_bla: every excited line has negligible input power");
    return est;
}

OutputNoiseCovariance output_noise_covariance(const DataRecord& rec) {
    if (rec.periods() < 2) throw ConfigError("output_noise_covariance: need P >= 2 (noise not identifiable)");
    const std::size_t R = rec.realizations(), P = rec.periods(), N = rec.samples();
    const auto p = static_cast<Eigen::Index>(rec.outputs());

    OutputNoiseCovariance out;
    out.N = N;
    for (int k = 0; k <= static_cast<int>(N / 2); ++k) out.lines.push_back(k);
    out.cov.assign(out.lines.size(), CMatrix::Zero(p, p));

    for (std::size_t r = 0; r < R; ++r) {
        std::vector<CMatrix> spectra;
        spectra.reserve(P);
        for (std::size_t per = 0; per < P; ++per) spectra.push_back(spectral::dft_columns(rec.y(r, per)));
        for (std::size_t i = 0; i < out.lines.size(); ++i) {
            const int k = out.lines[i];
            std::vector<CVector> samples;
            samples.reserve(P);
            CVector mean = CVector::Zero(p);
            for (const auto& Y : spectra) {
                samples.emplace_back(Y.row(k).transpose());
                mean += samples.back();
            }
            mean /= static_cast<double>(P);
            out.cov[i] += sample_covariance(samples, mean) / static_cast<double>(P);
        }
    }
    for (auto& c : out.cov) c /= static_cast<double>(R);
    return out;
}

std::string_view to_string(LineClass c) {
    switch (c) {
    case LineClass::ExcitedOdd: return "excited_odd";
    case LineClass::UnexcitedOdd: return "unexcited_odd";
    case LineClass::UnexcitedEven: return "unexcited_even";
    }
    return "unknown";
}

double DistortionSpectrum::mean_level(LineClass c) const {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (classes[i] != c) continue;
        sum += level[i];
        ++n;
    }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

std::size_t DistortionSpectrum::count(LineClass c) const {
    return static_cast<std::size_t>(std::count(classes.begin(), classes.end(), c));
}

DistortionSpectrum classify_distortions(const DataRecord& rec) {
    if (!rec.periodic()) throw ConfigError("classify_distortions: record is not periodic");
    if (!rec.grid || rec.grid->kind != GridKind::RandomOdd)
        throw ConfigError("classify_distortions: requires a random-odd multisine record");
    const LineSet& excited = rec.excited_lines();
    if (excited.empty()) throw ConfigError("classify_distortions: record has no excited lines");
    const std::set<int> excited_set(excited.begin(), excited.end());
    const int band = *std::max_element(excited.begin(), excited.end());

    DistortionSpectrum out;
    for (int k = 1; k <= band; ++k) {
        out.lines.push_back(k);
        if (excited_set.count(k) != 0) out.classes.push_back(LineClass::ExcitedOdd);
        else if (k % 2 == 1) out.classes.push_back(LineClass::UnexcitedOdd);
        else out.classes.push_back(LineClass::UnexcitedEven);
    }
    out.level.assign(out.lines.size(), 0.0);

    // Level: magnitude of the period-averaged output spectrum, averaged over realizations.
    const auto p = static_cast<Eigen::Index>(rec.outputs());
    for (std::size_t r = 0; r < rec.realizations(); ++r) {
        CMatrix mean = CMatrix::Zero(static_cast<Eigen::Index>(rec.samples()), p);
        for (std::size_t per = 0; per < rec.periods(); ++per) mean += spectral::dft_columns(rec.y(r, per));
        mean /= static_cast<double>(rec.periods());
        for (std::size_t i = 0; i < out.lines.size(); ++i) out.level[i] += mean.row(out.lines[i]).norm();
    }
    for (auto& l : out.level) l /= static_cast<double>(rec.realizations());
    return out;
}

} // namespace pnlss
