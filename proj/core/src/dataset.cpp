#include "pnlss/dataset.hpp"

#include "pnlss/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pnlss {

DataRecord::DataRecord(std::size_t realizations, std::size_t periods, std::size_t samples,
                       std::size_t inputs, std::size_t outputs, double fs, bool periodic,
                       LineSet excited_lines)
    : R_(realizations), P_(periods), N_(samples), m_(inputs), p_(outputs), fs_(fs),
      periodic_(periodic), excited_lines_(std::move(excited_lines)) {
    if (R_ == 0 || P_ == 0 || N_ == 0) throw ConfigError("record: R, P and N must be positive");
    if (m_ == 0 || p_ == 0) throw ConfigError("record: need at least one input and one output");
    if (!(fs_ > 0.0)) throw ConfigError("record: fs must be positive");
    if (!periodic_ && P_ != 1) throw ConfigError("record: non-periodic records have exactly one period");
    const auto n = static_cast<Eigen::Index>(N_);
    u_.assign(R_ * P_, Matrix::Zero(n, static_cast<Eigen::Index>(m_)));
    y_.assign(R_ * P_, Matrix::Zero(n, static_cast<Eigen::Index>(p_)));
}

std::size_t DataRecord::index(std::size_t r, std::size_t period) const {
    if (r >= R_ || period >= P_) throw ConfigError("record: block index out of range");
    return r * P_ + period;
}

void DataRecord::validate() const {
    for (std::size_t i = 0; i < u_.size(); ++i) {
        if (static_cast<std::size_t>(u_[i].rows()) != N_ || static_cast<std::size_t>(u_[i].cols()) != m_ ||
            static_cast<std::size_t>(y_[i].rows()) != N_ || static_cast<std::size_t>(y_[i].cols()) != p_)
            throw ConfigError("record: block " + std::to_string(i) + " has inconsistent shape");
    }
}

DataRecord average_periods(const DataRecord& rec, std::size_t discard_first) {
    if (!rec.periodic()) throw ConfigError("average_periods: record is not periodic");
    if (discard_first >= rec.periods()) throw ConfigError("average_periods: discard_first >= P");
    DataRecord out(rec.realizations(), 1, rec.samples(), rec.inputs(), rec.outputs(), rec.fs(), true,
                   rec.excited_lines());
    out.grid = rec.grid;
    const double kept = static_cast<double>(rec.periods() - discard_first);
    for (std::size_t r = 0; r < rec.realizations(); ++r) {
        Matrix su = Matrix::Zero(rec.u(r, 0).rows(), rec.u(r, 0).cols());
        Matrix sy = Matrix::Zero(rec.y(r, 0).rows(), rec.y(r, 0).cols());
        for (std::size_t p = discard_first; p < rec.periods(); ++p) {
            su += rec.u(r, p);
            sy += rec.y(r, p);
        }
        out.u(r, 0) = su / kept;
        out.y(r, 0) = sy / kept;
    }
    return out;
}

ConcatenatedRecord concatenate(const std::vector<DataRecord>& records, std::size_t prepend,
                               std::size_t t2) {
    if (records.empty()) throw ConfigError("concatenate: no records");
    const auto& first = records.front();
    std::size_t total = 0;
    bool all_periodic = true;
    for (const auto& rec : records) {
        if (rec.periods() != 1) throw ConfigError("concatenate: records must hold a single period (average first)");
        if (rec.inputs() != first.inputs() || rec.outputs() != first.outputs() || rec.fs() != first.fs())
            throw ConfigError("concatenate: records disagree on m, p or fs");
        if (prepend > 0 && !rec.periodic())
            throw ConfigError("concatenate: periodic prepend (T1) requires periodic data; use t2");
        if (prepend > rec.samples()) throw ConfigError("concatenate: prepend exceeds segment length");
        if (t2 >= rec.samples()) throw ConfigError("concatenate: t2 discards the whole segment");
        all_periodic = all_periodic && rec.periodic();
        total += rec.realizations() * (prepend + rec.samples());
    }

    ConcatenatedRecord out;
    out.u.resize(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(first.inputs()));
    out.y.resize(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(first.outputs()));
    out.prepend = prepend;
    out.t2 = t2;
    out.fs = first.fs();
    out.periodic = all_periodic;

    Eigen::Index pos = 0;
    const auto pre = static_cast<Eigen::Index>(prepend);
    for (const auto& rec : records) {
        const auto n = static_cast<Eigen::Index>(rec.samples());
        for (std::size_t r = 0; r < rec.realizations(); ++r) {
            out.segment_starts.push_back(static_cast<std::size_t>(pos));
            out.segment_lengths.push_back(rec.samples());
            if (pre > 0) {
                out.u.middleRows(pos, pre) = rec.u(r, 0).bottomRows(pre);
                out.y.middleRows(pos, pre) = rec.y(r, 0).bottomRows(pre);
            }
            out.u.middleRows(pos + pre, n) = rec.u(r, 0);
            out.y.middleRows(pos + pre, n) = rec.y(r, 0);
            pos += pre + n;
        }
    }
    return out;
}

ConcatenatedRecord single_segment(const Matrix& u, const Matrix& y, double fs, std::size_t t2) {
    if (u.rows() != y.rows()) throw ConfigError("single_segment: u and y lengths differ");
    DataRecord rec(1, 1, static_cast<std::size_t>(u.rows()), static_cast<std::size_t>(u.cols()),
                   static_cast<std::size_t>(y.cols()), fs, false);
    rec.u(0, 0) = u;
    rec.y(0, 0) = y;
    return concatenate({rec}, 0, t2);
}

std::vector<bool> ConcatenatedRecord::cost_mask() const {
    std::vector<bool> mask(total_samples(), false);
    for (std::size_t s = 0; s < segment_count(); ++s) {
        const std::size_t begin = original_start(s) + t2;
        const std::size_t end = original_start(s) + segment_lengths[s];
        for (std::size_t t = begin; t < end; ++t) mask[t] = true;
    }
    return mask;
}

std::size_t ConcatenatedRecord::masked_count() const {
    std::size_t count = 0;
    for (std::size_t s = 0; s < segment_count(); ++s) count += segment_lengths[s] - t2;
    return count;
}

void ConcatenatedRecord::validate() const {
    if (u.rows() != y.rows()) throw ConfigError("concatenated record: u and y lengths differ");
    if (segment_starts.empty() || segment_starts.front() != 0)
        throw ConfigError("concatenated record: first segment must start at 0");
    if (segment_starts.size() != segment_lengths.size())
        throw ConfigError("concatenated record: segment bookkeeping mismatch");
    std::size_t expected = 0;
    for (std::size_t s = 0; s < segment_count(); ++s) {
        if (segment_starts[s] != expected) throw ConfigError("concatenated record: segments not contiguous");
        if (t2 >= segment_lengths[s]) throw ConfigError("concatenated record: t2 exceeds a segment");
        expected += prepend + segment_lengths[s];
    }
    if (expected != total_samples()) throw ConfigError("concatenated record: length mismatch");
}

Vector relative_rms_error(const Eigen::Ref<const Matrix>& y_true, const Eigen::Ref<const Matrix>& y_model,
                          const std::vector<bool>& mask) {
    if (y_true.rows() != y_model.rows() || y_true.cols() != y_model.cols())
        throw ConfigError("relative_rms_error: shape mismatch");
    if (mask.size() != static_cast<std::size_t>(y_true.rows()))
        throw ConfigError("relative_rms_error: mask length mismatch");
    Vector err = Vector::Zero(y_true.cols());
    Vector ref = Vector::Zero(y_true.cols());
    std::size_t count = 0;
    for (Eigen::Index t = 0; t < y_true.rows(); ++t) {
        if (!mask[static_cast<std::size_t>(t)]) continue;
        ++count;
        err += (y_true.row(t) - y_model.row(t)).cwiseAbs2().transpose();
        ref += y_true.row(t).cwiseAbs2().transpose();
    }
    if (count == 0) throw ConfigError("relative_rms_error: mask selects no samples");
    for (Eigen::Index i = 0; i < ref.size(); ++i) {
        if (ref(i) == 0.0) throw NumericalError("relative_rms_error: reference output is identically zero");
    }
    return (err.array() / ref.array()).sqrt().matrix();
}

double pooled(const Vector& per_channel) {
    if (per_channel.size() == 0) throw ConfigError("pooled: empty error vector");
    return std::sqrt(per_channel.squaredNorm() / static_cast<double>(per_channel.size()));
}

} // namespace pnlss
