#pragma once

#include "pnlss/signalgen.hpp"
#include "pnlss/types.hpp"

#include <optional>

namespace pnlss {

/// Multi-realization, multi-period input/output record.
///
/// Samples are stored as one N x m (input) and N x p (output) block per
/// (realization, period) pair. A non-periodic record always has exactly one
/// period.
class DataRecord {
public:
    DataRecord() = default;
    DataRecord(std::size_t realizations, std::size_t periods, std::size_t samples,
               std::size_t inputs, std::size_t outputs, double fs, bool periodic,
               LineSet excited_lines = {});

    std::size_t realizations() const { return R_; }
    std::size_t periods() const { return P_; }
    std::size_t samples() const { return N_; }
    std::size_t inputs() const { return m_; }
    std::size_t outputs() const { return p_; }
    double fs() const { return fs_; }
    bool periodic() const { return periodic_; }
    const LineSet& excited_lines() const { return excited_lines_; }

    /// Excitation grid the record was measured with, when known.
    std::optional<ExcitationGrid> grid;

    Matrix& u(std::size_t r, std::size_t period) { return u_[index(r, period)]; }
    const Matrix& u(std::size_t r, std::size_t period) const { return u_[index(r, period)]; }
    Matrix& y(std::size_t r, std::size_t period) { return y_[index(r, period)]; }
    const Matrix& y(std::size_t r, std::size_t period) const { return y_[index(r, period)]; }

    /// Throws ConfigError if any block has the wrong shape.
    void validate() const;

private:
    std::size_t index(std::size_t r, std::size_t period) const;

    std::size_t R_ = 0, P_ = 0, N_ = 0, m_ = 0, p_ = 0;
    double fs_ = 1.0;
    bool periodic_ = false;
    LineSet excited_lines_;
    std::vector<Matrix> u_, y_;
};

/// Concatenation of experiments with transient bookkeeping.
///
/// Each segment is laid out as [prepend samples | original samples]. The cost
/// mask excludes the prepended block and the first t2 original samples of
/// every segment.
struct ConcatenatedRecord {
    Matrix u; ///< T_total x m
    Matrix y; ///< T_total x p
    std::vector<std::size_t> segment_starts;
    std::vector<std::size_t> segment_lengths; ///< original length, excluding prepend
    std::size_t prepend = 0;                  ///< T1 sample count per segment
    std::size_t t2 = 0;
    double fs = 1.0;
    bool periodic = false;

    std::size_t total_samples() const { return static_cast<std::size_t>(u.rows()); }
    std::size_t segment_count() const { return segment_starts.size(); }
    /// T1 index vector: positions where prepended samples were introduced.
    const std::vector<std::size_t>& t1_indices() const { return segment_starts; }
    /// First sample of the original data of segment s.
    std::size_t original_start(std::size_t s) const { return segment_starts[s] + prepend; }

    std::vector<bool> cost_mask() const;
    std::size_t masked_count() const;

    void validate() const;
};

/// Sample-wise mean over periods [discard_first, P).
DataRecord average_periods(const DataRecord& rec, std::size_t discard_first = 0);

/// Concatenate every realization of every record (each must have P = 1).
ConcatenatedRecord concatenate(const std::vector<DataRecord>& records, std::size_t prepend,
                               std::size_t t2);

/// Wrap a single non-periodic time series as a concatenated record.
ConcatenatedRecord single_segment(const Matrix& u, const Matrix& y, double fs, std::size_t t2);

/// Per-output rms(y_true - y_model) / rms(y_true) over the selected samples.
Vector relative_rms_error(const Eigen::Ref<const Matrix>& y_true,
                          const Eigen::Ref<const Matrix>& y_model, const std::vector<bool>& mask);

/// Root of the mean of squared per-channel errors.
double pooled(const Vector& per_channel);

} // namespace pnlss
