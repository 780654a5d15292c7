#pragma once

#include "pnlss/dataset.hpp"
#include "pnlss/frf.hpp"
#include "pnlss/model.hpp"
#include "pnlss/optimizer.hpp"
#include "pnlss/signalgen.hpp"
#include "pnlss/state_space.hpp"
#include "pnlss/subspace.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>

// File formats. Matrices are stored as arrays of rows (row-major); complex
// matrices as {"re": rows, "im": rows}. CSV numbers use 17 significant digits.
namespace pnlss::io {

using Json = nlohmann::json;
namespace fs = std::filesystem;

Json read_json(const fs::path& path);
void write_json(const fs::path& path, const Json& doc);
void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

/// "%.17g" formatting.
std::string format_double(double v);

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j, Eigen::Index rows = -1, Eigen::Index cols = -1);
Json cmatrix_to_json(const CMatrix& m);
CMatrix cmatrix_from_json(const Json& j);

Json to_json(const LinearStateSpace& model);
LinearStateSpace linear_from_json(const Json& j);

Json to_json(const PnlssModel& model);
PnlssModel pnlss_from_json(const Json& j);

Json to_json(const FrfEstimate& frf);
FrfEstimate frf_from_json(const Json& j);

Json to_json(const OutputNoiseCovariance& cov);
OutputNoiseCovariance noise_covariance_from_json(const Json& j);

Json to_json(const MultisineConfig& config);
MultisineConfig multisine_config_from_json(const Json& j);

/// {"models": [model JSON + fit_cost + singular_values], "errors": {order: message}}
Json linmodels_to_json(const std::map<std::size_t, OrderResult>& results);
std::map<std::size_t, OrderResult> linmodels_from_json(const Json& j);

/// Multisine realizations: CSV (realization, sample_index, u) plus a JSON sidecar.
void write_signals(const fs::path& csv, const MultisineConfig& config, const std::vector<ExcitationSignal>& signals);

/// Sidecar path for a CSV file (same stem, .json extension).
fs::path sidecar_path(const fs::path& csv);
/// Resolves a directory argument to its record.csv.
fs::path resolve_record_path(const fs::path& path);

/// CSV columns realization, period, sample, u_1..u_m, y_1..y_p; sidecar
/// {kind: "record", fs, N, R, P, m, p, periodic, excited_lines, grid}.
void write_record(const fs::path& csv, const DataRecord& rec);
DataRecord read_record(const fs::path& csv);

/// CSV columns sample, u_1..u_m, y_1..y_p; sidecar {kind: "concatenated", ...}.
void write_concatenated(const fs::path& csv, const ConcatenatedRecord& rec);
ConcatenatedRecord read_concatenated(const fs::path& csv);

/// True when the sidecar of `csv` describes a concatenated record.
bool is_concatenated(const fs::path& csv);

/// Numeric CSV with a header row.
struct Table {
    std::vector<std::string> header;
    Matrix values;
};
Table read_table(const fs::path& csv);
void write_table(const fs::path& csv, const std::vector<std::string>& header, const Matrix& values);

/// Trace directory: model_0001.json ... (entry 0 is the starting model) and trace.json.
void write_trace(const fs::path& dir, const OptimizationTrace& trace);
OptimizationTrace read_trace(const fs::path& dir);

/// Deterministic 64-bit FNV-1a hash of a JSON document's canonical dump.
std::string config_hash(const Json& doc);

} // namespace pnlss::io
