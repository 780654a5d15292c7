#pragma once

#include "pnlss/duffing.hpp"
#include "pnlss/io.hpp"
#include "pnlss/subspace.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace pnlss {

/// Settings of the end-to-end Duffing case study.
struct CaseStudyConfig {
    BenchmarkConfig benchmark = default_benchmark();
    std::vector<std::size_t> orders{2};
    std::size_t model_order = 2; ///< order carried forward into the nonlinear model
    std::size_t subspace_iterations = 100;
    FrfWeighting frf_weighting = FrfWeighting::TotalDistortion;
    std::vector<int> nx{2, 3};
    std::vector<int> ny{2, 3};
    std::size_t lm_iterations = 100;
    double lambda0 = 1.0;

    void validate() const;
};

io::Json to_json(const CaseStudyConfig& config);
CaseStudyConfig case_study_config_from_json(const io::Json& j);

struct CaseStudyReport {
    std::size_t model_order = 0;
    double linear_train_rrmse = 0.0;
    double linear_val_rrmse = 0.0;
    double pnlss_train_rrmse = 0.0;
    double pnlss_val_rrmse = 0.0;
    std::size_t selected_index = 0; ///< trace entry picked on validation
    std::size_t trace_length = 0;
    std::string stop_reason;
};

io::Json to_json(const CaseStudyReport& report);
CaseStudyReport case_study_report_from_json(const io::Json& j);

/// One executed stage: command name, files read and written (relative to the
/// work directory) and the hash of the stage configuration.
struct ManifestStep {
    std::string command;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::string config_hash;
};

struct PipelineManifest {
    std::vector<ManifestStep> steps;
    std::string tool_version;
    io::Json config;
    std::string report_hash; ///< FNV-1a of the report.json bytes
};

io::Json to_json(const PipelineManifest& manifest);
PipelineManifest manifest_from_json(const io::Json& j);

/// Runs benchmark generation, BLA, subspace, initialization, optimization and
/// validation, writing every artifact plus report.json and manifest.json into
/// `workdir`. Failures are rethrown with the stage name prepended.
CaseStudyReport run_case_study(const std::filesystem::path& workdir, const CaseStudyConfig& config,
                               std::size_t threads = 1);

struct ReplayResult {
    bool inputs_present = true;
    std::vector<std::string> missing;
    bool report_identical = false;
    CaseStudyReport report;
};

/// Checks the files named by `manifest_path`, reruns the recorded config into
/// `workdir` and compares the new report.json with the recorded hash.
ReplayResult replay_manifest(const std::filesystem::path& manifest_path, const std::filesystem::path& workdir,
                             std::size_t threads = 1);

enum class PlotArtifact { Frf, Distortion, ValidationErrors };

PlotArtifact parse_plot_artifact(std::string_view name);

/// Columns line, freq_hz, mag_db_G, mag_db_covGML_diag, mag_db_covGn_diag
/// (suffixed _i_j per channel pair when the system is not SISO).
void write_frf_plot(const std::filesystem::path& csv, const FrfEstimate& frf);

/// Columns line, freq_hz, class, level.
void write_distortion_csv(const std::filesystem::path& csv, const DistortionSpectrum& spectrum, std::size_t N,
                          double fs);

/// One row per unmasked sample and output: sample, time_s, output, y_true,
/// err_linear, err_pnlss.
void write_validation_errors(const std::filesystem::path& csv, const ConcatenatedRecord& data,
                             const LinearStateSpace& linear, const PnlssModel& model);

/// `input` is frf.json, a record (file or directory) or a case-study work
/// directory, depending on the artifact.
void emit_plot_data(PlotArtifact artifact, const std::filesystem::path& input, const std::filesystem::path& out);

} // namespace pnlss
