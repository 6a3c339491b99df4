#pragma once

#include <filesystem>
#include <string>
#include <vector>

// single-header nlohmann/json from vendor/
#include "json.hpp"

#include "qsi/fringe.hpp"
#include "qsi/interferometer.hpp"
#include "qsi/reconstruct.hpp"
#include "qsi/states.hpp"

namespace qsi::io {

using json = nlohmann::json;

/// 16-bit binary PGM (P5, maxval 65535), big-endian sample order.
/// Values are rounded and clamped to [0, 65535] on write.
void write_pgm(const std::filesystem::path& path, const Interferogram& image);
Interferogram read_pgm(const std::filesystem::path& path);  // throws FormatError

/// Plain CSV alternative: one row per slice.
void write_csv_image(const std::filesystem::path& path, const Interferogram& image);
Interferogram read_csv_image(const std::filesystem::path& path);

/// Dispatch on extension (.pgm / .csv).
Interferogram read_image(const std::filesystem::path& path);

json config_to_json(const InterferometerConfig& cfg);
InterferometerConfig config_from_json(const json& j);  // absent keys keep defaults
InterferometerConfig load_config(const std::filesystem::path& path);

json source_to_json(const SourceTag& tag);
SourceTag source_from_json(const json& j);

/// Image sidecar {"config": ..., "state": ..., "seed": n}.
void write_sidecar(const std::filesystem::path& path, const Interferogram& image);

json qubit_to_json(const QubitState& state);
QubitState qubit_from_json(const json& j);

json qudit_to_json(const QuditPureState& state);
QuditPureState qudit_from_json(const json& j);
QuditPureState load_qudit(const std::filesystem::path& path);

json density_to_json(const Eigen::MatrixXcd& rho);
Eigen::MatrixXcd density_from_json(const json& j);

json estimate_to_json(const FringeEstimate& est);
FringeEstimate estimate_from_json(const json& j);
FringeEstimate load_estimate(const std::filesystem::path& path);
void write_estimate(const std::filesystem::path& path, const FringeEstimate& est);

json reconstruction_to_json(const ReconstructionResult& res);

/// Per-slice fit table: one row per slice with the seven model parameters
/// plus the residual norm.
void write_slice_table(const std::filesystem::path& path, const std::vector<SliceFit>& fits);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& j);
json load_json(const std::filesystem::path& path);

}  // namespace qsi::io
