#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "pmmf/certificate.hpp"
#include "pmmf/conditions.hpp"
#include "pmmf/model.hpp"

namespace pmmf {

/// Model files: {"kind": "finite_pmm" | "hmm" | "lmsm", ...}; see README for the fields.
ModelPtr model_from_json(const nlohmann::json& j);
ModelPtr load_model(const std::filesystem::path& path);
/// Inverse of model_from_json for the built-in emission laws (custom laws are rejected).
nlohmann::json model_to_json(const ModelKernel& model);

/// One observation per line; symbols as integers, points as a quoted comma-joined field.
/// A leading non-numeric line is taken as a header.
ObsSeq parse_observations(const std::string& text, const ObsSpace& space);
ObsSeq read_observations(const std::filesystem::path& path, const ObsSpace& space);
std::string format_observation(const ObsPoint& x);
std::string observations_csv(ObsView xs);
/// Columns t,x,y with t starting at 1.
std::string trajectory_csv(const Trajectory& traj);

nlohmann::json y_plus_to_json(const YPlusSet& y);
nlohmann::json certificate_to_json(const ForgettingCertificate& cert);
nlohmann::json failure_to_json(const BlockFailure& failure);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace pmmf
