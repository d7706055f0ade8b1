#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "vinestep/diffvine.hpp"
#include "vinestep/estimate.hpp"
#include "vinestep/simstudy.hpp"
#include "vinestep/vinemodel.hpp"

namespace vinestep::io {

/// 17 significant digits: lossless for doubles.
std::string format_double(double x);

void write_matrix_csv(const std::string& path, const SampleMatrix& m);
SampleMatrix read_matrix_csv(const std::string& path);

/// {d, trunc, trees: [[{a, b, D}]]} with 1-based node ids.
nlohmann::json structure_to_json(const RVineStructure& s);
RVineStructure structure_from_json(const nlohmann::json& j);

/// {structure, families, theta}.
nlohmann::json model_to_json(const VineModel& m);
VineModel model_from_json(const nlohmann::json& j);

/// Model plus per-edge diagnostics and the margins mode.
nlohmann::json fit_to_json(const FitResult& fit);
/// Flat CSV: edge, family, params (';'-separated), converged.
void write_fit_csv(const std::string& path, const FitResult& fit);

/// <prefix>_I.csv, <prefix>_J.csv and <prefix>.json (N, seed, theta).
void write_empirical_ij(const std::string& prefix, const EmpiricalIJ& ij);

extern const char* const kStudyHeader;
std::string study_row_csv(const StudyRow& r);
void write_study_csv(std::ostream& os, const std::vector<StudyRow>& rows);
std::vector<StudyRow> read_study_csv(const std::string& path);

extern const char* const kValidateHeader;
extern const char* const kRegimeHeader;

void write_json(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json(const std::string& path);

}  // namespace vinestep::io
