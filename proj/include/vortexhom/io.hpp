#pragma once

#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "vortexhom/critical.hpp"
#include "vortexhom/dual.hpp"
#include "vortexhom/grid.hpp"
#include "vortexhom/micro.hpp"

namespace vortexhom::io {

using nlohmann::json;

/// Writes via a temporary file and rename, so readers never see partial output.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

/// Row-major CSV, one grid row per line; exterior nodes as "nan".
std::string field_csv(const ScalarField& field);
void write_field_csv(const std::filesystem::path& path, const ScalarField& field);
ScalarField read_field_csv(const std::filesystem::path& path, const DomainPtr& domain);

/// Header "j,ix,iy,d".
std::string degrees_csv(const MicroProblem& problem, const DegreeAssignment& degrees);

/// Plain PPM (P3) with a fixed 256-entry blue-white-red ramp over [lo, hi];
/// exterior nodes are black. Row 0 of the grid is the bottom image row.
std::string heatmap_ppm(const ScalarField& field, double lo, double hi);
void write_heatmap(const std::filesystem::path& path, const ScalarField& field);

/// Header "lambda,J,scenario,area_omega_1..K,area_band_1..K,max_abs_f".
std::string phase_csv(const std::vector<PhaseRow>& rows);

json solution_json(const DualSolution& sol);
json regions_json(const RegimeReport& rep, const DualSolution& sol);
json duality_json(const DualityReport& rep);
json ladder_json(const CriticalLadder& ladder);
json gamma_json(const GammaReport& rep);
std::string gamma_csv(const GammaReport& rep);

/// Region code per node for heatmaps: k on Omega_k outside Omega_{k+1}, k - 0.5 on band k.
ScalarField region_field(const RegimeReport& rep, const DomainPtr& domain);

}  // namespace vortexhom::io
