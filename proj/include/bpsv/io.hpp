#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "bpsv/grid.hpp"
#include "bpsv/planar_solver.hpp"
#include "bpsv/solve_result.hpp"

namespace bpsv {

/**
 * Field dump: <stem>.bin holds little-endian f64 samples, row-major (x fastest),
 * <stem>.json the sidecar {"nx","ny","Lx","Ly","name","component"}.
 *
 * Periodic fields are written as stored (spacing Lx/nx). Dirichlet fields are
 * padded with `edge_value` to include the boundary nodes, so the sidecar nx is
 * the sample count and the spacing is Lx/(nx-1).
 */
void write_field(const std::filesystem::path& stem, const ScalarField2D& field, const std::string& name,
                 int component, double edge_value = 0.0);

struct FieldDump {
    nlohmann::json meta;
    std::vector<double> values;
};
FieldDump read_field(const std::filesystem::path& stem);

/// "iter,energy,grad_norm,step"
void write_history_csv(const std::filesystem::path& path, const std::vector<IterationRecord>& history);

/// "r,log_usq,log_gradsq"
void write_decay_csv(const std::filesystem::path& path, const DecayFit& fit);

void write_json(const std::filesystem::path& path, const nlohmann::json& value);
nlohmann::json read_json(const std::filesystem::path& path);

/// Shortest round-trip decimal form of x.
std::string format_double(double x);

}  // namespace bpsv
