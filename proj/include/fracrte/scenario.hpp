#pragma once

// Turns a RunConfig into grids, coefficients, experiment data and weights.

#include <filesystem>
#include <vector>

#include "fracrte/carleman.hpp"
#include "fracrte/coefficients.hpp"
#include "fracrte/config.hpp"
#include "fracrte/forward.hpp"
#include "fracrte/grid.hpp"
#include "fracrte/inverse.hpp"
#include "fracrte/rmatrix.hpp"

namespace fracrte {

PhaseSpaceGrid make_grid(const GridSpec& spec);

/// sigma_t, sigma_s, p from their presets. Throws PreconditionError when a
/// coefficient is negative or exceeds bound_M.
CoefficientSet make_reference(const PhaseSpaceGrid& g, const RunConfig& cfg);

ProblemData make_experiment(const PhaseSpaceGrid& g, const ExperimentSpec& e);
std::vector<ProblemData> make_experiments(const PhaseSpaceGrid& g, const RunConfig& cfg);

/// Planted perturbation at one amplitude (see PerturbationSpec).
CoefficientPerturbation make_perturbation(const PhaseSpaceGrid& g, const PerturbationSpec& spec,
                                          const CoefficientSet& reference, double amplitude);

WeightParams make_weight_params(const PhaseSpaceGrid& g, const RunConfig& cfg, double lambda,
                                double s);

StabilityOptions make_stability_options(const RunConfig& cfg, int threads);

/// Values of the last column of a headed CSV file, checked against the
/// expected row count.
std::vector<double> read_table_column(const std::filesystem::path& path, std::size_t expected_rows);

}  // namespace fracrte
