#pragma once

// Run configuration (JSON, versioned by `schema_version`).

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fracrte/carleman.hpp"
#include "fracrte/forward.hpp"
#include "fracrte/grid.hpp"
#include "fracrte/inverse.hpp"
#include "fracrte/rmatrix.hpp"

namespace fracrte {

inline constexpr int kSchemaVersion = 1;

/// sigma preset: constant {value}, linear {value, slope} (value + slope x / ell),
/// bump {value, amplitude, center, width} (value + amplitude exp(-((x-center)/width)^2)),
/// tabulated {file} (CSV x,v,value in grid order).
struct SigmaSpec {
    std::string preset = "constant";
    double value = 0.0;
    double slope = 0.0;
    double amplitude = 0.0;
    double center = 0.5;
    double width = 0.1;
    std::string file;

    static SigmaSpec linear(double value, double slope) {
        SigmaSpec s;
        s.preset = slope == 0.0 ? "constant" : "linear";
        s.value = value;
        s.slope = slope;
        return s;
    }
};

/// p preset: isotropic (1/|V|), linear_anisotropic {g} ((1 + g v v' / v1^2) / |V|),
/// zero, tabulated {file} (CSV x,v,v_prime,value).
struct PhaseSpec {
    std::string preset = "isotropic";
    double g = 0.0;
    std::string file;
};

/// Initial value: value * (1 + tilt * v / v1).
/// Inflow: from_initial (the initial value at the inflow end, times
/// 1 + oscillation * sin(frequency * t)), constant {value}, zero,
/// mittag_leffler {value, rate}: value * E_{1/2}(-rate sqrt(t)).
struct ExperimentSpec {
    double initial_value = 1.0;
    double initial_tilt = 0.0;
    std::string inflow = "from_initial";
    double inflow_value = 1.0;
    double oscillation = 0.0;
    double frequency = 0.0;
    double rate = 1.0;
};

/// r = amplitude * |sigma_ref|_inf * shape(x) * (1 +/- tilt v / v1), r_s with the
/// opposite tilt, with |sigma_ref|_inf the larger of |sigma_t|_inf and |sigma_s|_inf.
/// shape: sin2 = sin^2(pi x / (2 ell)), poly = 16 x^2 (ell-x)^2 / ell^4, linear = x / ell, zero.
struct PerturbationSpec {
    std::string shape = "poly";
    std::vector<double> amplitudes{0.05};
    double tilt = 0.1;
    /// "none", "sigma_t" or "sigma_s": force that component to zero.
    std::string pin = "none";
};

struct RunConfig {
    int schema_version = kSchemaVersion;
    std::string scenario = "default";
    GridSpec grid{1.0, 101, 1.0, 2.0, 8, 1.0, 500, VelocityQuadrature::GaussLegendre};
    SigmaSpec sigma_t = SigmaSpec::linear(1.0, 0.2);
    SigmaSpec sigma_s = SigmaSpec::linear(0.5, 0.0);
    PhaseSpec p;
    double bound_M = 5.0;
    SolverOptions solver;
    std::vector<ExperimentSpec> experiments;
    PerturbationSpec perturbation;

    std::vector<double> lambdas{1.0, 2.0};
    std::vector<double> s_values{10.0, 20.0, 40.0, 80.0};
    double t0 = 0.5;
    double delta = 0.25;
    DSpec d;
    std::string d_file;
    double eps_det = 1e-8;

    InverseMode mode = InverseMode::Full;
    MarchOptions march;
    bool remark_variant = false;

    /// parabolic, stationary or conjugation
    std::string carleman_estimate = "parabolic";
    CarlemanDomain carleman_domain = CarlemanDomain::QDelta;
    unsigned seed = 1;

    /// Extra (nx, nv, nt) levels for the reduce subcommand.
    std::vector<std::array<std::size_t, 3>> refinement;

    std::string field_format = "csv";
    std::string run_log = "run_log.csv";

    /// Directory relative file references are resolved against.
    std::filesystem::path base_dir;
};

/// Parses JSON text. Every problem found is appended to `diagnostics`;
/// the returned config holds defaults where values were unusable.
RunConfig parse_config(const std::string& text, std::vector<std::string>& diagnostics);

/// Reads and parses a file; an unreadable file is a single diagnostic.
RunConfig load_config(const std::filesystem::path& path, std::vector<std::string>& diagnostics);

/// Semantic checks. Returns every violated invariant (empty when valid).
std::vector<std::string> validate(const RunConfig& cfg, const std::string& subcommand = "");

}  // namespace fracrte
