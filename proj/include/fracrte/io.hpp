#pragma once

// CSV and binary artifacts.
//
// CSV: comma separated, '.' decimal, one header row, LF endings.
// Binary snapshot: "FRTE1", u64 nx, u64 nv, u64 nt (array extents: x nodes,
// velocity nodes over both branches, time nodes), then nx*nv*nt doubles in
// (ix, iv, it) row-major order. Little-endian throughout.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fracrte/carleman.hpp"
#include "fracrte/field.hpp"
#include "fracrte/grid.hpp"
#include "fracrte/rmatrix.hpp"

namespace fracrte::io {

/// Shortest round-trip text for a double ("%.17g" with trailing cleanup).
std::string format_double(double x);

/// Decimal text of exp(log_value) without under/overflow: mantissa with
/// 10 significant digits and a free exponent. "0" for log_value = -inf.
std::string format_from_log(double log_value);

/// Long format x,v,t,value.
void write_field_csv(const std::filesystem::path& path, const PhaseSpaceGrid& g, const Field& u);

void write_field_binary(const std::filesystem::path& path, const Field& u);
Field read_field_binary(const std::filesystem::path& path);

/// x,v,r_t,r_s,r_t_true,r_s_true
void write_reconstruction_csv(const std::filesystem::path& path, const PhaseSpaceGrid& g,
                              const CoefficientPerturbation& recovered,
                              const CoefficientPerturbation& truth);

/// lambda,s,lhs,rhs_interior,rhs_boundary,rhs_trace0,c_emp
void write_sweep_csv(const std::filesystem::path& path, const std::vector<CarlemanReport>& rows);

/// Generic table writer: header plus rows of preformatted cells.
void write_table_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<std::string>>& rows);

/// Appends one record, writing the header first when the file is new.
void append_run_log(const std::filesystem::path& path, const std::vector<std::string>& header,
                    const std::vector<std::string>& row);

std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t v);

std::string read_text(const std::filesystem::path& path);

}  // namespace fracrte::io
