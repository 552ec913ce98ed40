#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fracrte/field.hpp"

namespace fracrte {

/// Which coefficients are unknown. `Full` is the 2x2 simultaneous problem;
/// the scalar modes recover one coefficient from a single experiment.
enum class InverseMode { Full, SigmaTOnly, SigmaSOnly };

std::string to_string(InverseMode m);
InverseMode parse_inverse_mode(const std::string& name);

/// Unknown perturbation r = (r_t, r_s) = sigma^(1) - sigma^(2).
struct CoefficientPerturbation {
    Slice r_t;
    Slice r_s;

    /// Components in the order the mode's R matrix expects.
    std::vector<Slice> components(InverseMode mode) const;
    static CoefficientPerturbation from_components(InverseMode mode,
                                                   const std::vector<Slice>& comps);
};

/// R(x,v,t): m x m matrix field with m = 2 in Full mode and m = 1 otherwise.
/// Row j belongs to experiment j; column c multiplies component c of r.
struct RMatrixField {
    InverseMode mode = InverseMode::Full;
    std::size_t dim = 2;
    std::vector<Field> entries;

    Field& at(std::size_t j, std::size_t c) { return entries[j * dim + c]; }
    const Field& at(std::size_t j, std::size_t c) const { return entries[j * dim + c]; }

    std::size_t nx() const { return entries.front().nx(); }
    std::size_t nv() const { return entries.front().nv(); }
    std::size_t nt_nodes() const { return entries.front().nt_nodes(); }

    /// Determinant (or the scalar itself) at one node.
    double det(std::size_t ix, std::size_t iv, std::size_t it) const;
};

}  // namespace fracrte
