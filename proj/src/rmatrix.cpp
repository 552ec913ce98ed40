#include "fracrte/rmatrix.hpp"

#include "fracrte/error.hpp"

namespace fracrte {

std::string to_string(InverseMode m) {
    switch (m) {
        case InverseMode::Full: return "full2x2";
        case InverseMode::SigmaTOnly: return "sigma_t_only";
        case InverseMode::SigmaSOnly: return "sigma_s_only";
    }
    return "unknown";
}

InverseMode parse_inverse_mode(const std::string& name) {
    if (name == "full2x2" || name == "full") return InverseMode::Full;
    if (name == "sigma_t_only") return InverseMode::SigmaTOnly;
    if (name == "sigma_s_only") return InverseMode::SigmaSOnly;
    throw PreconditionError("unknown inverse mode '" + name + "'");
}

std::vector<Slice> CoefficientPerturbation::components(InverseMode mode) const {
    switch (mode) {
        case InverseMode::Full: return {r_t, r_s};
        case InverseMode::SigmaTOnly: return {r_t};
        case InverseMode::SigmaSOnly: return {r_s};
    }
    return {};
}

CoefficientPerturbation CoefficientPerturbation::from_components(InverseMode mode,
                                                                 const std::vector<Slice>& c) {
    require(!c.empty(), "no perturbation components");
    CoefficientPerturbation r;
    const Slice zero(c.front().nx(), c.front().nv());
    switch (mode) {
        case InverseMode::Full:
            require(c.size() == 2, "full mode needs two components");
            r.r_t = c[0];
            r.r_s = c[1];
            break;
        case InverseMode::SigmaTOnly:
            r.r_t = c[0];
            r.r_s = zero;
            break;
        case InverseMode::SigmaSOnly:
            r.r_t = zero;
            r.r_s = c[0];
            break;
    }
    return r;
}

double RMatrixField::det(std::size_t ix, std::size_t iv, std::size_t it) const {
    if (dim == 1) return at(0, 0)(ix, iv, it);
    return at(0, 0)(ix, iv, it) * at(1, 1)(ix, iv, it) -
           at(0, 1)(ix, iv, it) * at(1, 0)(ix, iv, it);
}

}  // namespace fracrte
