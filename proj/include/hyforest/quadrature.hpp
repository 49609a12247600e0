#pragma once

#include <vector>

namespace hyforest {

/// Gauss–Legendre rule mapped to the unit interval [0, 1]; weights sum to 1.
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    int size() const noexcept { return static_cast<int>(nodes.size()); }
};

/// Builds an M-point rule by Newton iteration on P_M.
QuadratureRule make_gauss_legendre_unit(int num_nodes);

/// Process-wide cached rule; the returned reference stays valid for the program lifetime.
const QuadratureRule& gauss_legendre_unit(int num_nodes);

}  // namespace hyforest
