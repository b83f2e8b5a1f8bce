// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "mimc/multi_index.hpp"

namespace mimc {

/// Work of one sample at l = (mesh, interior terms, exterior terms):
///   C1 * elements(l1) * (s0_int 2^l2 + s0_ext 2^l3) + C2 * nodes(l1)^gamma.
struct CostModel {
    double c1 = 1.596e-8;
    double c2 = 1.426e-6;
    double gamma = 1.664;
    int s0_interior = 4;
    int s0_exterior = 64;
    std::vector<double> elements;  ///< per mesh level
    std::vector<double> nodes;     ///< per mesh level

    /// Throws std::invalid_argument on nonpositive constants or tables that
    /// are empty, of unequal length, or not increasing.
    void validate() const;
};

/// Throws std::out_of_range when l1 is beyond the mesh tables and
/// std::invalid_argument when l is not three-dimensional.
double work_model(const CostModel& cost, const MultiIndex& level);

}  // namespace mimc
