// SPDX-License-Identifier: Apache-2.0
#include "mimc/cost_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mimc {

void CostModel::validate() const {
    if (!(c1 > 0.0 && c2 > 0.0 && gamma > 0.0)) {
        throw std::invalid_argument("CostModel: constants must be positive");
    }
    if (s0_interior <= 0 || s0_exterior <= 0) {
        throw std::invalid_argument("CostModel: base KL term counts must be positive");
    }
    if (elements.empty() || elements.size() != nodes.size()) {
        throw std::invalid_argument("CostModel: element and node tables must be nonempty and equally long");
    }
    for (std::size_t i = 0; i < elements.size(); ++i) {
        if (!(elements[i] > 0.0 && nodes[i] > 0.0)) {
            throw std::invalid_argument("CostModel: mesh sizes must be positive");
        }
        if (i > 0 && (elements[i] <= elements[i - 1] || nodes[i] <= nodes[i - 1])) {
            throw std::invalid_argument("CostModel: mesh sizes must increase with level");
        }
    }
}

double work_model(const CostModel& cost, const MultiIndex& level) {
    if (level.dim() != 3) throw std::invalid_argument("work_model: expects a three-dimensional index");
    const auto mesh = static_cast<std::size_t>(level[0]);
    if (mesh >= cost.elements.size()) {
        throw std::out_of_range("work_model: no mesh sizes for level " + std::to_string(mesh));
    }
    const double terms = cost.s0_interior * std::exp2(level[1]) + cost.s0_exterior * std::exp2(level[2]);
    return cost.c1 * cost.elements[mesh] * terms + cost.c2 * std::pow(cost.nodes[mesh], cost.gamma);
}

}  // namespace mimc
