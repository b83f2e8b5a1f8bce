// SPDX-License-Identifier: Apache-2.0
#include "mimc/multi_index.hpp"

#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace mimc {

MultiIndex::MultiIndex(std::vector<int> levels) : levels_(std::move(levels)) {
    if (levels_.empty()) {
        throw std::invalid_argument("MultiIndex: dimension must be at least 1");
    }
    for (int l : levels_) {
        if (l < 0) {
            throw std::invalid_argument("MultiIndex: levels must be nonnegative");
        }
    }
}

MultiIndex::MultiIndex(std::initializer_list<int> levels)
    : MultiIndex(std::vector<int>(levels)) {}

MultiIndex MultiIndex::zero(std::size_t d) {
    return MultiIndex(std::vector<int>(d, 0));
}

MultiIndex MultiIndex::unit(std::size_t d, std::size_t i) {
    std::vector<int> v(d, 0);
    v.at(i) = 1;
    return MultiIndex(std::move(v));
}

int MultiIndex::l1() const noexcept {
    return std::accumulate(levels_.begin(), levels_.end(), 0);
}

bool MultiIndex::is_zero() const noexcept {
    for (int l : levels_) {
        if (l != 0) return false;
    }
    return true;
}

MultiIndex MultiIndex::incremented(std::size_t i) const {
    MultiIndex out = *this;
    ++out.levels_.at(i);
    return out;
}

MultiIndex MultiIndex::decremented(std::size_t i) const {
    if (levels_.at(i) == 0) {
        throw std::invalid_argument("MultiIndex: cannot decrement a zero level");
    }
    MultiIndex out = *this;
    --out.levels_[i];
    return out;
}

bool MultiIndex::dominated_by(const MultiIndex& other) const {
    if (other.dim() != dim()) {
        throw std::invalid_argument("MultiIndex: dimension mismatch");
    }
    for (std::size_t i = 0; i < dim(); ++i) {
        if (levels_[i] > other.levels_[i]) return false;
    }
    return true;
}

std::string MultiIndex::to_string() const {
    std::ostringstream os;
    os << *this;
    return os.str();
}

std::ostream& operator<<(std::ostream& os, const MultiIndex& index) {
    os << '(';
    for (std::size_t i = 0; i < index.dim(); ++i) {
        if (i) os << ',';
        os << index[i];
    }
    return os << ')';
}

std::vector<MultiIndex> backward_neighbors(const MultiIndex& index) {
    std::vector<MultiIndex> out;
    for (std::size_t i = 0; i < index.dim(); ++i) {
        if (index[i] > 0) out.push_back(index.decremented(i));
    }
    return out;
}

std::vector<MultiIndex> forward_neighbors(const MultiIndex& index) {
    std::vector<MultiIndex> out;
    out.reserve(index.dim());
    for (std::size_t i = 0; i < index.dim(); ++i) {
        out.push_back(index.incremented(i));
    }
    return out;
}

bool is_admissible(const IndexSet& set) {
    if (set.empty()) {
        throw std::invalid_argument("is_admissible: monotone sets are nonempty");
    }
    const std::size_t d = set.begin()->dim();
    for (const auto& index : set) {
        if (index.dim() != d) {
            throw std::invalid_argument("is_admissible: mixed dimensions");
        }
        for (const auto& b : backward_neighbors(index)) {
            if (!set.contains(b)) return false;
        }
    }
    return true;
}

IndexSet simplex(std::span<const double> rho, double L) {
    if (rho.empty()) {
        throw std::invalid_argument("simplex: rho must be nonempty");
    }
    for (double r : rho) {
        if (!(r > 0.0)) throw std::invalid_argument("simplex: rho must be positive");
    }
    IndexSet out;
    if (L < 0.0) return out;
    const std::size_t d = rho.size();
    // Depth-first enumeration; the tolerance absorbs rounding in rho . tau.
    const double slack = 1e-12 * std::max(1.0, L);
    std::vector<int> current(d, 0);
    auto recurse = [&](auto&& self, std::size_t dim, double used) -> void {
        if (dim == d) {
            out.insert(MultiIndex(current));
            return;
        }
        for (int l = 0;; ++l) {
            const double cost = used + rho[dim] * l;
            if (cost > L + slack) break;
            current[dim] = l;
            self(self, dim + 1, cost);
        }
        current[dim] = 0;
    };
    recurse(recurse, 0, 0.0);
    return out;
}

IndexSet rectangle(const MultiIndex& corner) {
    IndexSet out;
    const std::size_t d = corner.dim();
    std::vector<int> current(d, 0);
    while (true) {
        out.insert(MultiIndex(current));
        std::size_t i = 0;
        while (i < d && current[i] == corner[i]) {
            current[i] = 0;
            ++i;
        }
        if (i == d) break;
        ++current[i];
    }
    return out;
}

IndexSet maximal_elements(const IndexSet& set) {
    IndexSet out;
    for (const auto& index : set) {
        bool maximal = true;
        for (const auto& f : forward_neighbors(index)) {
            if (set.contains(f)) {
                maximal = false;
                break;
            }
        }
        if (maximal) out.insert(index);
    }
    return out;
}

AdaptiveIndexSet::AdaptiveIndexSet(std::size_t d) : dim_(d) {
    if (d == 0) throw std::invalid_argument("AdaptiveIndexSet: d must be at least 1");
    active_.insert(MultiIndex::zero(d));
}

AdaptiveIndexSet AdaptiveIndexSet::from_admissible(const IndexSet& set) {
    if (!is_admissible(set)) {
        throw std::invalid_argument("AdaptiveIndexSet: warm-start set is not admissible");
    }
    AdaptiveIndexSet out(set.begin()->dim());
    out.active_ = maximal_elements(set);
    out.old_.clear();
    for (const auto& index : set) {
        if (!out.active_.contains(index)) out.old_.insert(index);
    }
    return out;
}

IndexSet AdaptiveIndexSet::all() const {
    IndexSet out = old_;
    out.insert(active_.begin(), active_.end());
    return out;
}

bool AdaptiveIndexSet::contains(const MultiIndex& index) const {
    return old_.contains(index) || active_.contains(index);
}

void AdaptiveIndexSet::check_dim(const MultiIndex& index) const {
    if (index.dim() != dim_) {
        throw std::invalid_argument("AdaptiveIndexSet: index " + index.to_string() +
                                    " has the wrong dimension");
    }
}

bool AdaptiveIndexSet::expandable(const MultiIndex& index, std::span<const int> caps) {
    for (std::size_t i = 0; i < index.dim(); ++i) {
        if (i >= caps.size() || index[i] < caps[i]) return true;
    }
    return false;
}

std::vector<MultiIndex> AdaptiveIndexSet::promote(const MultiIndex& index,
                                                  std::optional<std::span<const int>> caps) {
    check_dim(index);
    auto it = active_.find(index);
    if (it == active_.end()) {
        throw std::invalid_argument("promote: " + index.to_string() + " is not active");
    }
    active_.erase(it);
    old_.insert(index);

    std::vector<MultiIndex> activated;
    for (std::size_t k = 0; k < dim_; ++k) {
        if (caps && k < caps->size() && index[k] + 1 > (*caps)[k]) continue;
        MultiIndex tau = index.incremented(k);
        if (contains(tau)) continue;
        bool admissible = true;
        for (const auto& b : backward_neighbors(tau)) {
            if (!old_.contains(b)) {
                admissible = false;
                break;
            }
        }
        if (admissible) {
            active_.insert(tau);
            activated.push_back(std::move(tau));
        }
    }
    return activated;
}

void write_index_lines(std::ostream& os, const IndexSet& set) {
    for (const auto& index : set) {
        for (std::size_t i = 0; i < index.dim(); ++i) {
            if (i) os << ' ';
            os << index[i];
        }
        os << '\n';
    }
}

std::vector<MultiIndex> read_index_lines(std::istream& is) {
    std::vector<MultiIndex> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::vector<int> levels;
        int l;
        while (ls >> l) levels.push_back(l);
        if (!ls.eof()) throw std::invalid_argument("read_index_lines: malformed line '" + line + "'");
        out.emplace_back(std::move(levels));
    }
    return out;
}

}  // namespace mimc
