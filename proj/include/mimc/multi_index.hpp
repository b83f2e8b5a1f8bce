// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <compare>
#include <cstddef>
#include <initializer_list>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace mimc {

/// A vector of nonnegative refinement levels, one per discretization dimension.
class MultiIndex {
public:
    MultiIndex() = default;
    explicit MultiIndex(std::vector<int> levels);
    MultiIndex(std::initializer_list<int> levels);

    static MultiIndex zero(std::size_t d);
    static MultiIndex unit(std::size_t d, std::size_t i);

    std::size_t dim() const noexcept { return levels_.size(); }
    int operator[](std::size_t i) const { return levels_[i]; }
    std::span<const int> levels() const noexcept { return levels_; }

    /// Sum of all levels.
    int l1() const noexcept;
    bool is_zero() const noexcept;

    MultiIndex incremented(std::size_t i) const;
    /// Requires levels[i] > 0.
    MultiIndex decremented(std::size_t i) const;

    /// Componentwise partial order used by rectangles and downward closedness.
    bool dominated_by(const MultiIndex& other) const;

    std::string to_string() const;

    auto operator<=>(const MultiIndex&) const = default;
    bool operator==(const MultiIndex&) const = default;

private:
    std::vector<int> levels_;
};

std::ostream& operator<<(std::ostream& os, const MultiIndex& index);

/// Lexicographically ordered set; iteration order is deterministic.
using IndexSet = std::set<MultiIndex>;

/// {l - e_i : l_i > 0}, in increasing coordinate order.
std::vector<MultiIndex> backward_neighbors(const MultiIndex& index);

/// {l + e_i : i = 1..d}, in increasing coordinate order.
std::vector<MultiIndex> forward_neighbors(const MultiIndex& index);

/// Downward closedness. Throws std::invalid_argument on an empty set or on
/// mixed dimensions.
bool is_admissible(const IndexSet& set);

/// T_rho(L) = {tau : rho . tau <= L}. All rho_i must be positive.
IndexSet simplex(std::span<const double> rho, double L);

/// R(l) = {tau : tau <= l}.
IndexSet rectangle(const MultiIndex& corner);

/// Indices of `set` that have no forward neighbor inside `set`.
IndexSet maximal_elements(const IndexSet& set);

/// Admissible index set partitioned into old (interior) and active (frontier)
/// indices, grown by promoting active indices.
class AdaptiveIndexSet {
public:
    /// O = {}, A = {0}.
    explicit AdaptiveIndexSet(std::size_t d);

    /// Partition an admissible set: A = maximal elements, O = the rest.
    static AdaptiveIndexSet from_admissible(const IndexSet& set);

    std::size_t dim() const noexcept { return dim_; }
    const IndexSet& old_set() const noexcept { return old_; }
    const IndexSet& active_set() const noexcept { return active_; }
    IndexSet all() const;
    std::size_t size() const noexcept { return old_.size() + active_.size(); }

    bool contains(const MultiIndex& index) const;
    bool is_active(const MultiIndex& index) const { return active_.contains(index); }
    bool is_old(const MultiIndex& index) const { return old_.contains(index); }

    /// Move `index` from A to O and activate every forward neighbor whose
    /// backward neighbors all lie in O. Neighbors exceeding `caps` (when
    /// given) are skipped. Returns the newly activated indices.
    /// Throws std::invalid_argument if `index` is not active.
    std::vector<MultiIndex> promote(const MultiIndex& index,
                                    std::optional<std::span<const int>> caps = std::nullopt);

    /// True if at least one forward neighbor of `index` is within `caps`.
    static bool expandable(const MultiIndex& index, std::span<const int> caps);

private:
    void check_dim(const MultiIndex& index) const;

    std::size_t dim_;
    IndexSet old_;
    IndexSet active_;
};

/// One index per line, components separated by single spaces.
void write_index_lines(std::ostream& os, const IndexSet& set);
std::vector<MultiIndex> read_index_lines(std::istream& is);

}  // namespace mimc
