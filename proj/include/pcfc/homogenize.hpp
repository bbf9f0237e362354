#pragma once

#include "pcfc/errors.hpp"
#include "pcfc/fea.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pcfc::fea {

/// Element index sets that partition a mesh, one per element type (phase).
using ElementGroups = std::vector<std::vector<std::size_t>>;

/// Volume-weighted mean of `values` over the elements listed in `subset`.
/// Throws EmptyRegion for an empty subset.
template <class T>
T volume_average(std::span<const T> values, std::span<const double> volumes, std::span<const std::size_t> subset) {
    if (subset.empty()) throw EmptyRegion("cannot average over an empty element group");
    T acc = values[subset.front()] * 0.0;
    double vol = 0.0;
    for (std::size_t e : subset) {
        acc += values[e] * volumes[e];
        vol += volumes[e];
    }
    return acc / vol;
}

/// Two-level homogenization: volume-average within each group, then weight
/// each group average by the group volume. Algebraically this is the plain
/// volume average over the union of the groups.
template <class T>
T homogenize(std::span<const T> values, std::span<const double> volumes, const ElementGroups& groups) {
    if (values.size() != volumes.size()) throw std::invalid_argument("values and volumes differ in length");
    std::optional<T> acc;
    double total = 0.0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (groups[g].empty()) continue;
        const std::span<const std::size_t> idx(groups[g]);
        double group_volume = 0.0;
        for (std::size_t e : idx) {
            if (!(volumes[e] > 0.0)) throw std::invalid_argument("element volume must be positive");
            group_volume += volumes[e];
        }
        const T term = volume_average(values, volumes, idx) * group_volume;
        acc = acc ? *acc + term : term;
        total += group_volume;
    }
    if (!acc) throw EmptyRegion("no elements to homogenize");
    return *acc / total;
}

/// Groups indexed by Phase: [Matrix, Fiber].
inline ElementGroups phase_groups(const mesh::QuadMesh& m) {
    ElementGroups groups(2);
    for (std::size_t e = 0; e < m.phase.size(); ++e) groups[static_cast<std::size_t>(m.phase[e])].push_back(e);
    return groups;
}

/// Per-phase homogenized stress, indexed by Phase; empty for an absent phase.
using PhaseStresses = std::array<std::optional<StressTensor4>, 2>;

inline PhaseStresses phase_stresses(const SolveResult& r, const ElementGroups& groups) {
    PhaseStresses out;
    for (std::size_t p = 0; p < 2 && p < groups.size(); ++p)
        if (!groups[p].empty())
            out[p] = volume_average<StressTensor4>(r.element_stress, r.element_volume, groups[p]);
    return out;
}

inline StressTensor4 rve_stress(const SolveResult& r, const ElementGroups& groups) {
    return homogenize<StressTensor4>(r.element_stress, r.element_volume, groups);
}

}  // namespace pcfc::fea
