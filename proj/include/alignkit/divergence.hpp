#ifndef ALIGNKIT_DIVERGENCE_HPP
#define ALIGNKIT_DIVERGENCE_HPP

#include <span>
#include <string>
#include <vector>

#include "alignkit/types.hpp"

namespace alignkit {

enum class DivergenceKind {
    total_variation,
    kullback_leibler,
    mean_abs_difference,
};

std::string to_string(DivergenceKind d);
DivergenceKind divergence_from_string(const std::string& s);

/// Per-cell coordinate levels of a block space: levels[cell][t] is the
/// numeric level of coordinate t in that cell. Used by the mean-based
/// divergence.
using CellLevels = std::vector<std::vector<double>>;

/// Divergence between two distributions over the same finite space.
/// Total variation: 0.5 * L1. Kullback-Leibler: sum p log(p/q), throws
/// std::domain_error when q fails to dominate p. Mean absolute difference:
/// L1 distance between the per-coordinate mean-level vectors (the
/// mean-based special case in one dimension).
double divergence(DivergenceKind kind, std::span<const double> p, std::span<const double> q,
                  const CellLevels& levels);

} // namespace alignkit

#endif
