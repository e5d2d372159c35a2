#include "alignkit/divergence.hpp"

#include <cmath>
#include <stdexcept>

namespace alignkit {

std::string to_string(DivergenceKind d) {
    switch (d) {
        case DivergenceKind::total_variation: return "tv";
        case DivergenceKind::kullback_leibler: return "kl";
        case DivergenceKind::mean_abs_difference: return "mad";
    }
    return "?";
}

DivergenceKind divergence_from_string(const std::string& s) {
    if (s == "tv") return DivergenceKind::total_variation;
    if (s == "kl") return DivergenceKind::kullback_leibler;
    if (s == "mad") return DivergenceKind::mean_abs_difference;
    throw std::invalid_argument("unknown divergence '" + s + "' (expected tv|kl|mad)");
}

double divergence(DivergenceKind kind, std::span<const double> p, std::span<const double> q,
                  const CellLevels& levels) {
    if (p.size() != q.size()) throw std::invalid_argument("divergence: size mismatch");
    switch (kind) {
        case DivergenceKind::total_variation: {
            double s = 0.0;
            for (std::size_t k = 0; k < p.size(); ++k) s += std::fabs(p[k] - q[k]);
            return 0.5 * s;
        }
        case DivergenceKind::kullback_leibler: {
            double s = 0.0;
            for (std::size_t k = 0; k < p.size(); ++k) {
                if (p[k] <= kZeroMassTol) continue;
                if (q[k] <= kZeroMassTol) {
                    throw std::domain_error(
                        "kl support violation: second argument does not dominate the first");
                }
                s += p[k] * std::log(p[k] / q[k]);
            }
            return s < 0.0 ? 0.0 : s;
        }
        case DivergenceKind::mean_abs_difference: {
            if (levels.size() != p.size()) {
                throw std::invalid_argument("mean divergence needs per-cell levels");
            }
            const std::size_t dims = levels.empty() ? 0 : levels.front().size();
            double total = 0.0;
            for (std::size_t t = 0; t < dims; ++t) {
                double mp = 0.0;
                double mq = 0.0;
                for (std::size_t k = 0; k < p.size(); ++k) {
                    mp += p[k] * levels[k][t];
                    mq += q[k] * levels[k][t];
                }
                total += std::fabs(mp - mq);
            }
            return total;
        }
    }
    throw std::logic_error("unreachable divergence kind");
}

} // namespace alignkit
