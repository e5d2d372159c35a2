#ifndef ALIGNKIT_DISENTANGLE_HPP
#define ALIGNKIT_DISENTANGLE_HPP

#include <vector>

#include "alignkit/channel.hpp"
#include "alignkit/divergence.hpp"
#include "alignkit/scm.hpp"

namespace alignkit {

/// A generative system: a factor model over {confounders, factors} plus a
/// stochastic map from the factors to the machine representation. The
/// channel's sources identify the factor variables; any remaining model
/// variables act as confounders.
struct GmSystem {
    Scm factor_scm;
    Channel alpha;

    std::size_t n_factors() const { return alpha.sources().size(); }
    std::size_t n_targets() const { return alpha.targets().size(); }
};

/// Throws std::invalid_argument if the channel sources do not match model
/// variables (name and domain) or the factor model is invalid.
void validate_system(const GmSystem& sys);

/// How the expectation over an intervened factor value is weighted.
enum class FactorWeighting { observational, uniform };

/// Divergence between the representation's distribution under a partial
/// intervention (only factor i pinned, the rest following the model) and
/// under the full intervention (everything pinned). Zero means fixing
/// factor i insulates representation j from the remaining factors.
double pida(const GmSystem& sys, std::size_t i, std::size_t j, const std::string& g_i,
            const Assignment& g_minus_i, DivergenceKind d);

/// Expected worst case of pida over the intervened value of factor i
/// (weighted by its marginal) and all joint settings of the other factors.
double empida(const GmSystem& sys, std::size_t i, std::size_t j, DivergenceKind d,
              FactorWeighting weighting = FactorWeighting::observational);

/// Block version: factors I pinned jointly, representations J compared
/// jointly; the max runs over all settings of the complement of I.
double block_empida(const GmSystem& sys, const std::vector<std::size_t>& factor_block,
                    const std::vector<std::size_t>& target_block, DivergenceKind d,
                    FactorWeighting weighting = FactorWeighting::observational);

/// matrix[i][j] = empida(i, j).
std::vector<std::vector<double>> empida_matrix(
    const GmSystem& sys, DivergenceKind d,
    FactorWeighting weighting = FactorWeighting::observational);

struct DisentanglementVerdict {
    bool disentangled = false;
    double max_min = 0.0;                // max over j of min over i
    std::vector<std::size_t> witness;    // per j: minimizing factor (lowest index on ties)
};

/// Disentangled iff every representation has some factor whose pinning
/// insulates it: max_j min_i matrix[i][j] <= eps.
DisentanglementVerdict disentanglement_verdict(const std::vector<std::vector<double>>& matrix,
                                               double eps = kRowMassTol);

/// block_empida(content, target) <= eps: once the content factors are
/// pinned, the chosen representations ignore every other factor.
bool content_style_check(const GmSystem& sys, const std::vector<std::size_t>& content,
                         const std::vector<std::size_t>& target_block, DivergenceKind d,
                         double eps, FactorWeighting weighting = FactorWeighting::observational);

namespace detail {

/// p(M_block | do(G_block <- value)): the channel row marginal averaged over
/// the factor model's interventional distribution of the free factors.
std::vector<double> partial_intervention_dist(const GmSystem& sys,
                                              const std::vector<std::size_t>& factor_block,
                                              const std::vector<std::size_t>& factor_digits,
                                              const std::vector<std::size_t>& target_block);

/// Per-cell levels of a target block space (for the mean divergence).
CellLevels target_block_levels(const Channel& ch, const std::vector<std::size_t>& target_block);

} // namespace detail

} // namespace alignkit

#endif
