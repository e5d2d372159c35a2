#ifndef ALIGNKIT_ALIGNMENT_HPP
#define ALIGNKIT_ALIGNMENT_HPP

#include <optional>
#include <vector>

#include "alignkit/disentangle.hpp"

namespace alignkit {

struct PiDiscovery {
    std::vector<std::size_t> pi;   // per representation: minimizing interpretable factor
    std::vector<double> residual;  // the minimized empida value per representation
    bool valid = false;            // every representation insulated at eps
    bool surjective = false;       // every interpretable factor is hit
};

/// pi(j) = argmin over the interpretable factors of matrix[i][j], lowest
/// index on ties. Failures are flags, not errors.
PiDiscovery discover_pi(const std::vector<std::vector<double>>& empida,
                        const std::vector<std::size_t>& interpretable, double eps);

enum class MonotoneDirection { increasing, decreasing, not_applicable };

struct D2Record {
    bool passed = false;
    MonotoneDirection direction = MonotoneDirection::not_applicable;
    std::optional<double> spearman; // absent when the traversal is degenerate
};

struct D2Options {
    /// Check monotonicity in every context of the non-traversed factors
    /// instead of only the reference context.
    bool strict_contexts = false;
    /// Context the non-traversed factors are held at; defaults to the mode
    /// of their joint marginal. The traversed factor's entry is ignored.
    std::optional<Assignment> reference;
};

/// Per representation j: traverse the associated factor pi_map[j] in domain
/// order with everything else pinned at the reference context, and require
/// the expected level of M_j to move strictly monotonically. Unordered
/// multi-valued domains get an injectivity check instead (direction n/a).
std::vector<D2Record> check_d2_monotone(const GmSystem& sys,
                                        const std::vector<std::size_t>& pi_map,
                                        const D2Options& opts = {});

/// Rank correlation between squared level distances of factor i's values
/// and squared Euclidean distances of the induced expected embeddings of
/// the representations mapped to i. Average ranks on ties. Throws
/// std::domain_error("degenerate traversal") for domains smaller than 3 or
/// constant distance sets.
double spearman_d2_score(const GmSystem& sys, const std::vector<std::size_t>& pi_map,
                         std::size_t i);

struct DciOptions {
    double tol = 1e-8;            // max coefficient change per sweep
    std::size_t max_sweeps = 10000;
};

struct DciResult {
    std::vector<std::vector<double>> coefficients; // B[j][i]: feature j, factor i
    double disentanglement_score = 0.0;
    double informativeness = 0.0;
    std::size_t sweeps = 0;
    bool converged = false;
};

struct DciNonConvergence : std::runtime_error {
    DciResult last_iterate;
    explicit DciNonConvergence(DciResult r)
        : std::runtime_error("lasso coordinate descent did not converge"),
          last_iterate(std::move(r)) {}
};

/// L1-regularized linear regression from representation levels to factor
/// levels (all rescaled to [0, 1] by domain range), fitted per factor by
/// cyclic coordinate descent with soft thresholding over the enumerated
/// support of the system. Scores: per-feature coefficient dispersion
/// (1 - normalized entropy, weighted by row mass) and 1 - RMSE/sd.
DciResult linear_dci(const GmSystem& sys, double l1_lambda, const DciOptions& opts = {});

/// Sample variant: rows of features/targets with optional weights; columns
/// are rescaled to [0, 1] by their data range.
DciResult linear_dci(const std::vector<std::vector<double>>& features,
                     const std::vector<std::vector<double>>& targets,
                     const std::vector<double>& weights, double l1_lambda,
                     const DciOptions& opts = {});

struct BlockAlignmentReport {
    std::vector<double> d1_value;  // block-empida per target block
    std::vector<bool> d1_per_block;
    std::vector<bool> d2_per_block; // first-moment injectivity per target block
    bool d1_ok = false;
    bool d2_ok = false;
    bool aligned = false;
};

/// Block-wise check: every target block must be insulated by its mapped
/// source block (block-empida <= eps) and the source-block value must be
/// recoverable from the block's expected embedding (pairwise coordinate
/// gaps > 1e-9).
BlockAlignmentReport check_block_alignment(const GmSystem& sys, const BlockStructure& blocks,
                                           DivergenceKind d, double eps,
                                           FactorWeighting weighting = FactorWeighting::observational);

struct AlignmentOptions {
    double eps = kRowMassTol;
    DivergenceKind divergence = DivergenceKind::total_variation;
    FactorWeighting weighting = FactorWeighting::observational;
    D2Options d2;
    bool with_dci = false;
    double dci_lambda = 0.0;
    DciOptions dci_opts;
};

struct AlignmentReport {
    std::vector<std::vector<double>> empida;
    PiDiscovery pi;
    bool d1_ok = false; // insulation of every representation plus surjectivity
    std::vector<D2Record> d2;
    bool aligned = false;
    std::optional<DciResult> dci;
};

/// Orchestrates empida matrix -> pi discovery -> per-coordinate D2 checks
/// (+ Spearman scores, + optional DCI). aligned = d1_ok and every D2 check
/// passed; Spearman is reported but not gating.
AlignmentReport alignment_report(const GmSystem& sys, const std::vector<std::size_t>& interpretable,
                                 const AlignmentOptions& opts = {});

/// Mode of the joint marginal over all factors except `factor` (full
/// factor assignment; entry at `factor` is the domain's first value).
Assignment mode_context(const GmSystem& sys, std::size_t factor);

} // namespace alignkit

#endif
