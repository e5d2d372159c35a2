#ifndef ALIGNKIT_ABSTRACTION_HPP
#define ALIGNKIT_ABSTRACTION_HPP

#include <vector>

#include "alignkit/channel.hpp"
#include "alignkit/scm.hpp"

namespace alignkit {

/// Two causal models connected by a block-structured map from the first
/// model's variables to the second's. For exact intervention mapping the
/// map must be deterministic on every target block.
struct AbstractionCase {
    Scm scm_h;            // source model
    Scm scm_m;            // candidate abstraction
    Channel beta;         // source variables -> target variables
    BlockStructure blocks;
};

void validate_case(const AbstractionCase& kase);

/// Translates an intervention on whole source blocks into the intervention
/// on the pre-image target blocks, assigning each target block the
/// deterministic image of the pinned source values. Throws
/// std::invalid_argument("partial block intervention ...") when targets cut
/// a block or fall outside the partition, and
/// std::domain_error("stochastic block ...") when the map is not
/// deterministic (or not a function of the block values) there.
Intervention map_intervention(const Channel& beta, const BlockStructure& blocks,
                              const Intervention& iv_h);

struct CommutationRecord {
    Intervention iv_h;
    Intervention iv_m;
    double tv = 0.0;
    bool commutes = false;
    bool approximate = false;
};

/// Compares the two routes around the square: intervene in the source
/// model and push the result through the map, versus map the intervention
/// and propagate it in the target model. In approximate mode a stochastic
/// map is allowed: the mapped intervention becomes a distribution over
/// target-block values and the second route is averaged accordingly.
CommutationRecord check_commutes(const AbstractionCase& kase, const Intervention& iv_h,
                                 double eps = kRowMassTol, bool approximate = false);

/// All interventions pinning up to `max_blocks` whole source blocks, in
/// deterministic order (block combinations by size then index, values
/// lexicographically). Throws when the list would exceed `cap`.
std::vector<Intervention> enumerate_interventions(const Scm& scm_h, const BlockStructure& blocks,
                                                  std::size_t max_blocks,
                                                  std::size_t cap = 1u << 20);

struct AbstractionReport {
    std::vector<CommutationRecord> records;
    bool overall = false;
    std::size_t worst_index = 0; // record with the largest discrepancy
};

AbstractionReport check_abstraction(const AbstractionCase& kase, std::size_t max_blocks,
                                    double eps = kRowMassTol, bool approximate = false);

} // namespace alignkit

#endif
