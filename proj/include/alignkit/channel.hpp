#ifndef ALIGNKIT_CHANNEL_HPP
#define ALIGNKIT_CHANNEL_HPP

#include <functional>
#include <vector>

#include "alignkit/joint_table.hpp"
#include "alignkit/scm.hpp"
#include "alignkit/types.hpp"

namespace alignkit {

/// Dense row-stochastic map between two assignment spaces: one row per
/// source assignment (lexicographic), each a probability vector over the
/// target assignments. Source and target variable names must be disjoint.
class Channel {
public:
    Channel() = default;
    Channel(std::vector<Variable> sources, std::vector<Variable> targets,
            std::vector<std::vector<double>> rows);

    const Frame& source_frame() const { return sources_; }
    const Frame& target_frame() const { return targets_; }
    const std::vector<Variable>& sources() const { return sources_.vars(); }
    const std::vector<Variable>& targets() const { return targets_.vars(); }
    const std::vector<std::vector<double>>& rows() const { return rows_; }
    const std::vector<double>& row(std::size_t source_cell) const { return rows_[source_cell]; }

    std::size_t row_of(const Assignment& source) const { return sources_.cell_of(source); }

    /// Marginal of one row onto a subset of target coordinates, laid out
    /// lexicographically over the chosen coordinates in the given order.
    std::vector<double> row_marginal(std::size_t source_cell,
                                     const std::vector<std::size_t>& target_coords) const;

    /// A row is deterministic on a coordinate block when a single block
    /// assignment carries mass >= 1 - 1e-9; returns that assignment's digit
    /// index within the block space, or nullopt.
    std::optional<std::size_t> deterministic_block_value(
        std::size_t source_cell, const std::vector<std::size_t>& target_coords) const;

private:
    Frame sources_;
    Frame targets_;
    std::vector<std::vector<double>> rows_;
};

/// Sequential composition: row g of the result is sum_x inner(x|g) * outer(m|x).
/// Requires outer.sources == inner.targets (names and domains).
Channel compose(const Channel& inner, const Channel& outer);

/// Image distribution: p(m) = sum_h p(h) * ch(m|h). The input scope must
/// equal the channel's source tuple.
JointTable push_forward(const JointTable& dist, const Channel& ch);

/// Per-coordinate expected level of the row at `source`, restricted to
/// `target_coords`.
std::vector<double> expected_embedding(const Channel& ch, const Assignment& source,
                                       const std::vector<std::size_t>& target_coords);

/// Channel from the non-fixed source variables to the marginal over the
/// chosen target coordinates, with `source_fixed` pinned.
Channel restrict_channel(const Channel& ch, const Assignment& source_fixed,
                         const std::vector<std::size_t>& target_coords);

/// Interventional slice of an SCM as a channel: row s = p(targets | do(sources <- s)).
Channel channel_from_scm(const Scm& scm, const std::vector<std::string>& sources,
                         const std::vector<std::string>& targets,
                         std::size_t max_cells = default_max_cells());

/// Deterministic channel built from a source-cell -> target-cell map.
Channel deterministic_channel(std::vector<Variable> sources, std::vector<Variable> targets,
                              const std::function<std::size_t(std::size_t)>& image);

/// Copies value by position; domains must have matching sizes.
Channel identity_channel(std::vector<Variable> sources, std::vector<Variable> targets);

/// Partition of source/target coordinates into blocks plus the block map
/// `pi` from target blocks to source blocks.
struct BlockStructure {
    std::vector<std::vector<std::size_t>> source_blocks;
    std::vector<std::vector<std::size_t>> target_blocks;
    std::vector<std::size_t> pi; // target block index -> source block index
};

/// Throws std::invalid_argument on empty/overlapping blocks, out-of-range
/// indices, or a non-total/non-surjective pi.
void validate_blocks(const BlockStructure& blocks, std::size_t n_sources, std::size_t n_targets);

} // namespace alignkit

#endif
