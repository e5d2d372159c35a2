#ifndef ALIGNKIT_JOINT_TABLE_HPP
#define ALIGNKIT_JOINT_TABLE_HPP

#include <string>
#include <vector>

#include "alignkit/types.hpp"

namespace alignkit {

/// Exact probability table over an ordered variable tuple. Cells are laid
/// out lexicographically (first scope variable most significant). Entries
/// must be non-negative; a full table carries total mass 1 within 1e-9.
class JointTable {
public:
    JointTable() = default;
    JointTable(std::vector<Variable> scope, std::vector<double> probs);

    const Frame& frame() const { return frame_; }
    const std::vector<Variable>& scope() const { return frame_.vars(); }
    const std::vector<double>& probs() const { return probs_; }
    std::size_t cells() const { return frame_.cells(); }

    double at(std::size_t cell) const { return probs_[cell]; }
    double at(const Assignment& a) const { return probs_[frame_.cell_of(a)]; }
    double mass() const;

    /// Expected level of one scope variable.
    double expected_level(std::size_t var_index) const;

private:
    Frame frame_;
    std::vector<double> probs_;
};

/// Sum out everything except `vars`; the result scope follows the order of
/// `vars`. Mass is preserved exactly up to float accumulation.
JointTable marginal(const JointTable& jt, const std::vector<std::string>& vars);

/// Renormalized slice over the non-evidence variables. Throws
/// std::domain_error("zero-mass evidence") when the evidence event carries
/// mass below 1e-12.
JointTable condition(const JointTable& jt, const Assignment& evidence);

/// Total variation distance, 0.5 * L1. Both tables must share the scope.
double total_variation(const JointTable& a, const JointTable& b);

double total_variation(std::span<const double> p, std::span<const double> q);

} // namespace alignkit

#endif
