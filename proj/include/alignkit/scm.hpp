#ifndef ALIGNKIT_SCM_HPP
#define ALIGNKIT_SCM_HPP

#include <string>
#include <vector>

#include "alignkit/joint_table.hpp"
#include "alignkit/types.hpp"

namespace alignkit {

/// Conditional probability table of one variable. Rows are indexed by the
/// parent assignment, lexicographically in declared parent order; each row
/// is a probability vector over the variable's domain and must sum to 1
/// within 1e-9. Exogenous noise is folded into the row distributions.
struct Cpt {
    std::string variable;
    std::vector<std::vector<double>> rows;
};

/// Acyclic finite-domain causal model: variables with parent lists plus one
/// CPT per variable. Construction does not validate; run validate_scm to
/// collect violations before querying distributions.
struct Scm {
    std::vector<Variable> variables;
    std::vector<Cpt> cpts;

    std::optional<std::size_t> find(const std::string& name) const {
        for (std::size_t k = 0; k < variables.size(); ++k) {
            if (variables[k].name == name) return k;
        }
        return std::nullopt;
    }

    std::size_t require(const std::string& name) const {
        if (auto k = find(name)) return *k;
        throw std::invalid_argument("unknown variable '" + name + "'");
    }
};

struct Violation {
    std::string code;     // e.g. "cycle", "row-mass", "dangling-parent"
    std::string location; // variable / row the violation was found at
    std::string message;
};

using ValidationReport = std::vector<Violation>;

/// Collects every invariant violation: duplicate or empty domains, dangling
/// or self parents, cycles, CPT shape and row-mass problems. Empty report =
/// valid model.
ValidationReport validate_scm(const Scm& scm);

/// Default joint-enumeration cap (2^24 cells), overridable via the
/// ALIGNKIT_MAX_CELLS environment variable.
std::size_t default_max_cells();

/// Exact joint over all variables by enumerating assignments and
/// multiplying CPT entries. Throws on invalid models and when the state
/// space exceeds `max_cells` ("state-space overflow").
JointTable joint_distribution(const Scm& scm, std::size_t max_cells = default_max_cells());

/// Manipulated model: each target's parent list is emptied and its CPT
/// replaced by the point mass on the intervened value; everything else is
/// untouched.
Scm apply_intervention(const Scm& scm, const Intervention& iv);

/// marginal(joint(apply_intervention(scm, iv)), query).
JointTable interventional_distribution(const Scm& scm, const Intervention& iv,
                                       const std::vector<std::string>& query,
                                       std::size_t max_cells = default_max_cells());

} // namespace alignkit

#endif
