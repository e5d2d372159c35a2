#include "alignkit/scm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>
#include <string>

namespace alignkit {

namespace {

std::string row_location(const std::string& var, std::size_t row) {
    return var + "/row[" + std::to_string(row) + "]";
}

// Kahn topological pass; returns the set of variables stuck in cycles.
std::vector<std::string> cycle_members(const Scm& scm) {
    const std::size_t n = scm.variables.size();
    std::vector<std::size_t> indegree(n, 0);
    std::vector<std::vector<std::size_t>> children(n);
    for (std::size_t k = 0; k < n; ++k) {
        for (const auto& p : scm.variables[k].parents) {
            if (auto pk = scm.find(p); pk && *pk != k) {
                children[*pk].push_back(k);
                ++indegree[k];
            }
        }
    }
    std::vector<std::size_t> queue;
    for (std::size_t k = 0; k < n; ++k) {
        if (indegree[k] == 0) queue.push_back(k);
    }
    std::size_t done = 0;
    while (done < queue.size()) {
        const std::size_t k = queue[done++];
        for (std::size_t c : children[k]) {
            if (--indegree[c] == 0) queue.push_back(c);
        }
    }
    std::vector<std::string> stuck;
    for (std::size_t k = 0; k < n; ++k) {
        if (indegree[k] > 0) stuck.push_back(scm.variables[k].name);
    }
    return stuck;
}

} // namespace

ValidationReport validate_scm(const Scm& scm) {
    ValidationReport report;
    std::set<std::string> names;
    for (const auto& v : scm.variables) {
        if (!names.insert(v.name).second) {
            report.push_back({"duplicate-variable", v.name, "variable name declared twice"});
        }
        if (v.domain.values.empty()) {
            report.push_back({"domain-empty", v.name, "domain has no values"});
        }
        std::set<std::string> labels;
        for (const auto& dv : v.domain.values) {
            if (!labels.insert(dv.label).second) {
                report.push_back({"duplicate-label", v.name, "domain label '" + dv.label + "' repeated"});
            }
        }
        if (v.domain.ordered) {
            for (std::size_t k = 1; k < v.domain.values.size(); ++k) {
                if (!(v.domain.values[k].level > v.domain.values[k - 1].level)) {
                    report.push_back({"domain-order", v.name,
                                      "ordered domain levels must strictly increase in list order"});
                    break;
                }
            }
        }
        std::set<std::string> parent_seen;
        for (const auto& p : v.parents) {
            if (p == v.name) {
                report.push_back({"self-parent", v.name, "variable lists itself as parent"});
            } else if (!scm.find(p)) {
                report.push_back({"dangling-parent", v.name, "parent '" + p + "' is not declared"});
            }
            if (!parent_seen.insert(p).second) {
                report.push_back({"duplicate-parent", v.name, "parent '" + p + "' repeated"});
            }
        }
    }

    for (const auto& name : cycle_members(scm)) {
        report.push_back({"cycle", name, "variable participates in a parent cycle"});
    }

    // CPT coverage and shape.
    std::set<std::string> with_cpt;
    for (const auto& cpt : scm.cpts) {
        if (!with_cpt.insert(cpt.variable).second) {
            report.push_back({"duplicate-cpt", cpt.variable, "more than one CPT for this variable"});
            continue;
        }
        auto vk = scm.find(cpt.variable);
        if (!vk) {
            report.push_back({"dangling-cpt", cpt.variable, "CPT refers to an undeclared variable"});
            continue;
        }
        const Variable& v = scm.variables[*vk];
        std::size_t expected_rows = 1;
        bool parents_ok = true;
        for (const auto& p : v.parents) {
            auto pk = scm.find(p);
            if (!pk) {
                parents_ok = false;
                break;
            }
            expected_rows *= scm.variables[*pk].domain.size();
        }
        if (parents_ok && cpt.rows.size() != expected_rows) {
            report.push_back({"row-count", cpt.variable,
                              "expected " + std::to_string(expected_rows) + " rows, got " +
                                  std::to_string(cpt.rows.size())});
        }
        for (std::size_t r = 0; r < cpt.rows.size(); ++r) {
            const auto& row = cpt.rows[r];
            if (row.size() != v.domain.size()) {
                report.push_back({"row-width", row_location(cpt.variable, r),
                                  "row width does not match the domain size"});
                continue;
            }
            double sum = 0.0;
            bool range_ok = true;
            for (double p : row) {
                if (!(p >= 0.0 && p <= 1.0) || !std::isfinite(p)) range_ok = false;
                sum += p;
            }
            if (!range_ok) {
                report.push_back({"prob-range", row_location(cpt.variable, r),
                                  "entries must lie in [0, 1]"});
            }
            if (std::fabs(sum - 1.0) > kRowMassTol) {
                report.push_back({"row-mass", row_location(cpt.variable, r),
                                  "row sums to " + std::to_string(sum)});
            }
        }
    }
    for (const auto& v : scm.variables) {
        if (!with_cpt.count(v.name)) {
            report.push_back({"missing-cpt", v.name, "no CPT declared"});
        }
    }
    return report;
}

std::size_t default_max_cells() {
    if (const char* env = std::getenv("ALIGNKIT_MAX_CELLS")) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
    }
    return std::size_t{1} << 24;
}

JointTable joint_distribution(const Scm& scm, std::size_t max_cells) {
    const ValidationReport report = validate_scm(scm);
    if (!report.empty()) {
        throw std::invalid_argument("invalid SCM: " + report.front().code + " at " +
                                    report.front().location);
    }
    Frame frame(scm.variables);
    if (frame.cells() > max_cells) {
        throw std::runtime_error("state-space overflow: " + std::to_string(frame.cells()) +
                                 " cells exceed the cap of " + std::to_string(max_cells));
    }

    // CPTs indexed in scope order; parent digits mapped to row indices via
    // precomputed strides (lexicographic in declared parent order).
    const std::size_t n = scm.variables.size();
    std::vector<const Cpt*> cpt_of(n, nullptr);
    for (const auto& cpt : scm.cpts) cpt_of[scm.require(cpt.variable)] = &cpt;
    std::vector<std::vector<std::size_t>> parent_idx(n);
    std::vector<std::vector<std::size_t>> parent_stride(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto& parents = scm.variables[k].parents;
        parent_idx[k].resize(parents.size());
        parent_stride[k].resize(parents.size());
        std::size_t stride = 1;
        for (std::size_t t = parents.size(); t-- > 0;) {
            parent_idx[k][t] = frame.require(parents[t]);
            parent_stride[k][t] = stride;
            stride *= scm.variables[parent_idx[k][t]].domain.size();
        }
    }

    std::vector<double> probs(frame.cells(), 0.0);
    for (std::size_t cell = 0; cell < frame.cells(); ++cell) {
        double p = 1.0;
        for (std::size_t k = 0; k < n && p > 0.0; ++k) {
            std::size_t row = 0;
            for (std::size_t t = 0; t < parent_idx[k].size(); ++t) {
                row += frame.digit(cell, parent_idx[k][t]) * parent_stride[k][t];
            }
            p *= cpt_of[k]->rows[row][frame.digit(cell, k)];
        }
        probs[cell] = p;
    }
    return JointTable(scm.variables, std::move(probs));
}

Scm apply_intervention(const Scm& scm, const Intervention& iv) {
    if (iv.targets.empty()) throw std::invalid_argument("intervention has no targets");
    Scm out = scm;
    std::set<std::string> seen;
    for (const auto& [name, label] : iv.targets) {
        if (!seen.insert(name).second) {
            throw std::invalid_argument("intervention targets variable '" + name + "' twice");
        }
        const std::size_t k = out.require(name);
        const Domain& dom = out.variables[k].domain;
        const std::size_t value = dom.index_of(label);
        out.variables[k].parents.clear();
        std::vector<double> row(dom.size(), 0.0);
        row[value] = 1.0;
        for (auto& cpt : out.cpts) {
            if (cpt.variable == name) {
                cpt.rows.assign(1, row);
                break;
            }
        }
    }
    return out;
}

JointTable interventional_distribution(const Scm& scm, const Intervention& iv,
                                       const std::vector<std::string>& query,
                                       std::size_t max_cells) {
    return marginal(joint_distribution(apply_intervention(scm, iv), max_cells), query);
}

} // namespace alignkit
