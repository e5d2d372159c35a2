#include "alignkit/joint_table.hpp"

#include <cmath>
#include <cstdlib>

namespace alignkit {

JointTable::JointTable(std::vector<Variable> scope, std::vector<double> probs)
    : frame_(std::move(scope)), probs_(std::move(probs)) {
    if (probs_.size() != frame_.cells()) {
        throw std::invalid_argument("probability array size does not match the scope's cell count");
    }
    for (double p : probs_) {
        if (!(p >= -kZeroMassTol) || !std::isfinite(p)) {
            throw std::invalid_argument("joint table entries must be finite and non-negative");
        }
    }
}

double JointTable::mass() const {
    double m = 0.0;
    for (double p : probs_) m += p;
    return m;
}

double JointTable::expected_level(std::size_t var_index) const {
    const auto& dom = frame_.vars().at(var_index).domain;
    double e = 0.0;
    for (std::size_t cell = 0; cell < probs_.size(); ++cell) {
        e += probs_[cell] * dom.level(frame_.digit(cell, var_index));
    }
    return e;
}

JointTable marginal(const JointTable& jt, const std::vector<std::string>& vars) {
    const Frame& in = jt.frame();
    std::vector<Variable> out_vars;
    std::vector<std::size_t> keep;
    out_vars.reserve(vars.size());
    keep.reserve(vars.size());
    for (const auto& name : vars) {
        const std::size_t k = in.require(name);
        out_vars.push_back(in.vars()[k]);
        keep.push_back(k);
    }
    Frame out(out_vars);
    std::vector<double> probs(out.cells(), 0.0);
    for (std::size_t cell = 0; cell < jt.cells(); ++cell) {
        std::size_t o = 0;
        for (std::size_t t = 0; t < keep.size(); ++t) o += in.digit(cell, keep[t]) * out.stride(t);
        probs[o] += jt.at(cell);
    }
    return JointTable(std::move(out_vars), std::move(probs));
}

JointTable condition(const JointTable& jt, const Assignment& evidence) {
    const Frame& in = jt.frame();
    std::vector<std::size_t> ev_idx;
    std::vector<std::size_t> ev_digit;
    std::vector<bool> is_evidence(in.arity(), false);
    for (const auto& [name, label] : evidence) {
        const std::size_t k = in.require(name);
        if (is_evidence[k]) throw std::invalid_argument("duplicate evidence variable '" + name + "'");
        is_evidence[k] = true;
        ev_idx.push_back(k);
        ev_digit.push_back(in.vars()[k].domain.index_of(label));
    }

    std::vector<Variable> out_vars;
    std::vector<std::size_t> keep;
    for (std::size_t k = 0; k < in.arity(); ++k) {
        if (!is_evidence[k]) {
            out_vars.push_back(in.vars()[k]);
            keep.push_back(k);
        }
    }
    Frame out(out_vars);
    std::vector<double> probs(out.cells(), 0.0);
    double mass = 0.0;
    for (std::size_t cell = 0; cell < jt.cells(); ++cell) {
        bool match = true;
        for (std::size_t t = 0; t < ev_idx.size(); ++t) {
            if (in.digit(cell, ev_idx[t]) != ev_digit[t]) {
                match = false;
                break;
            }
        }
        if (!match) continue;
        std::size_t o = 0;
        for (std::size_t t = 0; t < keep.size(); ++t) o += in.digit(cell, keep[t]) * out.stride(t);
        probs[o] += jt.at(cell);
        mass += jt.at(cell);
    }
    if (mass <= kZeroMassTol) throw std::domain_error("zero-mass evidence");
    for (double& p : probs) p /= mass;
    return JointTable(std::move(out_vars), std::move(probs));
}

double total_variation(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw std::invalid_argument("total variation: size mismatch");
    double s = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) s += std::fabs(p[k] - q[k]);
    return 0.5 * s;
}

double total_variation(const JointTable& a, const JointTable& b) {
    if (!a.frame().same_vars(b.frame())) {
        throw std::invalid_argument("total variation: tables have different scopes");
    }
    return total_variation(std::span<const double>(a.probs()), std::span<const double>(b.probs()));
}

} // namespace alignkit
