#include "alignkit/disentangle.hpp"

#include <algorithm>
#include <cmath>

namespace alignkit {

void validate_system(const GmSystem& sys) {
    const ValidationReport report = validate_scm(sys.factor_scm);
    if (!report.empty()) {
        throw std::invalid_argument("invalid factor model: " + report.front().code + " at " +
                                    report.front().location);
    }
    for (const auto& src : sys.alpha.sources()) {
        const auto k = sys.factor_scm.find(src.name);
        if (!k) {
            throw std::invalid_argument("channel source '" + src.name +
                                        "' is not a factor model variable");
        }
        if (!(sys.factor_scm.variables[*k].domain == src.domain)) {
            throw std::invalid_argument("channel source '" + src.name +
                                        "' disagrees with the factor model domain");
        }
    }
}

namespace detail {

std::vector<double> partial_intervention_dist(const GmSystem& sys,
                                              const std::vector<std::size_t>& factor_block,
                                              const std::vector<std::size_t>& factor_digits,
                                              const std::vector<std::size_t>& target_block) {
    const Frame& src = sys.alpha.source_frame();
    Assignment pinned;
    for (std::size_t t = 0; t < factor_block.size(); ++t) {
        const Variable& v = src.vars()[factor_block[t]];
        pinned.emplace_back(v.name, v.domain.values.at(factor_digits[t]).label);
    }

    std::vector<std::size_t> free_coords;
    std::vector<std::string> free_names;
    std::vector<bool> in_block(src.arity(), false);
    for (std::size_t c : factor_block) in_block[c] = true;
    for (std::size_t c = 0; c < src.arity(); ++c) {
        if (!in_block[c]) {
            free_coords.push_back(c);
            free_names.push_back(src.vars()[c].name);
        }
    }

    std::vector<std::size_t> digits(src.arity(), 0);
    for (std::size_t t = 0; t < factor_block.size(); ++t) digits[factor_block[t]] = factor_digits[t];

    if (free_coords.empty()) {
        return sys.alpha.row_marginal(src.index_of(digits), target_block);
    }

    const JointTable p_free =
        interventional_distribution(sys.factor_scm, Intervention{pinned}, free_names);
    Frame sub = p_free.frame();

    Frame block_frame = [&] {
        std::vector<Variable> vars;
        for (std::size_t c : target_block) vars.push_back(sys.alpha.targets()[c]);
        return Frame(vars);
    }();
    std::vector<double> dist(block_frame.cells(), 0.0);
    for (std::size_t f = 0; f < p_free.cells(); ++f) {
        const double w = p_free.at(f);
        if (w == 0.0) continue;
        for (std::size_t t = 0; t < free_coords.size(); ++t) digits[free_coords[t]] = sub.digit(f, t);
        const std::vector<double> part = sys.alpha.row_marginal(src.index_of(digits), target_block);
        for (std::size_t m = 0; m < dist.size(); ++m) dist[m] += w * part[m];
    }
    return dist;
}

CellLevels target_block_levels(const Channel& ch, const std::vector<std::size_t>& target_block) {
    std::vector<Variable> vars;
    for (std::size_t c : target_block) vars.push_back(ch.targets().at(c));
    Frame block(vars);
    CellLevels levels(block.cells(), std::vector<double>(target_block.size(), 0.0));
    for (std::size_t cell = 0; cell < block.cells(); ++cell) {
        for (std::size_t t = 0; t < target_block.size(); ++t) {
            levels[cell][t] = vars[t].domain.level(block.digit(cell, t));
        }
    }
    return levels;
}

} // namespace detail

namespace {

// Weights for the outer expectation over the pinned factor-block value.
std::vector<double> block_weights(const GmSystem& sys, const Frame& block_frame,
                                  const std::vector<std::string>& block_names,
                                  FactorWeighting weighting) {
    if (weighting == FactorWeighting::uniform) {
        return std::vector<double>(block_frame.cells(), 1.0 / double(block_frame.cells()));
    }
    return marginal(joint_distribution(sys.factor_scm), block_names).probs();
}

double block_empida_impl(const GmSystem& sys, const std::vector<std::size_t>& factor_block,
                         const std::vector<std::size_t>& target_block, DivergenceKind d,
                         FactorWeighting weighting) {
    const Frame& src = sys.alpha.source_frame();
    for (std::size_t c : factor_block) {
        if (c >= src.arity()) throw std::invalid_argument("factor index out of range");
    }
    for (std::size_t c : target_block) {
        if (c >= sys.alpha.target_frame().arity()) {
            throw std::invalid_argument("representation index out of range");
        }
    }

    std::vector<Variable> block_vars;
    std::vector<std::string> block_names;
    for (std::size_t c : factor_block) {
        block_vars.push_back(src.vars()[c]);
        block_names.push_back(src.vars()[c].name);
    }
    Frame block_frame(block_vars);

    std::vector<std::size_t> style_coords;
    std::vector<bool> in_block(src.arity(), false);
    for (std::size_t c : factor_block) in_block[c] = true;
    for (std::size_t c = 0; c < src.arity(); ++c) {
        if (!in_block[c]) style_coords.push_back(c);
    }
    std::vector<Variable> style_vars;
    for (std::size_t c : style_coords) style_vars.push_back(src.vars()[c]);
    Frame style_frame(style_vars);

    const std::vector<double> weights = block_weights(sys, block_frame, block_names, weighting);
    const CellLevels levels = detail::target_block_levels(sys.alpha, target_block);

    double result = 0.0;
    std::vector<std::size_t> block_digits(factor_block.size(), 0);
    std::vector<std::size_t> digits(src.arity(), 0);
    for (std::size_t b = 0; b < block_frame.cells(); ++b) {
        const double w = weights[b];
        if (w == 0.0 || style_coords.empty()) continue; // empty style max is 0
        for (std::size_t t = 0; t < factor_block.size(); ++t) {
            block_digits[t] = block_frame.digit(b, t);
            digits[factor_block[t]] = block_digits[t];
        }
        const std::vector<double> dist1 =
            detail::partial_intervention_dist(sys, factor_block, block_digits, target_block);
        double worst = 0.0;
        for (std::size_t s = 0; s < style_frame.cells(); ++s) {
            for (std::size_t t = 0; t < style_coords.size(); ++t) {
                digits[style_coords[t]] = style_frame.digit(s, t);
            }
            const std::vector<double> dist2 =
                sys.alpha.row_marginal(src.index_of(digits), target_block);
            worst = std::max(worst, divergence(d, dist1, dist2, levels));
        }
        result += w * worst;
    }
    return result;
}

} // namespace

double pida(const GmSystem& sys, std::size_t i, std::size_t j, const std::string& g_i,
            const Assignment& g_minus_i, DivergenceKind d) {
    const Frame& src = sys.alpha.source_frame();
    if (i >= src.arity()) throw std::invalid_argument("factor index out of range");
    if (j >= sys.alpha.target_frame().arity()) {
        throw std::invalid_argument("representation index out of range");
    }
    std::vector<std::size_t> digits(src.arity(), 0);
    std::vector<bool> covered(src.arity(), false);
    digits[i] = src.vars()[i].domain.index_of(g_i);
    covered[i] = true;
    for (const auto& [name, label] : g_minus_i) {
        const std::size_t k = src.require(name);
        if (covered[k]) throw std::invalid_argument("assignment repeats factor '" + name + "'");
        covered[k] = true;
        digits[k] = src.vars()[k].domain.index_of(label);
    }
    for (std::size_t k = 0; k < src.arity(); ++k) {
        if (!covered[k]) {
            throw std::invalid_argument("assignment must cover every factor except the pinned one");
        }
    }

    const std::vector<std::size_t> target_block{j};
    const std::vector<double> dist1 =
        detail::partial_intervention_dist(sys, {i}, {digits[i]}, target_block);
    const std::vector<double> dist2 = sys.alpha.row_marginal(src.index_of(digits), target_block);
    return divergence(d, dist1, dist2, detail::target_block_levels(sys.alpha, target_block));
}

double empida(const GmSystem& sys, std::size_t i, std::size_t j, DivergenceKind d,
              FactorWeighting weighting) {
    return block_empida_impl(sys, {i}, {j}, d, weighting);
}

double block_empida(const GmSystem& sys, const std::vector<std::size_t>& factor_block,
                    const std::vector<std::size_t>& target_block, DivergenceKind d,
                    FactorWeighting weighting) {
    if (factor_block.empty()) throw std::invalid_argument("factor block must not be empty");
    if (target_block.empty()) throw std::invalid_argument("target block must not be empty");
    return block_empida_impl(sys, factor_block, target_block, d, weighting);
}

std::vector<std::vector<double>> empida_matrix(const GmSystem& sys, DivergenceKind d,
                                               FactorWeighting weighting) {
    validate_system(sys);
    const std::size_t ni = sys.n_factors();
    const std::size_t nj = sys.n_targets();
    std::vector<std::vector<double>> matrix(ni, std::vector<double>(nj, 0.0));
    for (std::size_t i = 0; i < ni; ++i) {
        for (std::size_t j = 0; j < nj; ++j) {
            matrix[i][j] = empida(sys, i, j, d, weighting);
        }
    }
    return matrix;
}

DisentanglementVerdict disentanglement_verdict(const std::vector<std::vector<double>>& matrix,
                                               double eps) {
    if (eps < 0.0) throw std::invalid_argument("eps must be non-negative");
    DisentanglementVerdict verdict;
    if (matrix.empty()) throw std::invalid_argument("empida matrix has no factor rows");
    const std::size_t nj = matrix.front().size();
    verdict.witness.resize(nj, 0);
    verdict.max_min = 0.0;
    for (std::size_t j = 0; j < nj; ++j) {
        double best = matrix[0][j];
        std::size_t arg = 0;
        for (std::size_t i = 1; i < matrix.size(); ++i) {
            if (matrix[i][j] < best) {
                best = matrix[i][j];
                arg = i;
            }
        }
        verdict.witness[j] = arg;
        verdict.max_min = std::max(verdict.max_min, best);
    }
    verdict.disentangled = verdict.max_min <= eps;
    return verdict;
}

bool content_style_check(const GmSystem& sys, const std::vector<std::size_t>& content,
                         const std::vector<std::size_t>& target_block, DivergenceKind d,
                         double eps, FactorWeighting weighting) {
    return block_empida(sys, content, target_block, d, weighting) <= eps;
}

} // namespace alignkit
