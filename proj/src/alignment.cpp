#include "alignkit/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace alignkit {

namespace {

constexpr double kStrictGap = 1e-12;     // minimum step for strict monotonicity
constexpr double kEmbeddingGap = 1e-9;   // minimum separation for injectivity

std::vector<double> average_ranks(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t k = 0;
    while (k < n) {
        std::size_t e = k;
        while (e + 1 < n && x[order[e + 1]] == x[order[k]]) ++e;
        const double rank = 0.5 * double(k + e) + 1.0; // average of 1-based ranks k+1..e+1
        for (std::size_t t = k; t <= e; ++t) ranks[order[t]] = rank;
        k = e + 1;
    }
    return ranks;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = double(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= n;
    my /= n;
    double cxy = 0.0, cxx = 0.0, cyy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        cxy += (x[k] - mx) * (y[k] - my);
        cxx += (x[k] - mx) * (x[k] - mx);
        cyy += (y[k] - my) * (y[k] - my);
    }
    if (cxx <= 0.0 || cyy <= 0.0) throw std::domain_error("degenerate traversal");
    return std::clamp(cxy / std::sqrt(cxx * cyy), -1.0, 1.0);
}

// Contexts a traversal is evaluated at: the reference context only, or all
// assignments of the non-traversed factors in strict mode.
std::vector<Assignment> traversal_contexts(const GmSystem& sys, std::size_t factor,
                                           const D2Options& opts) {
    const Frame& src = sys.alpha.source_frame();
    if (!opts.strict_contexts) {
        Assignment ref = opts.reference ? *opts.reference : mode_context(sys, factor);
        Assignment ctx;
        for (const auto& [name, label] : ref) {
            if (src.require(name) != factor) ctx.emplace_back(name, label);
        }
        return {ctx};
    }
    std::vector<Variable> others;
    for (std::size_t k = 0; k < src.arity(); ++k) {
        if (k != factor) others.push_back(src.vars()[k]);
    }
    if (others.empty()) return {Assignment{}};
    Frame of(others);
    std::vector<Assignment> out;
    out.reserve(of.cells());
    for (std::size_t c = 0; c < of.cells(); ++c) out.push_back(of.assignment_at(c));
    return out;
}

// Expected level of target coordinate j when all factors are pinned.
double traversal_embedding(const GmSystem& sys, std::size_t factor, std::size_t value,
                           const Assignment& context, std::size_t j) {
    const Frame& src = sys.alpha.source_frame();
    Assignment full = context;
    full.emplace_back(src.vars()[factor].name, src.vars()[factor].domain.values[value].label);
    return expected_embedding(sys.alpha, full, {j})[0];
}

struct TraversalVerdict {
    bool passed;
    MonotoneDirection direction;
};

TraversalVerdict classify_traversal(const std::vector<double>& e, bool ordered) {
    if (e.size() < 2) return {true, MonotoneDirection::not_applicable};
    if (!ordered) {
        for (std::size_t a = 0; a < e.size(); ++a) {
            for (std::size_t b = a + 1; b < e.size(); ++b) {
                if (std::fabs(e[a] - e[b]) <= kEmbeddingGap) {
                    return {false, MonotoneDirection::not_applicable};
                }
            }
        }
        return {true, MonotoneDirection::not_applicable};
    }
    bool inc = true, dec = true;
    for (std::size_t k = 1; k < e.size(); ++k) {
        if (!(e[k] - e[k - 1] > kStrictGap)) inc = false;
        if (!(e[k - 1] - e[k] > kStrictGap)) dec = false;
    }
    if (inc) return {true, MonotoneDirection::increasing};
    if (dec) return {true, MonotoneDirection::decreasing};
    return {false, MonotoneDirection::not_applicable};
}

} // namespace

Assignment mode_context(const GmSystem& sys, std::size_t factor) {
    const Frame& src = sys.alpha.source_frame();
    Assignment out;
    if (src.arity() == 1) {
        return src.assignment_at(0);
    }
    std::vector<std::string> others;
    for (std::size_t k = 0; k < src.arity(); ++k) {
        if (k != factor) others.push_back(src.vars()[k].name);
    }
    const JointTable m = marginal(joint_distribution(sys.factor_scm), others);
    std::size_t best = 0;
    for (std::size_t c = 1; c < m.cells(); ++c) {
        if (m.at(c) > m.at(best)) best = c; // first max wins
    }
    Assignment ctx = m.frame().assignment_at(best);
    // Return a full factor assignment for convenience; the traversed factor
    // gets its first domain value and is ignored by callers.
    Assignment full;
    for (std::size_t k = 0; k < src.arity(); ++k) {
        if (k == factor) {
            full.emplace_back(src.vars()[k].name, src.vars()[k].domain.values[0].label);
        } else {
            for (const auto& [name, label] : ctx) {
                if (name == src.vars()[k].name) full.emplace_back(name, label);
            }
        }
    }
    return full;
}

PiDiscovery discover_pi(const std::vector<std::vector<double>>& empida,
                        const std::vector<std::size_t>& interpretable, double eps) {
    if (eps < 0.0) throw std::invalid_argument("eps must be non-negative");
    if (empida.empty()) throw std::invalid_argument("empida matrix has no factor rows");
    if (interpretable.empty()) throw std::invalid_argument("interpretable set must not be empty");
    // ties break toward the lowest factor index
    std::vector<std::size_t> candidates = interpretable;
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    for (std::size_t i : candidates) {
        if (i >= empida.size()) throw std::invalid_argument("interpretable index out of range");
    }
    const std::size_t nj = empida.front().size();
    PiDiscovery out;
    out.pi.resize(nj, 0);
    out.residual.resize(nj, 0.0);
    out.valid = true;
    for (std::size_t j = 0; j < nj; ++j) {
        std::size_t arg = candidates.front();
        double best = empida[arg][j];
        for (std::size_t i : candidates) {
            if (empida[i][j] < best) {
                best = empida[i][j];
                arg = i;
            }
        }
        out.pi[j] = arg;
        out.residual[j] = best;
        if (best > eps) out.valid = false;
    }
    out.surjective = true;
    for (std::size_t i : candidates) {
        if (std::find(out.pi.begin(), out.pi.end(), i) == out.pi.end()) {
            out.surjective = false;
            break;
        }
    }
    return out;
}

std::vector<D2Record> check_d2_monotone(const GmSystem& sys,
                                        const std::vector<std::size_t>& pi_map,
                                        const D2Options& opts) {
    validate_system(sys);
    if (pi_map.size() != sys.n_targets()) {
        throw std::invalid_argument("pi map must assign every representation");
    }
    std::vector<D2Record> records(pi_map.size());
    for (std::size_t j = 0; j < pi_map.size(); ++j) {
        const std::size_t f = pi_map[j];
        if (f >= sys.n_factors()) throw std::invalid_argument("pi map index out of range");
        const Domain& dom = sys.alpha.sources()[f].domain;
        const auto contexts = traversal_contexts(sys, f, opts);

        bool passed = true;
        MonotoneDirection direction = MonotoneDirection::not_applicable;
        bool first = true;
        for (const auto& ctx : contexts) {
            std::vector<double> e(dom.size());
            for (std::size_t v = 0; v < dom.size(); ++v) {
                e[v] = traversal_embedding(sys, f, v, ctx, j);
            }
            const TraversalVerdict verdict = classify_traversal(e, dom.ordered);
            if (!verdict.passed) {
                passed = false;
                direction = MonotoneDirection::not_applicable;
                break;
            }
            if (first) {
                direction = verdict.direction;
                first = false;
            } else if (verdict.direction != direction) {
                // strict mode: the direction must agree across contexts
                passed = false;
                direction = MonotoneDirection::not_applicable;
                break;
            }
        }
        records[j].passed = passed;
        records[j].direction = passed ? direction : MonotoneDirection::not_applicable;
    }
    return records;
}

double spearman_d2_score(const GmSystem& sys, const std::vector<std::size_t>& pi_map,
                         std::size_t i) {
    validate_system(sys);
    if (i >= sys.n_factors()) throw std::invalid_argument("factor index out of range");
    const Domain& dom = sys.alpha.sources()[i].domain;
    if (dom.size() < 3) throw std::domain_error("degenerate traversal: fewer than 3 domain values");

    std::vector<std::size_t> coords;
    for (std::size_t j = 0; j < pi_map.size(); ++j) {
        if (pi_map[j] == i) coords.push_back(j);
    }
    if (coords.empty()) {
        throw std::invalid_argument("factor has no associated representations under pi");
    }

    const Assignment ref = mode_context(sys, i);
    Assignment ctx;
    const Frame& src = sys.alpha.source_frame();
    for (const auto& [name, label] : ref) {
        if (src.require(name) != i) ctx.emplace_back(name, label);
    }

    std::vector<std::vector<double>> emb(dom.size());
    for (std::size_t v = 0; v < dom.size(); ++v) {
        Assignment full = ctx;
        full.emplace_back(src.vars()[i].name, dom.values[v].label);
        emb[v] = expected_embedding(sys.alpha, full, coords);
    }

    std::vector<double> level_d2;
    std::vector<double> emb_d2;
    for (std::size_t a = 0; a < dom.size(); ++a) {
        for (std::size_t b = a + 1; b < dom.size(); ++b) {
            const double dl = dom.values[a].level - dom.values[b].level;
            level_d2.push_back(dl * dl);
            double de = 0.0;
            for (std::size_t t = 0; t < coords.size(); ++t) {
                de += (emb[a][t] - emb[b][t]) * (emb[a][t] - emb[b][t]);
            }
            emb_d2.push_back(de);
        }
    }
    const std::vector<double> rx = average_ranks(level_d2);
    const std::vector<double> ry = average_ranks(emb_d2);
    if (rx == ry) return 1.0; // identical rankings are a perfect match by definition
    return pearson(rx, ry);
}

namespace {

struct Scaled {
    std::vector<std::vector<double>> x; // [sample][feature]
    std::vector<std::vector<double>> y; // [sample][factor]
    std::vector<double> w;              // normalized
};

DciResult dci_core(const Scaled& data, double lambda, const DciOptions& opts) {
    const std::size_t n = data.x.size();
    const std::size_t nf = n ? data.x.front().size() : 0;
    const std::size_t ni = n ? data.y.front().size() : 0;

    // weighted column means
    std::vector<double> mx(nf, 0.0), my(ni, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t j = 0; j < nf; ++j) mx[j] += data.w[s] * data.x[s][j];
        for (std::size_t i = 0; i < ni; ++i) my[i] += data.w[s] * data.y[s][i];
    }
    std::vector<double> z(nf, 0.0); // weighted squared norms of centered features
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t j = 0; j < nf; ++j) {
            const double c = data.x[s][j] - mx[j];
            z[j] += data.w[s] * c * c;
        }
    }

    DciResult result;
    result.coefficients.assign(nf, std::vector<double>(ni, 0.0));
    result.converged = true;

    std::vector<double> rmse(ni, 0.0), sd(ni, 0.0);
    std::size_t worst_sweeps = 0;
    for (std::size_t i = 0; i < ni; ++i) {
        std::vector<double> r(n);
        double var = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            r[s] = data.y[s][i] - my[i];
            var += data.w[s] * r[s] * r[s];
        }
        sd[i] = std::sqrt(var);

        std::vector<double> beta(nf, 0.0);
        std::size_t sweep = 0;
        bool done = (nf == 0);
        for (; sweep < opts.max_sweeps && !done; ++sweep) {
            double max_delta = 0.0;
            for (std::size_t j = 0; j < nf; ++j) {
                if (z[j] <= 1e-15) continue;
                double rho = beta[j] * z[j];
                for (std::size_t s = 0; s < n; ++s) {
                    rho += data.w[s] * (data.x[s][j] - mx[j]) * r[s];
                }
                const double soft = std::fabs(rho) <= lambda
                                        ? 0.0
                                        : (rho > 0.0 ? rho - lambda : rho + lambda);
                const double next = soft / z[j];
                const double delta = next - beta[j];
                if (delta != 0.0) {
                    for (std::size_t s = 0; s < n; ++s) r[s] -= delta * (data.x[s][j] - mx[j]);
                    beta[j] = next;
                }
                max_delta = std::max(max_delta, std::fabs(delta));
            }
            if (max_delta < opts.tol) done = true;
        }
        worst_sweeps = std::max(worst_sweeps, sweep);
        if (!done) result.converged = false;

        double mse = 0.0;
        for (std::size_t s = 0; s < n; ++s) mse += data.w[s] * r[s] * r[s];
        rmse[i] = std::sqrt(std::max(0.0, mse));
        for (std::size_t j = 0; j < nf; ++j) result.coefficients[j][i] = beta[j];
    }
    result.sweeps = worst_sweeps;

    // informativeness: 1 - RMSE relative to the predict-the-mean baseline
    double nrmse_sum = 0.0;
    std::size_t nrmse_count = 0;
    for (std::size_t i = 0; i < ni; ++i) {
        if (sd[i] <= 1e-15) continue; // constant factor carries no information to recover
        nrmse_sum += rmse[i] / sd[i];
        ++nrmse_count;
    }
    result.informativeness = nrmse_count ? 1.0 - nrmse_sum / double(nrmse_count) : 1.0;

    // dispersion of |B| rows: 1 - normalized entropy, weighted by row mass
    double mass_total = 0.0;
    double score_total = 0.0;
    for (std::size_t j = 0; j < nf; ++j) {
        double mass = 0.0;
        for (std::size_t i = 0; i < ni; ++i) mass += std::fabs(result.coefficients[j][i]);
        if (mass <= 0.0) continue; // all-zero rows score 0 and carry no weight
        double h = 0.0;
        for (std::size_t i = 0; i < ni; ++i) {
            const double p = std::fabs(result.coefficients[j][i]) / mass;
            if (p > 0.0) h -= p * std::log(p);
        }
        const double row_score = ni > 1 ? 1.0 - h / std::log(double(ni)) : 1.0;
        score_total += mass * row_score;
        mass_total += mass;
    }
    result.disentanglement_score = mass_total > 0.0 ? score_total / mass_total : 0.0;

    if (!result.converged) throw DciNonConvergence(std::move(result));
    return result;
}

double rescale(double level, double lo, double hi) {
    return hi > lo ? (level - lo) / (hi - lo) : 0.0;
}

} // namespace

DciResult linear_dci(const GmSystem& sys, double l1_lambda, const DciOptions& opts) {
    validate_system(sys);
    if (l1_lambda < 0.0) throw std::invalid_argument("l1 penalty must be non-negative");

    const Frame& src = sys.alpha.source_frame();
    const Frame& tgt = sys.alpha.target_frame();
    std::vector<std::pair<double, double>> src_range(src.arity()), tgt_range(tgt.arity());
    auto domain_range = [](const Domain& d) {
        double lo = d.values.front().level, hi = lo;
        for (const auto& v : d.values) {
            lo = std::min(lo, v.level);
            hi = std::max(hi, v.level);
        }
        return std::make_pair(lo, hi);
    };
    for (std::size_t k = 0; k < src.arity(); ++k) src_range[k] = domain_range(src.vars()[k].domain);
    for (std::size_t k = 0; k < tgt.arity(); ++k) tgt_range[k] = domain_range(tgt.vars()[k].domain);

    const std::vector<double> pg =
        marginal(joint_distribution(sys.factor_scm),
                 [&] {
                     std::vector<std::string> names;
                     for (const auto& v : sys.alpha.sources()) names.push_back(v.name);
                     return names;
                 }())
            .probs();

    Scaled data;
    for (std::size_t g = 0; g < src.cells(); ++g) {
        if (pg[g] == 0.0) continue;
        std::vector<double> y(src.arity());
        for (std::size_t k = 0; k < src.arity(); ++k) {
            y[k] = rescale(src.vars()[k].domain.level(src.digit(g, k)), src_range[k].first,
                           src_range[k].second);
        }
        const auto& row = sys.alpha.row(g);
        for (std::size_t m = 0; m < row.size(); ++m) {
            if (row[m] == 0.0) continue;
            std::vector<double> x(tgt.arity());
            for (std::size_t k = 0; k < tgt.arity(); ++k) {
                x[k] = rescale(tgt.vars()[k].domain.level(tgt.digit(m, k)), tgt_range[k].first,
                               tgt_range[k].second);
            }
            data.x.push_back(std::move(x));
            data.y.push_back(y);
            data.w.push_back(pg[g] * row[m]);
        }
    }
    double wsum = 0.0;
    for (double w : data.w) wsum += w;
    for (double& w : data.w) w /= wsum;
    return dci_core(data, l1_lambda, opts);
}

DciResult linear_dci(const std::vector<std::vector<double>>& features,
                     const std::vector<std::vector<double>>& targets,
                     const std::vector<double>& weights, double l1_lambda,
                     const DciOptions& opts) {
    if (features.size() != targets.size() || features.empty()) {
        throw std::invalid_argument("need matching, non-empty feature/target rows");
    }
    if (l1_lambda < 0.0) throw std::invalid_argument("l1 penalty must be non-negative");
    Scaled data;
    data.x = features;
    data.y = targets;
    data.w = weights.empty() ? std::vector<double>(features.size(), 1.0) : weights;
    if (data.w.size() != data.x.size()) {
        throw std::invalid_argument("weight count does not match the sample count");
    }
    double wsum = 0.0;
    for (double w : data.w) {
        if (!(w >= 0.0)) throw std::invalid_argument("weights must be non-negative");
        wsum += w;
    }
    if (wsum <= 0.0) throw std::invalid_argument("weights must not all vanish");
    for (double& w : data.w) w /= wsum;

    auto column_rescale = [](std::vector<std::vector<double>>& rows) {
        if (rows.empty()) return;
        const std::size_t cols = rows.front().size();
        for (std::size_t c = 0; c < cols; ++c) {
            double lo = rows.front()[c], hi = lo;
            for (const auto& r : rows) {
                lo = std::min(lo, r[c]);
                hi = std::max(hi, r[c]);
            }
            for (auto& r : rows) r[c] = rescale(r[c], lo, hi);
        }
    };
    column_rescale(data.x);
    column_rescale(data.y);
    return dci_core(data, l1_lambda, opts);
}

BlockAlignmentReport check_block_alignment(const GmSystem& sys, const BlockStructure& blocks,
                                           DivergenceKind d, double eps,
                                           FactorWeighting weighting) {
    validate_system(sys);
    validate_blocks(blocks, sys.n_factors(), sys.n_targets());

    BlockAlignmentReport report;
    report.d1_ok = true;
    report.d2_ok = true;
    for (std::size_t b = 0; b < blocks.target_blocks.size(); ++b) {
        const auto& target_block = blocks.target_blocks[b];
        const auto& source_block = blocks.source_blocks[blocks.pi[b]];

        const double v = block_empida(sys, source_block, target_block, d, weighting);
        report.d1_value.push_back(v);
        report.d1_per_block.push_back(v <= eps);
        if (v > eps) report.d1_ok = false;

        // first-moment invertibility: distinct block values must produce
        // separated expected embeddings
        std::vector<Variable> block_vars;
        for (std::size_t c : source_block) block_vars.push_back(sys.alpha.sources()[c]);
        Frame block_frame(block_vars);
        const CellLevels levels = detail::target_block_levels(sys.alpha, target_block);
        std::vector<std::vector<double>> embeddings;
        std::vector<std::size_t> digits(source_block.size());
        for (std::size_t cell = 0; cell < block_frame.cells(); ++cell) {
            for (std::size_t t = 0; t < source_block.size(); ++t) digits[t] = block_frame.digit(cell, t);
            const std::vector<double> dist =
                detail::partial_intervention_dist(sys, source_block, digits, target_block);
            std::vector<double> e(target_block.size(), 0.0);
            for (std::size_t m = 0; m < dist.size(); ++m) {
                for (std::size_t t = 0; t < target_block.size(); ++t) e[t] += dist[m] * levels[m][t];
            }
            embeddings.push_back(std::move(e));
        }
        bool injective = true;
        for (std::size_t a = 0; a < embeddings.size() && injective; ++a) {
            for (std::size_t c = a + 1; c < embeddings.size(); ++c) {
                double gap = 0.0;
                for (std::size_t t = 0; t < target_block.size(); ++t) {
                    gap = std::max(gap, std::fabs(embeddings[a][t] - embeddings[c][t]));
                }
                if (!(gap > kEmbeddingGap)) {
                    injective = false;
                    break;
                }
            }
        }
        report.d2_per_block.push_back(injective);
        if (!injective) report.d2_ok = false;
    }
    report.aligned = report.d1_ok && report.d2_ok;
    return report;
}

AlignmentReport alignment_report(const GmSystem& sys, const std::vector<std::size_t>& interpretable,
                                 const AlignmentOptions& opts) {
    AlignmentReport report;
    report.empida = empida_matrix(sys, opts.divergence, opts.weighting);
    report.pi = discover_pi(report.empida, interpretable, opts.eps);
    report.d1_ok = report.pi.valid && report.pi.surjective;
    report.d2 = check_d2_monotone(sys, report.pi.pi, opts.d2);

    for (std::size_t j = 0; j < report.d2.size(); ++j) {
        try {
            report.d2[j].spearman = spearman_d2_score(sys, report.pi.pi, report.pi.pi[j]);
        } catch (const std::domain_error&) {
            report.d2[j].spearman = std::nullopt;
        }
    }

    report.aligned = report.d1_ok;
    for (const auto& rec : report.d2) {
        if (!rec.passed) report.aligned = false;
    }

    if (opts.with_dci) {
        report.dci = linear_dci(sys, opts.dci_lambda, opts.dci_opts);
    }
    return report;
}

} // namespace alignkit
