#include "alignkit/leakage.hpp"

#include <algorithm>
#include <cmath>

namespace alignkit {

double entropy(std::span<const double> probs) {
    double h = 0.0;
    for (double p : probs) {
        if (p > 0.0) h -= p * std::log(p);
    }
    return h < 0.0 ? 0.0 : h;
}

double entropy(const JointTable& dist) {
    return entropy(std::span<const double>(dist.probs()));
}

double mutual_information(const JointTable& joint, const std::vector<std::string>& a_vars) {
    const Frame& frame = joint.frame();
    std::vector<std::size_t> a_idx;
    std::vector<bool> in_a(frame.arity(), false);
    for (const auto& name : a_vars) {
        const std::size_t k = frame.require(name);
        if (in_a[k]) throw std::invalid_argument("duplicate variable '" + name + "'");
        in_a[k] = true;
        a_idx.push_back(k);
    }
    std::vector<std::string> b_vars;
    std::vector<std::size_t> b_idx;
    for (std::size_t k = 0; k < frame.arity(); ++k) {
        if (!in_a[k]) {
            b_vars.push_back(frame.vars()[k].name);
            b_idx.push_back(k);
        }
    }
    if (a_idx.empty() || b_idx.empty()) {
        throw std::invalid_argument("mutual information needs a non-trivial split of the scope");
    }
    const JointTable pa = marginal(joint, a_vars);
    const JointTable pb = marginal(joint, b_vars);
    const Frame& fa = pa.frame();
    const Frame& fb = pb.frame();

    double mi = 0.0;
    for (std::size_t cell = 0; cell < joint.cells(); ++cell) {
        const double p = joint.at(cell);
        if (p <= 0.0) continue;
        std::size_t ca = 0, cb = 0;
        for (std::size_t t = 0; t < a_idx.size(); ++t) ca += frame.digit(cell, a_idx[t]) * fa.stride(t);
        for (std::size_t t = 0; t < b_idx.size(); ++t) cb += frame.digit(cell, b_idx[t]) * fb.stride(t);
        mi += p * std::log(p / (pa.at(ca) * pb.at(cb)));
    }
    return mi < 0.0 ? 0.0 : mi;
}

void validate_scenario(const LeakageScenario& sc) {
    const ValidationReport report = validate_scm(sc.factor_scm);
    if (!report.empty()) {
        throw std::invalid_argument("invalid factor model: " + report.front().code + " at " +
                                    report.front().location);
    }
    for (const auto& src : sc.x_channel.sources()) {
        const auto k = sc.factor_scm.find(src.name);
        if (!k || !(sc.factor_scm.variables[*k].domain == src.domain)) {
            throw std::invalid_argument("observation channel source '" + src.name +
                                        "' is not a factor model variable");
        }
    }
    // the label may only see the intervened factors
    for (const auto& src : sc.label_channel.sources()) {
        if (!sc.x_channel.source_frame().find(src.name)) {
            throw std::invalid_argument("label channel source '" + src.name +
                                        "' is not a generative factor");
        }
    }
    if (!sc.intervention_dist.frame().same_vars(sc.label_channel.source_frame())) {
        throw std::invalid_argument(
            "intervention distribution scope must equal the label channel sources");
    }
    if (std::fabs(sc.intervention_dist.mass() - 1.0) > kRowMassTol) {
        throw std::invalid_argument("intervention distribution must carry total mass 1");
    }
    if (!sc.m_channel.source_frame().same_vars(sc.x_channel.target_frame())) {
        throw std::invalid_argument(
            "representation channel sources must equal the observation variables");
    }
}

std::vector<std::size_t> intervened_factor_coords(const LeakageScenario& sc) {
    std::vector<std::size_t> coords;
    for (const auto& v : sc.label_channel.sources()) {
        coords.push_back(sc.x_channel.source_frame().require(v.name));
    }
    return coords;
}

InterventionalTables build_interventional_joint(const LeakageScenario& sc) {
    validate_scenario(sc);
    const Frame& g_frame = sc.x_channel.source_frame();
    const Frame& gi_frame = sc.intervention_dist.frame(); // intervened tuple
    const std::size_t ny = sc.label_channel.target_frame().cells();
    const std::size_t nx = sc.x_channel.target_frame().cells();
    const std::size_t nm = sc.m_channel.target_frame().cells();

    const std::vector<std::size_t> gi_coords = intervened_factor_coords(sc);
    std::vector<bool> intervened(g_frame.arity(), false);
    for (std::size_t c : gi_coords) intervened[c] = true;
    std::vector<std::size_t> free_coords;
    std::vector<std::string> free_names;
    for (std::size_t c = 0; c < g_frame.arity(); ++c) {
        if (!intervened[c]) {
            free_coords.push_back(c);
            free_names.push_back(g_frame.vars()[c].name);
        }
    }

    std::vector<double> p_xy(nx * ny, 0.0);
    std::vector<double> p_gy(gi_frame.cells() * ny, 0.0);
    std::vector<std::size_t> digits(g_frame.arity(), 0);
    for (std::size_t gi = 0; gi < gi_frame.cells(); ++gi) {
        const double q_w = sc.intervention_dist.at(gi);
        const auto& y_row = sc.label_channel.row(gi);
        for (std::size_t y = 0; y < ny; ++y) p_gy[gi * ny + y] = q_w * y_row[y];
        if (q_w == 0.0) continue;

        const Assignment pinned = gi_frame.assignment_at(gi);
        for (std::size_t t = 0; t < gi_coords.size(); ++t) {
            digits[gi_coords[t]] = gi_frame.digit(gi, t);
        }

        // the remaining factors follow the manipulated factor model
        std::vector<double> p_free{1.0};
        Frame free_frame;
        if (!free_coords.empty()) {
            const JointTable t =
                interventional_distribution(sc.factor_scm, Intervention{pinned}, free_names);
            free_frame = t.frame();
            p_free = t.probs();
        }

        for (std::size_t f = 0; f < p_free.size(); ++f) {
            const double w = q_w * p_free[f];
            if (w == 0.0) continue;
            for (std::size_t t = 0; t < free_coords.size(); ++t) {
                digits[free_coords[t]] = free_frame.digit(f, t);
            }
            const auto& x_row = sc.x_channel.row(g_frame.index_of(digits));
            for (std::size_t x = 0; x < nx; ++x) {
                const double wx = w * x_row[x];
                if (wx == 0.0) continue;
                for (std::size_t y = 0; y < ny; ++y) p_xy[x * ny + y] += wx * y_row[y];
            }
        }
    }

    std::vector<double> p_my(nm * ny, 0.0);
    for (std::size_t x = 0; x < nx; ++x) {
        const auto& m_row = sc.m_channel.row(x);
        for (std::size_t y = 0; y < ny; ++y) {
            const double w = p_xy[x * ny + y];
            if (w == 0.0) continue;
            for (std::size_t m = 0; m < nm; ++m) p_my[m * ny + y] += w * m_row[m];
        }
    }

    auto concat = [](const std::vector<Variable>& a, const std::vector<Variable>& b) {
        std::vector<Variable> out = a;
        out.insert(out.end(), b.begin(), b.end());
        return out;
    };
    InterventionalTables tables{
        JointTable(concat(sc.x_channel.targets(), sc.label_channel.targets()), std::move(p_xy)),
        sc.m_channel,
        JointTable(concat(sc.m_channel.targets(), sc.label_channel.targets()), std::move(p_my)),
        JointTable(concat(sc.label_channel.sources(), sc.label_channel.targets()), std::move(p_gy))};
    return tables;
}

namespace {

struct SweepResult {
    double objective;
    std::vector<std::vector<double>> next_q;
};

// One fixed-point pass: evaluates the objective at q and produces the
// updated classifier from the responsibility-weighted counts.
SweepResult em_sweep(const std::vector<double>& p_xy, std::size_t nx, std::size_t ny,
                     const Channel& ch, const std::vector<std::vector<double>>& q) {
    const std::size_t nm = q.size();
    SweepResult out;
    out.objective = 0.0;
    out.next_q.assign(nm, std::vector<double>(ny, 0.0));
    for (std::size_t x = 0; x < nx; ++x) {
        const auto& m_row = ch.row(x);
        for (std::size_t y = 0; y < ny; ++y) {
            const double w = p_xy[x * ny + y];
            if (w == 0.0) continue;
            double s = 0.0;
            for (std::size_t m = 0; m < nm; ++m) s += m_row[m] * q[m][y];
            if (s <= 0.0) {
                throw std::domain_error(
                    "classifier objective diverged: zero predictive mass on a supported event");
            }
            out.objective += w * std::log(s);
            const double scale = w / s;
            for (std::size_t m = 0; m < nm; ++m) {
                if (m_row[m] > 0.0) out.next_q[m][y] += scale * m_row[m] * q[m][y];
            }
        }
    }
    for (std::size_t m = 0; m < nm; ++m) {
        double mass = 0.0;
        for (double v : out.next_q[m]) mass += v;
        if (mass > 0.0) {
            for (double& v : out.next_q[m]) v /= mass;
        } else {
            out.next_q[m] = q[m]; // unreachable representation cell: keep as-is
        }
    }
    return out;
}

} // namespace

ClassifierOptimum optimize_classifier(const JointTable& p_xy, const Channel& p_m_given_x,
                                      double tol, std::size_t max_iter,
                                      const std::optional<std::vector<std::vector<double>>>& initial_q) {
    if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
    const Frame& scope = p_xy.frame();
    const Frame& x_frame = p_m_given_x.source_frame();
    if (scope.arity() <= x_frame.arity()) {
        throw std::invalid_argument("joint scope must extend the channel sources by the label");
    }
    for (std::size_t k = 0; k < x_frame.arity(); ++k) {
        if (!(scope.vars()[k].name == x_frame.vars()[k].name &&
              scope.vars()[k].domain == x_frame.vars()[k].domain)) {
            throw std::invalid_argument("joint scope must start with the channel source tuple");
        }
    }
    const std::size_t nx = x_frame.cells();
    const std::size_t ny = p_xy.cells() / nx;
    const std::size_t nm = p_m_given_x.target_frame().cells();

    ClassifierOptimum result;
    result.unreachable.assign(nm, false);

    // posterior warm start
    std::vector<std::vector<double>> q(nm, std::vector<double>(ny, 1.0 / double(ny)));
    {
        std::vector<double> p_my(nm * ny, 0.0);
        for (std::size_t x = 0; x < nx; ++x) {
            const auto& m_row = p_m_given_x.row(x);
            for (std::size_t y = 0; y < ny; ++y) {
                const double w = p_xy.at(x * ny + y);
                if (w == 0.0) continue;
                for (std::size_t m = 0; m < nm; ++m) p_my[m * ny + y] += w * m_row[m];
            }
        }
        for (std::size_t m = 0; m < nm; ++m) {
            double mass = 0.0;
            for (std::size_t y = 0; y < ny; ++y) mass += p_my[m * ny + y];
            if (mass > 0.0) {
                for (std::size_t y = 0; y < ny; ++y) q[m][y] = p_my[m * ny + y] / mass;
            } else {
                result.unreachable[m] = true; // stays uniform, never updated
            }
        }
    }
    if (initial_q) {
        if (initial_q->size() != nm) throw std::invalid_argument("initial q has wrong row count");
        for (const auto& row : *initial_q) {
            if (row.size() != ny) throw std::invalid_argument("initial q has wrong row width");
            double mass = 0.0;
            for (double v : row) {
                if (!(v >= 0.0)) throw std::invalid_argument("initial q entries must be >= 0");
                mass += v;
            }
            if (std::fabs(mass - 1.0) > kRowMassTol) {
                throw std::invalid_argument("initial q rows must sum to 1");
            }
        }
        q = *initial_q;
    }

    SweepResult sweep = em_sweep(p_xy.probs(), nx, ny, p_m_given_x, q);
    double objective = sweep.objective;
    result.iterations = 1;
    for (; result.iterations < max_iter; ++result.iterations) {
        q = std::move(sweep.next_q);
        sweep = em_sweep(p_xy.probs(), nx, ny, p_m_given_x, q);
        const double delta = sweep.objective - objective;
        if (delta < 0.0) {
            result.worst_ascent_violation = std::max(result.worst_ascent_violation, -delta);
            if (-delta > 1e-12) {
                throw std::logic_error("fixed-point ascent decreased the concave objective");
            }
        }
        objective = sweep.objective;
        if (std::fabs(delta) < tol) {
            result.converged = true;
            break;
        }
    }
    result.q = std::move(q);
    result.l_cl_star = objective;
    return result;
}

namespace {

LeakageResult leakage_from_tables(const InterventionalTables& tables, const LeakageScenario& sc,
                                  double tol, std::size_t max_iter) {
    std::vector<std::string> label_names;
    for (const auto& v : sc.label_channel.targets()) label_names.push_back(v.name);
    const double h_y = entropy(marginal(tables.p_xy, label_names));

    const ClassifierOptimum opt = optimize_classifier(tables.p_xy, tables.p_m_given_x, tol, max_iter);

    std::vector<std::string> m_names;
    for (const auto& v : tables.p_m_given_x.targets()) m_names.push_back(v.name);
    std::vector<std::string> g_names;
    for (const auto& v : sc.label_channel.sources()) g_names.push_back(v.name);

    LeakageResult result;
    result.l_cl_star = opt.l_cl_star;
    result.l_r_star = -h_y;
    result.lambda = opt.l_cl_star + h_y;
    result.lambda_bits = result.lambda / std::log(2.0);
    result.lower_bound = mutual_information(tables.p_my, m_names);
    result.upper_bound = mutual_information(tables.p_gy, g_names);
    result.jensen_lower = result.l_r_star + result.lower_bound;
    result.iterations = opt.iterations;
    result.converged = opt.converged;
    result.numerically_zero = std::fabs(result.lambda) <= 1e-9;
    result.worst_ascent_violation = opt.worst_ascent_violation;
    return result;
}

} // namespace

LeakageResult concept_leakage(const LeakageScenario& sc, double tol, std::size_t max_iter) {
    return leakage_from_tables(build_interventional_joint(sc), sc, tol, max_iter);
}

LeakageResult coordinate_leakage(const LeakageScenario& sc, const std::vector<std::size_t>& keep,
                                 double tol, std::size_t max_iter) {
    if (keep.empty()) throw std::invalid_argument("empty representation");
    LeakageScenario restricted = sc;
    restricted.m_channel = restrict_channel(sc.m_channel, {}, keep);
    return concept_leakage(restricted, tol, max_iter);
}

} // namespace alignkit
