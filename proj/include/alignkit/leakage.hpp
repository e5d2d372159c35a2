#ifndef ALIGNKIT_LEAKAGE_HPP
#define ALIGNKIT_LEAKAGE_HPP

#include <optional>
#include <vector>

#include "alignkit/channel.hpp"
#include "alignkit/joint_table.hpp"
#include "alignkit/scm.hpp"

namespace alignkit {

/// Shannon entropy in nats, with 0 log 0 = 0.
double entropy(std::span<const double> probs);
double entropy(const JointTable& dist);

/// Mutual information in nats between the scope variables listed in
/// `a_vars` and the remaining scope of the joint. Clamped at 0.
double mutual_information(const JointTable& joint, const std::vector<std::string>& a_vars);

/// Generative setup for leakage measurement. The factor model covers
/// (confounders, informative factors, nuisance factors); the label depends
/// only on the channel scope of `label_channel`, which also defines the
/// intervened factor set. `intervention_dist` weights the interventions
/// and must share that scope.
struct LeakageScenario {
    Scm factor_scm;
    Channel x_channel;       // factors -> observation variables
    Channel label_channel;   // intervened factors -> label
    Channel m_channel;       // observation -> representation
    JointTable intervention_dist;
};

/// Checks scope wiring: label/intervention scopes agree and are factor
/// variables, x sources cover the factors, m sources equal the x targets.
void validate_scenario(const LeakageScenario& sc);

/// Indices of the intervened factors inside the x-channel source tuple,
/// and the complementary informative-factor indices.
std::vector<std::size_t> intervened_factor_coords(const LeakageScenario& sc);

struct InterventionalTables {
    JointTable p_xy;      // over (observation vars..., label)
    Channel p_m_given_x;  // the (possibly restricted) representation channel
    JointTable p_my;      // over (representation vars..., label)
    JointTable p_gy;      // over (intervened factors..., label)
};

/// Exact data distribution induced by intervening on the label-relevant
/// factors with weights q: the remaining factors follow their
/// interventional (confounder-averaged) distribution, the observation and
/// the label are then generated per the channels.
InterventionalTables build_interventional_joint(const LeakageScenario& sc);

struct ClassifierOptimum {
    std::vector<std::vector<double>> q; // q[m][y]
    double l_cl_star = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    double worst_ascent_violation = 0.0; // most negative objective step observed
    std::vector<bool> unreachable;       // representation cells with zero mass
};

/// Maximizes E_(x,y) log sum_m p(m|x) q(y|m) over row-stochastic q by a
/// multiplicative fixed point: responsibilities proportional to
/// p(m|x) q(y|m), then q(y|m) proportional to the responsibility-weighted
/// counts. The objective is concave, each step is non-decreasing, and the
/// iterate converges to the global maximum. Warm start: the posterior
/// p(y|m), which is already optimal when the channel is deterministic.
ClassifierOptimum optimize_classifier(
    const JointTable& p_xy, const Channel& p_m_given_x, double tol = 1e-10,
    std::size_t max_iter = 100000,
    const std::optional<std::vector<std::vector<double>>>& initial_q = std::nullopt);

struct LeakageResult {
    double lambda = 0.0;        // excess optimal log-likelihood over -H(Y)
    double lambda_bits = 0.0;
    double lower_bound = 0.0;   // I(representation; label)
    double upper_bound = 0.0;   // I(intervened factors; label)
    double l_cl_star = 0.0;
    double l_r_star = 0.0;      // always -H(Y)
    double jensen_lower = 0.0;  // -H(Y) + I(representation; label)
    std::size_t iterations = 0;
    bool converged = false;
    bool numerically_zero = false;
    double worst_ascent_violation = 0.0;
};

/// Exact concept leakage: lambda = max classifier log-likelihood + H(Y).
/// Slightly negative raw values (within optimizer tolerance) are reported
/// as-is with the numerically_zero flag set.
LeakageResult concept_leakage(const LeakageScenario& sc, double tol = 1e-10,
                              std::size_t max_iter = 100000);

/// Leakage of the representation restricted to the coordinates in `keep`.
LeakageResult coordinate_leakage(const LeakageScenario& sc, const std::vector<std::size_t>& keep,
                                 double tol = 1e-10, std::size_t max_iter = 100000);

} // namespace alignkit

#endif
