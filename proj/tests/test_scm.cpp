#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "alignkit/scm.hpp"
#include "oracle_helpers.hpp"

using namespace alignkit;

namespace {

Scm chain_ab() {
    // A -> B, both binary
    Scm scm;
    scm.variables = {{"a", oracle::make_domain(2), {}}, {"b", oracle::make_domain(2), {"a"}}};
    scm.cpts = {{"a", {{0.3, 0.7}}}, {"b", {{0.9, 0.1}, {0.4, 0.6}}}};
    return scm;
}

bool has_violation(const ValidationReport& r, const std::string& code) {
    for (const auto& v : r) {
        if (v.code == code) return true;
    }
    return false;
}

} // namespace

TEST_CASE("validate_scm accepts a well-formed chain") {
    CHECK(validate_scm(chain_ab()).empty());
}

TEST_CASE("validate_scm reports a row-mass violation with the row index") {
    Scm scm = chain_ab();
    scm.cpts[1].rows[1] = {0.5, 0.4}; // sums to 0.9
    const auto report = validate_scm(scm);
    REQUIRE(has_violation(report, "row-mass"));
    bool names_row = false;
    for (const auto& v : report) {
        if (v.code == "row-mass" && v.location == "b/row[1]") names_row = true;
    }
    CHECK(names_row);
}

TEST_CASE("validate_scm reports cycles naming the members") {
    Scm scm;
    scm.variables = {{"a", oracle::make_domain(2), {"b"}}, {"b", oracle::make_domain(2), {"a"}}};
    scm.cpts = {{"a", {{0.5, 0.5}, {0.5, 0.5}}}, {"b", {{0.5, 0.5}, {0.5, 0.5}}}};
    const auto report = validate_scm(scm);
    REQUIRE(has_violation(report, "cycle"));
    std::size_t cycle_entries = 0;
    for (const auto& v : report) {
        if (v.code == "cycle") ++cycle_entries;
    }
    CHECK(cycle_entries == 2); // both a and b are stuck
}

TEST_CASE("validate_scm reports dangling parents and missing cpts") {
    Scm scm;
    scm.variables = {{"a", oracle::make_domain(2), {"ghost"}}};
    scm.cpts = {};
    const auto report = validate_scm(scm);
    CHECK(has_violation(report, "dangling-parent"));
    CHECK(has_violation(report, "missing-cpt"));
}

TEST_CASE("joint of a single binary variable is its prior") {
    Scm scm;
    scm.variables = {{"a", oracle::make_domain(2), {}}};
    scm.cpts = {{"a", {{0.3, 0.7}}}};
    const JointTable jt = joint_distribution(scm);
    CHECK(jt.at(0) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(jt.at(1) == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("deterministic child copies the parent's coin") {
    Scm scm;
    scm.variables = {{"a", oracle::make_domain(2), {}}, {"b", oracle::make_domain(2), {"a"}}};
    scm.cpts = {{"a", {{0.5, 0.5}}}, {"b", {{1.0, 0.0}, {0.0, 1.0}}}};
    const JointTable jt = joint_distribution(scm);
    CHECK(jt.at(Assignment{{"a", "0"}, {"b", "0"}}) == doctest::Approx(0.5));
    CHECK(jt.at(Assignment{{"a", "1"}, {"b", "1"}}) == doctest::Approx(0.5));
    CHECK(jt.at(Assignment{{"a", "0"}, {"b", "1"}}) == doctest::Approx(0.0));
}

TEST_CASE("collider joint matches the enumeration oracle") {
    std::mt19937_64 rng(7);
    Scm scm;
    scm.variables = {{"a", oracle::make_domain(2), {}},
                     {"b", oracle::make_domain(2), {}},
                     {"v", oracle::make_domain(2), {"a", "b"}}};
    scm.cpts = {{"a", {oracle::random_row(rng, 2)}},
                {"b", {oracle::random_row(rng, 2)}},
                {"v",
                 {oracle::random_row(rng, 2), oracle::random_row(rng, 2),
                  oracle::random_row(rng, 2), oracle::random_row(rng, 2)}}};
    const JointTable jt = joint_distribution(scm);
    const auto expected = oracle::joint(scm);
    REQUIRE(jt.cells() == expected.size());
    for (std::size_t cell = 0; cell < expected.size(); ++cell) {
        CHECK(jt.at(cell) == doctest::Approx(expected[cell]).epsilon(1e-12));
    }
}

TEST_CASE("joint mass is 1 for random models") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const Scm scm = oracle::random_factor_scm(rng, {2, 3, 2}, trial % 2 == 0);
        CHECK(joint_distribution(scm).mass() == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("joint rejects invalid models and oversized state spaces") {
    Scm bad = chain_ab();
    bad.cpts[0].rows[0] = {0.5, 0.4};
    CHECK_THROWS_AS(joint_distribution(bad), std::invalid_argument);

    Scm big;
    for (int k = 0; k < 5; ++k) {
        big.variables.push_back({"v" + std::to_string(k), oracle::make_domain(4), {}});
        big.cpts.push_back({"v" + std::to_string(k), {{0.25, 0.25, 0.25, 0.25}}});
    }
    // 4^5 = 1024 cells against a cap of 100
    CHECK_THROWS_WITH_AS(joint_distribution(big, 100),
                         doctest::Contains("state-space overflow"), std::runtime_error);
}

TEST_CASE("do() pins the target and drops its parents") {
    const Scm scm = chain_ab();
    const Scm pinned = apply_intervention(scm, Intervention{{{"a", "1"}}});
    CHECK(pinned.variables[0].parents.empty());
    CHECK(joint_distribution(pinned).at(Assignment{{"a", "1"}, {"b", "1"}}) ==
          doctest::Approx(0.6));
    // b's mechanism is untouched
    CHECK(pinned.cpts[1].rows == scm.cpts[1].rows);

    const Scm cut = apply_intervention(scm, Intervention{{{"b", "0"}}});
    CHECK(cut.variables[1].parents.empty()); // the a -> b link is gone
    CHECK(cut.cpts[1].rows.size() == 1);
    CHECK(cut.cpts[1].rows[0][0] == 1.0);
}

TEST_CASE("intervened joint equals the indicator-times-product formula") {
    std::mt19937_64 rng(13);
    const Scm scm = oracle::random_factor_scm(rng, {2, 2, 3}, true);
    const Intervention iv{{{"g2", "1"}}};
    const JointTable jt = joint_distribution(apply_intervention(scm, iv));
    const auto expected = oracle::intervened_joint(scm, iv);
    for (std::size_t cell = 0; cell < expected.size(); ++cell) {
        CHECK(jt.at(cell) == doctest::Approx(expected[cell]).epsilon(1e-12));
    }
}

TEST_CASE("unknown targets and out-of-domain values are rejected") {
    const Scm scm = chain_ab();
    CHECK_THROWS_AS(apply_intervention(scm, Intervention{{{"zz", "0"}}}), std::invalid_argument);
    CHECK_THROWS_AS(apply_intervention(scm, Intervention{{{"a", "7"}}}), std::invalid_argument);
}

TEST_CASE("apply_intervention is idempotent and commutes on disjoint targets") {
    std::mt19937_64 rng(17);
    const Scm scm = oracle::random_factor_scm(rng, {2, 3, 2}, true);
    const Intervention iv1{{{"g1", "1"}}};
    const Intervention iv2{{{"g3", "0"}}};

    const auto once = joint_distribution(apply_intervention(scm, iv1));
    const auto twice = joint_distribution(apply_intervention(apply_intervention(scm, iv1), iv1));
    CHECK(total_variation(once, twice) < 1e-12);

    const auto ab = joint_distribution(
        apply_intervention(apply_intervention(scm, iv1), iv2));
    const auto ba = joint_distribution(
        apply_intervention(apply_intervention(scm, iv2), iv1));
    CHECK(total_variation(ab, ba) < 1e-12);
}

TEST_CASE("marginal keeps the full scope as identity and matches the sum oracle") {
    std::mt19937_64 rng(19);
    const Scm scm = oracle::random_factor_scm(rng, {2, 3}, true);
    const JointTable jt = joint_distribution(scm);

    const JointTable full = marginal(jt, {"c", "g1", "g2"});
    CHECK(total_variation(jt, full) < 1e-15);

    const JointTable g2 = marginal(jt, {"g2"});
    const auto expected = oracle::marginal(jt.probs(), {2, 2, 3}, {2});
    for (std::size_t k = 0; k < expected.size(); ++k) {
        CHECK(g2.at(k) == doctest::Approx(expected[k]).epsilon(1e-12));
    }
    CHECK(g2.mass() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("marginal of an independent pair is the prior") {
    Scm scm;
    scm.variables = {{"a", oracle::make_domain(2), {}}, {"b", oracle::make_domain(3), {}}};
    scm.cpts = {{"a", {{0.2, 0.8}}}, {"b", {{0.5, 0.3, 0.2}}}};
    const JointTable m = marginal(joint_distribution(scm), {"b"});
    CHECK(m.at(0) == doctest::Approx(0.5));
    CHECK(m.at(1) == doctest::Approx(0.3));
    CHECK(m.at(2) == doctest::Approx(0.2));
}

TEST_CASE("conditioning matches slice-and-renormalize") {
    std::mt19937_64 rng(23);
    const Scm scm = oracle::random_factor_scm(rng, {3, 2}, true);
    const JointTable jt = joint_distribution(scm);
    const JointTable cond = condition(jt, Assignment{{"g1", "2"}});
    const auto expected = oracle::condition_slice(jt.probs(), {2, 3, 2}, {{1, 2}});
    for (std::size_t k = 0; k < expected.size(); ++k) {
        CHECK(cond.at(k) == doctest::Approx(expected[k]).epsilon(1e-12));
    }
}

TEST_CASE("conditioning on one of two independent coins leaves the other fair") {
    Scm scm;
    scm.variables = {{"a", oracle::make_domain(2), {}}, {"b", oracle::make_domain(2), {}}};
    scm.cpts = {{"a", {{0.5, 0.5}}}, {"b", {{0.5, 0.5}}}};
    const JointTable cond = condition(joint_distribution(scm), Assignment{{"a", "1"}});
    CHECK(cond.at(0) == doctest::Approx(0.5));
    CHECK(cond.at(1) == doctest::Approx(0.5));
}

TEST_CASE("zero-mass evidence is rejected") {
    Scm scm;
    scm.variables = {{"a", oracle::make_domain(2), {}}, {"b", oracle::make_domain(2), {"a"}}};
    scm.cpts = {{"a", {{1.0, 0.0}}}, {"b", {{0.5, 0.5}, {0.5, 0.5}}}};
    CHECK_THROWS_WITH_AS(condition(joint_distribution(scm), Assignment{{"a", "1"}}),
                         doctest::Contains("zero-mass evidence"), std::domain_error);
}

TEST_CASE("root intervention equals conditioning on the root") {
    std::mt19937_64 rng(29);
    Scm scm;
    scm.variables = {{"a", oracle::make_domain(3), {}}, {"b", oracle::make_domain(2), {"a"}}};
    scm.cpts = {{"a", {oracle::random_row(rng, 3)}},
                {"b", {oracle::random_row(rng, 2), oracle::random_row(rng, 2),
                       oracle::random_row(rng, 2)}}};
    const JointTable via_do =
        interventional_distribution(scm, Intervention{{{"a", "1"}}}, {"b"});
    const JointTable via_cond = condition(joint_distribution(scm), Assignment{{"a", "1"}});
    CHECK(total_variation(via_do, via_cond) < 1e-12);
}

TEST_CASE("confounded pair: do() removes the correlation that conditioning keeps") {
    // c drives both g1 and g2; intervening on g1 must not move g2
    Scm scm;
    scm.variables = {{"c", oracle::make_domain(2), {}},
                     {"g1", oracle::make_domain(2), {"c"}},
                     {"g2", oracle::make_domain(2), {"c"}}};
    scm.cpts = {{"c", {{0.5, 0.5}}},
                {"g1", {{0.9, 0.1}, {0.1, 0.9}}},
                {"g2", {{0.8, 0.2}, {0.2, 0.8}}}};
    const JointTable prior = marginal(joint_distribution(scm), {"g2"});
    const JointTable after_do =
        interventional_distribution(scm, Intervention{{{"g1", "1"}}}, {"g2"});
    CHECK(total_variation(prior, after_do) < 1e-12);

    const JointTable after_cond = condition(joint_distribution(scm), Assignment{{"g1", "1"}});
    const JointTable g2_cond = marginal(after_cond, {"g2"});
    CHECK(total_variation(prior, g2_cond) > 0.1); // correlation stays under conditioning
}

TEST_CASE("confounder-only factor models: interventions never move the siblings") {
    // every factor has only c as parent; p(g_i | c) is invariant to every
    // intervention on any subset of the other factors
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 5; ++trial) {
        const Scm scm = oracle::random_factor_scm(rng, {2, 2, 3}, true);
        std::vector<Intervention> interventions;
        for (std::size_t v2 = 0; v2 < 2; ++v2) {
            interventions.push_back({{{"g2", std::to_string(v2)}}});
            for (std::size_t v3 = 0; v3 < 3; ++v3) {
                interventions.push_back(
                    {{{"g2", std::to_string(v2)}, {"g3", std::to_string(v3)}}});
            }
        }
        for (std::size_t v3 = 0; v3 < 3; ++v3) interventions.push_back({{{"g3", std::to_string(v3)}}});
        for (const auto& iv : interventions) {
            const JointTable intervened = joint_distribution(apply_intervention(scm, iv));
            for (const std::string c_val : {"0", "1"}) {
                const JointTable lhs =
                    marginal(condition(intervened, Assignment{{"c", c_val}}), {"g1"});
                const JointTable rhs = marginal(
                    condition(joint_distribution(scm), Assignment{{"c", c_val}}), {"g1"});
                CHECK(total_variation(lhs, rhs) < 1e-12);
            }
        }
    }
}

TEST_CASE("every variable is independent of its non-descendants given its parents") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 5; ++trial) {
        // random DAG over 4 binary variables, parents drawn from earlier ones
        Scm scm;
        std::vector<std::vector<std::size_t>> parent_idx(4);
        for (std::size_t k = 0; k < 4; ++k) {
            const std::string name = "v" + std::to_string(k);
            std::vector<std::string> parents;
            for (std::size_t p = 0; p < k; ++p) {
                if (rng() % 2 == 0) {
                    parents.push_back("v" + std::to_string(p));
                    parent_idx[k].push_back(p);
                }
            }
            scm.variables.push_back({name, oracle::make_domain(2), parents});
            std::vector<std::vector<double>> rows;
            for (std::size_t r = 0; r < (std::size_t(1) << parents.size()); ++r) {
                rows.push_back(oracle::random_row(rng, 2));
            }
            scm.cpts.push_back({name, rows});
        }
        const JointTable jt = joint_distribution(scm);

        // descendants by reachability
        std::vector<std::vector<bool>> desc(4, std::vector<bool>(4, false));
        for (std::size_t k = 0; k < 4; ++k) {
            for (std::size_t p : parent_idx[k]) desc[p][k] = true;
        }
        for (std::size_t mid = 0; mid < 4; ++mid) {
            for (std::size_t a = 0; a < 4; ++a) {
                for (std::size_t b = 0; b < 4; ++b) {
                    if (desc[a][mid] && desc[mid][b]) desc[a][b] = true;
                }
            }
        }

        for (std::size_t k = 0; k < 4; ++k) {
            std::vector<std::string> nondesc;
            for (std::size_t o = 0; o < 4; ++o) {
                const bool is_parent =
                    std::find(parent_idx[k].begin(), parent_idx[k].end(), o) != parent_idx[k].end();
                if (o != k && !desc[k][o] && !is_parent) nondesc.push_back("v" + std::to_string(o));
            }
            if (nondesc.empty()) continue;
            const std::string self = "v" + std::to_string(k);

            // all parent assignments with positive mass
            const std::size_t n_rows = std::size_t(1) << parent_idx[k].size();
            for (std::size_t row = 0; row < n_rows; ++row) {
                Assignment pa;
                for (std::size_t t = 0; t < parent_idx[k].size(); ++t) {
                    const std::size_t digit = (row >> (parent_idx[k].size() - 1 - t)) & 1;
                    pa.emplace_back("v" + std::to_string(parent_idx[k][t]), std::to_string(digit));
                }
                JointTable sliced = jt;
                try {
                    if (!pa.empty()) sliced = condition(jt, pa);
                } catch (const std::domain_error&) {
                    continue; // zero-mass parent context
                }
                std::vector<std::string> both = nondesc;
                both.push_back(self);
                const JointTable joint_part = marginal(sliced, both);
                const JointTable p_self = marginal(sliced, {self});
                const JointTable p_nd = marginal(sliced, nondesc);
                std::vector<double> factored(joint_part.cells());
                for (std::size_t cell = 0; cell < joint_part.cells(); ++cell) {
                    factored[cell] = p_nd.at(cell / 2) * p_self.at(cell % 2);
                }
                CHECK(oracle::tv(joint_part.probs(), factored) < 1e-9);
            }
        }
    }
}

TEST_CASE("the cell cap is overridable through the environment") {
    Scm scm;
    for (int k = 0; k < 3; ++k) {
        scm.variables.push_back({"v" + std::to_string(k), oracle::make_domain(2), {}});
        scm.cpts.push_back({"v" + std::to_string(k), {{0.5, 0.5}}});
    }
    setenv("ALIGNKIT_MAX_CELLS", "4", 1);
    CHECK(default_max_cells() == 4);
    CHECK_THROWS_AS(joint_distribution(scm), std::runtime_error);
    unsetenv("ALIGNKIT_MAX_CELLS");
    CHECK(default_max_cells() == (std::size_t{1} << 24));
    CHECK_NOTHROW(joint_distribution(scm));
}

TEST_CASE("Markov property: variables are independent of non-descendants given parents") {
    std::mt19937_64 rng(37);
    // chain with a fork: a -> b -> d, a -> c
    Scm scm;
    scm.variables = {{"a", oracle::make_domain(2), {}},
                     {"b", oracle::make_domain(2), {"a"}},
                     {"c", oracle::make_domain(2), {"a"}},
                     {"d", oracle::make_domain(2), {"b"}}};
    scm.cpts = {{"a", {oracle::random_row(rng, 2)}},
                {"b", {oracle::random_row(rng, 2), oracle::random_row(rng, 2)}},
                {"c", {oracle::random_row(rng, 2), oracle::random_row(rng, 2)}},
                {"d", {oracle::random_row(rng, 2), oracle::random_row(rng, 2)}}};
    const JointTable jt = joint_distribution(scm);

    // d is independent of {a, c} given its parent b
    for (const std::string b_val : {"0", "1"}) {
        const JointTable given_b = condition(jt, Assignment{{"b", b_val}});
        const JointTable joint_ad = marginal(given_b, {"a", "c", "d"});
        const JointTable pd = marginal(given_b, {"d"});
        const JointTable pac = marginal(given_b, {"a", "c"});
        // product of the factored conditionals
        std::vector<double> product(joint_ad.cells(), 0.0);
        for (std::size_t cell = 0; cell < joint_ad.cells(); ++cell) {
            const std::size_t ac = cell / pd.cells();
            const std::size_t d = cell % pd.cells();
            product[cell] = pac.at(ac) * pd.at(d);
        }
        CHECK(oracle::tv(joint_ad.probs(), product) < 1e-9);
    }
}

TEST_CASE("expected_level uses the numeric embedding") {
    Scm scm;
    Domain dom{{{"lo", -1.0}, {"mid", 0.0}, {"hi", 2.0}}, true};
    scm.variables = {{"a", dom, {}}};
    scm.cpts = {{"a", {{0.25, 0.5, 0.25}}}};
    const JointTable jt = joint_distribution(scm);
    CHECK(jt.expected_level(0) == doctest::Approx(-0.25 + 0.5));
}
