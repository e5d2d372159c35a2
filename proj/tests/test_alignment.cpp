#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "alignkit/alignment.hpp"
#include "oracle_helpers.hpp"

using namespace alignkit;

namespace {

constexpr auto kTv = DivergenceKind::total_variation;

GmSystem identity_system(std::mt19937_64& rng, std::size_t n, std::size_t dom_size) {
    std::vector<std::size_t> sizes(n, dom_size);
    const Scm scm = oracle::random_factor_scm(rng, sizes, true);
    const auto sources = oracle::factor_vars(scm, n);
    const auto targets = oracle::rep_vars(sizes);
    return GmSystem{scm, identity_channel(sources, targets)};
}

// dumb rank-then-correlate oracle for spearman cross-checks
double spearman_oracle(std::vector<double> x, std::vector<double> y) {
    auto rank = [](const std::vector<double>& v) {
        std::vector<double> r(v.size());
        for (std::size_t a = 0; a < v.size(); ++a) {
            double less = 0.0, equal = 0.0;
            for (std::size_t b = 0; b < v.size(); ++b) {
                if (v[b] < v[a]) ++less;
                if (v[b] == v[a]) ++equal;
            }
            r[a] = less + (equal + 1.0) / 2.0;
        }
        return r;
    };
    const auto rx = rank(x);
    const auto ry = rank(y);
    const double n = double(x.size());
    double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double cxy = 0.0, cxx = 0.0, cyy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        cxy += (rx[k] - mx) * (ry[k] - my);
        cxx += (rx[k] - mx) * (rx[k] - mx);
        cyy += (ry[k] - my) * (ry[k] - my);
    }
    return cxy / std::sqrt(cxx * cyy);
}

} // namespace

TEST_CASE("discover_pi on an identity system is the identity and surjective") {
    std::mt19937_64 rng(3);
    const GmSystem sys = identity_system(rng, 3, 2);
    const auto pi = discover_pi(empida_matrix(sys, kTv), {0, 1, 2}, 1e-9);
    CHECK(pi.valid);
    CHECK(pi.surjective);
    CHECK(pi.pi == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("two copies of one factor keep pi valid but break surjectivity") {
    std::mt19937_64 rng(5);
    const Scm scm = oracle::random_factor_scm(rng, {2, 2}, true);
    const auto sources = oracle::factor_vars(scm, 2);
    const auto targets = oracle::rep_vars({2, 2});
    // both coordinates copy g1
    const Channel alpha = deterministic_channel(sources, targets, [](std::size_t g) {
        const std::size_t g1 = (g >> 1) & 1;
        return g1 * 2 + g1;
    });
    const auto pi = discover_pi(empida_matrix({scm, alpha}, kTv), {0, 1}, 1e-9);
    CHECK(pi.valid);
    CHECK(!pi.surjective);
    CHECK(pi.pi == std::vector<std::size_t>{0, 0});
}

TEST_CASE("discover_pi recovers permutations") {
    std::mt19937_64 rng(7);
    const Scm scm = oracle::random_factor_scm(rng, {2, 2, 2}, false);
    const auto sources = oracle::factor_vars(scm, 3);
    const auto targets = oracle::rep_vars({2, 2, 2});
    // m1 = g2, m2 = g3, m3 = g1
    const Channel alpha = deterministic_channel(sources, targets, [](std::size_t g) {
        const std::size_t g1 = (g >> 2) & 1, g2 = (g >> 1) & 1, g3 = g & 1;
        return g2 * 4 + g3 * 2 + g1;
    });
    const auto pi = discover_pi(empida_matrix({scm, alpha}, kTv), {0, 1, 2}, 1e-9);
    CHECK(pi.valid);
    CHECK(pi.surjective);
    CHECK(pi.pi == std::vector<std::size_t>{1, 2, 0});
}

TEST_CASE("discover_pi breaks ties toward the lowest factor index") {
    const std::vector<std::vector<double>> tied{{0.0, 0.5}, {0.0, 0.0}};
    const auto pi = discover_pi(tied, {1, 0}, 1e-9); // unsorted interpretable set
    CHECK(pi.pi == std::vector<std::size_t>{0, 1});
    CHECK(pi.valid);
    CHECK(pi.surjective);
}

TEST_CASE("d2 traversal classifies identity, negation and fold maps") {
    std::mt19937_64 rng(11);
    Scm scm;
    scm.variables = {{"g1", Domain{{{"-1", -1.0}, {"0", 0.0}, {"1", 1.0}}, true}, {}}};
    scm.cpts = {{"g1", {oracle::random_row(rng, 3)}}};
    std::vector<Variable> sources = {scm.variables[0]};
    sources[0].parents.clear();

    SUBCASE("identity is increasing") {
        const Channel alpha =
            deterministic_channel(sources, oracle::rep_vars({3}), [](std::size_t s) { return s; });
        const auto d2 = check_d2_monotone({scm, alpha}, {0});
        CHECK(d2[0].passed);
        CHECK(d2[0].direction == MonotoneDirection::increasing);
    }
    SUBCASE("negation is decreasing") {
        const std::vector<Variable> neg_target{
            {"m1", Domain{{{"-1", -1.0}, {"0", 0.0}, {"1", 1.0}}, true}, {}}};
        const Channel alpha =
            deterministic_channel(sources, neg_target, [](std::size_t s) { return 2 - s; });
        const auto d2 = check_d2_monotone({scm, alpha}, {0});
        CHECK(d2[0].passed);
        CHECK(d2[0].direction == MonotoneDirection::decreasing);
    }
    SUBCASE("the square fold is not monotone") {
        // g in {-1, 0, 1} -> m = g^2 in {0, 1}
        const Channel alpha = deterministic_channel(
            sources, oracle::rep_vars({2}), [](std::size_t s) { return s == 1 ? 0u : 1u; });
        const auto d2 = check_d2_monotone({scm, alpha}, {0});
        CHECK(!d2[0].passed);
        CHECK(d2[0].direction == MonotoneDirection::not_applicable);
    }
}

TEST_CASE("unordered factors swap monotonicity for injectivity") {
    std::mt19937_64 rng(13);
    Scm scm;
    scm.variables = {{"g1", oracle::make_domain(3, false), {}}};
    scm.cpts = {{"g1", {oracle::random_row(rng, 3)}}};
    std::vector<Variable> sources = {scm.variables[0]};

    const Channel separated = deterministic_channel(sources, oracle::rep_vars({3}),
                                                    [](std::size_t s) { return (s + 1) % 3; });
    auto d2 = check_d2_monotone({scm, separated}, {0});
    CHECK(d2[0].passed);
    CHECK(d2[0].direction == MonotoneDirection::not_applicable);

    const Channel collapsing = deterministic_channel(sources, oracle::rep_vars({3}),
                                                     [](std::size_t s) { return s == 2 ? 0u : s; });
    d2 = check_d2_monotone({scm, collapsing}, {0});
    CHECK(!d2[0].passed);
}

TEST_CASE("spearman is 1 for identity and for distance-preserving negation") {
    std::mt19937_64 rng(17);
    Scm scm;
    scm.variables = {{"g1", oracle::make_domain(4), {}}};
    scm.cpts = {{"g1", {oracle::random_row(rng, 4)}}};
    std::vector<Variable> sources = {scm.variables[0]};

    const Channel ident =
        deterministic_channel(sources, oracle::rep_vars({4}), [](std::size_t s) { return s; });
    CHECK(spearman_d2_score({scm, ident}, {0}, 0) == 1.0);

    // reversal flips direction but keeps every pairwise distance
    const Channel neg =
        deterministic_channel(sources, oracle::rep_vars({4}), [](std::size_t s) { return 3 - s; });
    CHECK(spearman_d2_score({scm, neg}, {0}, 0) == 1.0);
}

TEST_CASE("spearman drops below 1 for a value shuffle and matches the rank oracle") {
    std::mt19937_64 rng(19);
    Scm scm;
    scm.variables = {{"g1", oracle::make_domain(4), {}}};
    scm.cpts = {{"g1", {oracle::random_row(rng, 4)}}};
    std::vector<Variable> sources = {scm.variables[0]};
    const std::size_t shuffle[4] = {2, 0, 3, 1};
    const Channel ch = deterministic_channel(sources, oracle::rep_vars({4}),
                                             [&](std::size_t s) { return shuffle[s]; });
    const double got = spearman_d2_score({scm, ch}, {0}, 0);
    CHECK(got < 1.0);

    std::vector<double> x, y;
    for (std::size_t a = 0; a < 4; ++a) {
        for (std::size_t b = a + 1; b < 4; ++b) {
            x.push_back(double((a - b) * (a - b)));
            const double da = double(shuffle[a]), db = double(shuffle[b]);
            y.push_back((da - db) * (da - db));
        }
    }
    CHECK(got == doctest::Approx(spearman_oracle(x, y)).epsilon(1e-12));
}

TEST_CASE("spearman needs at least 3 values and non-constant distances") {
    std::mt19937_64 rng(23);
    Scm scm;
    scm.variables = {{"g1", oracle::make_domain(2), {}}};
    scm.cpts = {{"g1", {oracle::random_row(rng, 2)}}};
    const Channel ch = identity_channel({scm.variables[0]}, oracle::rep_vars({2}));
    CHECK_THROWS_WITH_AS(spearman_d2_score({scm, ch}, {0}, 0),
                         doctest::Contains("degenerate traversal"), std::domain_error);

    Scm flat;
    flat.variables = {{"g1", oracle::make_domain(3), {}}};
    flat.cpts = {{"g1", {oracle::random_row(rng, 3)}}};
    const Channel constant = deterministic_channel({flat.variables[0]}, oracle::rep_vars({2}),
                                                   [](std::size_t) { return 0u; });
    CHECK_THROWS_WITH_AS(spearman_d2_score({flat, constant}, {0}, 0),
                         doctest::Contains("degenerate traversal"), std::domain_error);
}

TEST_CASE("spearman is invariant under positive affine rescaling of target levels") {
    std::mt19937_64 rng(29);
    Scm scm;
    scm.variables = {{"g1", oracle::make_domain(4), {}}};
    scm.cpts = {{"g1", {oracle::random_row(rng, 4)}}};
    std::vector<Variable> sources = {scm.variables[0]};
    const Channel noisy = oracle::random_channel(rng, sources, oracle::rep_vars({4}));

    std::vector<Variable> scaled_targets = noisy.targets();
    for (auto& v : scaled_targets[0].domain.values) v.level = 3.5 * v.level + 11.0;
    const Channel scaled(sources, scaled_targets, noisy.rows());

    const double a = spearman_d2_score({scm, noisy}, {0}, 0);
    const double b = spearman_d2_score({scm, scaled}, {0}, 0);
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
}

TEST_CASE("linear regression scores: identity recovers the diagonal") {
    std::mt19937_64 rng(31);
    const GmSystem sys = identity_system(rng, 2, 3);
    const DciResult r = linear_dci(sys, 0.0);
    CHECK(r.converged);
    CHECK(r.disentanglement_score == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.informativeness == doctest::Approx(1.0).epsilon(1e-9));
    for (std::size_t j = 0; j < 2; ++j) {
        for (std::size_t i = 0; i < 2; ++i) {
            CHECK(r.coefficients[j][i] == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-6));
        }
    }
}

TEST_CASE("an averaging coordinate spreads its coefficient row evenly") {
    // m1 = (g1 + g2) / 2 over independent fair bits
    Scm scm;
    scm.variables = {{"g1", oracle::make_domain(2), {}}, {"g2", oracle::make_domain(2), {}}};
    scm.cpts = {{"g1", {{0.5, 0.5}}}, {"g2", {{0.5, 0.5}}}};
    std::vector<Variable> sources = {scm.variables[0], scm.variables[1]};
    const std::vector<Variable> target{
        {"m1", Domain{{{"0", 0.0}, {"h", 0.5}, {"1", 1.0}}, true}, {}}};
    const Channel alpha = deterministic_channel(sources, target, [](std::size_t g) {
        return ((g >> 1) & 1) + (g & 1);
    });
    const DciResult r = linear_dci({scm, alpha}, 0.0);
    // closed form: regressing g_i on m1 gives slope cov/var = 1 for both
    CHECK(r.coefficients[0][0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r.coefficients[0][1] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r.disentanglement_score == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("a large penalty shrinks everything to zero") {
    std::mt19937_64 rng(37);
    const GmSystem sys = identity_system(rng, 2, 2);
    const DciResult r = linear_dci(sys, 10.0);
    for (const auto& row : r.coefficients) {
        for (double b : row) CHECK(b == 0.0);
    }
    CHECK(r.disentanglement_score == 0.0);
    CHECK(r.informativeness == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("block alignment: one-hot encoding of a ternary factor") {
    std::mt19937_64 rng(41);
    Scm scm;
    scm.variables = {{"g1", oracle::make_domain(3, false), {}}};
    scm.cpts = {{"g1", {oracle::random_row(rng, 3)}}};
    const Channel alpha = deterministic_channel(
        {scm.variables[0]}, oracle::rep_vars({2, 2, 2}), [](std::size_t g) {
            return std::size_t(4 >> g); // 100, 010, 001 over (m1, m2, m3)
        });
    const BlockStructure blocks{{{0}}, {{0, 1, 2}}, {0}};
    const auto report = check_block_alignment({scm, alpha}, blocks, kTv, 1e-9);
    CHECK(report.d1_ok);
    CHECK(report.d2_ok);
    CHECK(report.aligned);
}

TEST_CASE("block alignment: cartesian grid recoded in polar coordinates") {
    Scm scm;
    scm.variables = {{"gx", oracle::make_domain(2), {}}, {"gy", oracle::make_domain(2), {}}};
    scm.cpts = {{"gx", {{0.5, 0.5}}}, {"gy", {{0.4, 0.6}}}};
    std::vector<Variable> sources = {scm.variables[0], scm.variables[1]};
    const std::vector<Variable> targets{
        {"m_r", Domain{{{"r0", 0.0}, {"r1", 1.0}, {"rd", 1.4142135623730951}}, true}, {}},
        {"m_t", Domain{{{"t0", 0.0}, {"t45", 0.7853981633974483}, {"t90", 1.5707963267948966}},
                       true},
         {}}};
    // (x, y) -> (radius, angle) on the unit grid
    const Channel alpha = deterministic_channel(sources, targets, [](std::size_t g) {
        switch (g) { // g = x*2 + y
            case 0: return 0u * 3 + 0u; // (0,0) -> r0, t0
            case 1: return 1u * 3 + 2u; // (0,1) -> r1, t90
            case 2: return 1u * 3 + 0u; // (1,0) -> r1, t0
            default: return 2u * 3 + 1u; // (1,1) -> rd, t45
        }
    });
    const BlockStructure blocks{{{0, 1}}, {{0, 1}}, {0}};
    const auto report = check_block_alignment({scm, alpha}, blocks, kTv, 1e-9);
    CHECK(report.aligned);
}

TEST_CASE("block alignment fails on collapsing maps") {
    std::mt19937_64 rng(43);
    Scm scm;
    scm.variables = {{"g1", oracle::make_domain(3, false), {}}};
    scm.cpts = {{"g1", {oracle::random_row(rng, 3)}}};
    const Channel alpha = deterministic_channel(
        {scm.variables[0]}, oracle::rep_vars({3}), [](std::size_t g) { return g == 2 ? 0u : g; });
    const auto report = check_block_alignment({scm, alpha}, {{{0}}, {{0}}, {0}}, kTv, 1e-9);
    CHECK(report.d1_ok);
    CHECK(!report.d2_ok);
    CHECK(!report.aligned);
}

TEST_CASE("alignment report: identity aligned, shuffle d1-only, mix nothing") {
    std::mt19937_64 rng(47);
    const Scm scm = oracle::random_factor_scm(rng, {3, 3}, true);
    const auto sources = oracle::factor_vars(scm, 2);
    const auto targets = oracle::rep_vars({3, 3});

    const Channel ident = identity_channel(sources, targets);
    const AlignmentReport a = alignment_report({scm, ident}, {0, 1}, {});
    CHECK(a.d1_ok);
    CHECK(a.aligned);
    for (const auto& rec : a.d2) {
        CHECK(rec.passed);
        CHECK(rec.spearman.value() == 1.0);
    }

    // shuffle the first coordinate's values: still disentangled, no longer
    // monotone
    const std::size_t sigma[3] = {1, 0, 2};
    const Channel shuffled = deterministic_channel(sources, targets, [&](std::size_t g) {
        return sigma[g / 3] * 3 + g % 3;
    });
    const AlignmentReport s = alignment_report({scm, shuffled}, {0, 1}, {});
    CHECK(s.d1_ok);
    CHECK(!s.aligned);

    // xor the two factors into the first coordinate (sizes 2 needed)
    const Scm scm2 = oracle::random_factor_scm(rng, {2, 2}, true);
    const auto sources2 = oracle::factor_vars(scm2, 2);
    const auto targets2 = oracle::rep_vars({2, 2});
    const Channel mixed = deterministic_channel(sources2, targets2, [](std::size_t g) {
        const std::size_t g1 = (g >> 1) & 1, g2 = g & 1;
        return (g1 ^ g2) * 2 + g2;
    });
    const AlignmentReport m = alignment_report({scm2, mixed}, {0, 1}, {});
    CHECK(!m.d1_ok);
    CHECK(!m.aligned);
}

TEST_CASE("the report can carry the regression score on request") {
    std::mt19937_64 rng(59);
    const GmSystem sys = identity_system(rng, 2, 3);
    AlignmentOptions opts;
    opts.with_dci = true;
    opts.dci_lambda = 0.0;
    const AlignmentReport report = alignment_report(sys, {0, 1}, opts);
    REQUIRE(report.dci.has_value());
    CHECK(report.dci->disentanglement_score == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("aligned systems are disentangled and content-style separated") {
    std::mt19937_64 rng(53);
    for (int trial = 0; trial < 8; ++trial) {
        // random permutation with per-coordinate strictly monotone reindexing
        std::vector<std::size_t> perm{0, 1, 2};
        std::shuffle(perm.begin(), perm.end(), rng);
        const Scm scm = oracle::random_factor_scm(rng, {3, 3, 3}, trial % 2 == 0);
        const auto sources = oracle::factor_vars(scm, 3);
        const auto targets = oracle::rep_vars({3, 3, 3});
        std::vector<bool> flip(3);
        for (std::size_t j = 0; j < 3; ++j) flip[j] = rng() & 1;
        const Channel alpha = deterministic_channel(sources, targets, [&](std::size_t g) {
            std::size_t gd[3] = {g / 9, (g / 3) % 3, g % 3};
            std::size_t cell = 0;
            for (std::size_t j = 0; j < 3; ++j) {
                const std::size_t v = gd[perm[j]];
                cell = cell * 3 + (flip[j] ? 2 - v : v);
            }
            return cell;
        });
        const GmSystem sys{scm, alpha};
        const AlignmentReport report = alignment_report(sys, {0, 1, 2}, {});
        CHECK(report.aligned);
        CHECK(disentanglement_verdict(report.empida, 1e-9).disentangled);
        CHECK(content_style_check(sys, {0, 1, 2}, {0, 1, 2}, kTv, 1e-9));
        // each coordinate block is insulated by its assigned factor
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(content_style_check(sys, {report.pi.pi[j]}, {j}, kTv, 1e-9));
        }
    }
}
