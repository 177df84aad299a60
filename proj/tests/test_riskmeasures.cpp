#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "risklab/errors.hpp"
#include "risklab/riskmeasures.hpp"

using namespace risklab;
using Spec = RiskMeasureSpec;

namespace {

std::vector<Spec> catalog() {
    return {Spec::var(0.0),
            Spec::var(0.25),
            Spec::var(0.5),
            Spec::es(0.25),
            Spec::es(0.5),
            Spec::es(1.0),
            Spec::entropic(0.5),
            Spec::entropic(2.0),
            Spec::choquet(Distortion::threshold(0.5)),
            Spec::choquet(Distortion({{0, 0}, {0.3, 0.6}, {1, 1}})),
            Spec::ess_sup(),
            Spec::expectation(),
            Spec::expectation(ProbMeasure({0.1, 0.2, 0.3, 0.4})),
            Spec::min_of(Spec::ess_sup(), Spec::shifted(1.0, Spec::expectation())),
            Spec::scaled(2.0, Spec::var(0.25)),
            Spec::scaled(0.5, Spec::entropic(1.0)),
            Spec::shifted(-0.5, Spec::es(0.5))};
}

const FiniteProbSpace kSkewed({0.1, 0.2, 0.3, 0.4});

}  // namespace

TEST_CASE("evaluate examples") {
    const auto u4 = FiniteProbSpace::uniform(4);
    CHECK(evaluate(Spec::var(0.25), u4, Rv{1, 2, 3, 4}) == 3.0);
    CHECK(evaluate(Spec::choquet(Distortion::threshold(0.5)), u4, Rv{1, 1, 1, 0}) == doctest::Approx(0.5));
    std::mt19937_64 rng(1);
    for (std::size_t n : {2u, 4u, 5u}) {
        const auto s = FiniteProbSpace::uniform(n);
        for (int i = 0; i < 50; ++i) {
            const Rv x = oracle::random_rv(rng, n, 10);
            CHECK(evaluate(Spec::var(0.5 / static_cast<double>(n)), s, x) == evaluate(Spec::ess_sup(), s, x));
        }
    }
    for (const Spec& spec : catalog()) {
        const double zero = evaluate(spec, u4, Rv::zero(4));
        CHECK(evaluate(spec, u4, Rv::constant(4, 2.5)) == doctest::Approx(zero + 2.5).epsilon(1e-12));
    }
}

TEST_CASE("invalid parameters are rejected") {
    const auto s = FiniteProbSpace::uniform(4);
    CHECK_THROWS_AS(validate(Spec::var(1.0), s), std::invalid_argument);
    CHECK_THROWS_AS(validate(Spec::var(-0.1), s), std::invalid_argument);
    CHECK_THROWS_AS(validate(Spec::es(0.0), s), std::invalid_argument);
    CHECK_THROWS_AS(validate(Spec::entropic(0.0), s), std::invalid_argument);
    CHECK_THROWS_AS(validate(Spec::scaled(-1.0, Spec::ess_sup()), s), std::invalid_argument);
    CHECK_THROWS_AS(validate(Spec::expectation(ProbMeasure({0.5, 0.5})), s), DimensionMismatch);
    CHECK_THROWS_AS(evaluate(Spec::ess_sup(), s, Rv{1, 2}), DimensionMismatch);
    CHECK_THROWS_AS(Distortion({{0, 0}, {1, 0.9}}), std::invalid_argument);
    CHECK_THROWS_AS(Distortion({{0, 0.1}, {1, 1}}), std::invalid_argument);
    CHECK_THROWS_AS(Distortion({{0, 0}, {0.5, 0.6}, {0.4, 0.7}, {1, 1}}), std::invalid_argument);
    CHECK_THROWS_AS(Distortion({{0, 0}, {0.5, 0.6}, {0.7, 0.5}, {1, 1}}), std::invalid_argument);
    Spec deep = Spec::ess_sup();
    for (int i = 0; i < 20; ++i) deep = Spec::min_of(deep, Spec::ess_sup());
    CHECK_THROWS_AS(validate(deep, s), std::invalid_argument);
    CHECK_NOTHROW(validate(deep, s, 32));
}

TEST_CASE("VaR and ES agree with definitional oracles") {
    std::mt19937_64 rng(9);
    for (const auto& s : {FiniteProbSpace::uniform(4), kSkewed, FiniteProbSpace({0.5, 0.3, 0.2})}) {
        for (int i = 0; i < 30; ++i) {
            const Rv x = i % 2 ? oracle::random_int_rv(rng, s.dim(), 3) : oracle::random_rv(rng, s.dim(), 5);
            for (double beta : {0.0, 0.1, 0.2, 0.25, 0.3, 0.5, 0.7, 0.99})
                CHECK(value_at_risk(s, x, beta) == oracle::var(s, x, beta));
            for (double beta : {0.1, 0.25, 0.5, 0.8, 1.0})
                CHECK(expected_shortfall(s, x, beta) == doctest::Approx(oracle::es(s, x, beta, 20000)).epsilon(1e-6));
        }
    }
}

TEST_CASE("entropic and Choquet agree with direct formulas") {
    std::mt19937_64 rng(10);
    const auto h = [](double t) { return t <= 0.3 ? 2.0 * t : 0.6 + (t - 0.3) * 0.4 / 0.7; };
    const Distortion dist({{0, 0}, {0.3, 0.6}, {1, 1}});
    for (int i = 0; i < 30; ++i) {
        const Rv x = oracle::random_rv(rng, 4, 5);
        double m = 0;
        for (std::size_t k = 0; k < 4; ++k) m += kSkewed.prob(k) * std::exp(2.0 * x[k]);
        CHECK(entropic_risk(kSkewed, x, 2.0) == doctest::Approx(std::log(m) / 2.0).epsilon(1e-12));
        CHECK(choquet_integral(kSkewed, x, dist) == doctest::Approx(oracle::choquet(kSkewed, x, h)).epsilon(1e-5));
    }
    // Large arguments stay finite (log-sum-exp).
    CHECK(entropic_risk(kSkewed, Rv{800, 0, 0, 0}, 1.0) == doctest::Approx(800 + std::log(0.1)));
}

TEST_CASE("catalog satisfies monotonicity and cash additivity") {
    AxiomOptions opts;
    opts.samples = 300;
    for (const auto& s : {FiniteProbSpace::uniform(4), kSkewed}) {
        for (const Spec& spec : catalog()) {
            const auto r = check_axioms(spec, s, opts);
            CHECK_MESSAGE(r.passed, spec.describe());
            CHECK(r.checks > 0);
        }
    }
}

TEST_CASE("a broken functional fails the axiom check with a witness") {
    const auto s = FiniteProbSpace::uniform(4);
    const RiskFunctional neg = [&](const Rv& x) { return -value_at_risk(s, x, 0.25); };
    const auto r = check_axioms(neg, s, AxiomOptions{});
    CHECK_FALSE(r.passed);
    REQUIRE_FALSE(r.failures.empty());
    const auto& w = r.failures.front();
    CHECK(w.lhs != doctest::Approx(w.rhs));
}

TEST_CASE("normalisation identity rho(X - rho(X)) = 0") {
    std::mt19937_64 rng(11);
    for (const Spec& spec : catalog())
        for (int i = 0; i < 50; ++i) {
            const Rv x = oracle::random_rv(rng, 4, 10);
            const double r = evaluate(spec, kSkewed, x);
            CHECK(std::abs(evaluate(spec, kSkewed, x - Rv::constant(4, r))) <= 1e-9);
        }
}

TEST_CASE("VaR(0) is the essential supremum; ES dominates VaR; ES(1) is the mean") {
    std::mt19937_64 rng(12);
    for (int i = 0; i < 200; ++i) {
        const Rv x = i % 2 ? oracle::random_int_rv(rng, 4, 3) : oracle::random_rv(rng, 4, 10);
        CHECK(evaluate(Spec::var(0), kSkewed, x) == evaluate(Spec::ess_sup(), kSkewed, x));
        for (double b : {0.05, 0.1, 0.3, 0.6, 0.95})
            CHECK(expected_shortfall(kSkewed, x, b) >= value_at_risk(kSkewed, x, b) - 1e-12);
        CHECK(expected_shortfall(kSkewed, x, 1.0) == doctest::Approx(expectation(kSkewed, x)).epsilon(1e-13));
    }
}

TEST_CASE("scaling keeps the axioms and matches its definition") {
    std::mt19937_64 rng(13);
    for (double g : {0.25, 3.0}) {
        const Spec sc = Spec::scaled(g, Spec::min_of(Spec::var(0.2), Spec::entropic(1.0)));
        CHECK(check_axioms(sc, kSkewed, AxiomOptions{}).passed);
        for (int i = 0; i < 50; ++i) {
            const Rv x = oracle::random_rv(rng, 4, 5);
            const double inner = std::min(value_at_risk(kSkewed, x / g, 0.2), entropic_risk(kSkewed, x / g, 1.0));
            CHECK(evaluate(sc, kSkewed, x) == doctest::Approx(g * inner).epsilon(1e-13));
        }
    }
}

TEST_CASE("acceptance membership examples") {
    CHECK(acceptance_membership(Spec::ess_sup(), FiniteProbSpace::uniform(2), Rv{-1, -1}));
    CHECK(acceptance_membership(Spec::var(0.25), FiniteProbSpace::uniform(4), Rv{0, 0, 0, 100}));
    CHECK_FALSE(acceptance_membership(Spec::expectation(), FiniteProbSpace::uniform(2), Rv{0, 2}));
    CHECK(acceptance_membership(Spec::expectation(), FiniteProbSpace::uniform(2), Rv{1e-10, 0}, 1e-9));
    CHECK_FALSE(acceptance_membership(Spec::expectation(), FiniteProbSpace::uniform(2), Rv{1e-10, 0}));
}

TEST_CASE("spec depth and description") {
    CHECK(Spec::min_of(Spec::ess_sup(), Spec::shifted(1, Spec::expectation())).depth() == 3);
    CHECK(Spec::var(0.25).describe() == "var(0.25)");
}
