#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "risklab/conjugate.hpp"
#include "risklab/errors.hpp"

using namespace risklab;
using Spec = RiskMeasureSpec;

namespace {

const FiniteProbSpace kU2 = FiniteProbSpace::uniform(2);
const FiniteProbSpace kU4 = FiniteProbSpace::uniform(4);
const FiniteProbSpace kSk3({0.2, 0.3, 0.5});

bool on_es_dual_set(const ProbMeasure& q, const FiniteProbSpace& s, double beta) {
    for (std::size_t k = 0; k < q.dim(); ++k)
        if (q[k] > s.prob(k) / beta + 1e-12) return false;
    return true;
}

}  // namespace

TEST_CASE("conjugate examples") {
    for (const auto& q : simplex_grid(kSk3, 5)) {
        const ConjValue c = conj(Spec::ess_sup(), kSk3, q);
        CHECK_FALSE(c.diverged);
        CHECK(std::abs(c.value) <= 1e-9);
    }
    CHECK(conj(Spec::expectation(), kU2, ProbMeasure::of(kU2)).value == doctest::Approx(0.0));
    CHECK_FALSE(conj(Spec::expectation(), kU2, ProbMeasure::of(kU2)).diverged);
    CHECK(conj(Spec::expectation(), kU2, ProbMeasure({0.6, 0.4})).diverged);
    const ConjValue e = conj(Spec::entropic(1.0), kU2, ProbMeasure({0.5, 0.5}));
    CHECK_FALSE(e.diverged);
    CHECK(std::abs(e.value) <= 1e-3);
    CHECK_THROWS_AS(conj(Spec::ess_sup(), kU2, ProbMeasure::of(kU2), -1.0), std::invalid_argument);
    CHECK_THROWS_AS(conj(Spec::ess_sup(), kU2, ProbMeasure::of(kU2), 10.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(conj(Spec::ess_sup(), kU2, ProbMeasure::of(kU4)), DimensionMismatch);
}

TEST_CASE("entropic conjugate is relative entropy over the grid") {
    for (const auto& s : {kU2, kSk3}) {
        for (double theta : {1.0, 2.0}) {
            const ConjugateTable t = conj_table(Spec::entropic(theta), s, 10);
            for (std::size_t g = 0; g < t.grid.size(); ++g) {
                const auto qv = std::vector<double>(t.grid[g].probs().begin(), t.grid[g].probs().end());
                REQUIRE_FALSE(t.values[g].diverged);
                CHECK(t.values[g].value == doctest::Approx(oracle::kl(qv, s) / theta).epsilon(1e-3).scale(1));
            }
        }
    }
}

TEST_CASE("table examples") {
    const ConjugateTable ess = conj_table(Spec::ess_sup(), kU2, 10);
    CHECK(ess.grid.size() == 11);
    for (const auto& v : ess.values) CHECK((!v.diverged && std::abs(v.value) <= 1e-9));
    for (const auto& v : conj_table(Spec::var(0.5), kU2, 10).values) CHECK(v.diverged);

    const ConjugateTable es = conj_table(Spec::es(0.5), kU4, 10);
    std::size_t finite = 0;
    for (std::size_t g = 0; g < es.grid.size(); ++g) {
        const bool inside = on_es_dual_set(es.grid[g], kU4, 0.5);
        CHECK(es.values[g].diverged == !inside);
        if (inside) {
            ++finite;
            CHECK(std::abs(es.values[g].value) <= 1e-9);
        }
    }
    CHECK(finite > 0);
}

TEST_CASE("grid contains vertices and the reference measure") {
    const auto grid = simplex_grid(FiniteProbSpace({0.3, 0.3, 0.4}), 4);
    CHECK(std::find(grid.begin(), grid.end(), ProbMeasure({0.3, 0.3, 0.4})) != grid.end());
    for (std::size_t k = 0; k < 3; ++k)
        CHECK(std::find(grid.begin(), grid.end(), ProbMeasure::dirac(3, k)) != grid.end());
    CHECK(grid.size() == 15 + 1);
    CHECK(default_simplex_denominator(3) == 20);
    CHECK(default_simplex_denominator(4) == 10);
}

TEST_CASE("biconjugate examples") {
    std::mt19937_64 rng(4);
    const ConjugateTable es = conj_table(Spec::es(0.5), kU4, 10);
    const ConjugateTable var = conj_table(Spec::var(0.5), kU2, 10);
    const Spec mix = Spec::min_of(Spec::ess_sup(), Spec::shifted(1.0, Spec::expectation()));
    const ConjugateTable mt = conj_table(mix, kU2, 20);
    for (int i = 0; i < 50; ++i) {
        const Rv x = oracle::random_rv(rng, 4, 10);
        CHECK(biconj(es, x).value() == doctest::Approx(expected_shortfall(kU4, x, 0.5)).epsilon(1e-9));
        const Rv y = oracle::random_rv(rng, 2, 10);
        CHECK(biconj(var, y).is_minus_inf());
        CHECK(biconj(mt, y).value() <= evaluate(mix, kU2, y) + 1e-9);
        // The convex hull of min(max, mean + 1) is the mean.
        CHECK(biconj(mt, y).value() == doctest::Approx(expectation(kU2, y)).epsilon(1e-9));
    }
}

TEST_CASE("entropic biconjugate approaches the measure on a fine grid") {
    std::mt19937_64 rng(5);
    const ConjugateTable t = conj_table(Spec::entropic(1.0), kU2, 100);
    for (int i = 0; i < 30; ++i) {
        const Rv x = oracle::random_rv(rng, 2, 3);
        const double b = biconj(t, x).value(), r = entropic_risk(kU2, x, 1.0);
        CHECK(b <= r + 1e-9);
        CHECK(b >= r - 1e-3);
    }
}

TEST_CASE("Fenchel inequality and biconjugate floor across the catalog") {
    std::mt19937_64 rng(6);
    const std::vector<Spec> specs{Spec::var(0.2),     Spec::es(0.3),
                                  Spec::entropic(1.5), Spec::choquet(Distortion({{0, 0}, {0.4, 0.7}, {1, 1}})),
                                  Spec::ess_sup(),     Spec::min_of(Spec::es(0.5), Spec::shifted(0.5, Spec::expectation()))};
    for (const Spec& spec : specs) {
        const ConjugateTable t = conj_table(spec, kSk3, 10);
        for (int i = 0; i < 40; ++i) {
            const Rv x = oracle::random_rv(rng, 3, 15);
            const double r = evaluate(spec, kSk3, x);
            for (std::size_t g = 0; g < t.grid.size(); ++g)
                if (!t.values[g].diverged)
                    CHECK(r >= expectation(t.grid[g], x) - t.values[g].value - 1e-9);
            const ExtReal b = biconj(t, x);
            CHECK((b.is_minus_inf() || b.value() <= r + 1e-9));
        }
    }
}

TEST_CASE("convex specs are recovered by the biconjugate") {
    std::mt19937_64 rng(7);
    const std::vector<Spec> specs{Spec::es(0.5), Spec::ess_sup(), Spec::expectation()};
    for (const Spec& spec : specs) {
        const ConjugateTable t = conj_table(spec, kSk3, 10);
        for (int i = 0; i < 30; ++i) {
            const Rv x = oracle::random_rv(rng, 3, 10);
            CHECK(biconj(t, x).value() == doctest::Approx(evaluate(spec, kSk3, x)).epsilon(1e-9));
        }
    }
}

TEST_CASE("scaling multiplies the conjugate") {
    for (double g : {0.5, 3.0}) {
        const ConjugateTable a = conj_table(Spec::entropic(1.0), kSk3, 5);
        const ConjugateTable b = conj_table(Spec::scaled(g, Spec::entropic(1.0)), kSk3, 5);
        for (std::size_t i = 0; i < a.grid.size(); ++i) {
            REQUIRE_FALSE(b.values[i].diverged);
            CHECK(b.values[i].value == doctest::Approx(g * a.values[i].value).epsilon(1e-3).scale(1));
        }
        const ConjugateTable c = conj_table(Spec::es(0.5), kSk3, 10);
        const ConjugateTable d = conj_table(Spec::scaled(g, Spec::es(0.5)), kSk3, 10);
        for (std::size_t i = 0; i < c.grid.size(); ++i) CHECK(c.values[i].diverged == d.values[i].diverged);
    }
}

TEST_CASE("conjugate is midpoint convex along grid segments") {
    const std::size_t denom = 10;
    for (const Spec& spec : {Spec::entropic(1.0), Spec::es(0.4),
                             Spec::min_of(Spec::ess_sup(), Spec::shifted(1, Spec::entropic(2.0)))}) {
        const ConjugateTable t = conj_table(spec, kSk3, denom);
        auto find = [&](const std::vector<double>& q) -> const ConjValue* {
            for (std::size_t g = 0; g < t.grid.size(); ++g) {
                bool same = true;
                for (std::size_t k = 0; k < 3; ++k) same = same && std::abs(t.grid[g][k] - q[k]) < 1e-12;
                if (same) return &t.values[g];
            }
            return nullptr;
        };
        std::size_t checked = 0;
        for (std::size_t a = 0; a < t.grid.size(); ++a)
            for (std::size_t b = a + 1; b < t.grid.size(); ++b) {
                std::vector<double> mid(3);
                for (std::size_t k = 0; k < 3; ++k) mid[k] = 0.5 * (t.grid[a][k] + t.grid[b][k]);
                const ConjValue* m = find(mid);
                if (!m || t.values[a].diverged || t.values[b].diverged) continue;
                ++checked;
                REQUIRE_FALSE(m->diverged);
                CHECK(m->value <= 0.5 * (t.values[a].value + t.values[b].value) + 1e-9);
            }
        CHECK(checked > 0);
    }
}

TEST_CASE("degeneracy examples") {
    const auto v = detect_degeneracy(Spec::var(0.25), kU4);
    CHECK(v.degenerate);
    CHECK_FALSE(v.witness_q.has_value());
    CHECK(v.escape_direction.has_value());

    const auto e = detect_degeneracy(Spec::ess_sup(), kSk3);
    CHECK_FALSE(e.degenerate);
    REQUIRE(e.witness_q.has_value());
    CHECK_FALSE(e.escape_direction.has_value());
    CHECK(std::abs(*e.witness_value) <= 1e-9);

    CHECK(detect_degeneracy(Spec::choquet(Distortion::threshold(0.5)), kU4).degenerate);
    // Below the largest atom VaR is not degenerate.
    CHECK_FALSE(detect_degeneracy(Spec::var(0.15), kSk3).degenerate);
    CHECK(detect_degeneracy(Spec::var(0.5), kSk3).degenerate);
}

TEST_CASE("degeneracy budget exhaustion is reported") {
    DegeneracyOptions o;
    o.max_measures = 1;
    const auto v = detect_degeneracy(Spec::expectation(ProbMeasure({0.5, 0.5, 0.0})), kSk3, o);
    CHECK_FALSE(v.degenerate);
    CHECK(v.inconclusive);
}

TEST_CASE("finiteness certificate examples") {
    const auto es_pop = AgentPopulation::weighted({{0.5, Spec::es(0.5)}, {0.5, Spec::es(0.5)}});
    const auto m = finiteness_certificate(es_pop, kU4, ProbMeasure::of(kU4), {0.0, 0.0});
    CHECK(m.offset == 0.0);
    CHECK(m(Rv{1, 2, 3, 4}) == doctest::Approx(2.5));

    const ProbMeasure q({0.1, 0.6, 0.3});
    const auto ess_pop = AgentPopulation::unweighted({Spec::ess_sup(), Spec::ess_sup(), Spec::ess_sup()});
    const auto m2 = finiteness_certificate(ess_pop, kSk3, q, {0.0, 0.0, 0.0});
    CHECK(m2(Rv{1, 2, 3}) == doctest::Approx(expectation(q, Rv{1, 2, 3})));

    const auto var_pop = AgentPopulation::unweighted({Spec::var(0.5)});
    for (const auto& qq : simplex_grid(kU2, 4))
        for (double xi : {0.0, 10.0, 1e5}) CHECK_THROWS_AS(finiteness_certificate(var_pop, kU2, qq, {xi}), CertificateInvalid);
    CHECK_THROWS_AS(finiteness_certificate(es_pop, kU4, ProbMeasure::of(kU4), {0.0}), std::invalid_argument);
}

TEST_CASE("threads do not change tables") {
    ConjOptions one, four;
    four.threads = 4;
    const auto a = conj_table(Spec::entropic(1.0), kSk3, 6, one);
    const auto b = conj_table(Spec::entropic(1.0), kSk3, 6, four);
    for (std::size_t g = 0; g < a.grid.size(); ++g) CHECK(a.values[g].value == b.values[g].value);
}
