#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "risklab/errors.hpp"
#include "risklab/probspace.hpp"

using namespace risklab;

TEST_CASE("space construction rejects bad probabilities") {
    CHECK_THROWS_AS(FiniteProbSpace({0.5, 0.6}), std::invalid_argument);
    CHECK_THROWS_AS(FiniteProbSpace({1.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(FiniteProbSpace(std::vector<double>{}), std::invalid_argument);
    CHECK_NOTHROW(FiniteProbSpace({0.25, 0.75}));
    CHECK(FiniteProbSpace::uniform(4).max_atom() == doctest::Approx(0.25));
}

TEST_CASE("payoffs must be finite") {
    CHECK_THROWS_AS(Rv({1.0, std::nan("")}), std::invalid_argument);
    CHECK_THROWS_AS(Rv({1.0, INFINITY}), std::invalid_argument);
}

TEST_CASE("measures must be probability vectors") {
    CHECK_THROWS_AS(ProbMeasure({0.5, 0.4}), std::invalid_argument);
    CHECK_THROWS_AS(ProbMeasure({1.5, -0.5}), std::invalid_argument);
    CHECK_NOTHROW(ProbMeasure({0.0, 1.0}));
}

TEST_CASE("expectation examples") {
    const auto s = FiniteProbSpace::uniform(4);
    const Rv x{1, 2, 3, 4};
    CHECK(expectation(ProbMeasure::of(s), x) == 2.5);
    CHECK(expectation(ProbMeasure({0.1, 0.2, 0.3, 0.4}), Rv::zero(4)) == 0.0);
    CHECK(expectation(ProbMeasure::dirac(4, 2), x) == 3.0);
    CHECK_THROWS_AS(expectation(ProbMeasure::of(s), Rv{1, 2}), DimensionMismatch);
}

TEST_CASE("conditional expectation examples") {
    const auto s = FiniteProbSpace::uniform(4);
    const auto p = ProbMeasure::of(s);
    CHECK(conditional_expectation(s, p, Rv{1, 2, 3, 4}, PartitionAlgebra(4, {{0, 1}, {2, 3}})) ==
          Rv{1.5, 1.5, 3.5, 3.5});
    CHECK(conditional_expectation(s, p, Rv{1, 2, 3, 4}, PartitionAlgebra::discrete(4)) == Rv{1, 2, 3, 4});
    CHECK(conditional_expectation(s, p, Rv{0, 0, 0, 4}, PartitionAlgebra::trivial(4)) == Rv{1, 1, 1, 1});
    CHECK_THROWS_AS(conditional_expectation(s, p, Rv{1, 2}, PartitionAlgebra::trivial(4)), DimensionMismatch);
}

TEST_CASE("blocks without Q-mass fall back to the reference average") {
    const FiniteProbSpace s({0.25, 0.25, 0.25, 0.25});
    const ProbMeasure q({0.5, 0.5, 0.0, 0.0});
    const auto r = conditional_expectation_report(s, q, Rv{1, 3, 5, 9}, PartitionAlgebra(4, {{0, 1}, {2, 3}}));
    CHECK(r.value == Rv{2, 2, 7, 7});
    REQUIRE(r.fallback_blocks.size() == 1);
    CHECK(r.fallback_blocks[0] == 1);
}

TEST_CASE("partition refinement examples") {
    CHECK(partition_refines(PartitionAlgebra::discrete(4), PartitionAlgebra::trivial(4)));
    CHECK_FALSE(partition_refines(PartitionAlgebra::trivial(4), PartitionAlgebra::discrete(4)));
    CHECK(partition_refines(PartitionAlgebra(4, {{0, 1}, {2, 3}}), PartitionAlgebra::trivial(4)));
    CHECK_FALSE(partition_refines(PartitionAlgebra(4, {{0, 2}, {1, 3}}), PartitionAlgebra(4, {{0, 1}, {2, 3}})));
}

TEST_CASE("partitions are validated and normalised") {
    CHECK_THROWS_AS(PartitionAlgebra(3, {{0, 1}}), std::invalid_argument);
    CHECK_THROWS_AS(PartitionAlgebra(3, {{0, 1}, {1, 2}}), std::invalid_argument);
    CHECK_THROWS_AS(PartitionAlgebra(3, {{0, 1}, {}, {2}}), std::invalid_argument);
    CHECK_THROWS_AS(PartitionAlgebra(3, {{0, 1}, {3}}), std::invalid_argument);
    CHECK(PartitionAlgebra(3, {{2}, {1, 0}}) == PartitionAlgebra(3, {{0, 1}, {2}}));
}

TEST_CASE("partition enumeration counts Bell numbers, coarsest first") {
    const std::size_t bell[] = {1, 1, 2, 5, 15, 52, 203};
    for (std::size_t d = 1; d <= 6; ++d) CHECK(all_partitions(d).size() == bell[d]);
    const auto parts = all_partitions(4);
    CHECK(parts.front() == PartitionAlgebra::trivial(4));
    CHECK(parts.back() == PartitionAlgebra::discrete(4));
    for (std::size_t i = 1; i < parts.size(); ++i) CHECK(parts[i - 1].num_blocks() <= parts[i].num_blocks());
}

TEST_CASE("conditioning is a projection and satisfies the tower property") {
    std::mt19937_64 rng(42);
    const FiniteProbSpace s({0.1, 0.2, 0.3, 0.15, 0.25});
    const auto parts = all_partitions(5);
    for (int trial = 0; trial < 20; ++trial) {
        const Rv x = oracle::random_rv(rng, 5, 10.0);
        std::vector<double> qv(5);
        std::uniform_real_distribution<double> u(0.01, 1.0);
        double tot = 0;
        for (double& c : qv) tot += (c = u(rng));
        for (double& c : qv) c /= tot;
        const ProbMeasure q(qv);
        for (const auto& fine : parts) {
            const Rv once = conditional_expectation(s, q, x, fine);
            CHECK(fine.measurable(once));
            CHECK(conditional_expectation(s, q, once, fine) == once);
            CHECK(expectation(q, once) == doctest::Approx(expectation(q, x)).epsilon(1e-12));
            for (const auto& coarse : parts) {
                if (!partition_refines(fine, coarse)) continue;
                const Rv a = conditional_expectation(s, q, once, coarse);
                const Rv b = conditional_expectation(s, q, x, coarse);
                CHECK((a - b).norm_inf() <= 1e-12 * (1 + x.norm_inf()));
            }
        }
    }
}

TEST_CASE("expectation is linear") {
    std::mt19937_64 rng(3);
    const ProbMeasure q({0.2, 0.3, 0.5});
    for (int i = 0; i < 100; ++i) {
        const Rv x = oracle::random_rv(rng, 3, 5), y = oracle::random_rv(rng, 3, 5);
        const double a = 1.7, b = -0.3;
        CHECK(expectation(q, x * a + y * b) ==
              doctest::Approx(a * expectation(q, x) + b * expectation(q, y)).epsilon(1e-13));
    }
}
