#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>

#include "endow_opt/closedform.hpp"
#include "endow_opt/rng.hpp"
#include "endow_opt/simulate.hpp"

using namespace endow_opt;

namespace {

ProblemSpec default_spec() { return validate({0.02, 0.04, 0.2}, {0.03, 0.1, 0.5}, {3.0, 1.0, 10.0}); }

ExecutionOptions threads(unsigned n) {
    ExecutionOptions e;
    e.threads = n;
    return e;
}

bool same_bits(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

}  // namespace

TEST_CASE("Brownian levels are cumulative scaled Philox normals") {
    const ProblemSpec s = default_spec();
    const PathEnsemble ens = generate_paths(s, {16, 5, 11});
    const double sd = std::sqrt(s.horizon() / 16);
    for (std::size_t p = 0; p < 5; ++p) {
        double w = 0.0;
        CHECK(ens.brownian(p)[0] == 0.0);
        for (std::size_t k = 0; k < 16; ++k) {
            w += sd * NormalStream(11, p)(k);
            CHECK(ens.brownian(p)[k + 1] == w);
        }
    }
    CHECK(ens.times().front() == 0.0);
    CHECK(ens.times().back() == s.horizon());
    CHECK(ens.step() == s.horizon() / 16);
}

TEST_CASE("state processes are exact functions of (t, W)") {
    const ProblemSpec s = default_spec();
    const PathEnsemble ens = generate_paths(s, {8, 3, 5});
    const double th = s.theta();
    for (std::size_t p = 0; p < 3; ++p) {
        for (std::size_t k = 0; k <= 8; ++k) {
            const double t = ens.times()[k], w = ens.brownian(p)[k];
            CHECK(ens.endowment(p, k) == doctest::Approx(s.e0() * std::exp((s.mu() - 0.005) * t + 0.1 * w)).epsilon(1e-14));
            CHECK(ens.deflator(p, k) == doctest::Approx(std::exp(-(s.r() + 0.5 * th * th) * t - th * w)).epsilon(1e-14));
            CHECK(ens.density(p, k) == doctest::Approx(std::exp(-0.5 * th * th * t - th * w)).epsilon(1e-14));
            CHECK(ens.stock(p, k) == doctest::Approx(std::exp((0.06 - 0.02) * t + 0.2 * w)).epsilon(1e-14));
        }
    }
}

TEST_CASE("terminal Brownian moments") {
    const ProblemSpec s = default_spec();
    const std::size_t n = 50000;
    const PathEnsemble ens = generate_paths(s, {4, n, 3});
    double m = 0, v = 0;
    for (std::size_t p = 0; p < n; ++p) {
        const double w = ens.brownian(p)[4];
        m += w;
        v += w * w;
    }
    m /= n;
    v = v / n - m * m;
    CHECK(std::fabs(m) < 5 * std::sqrt(s.horizon() / n));
    CHECK(std::fabs(v / s.horizon() - 1) < 5 * std::sqrt(2.0 / n));
}

TEST_CASE("generation and integration are independent of thread count") {
    const ProblemSpec s = default_spec();
    const GridConfig grid{32, 997, 42};
    const PathEnsemble one = generate_paths(s, grid, threads(1));
    const PathEnsemble many = generate_paths(s, grid, threads(4));
    for (std::size_t p = 0; p < grid.n_paths; ++p) {
        const auto a = one.brownian(p), b = many.brownian(p);
        REQUIRE(std::equal(a.begin(), a.end(), b.begin()));
    }
    for (const Strategy& st : {Strategy::optimal(), Strategy::constant(1.5),
                               Strategy::tabulated({0, 10}, {0, 1}, {0.2, 0.4, 0.3, 0.1})}) {
        const WealthEnsemble x1 = integrate_wealth(one, st, {}, threads(1));
        const WealthEnsemble x4 = integrate_wealth(one, st, {}, threads(3));
        bool identical = x1.violation_count() == x4.violation_count();
        for (std::size_t p = 0; p < grid.n_paths; ++p)
            for (std::size_t k = 0; k <= grid.n_steps; ++k)
                identical = identical && same_bits(x1.paths[p].wealth[k], x4.paths[p].wealth[k]);
        CHECK_MESSAGE(identical, st.name());
    }
}

TEST_CASE("leading paths do not depend on the path count") {
    const ProblemSpec s = default_spec();
    const PathEnsemble small = generate_paths(s, {16, 3, 9});
    const PathEnsemble large = generate_paths(s, {16, 40, 9});
    for (std::size_t p = 0; p < 3; ++p) {
        const auto a = small.brownian(p), b = large.brownian(p);
        CHECK(std::equal(a.begin(), a.end(), b.begin()));
    }
}

TEST_CASE("coarsening subsamples the same paths") {
    const ProblemSpec s = default_spec();
    const PathEnsemble fine = generate_paths(s, {64, 10, 1});
    const PathEnsemble coarse = fine.coarsen(4);
    CHECK(coarse.n_steps() == 16);
    CHECK(coarse.grid().seed == 1);
    for (std::size_t p = 0; p < 10; ++p)
        for (std::size_t k = 0; k <= 16; ++k) CHECK(coarse.brownian(p)[k] == fine.brownian(p)[4 * k]);
    CHECK(coarse.times().back() == s.horizon());
    CHECK_THROWS_AS(fine.coarsen(3), Error);
    CHECK_THROWS_AS(fine.coarsen(0), Error);
}

TEST_CASE("grid and budget errors") {
    const ProblemSpec s = default_spec();
    auto code = [&](const GridConfig& g, std::size_t budget) {
        ExecutionOptions e;
        e.memory_budget_bytes = budget;
        try {
            generate_paths(s, g, e);
        } catch (const Error& err) {
            return err.code();
        }
        return ErrorCode::ConfigError;
    };
    CHECK(code({0, 10, 1}, 1 << 20) == ErrorCode::InvalidGrid);
    CHECK(code({10, 0, 1}, 1 << 20) == ErrorCode::InvalidGrid);
    // 1000 paths x 101 levels x 8 bytes = 808000
    CHECK(code({100, 1000, 1}, 800000) == ErrorCode::MemoryBudgetExceeded);
    CHECK_NOTHROW(generate_paths(s, {100, 1000, 1}, ExecutionOptions{0, 808000}));
}

TEST_CASE("Euler step matches a hand recursion") {
    const ProblemSpec s = default_spec();
    const PathEnsemble ens = generate_paths(s, {20, 2, 8});
    const Strategy st = Strategy::optimal();
    const WealthEnsemble x = integrate_wealth(ens, st);
    const double dt = ens.step();
    for (std::size_t p = 0; p < 2; ++p) {
        double w = s.x0();
        for (std::size_t k = 0; k < 20; ++k) {
            const double e = ens.endowment(p, k);
            const double pi = merton_fraction(s) + beta(s, ens.times()[k]) * shift_scale(s) * (e / w);
            w = w + ((s.r() + s.sigma() * s.theta() * pi) * w + e) * dt + s.sigma() * pi * w * ens.increment(p, k);
            CHECK(x.paths[p].wealth[k + 1] == doctest::Approx(w).epsilon(1e-13));
        }
        CHECK(x.paths[p].terminal_wealth == x.paths[p].wealth.back());
    }
}

TEST_CASE("recording subsets") {
    const ProblemSpec s = default_spec();
    const PathEnsemble ens = generate_paths(s, {10, 4, 2});
    const WealthEnsemble all = integrate_wealth(ens, Strategy::merton());
    const WealthEnsemble some = integrate_wealth(ens, Strategy::merton(), {10, 5, 5, 0});
    CHECK(some.recorded_steps == std::vector<std::size_t>{0, 5, 10});
    for (std::size_t p = 0; p < 4; ++p) {
        CHECK(some.paths[p].wealth[some.slot(5)] == all.paths[p].wealth[5]);
        CHECK(some.paths[p].terminal_wealth == all.paths[p].terminal_wealth);
    }
    CHECK_THROWS_AS(some.slot(3), Error);
    CHECK_THROWS_AS(integrate_wealth(ens, Strategy::merton(), {11}), Error);
}

TEST_CASE("exact optimal wealth path") {
    const ProblemSpec s = default_spec();
    const PathEnsemble ens = generate_paths(s, {16, 50, 4});
    const WealthEnsemble x = exact_optimal_wealth_path(ens);
    for (std::size_t p = 0; p < 50; ++p) {
        CHECK(x.paths[p].wealth[0] == doctest::Approx(s.x0()).epsilon(1e-14));
        CHECK(x.paths[p].terminal_wealth ==
              doctest::Approx(optimal_terminal_wealth(s, ens.deflator(p, 16))).epsilon(1e-13));
        const double mid = optimal_wealth(s, ens.times()[7], ens.deflator(p, 7), ens.endowment(p, 7));
        CHECK(x.paths[p].wealth[7] == doctest::Approx(mid).epsilon(1e-14));
    }
}

TEST_CASE("positivity violations freeze the path") {
    // heavy leverage on a volatile asset over a coarse grid
    const ProblemSpec s = validate({0.0, 0.1, 0.8}, {0.0, 0.1, 1e-6}, {3.0, 1.0, 5.0});
    const PathEnsemble ens = generate_paths(s, {10, 400, 6});
    const WealthEnsemble x = integrate_wealth(ens, Strategy::constant(4.0));
    REQUIRE(x.violation_count() > 0);
    for (const auto& path : x.paths) {
        if (!path.positivity_violated) {
            CHECK(path.terminal_wealth > 0.0);
            continue;
        }
        REQUIRE(path.first_violation_index.has_value());
        CHECK(std::isnan(path.terminal_wealth));
        for (std::size_t k = *path.first_violation_index; k <= 10; ++k) CHECK(std::isnan(path.wealth[k]));
        for (std::size_t k = 0; k < *path.first_violation_index; ++k) CHECK(path.wealth[k] > 0.0);
    }
}

TEST_CASE("strategy rules") {
    const ProblemSpec s = default_spec();
    const double pm = merton_fraction(s);
    CHECK(Strategy::constant(0.5).fraction(s, 1.0, 2.0, 1.0) == 0.5);
    CHECK(Strategy::merton().fraction(s, 1.0, 2.0, 1.0) == pm);
    CHECK(Strategy::optimal().fraction(s, 1.0, 2.0, 1.0) == doctest::Approx(optimal_fraction(s, 1.0, 2.0, 1.0)).epsilon(1e-15));

    const Strategy base = Strategy::optimal();
    const Strategy add = Strategy::perturbed(base, 0.1, PerturbMode::Additive);
    const Strategy scale = Strategy::perturbed(base, -0.2, PerturbMode::ScaleShift);
    const double b = base.fraction(s, 2.0, 1.5, 0.7);
    CHECK(add.fraction(s, 2.0, 1.5, 0.7) == doctest::Approx(b + 0.1).epsilon(1e-15));
    CHECK(scale.fraction(s, 2.0, 1.5, 0.7) == doctest::Approx(pm + 0.8 * (b - pm)).epsilon(1e-14));

    CHECK(Strategy::constant(0.5).name() == "constant(0.5)");
    CHECK(base.name() == "optimal");
    CHECK(Strategy::merton().name() == "merton");
    CHECK(scale.name() == "perturbed(optimal,-0.2,scale-shift)");
    CHECK(add.name() == "perturbed(optimal,0.1,additive)");

    const auto c = base.affine_in_ratio(s, 3.0);
    REQUIRE(c.has_value());
    CHECK(c->first == pm);
    CHECK(c->second == beta(s, 3.0) * shift_scale(s));
    CHECK_THROWS_AS(base.fraction(s, 1.0, 0.0, 1.0), Error);
    CHECK_THROWS_AS(base.fraction(s, 1.0, 1.0, -1.0), Error);
}

TEST_CASE("tabulated rule interpolates and clamps") {
    const ProblemSpec s = default_spec();
    // rows: t = 0, 10; columns: ratio = 0, 1
    const Strategy tab = Strategy::tabulated({0, 10}, {0, 1}, {0.0, 1.0, 2.0, 3.0});
    CHECK(!tab.affine_in_ratio(s, 1.0).has_value());
    CHECK(tab.name() == "tabulated");
    CHECK(tab.fraction(s, 0.0, 1.0, 1e-300) == doctest::Approx(0.0));
    CHECK(tab.fraction(s, 5.0, 2.0, 1.0) == doctest::Approx(1.5));  // t mid, ratio 0.5
    CHECK(tab.fraction(s, 10.0, 1.0, 5.0) == doctest::Approx(3.0));  // ratio clamped to 1
    CHECK_THROWS_AS(Strategy::tabulated({0, 10}, {0, 1}, {1, 2, 3}), Error);
    CHECK_THROWS_AS(Strategy::tabulated({10, 0}, {0, 1}, {1, 2, 3, 4}), Error);
}

TEST_CASE("path CSV and number formatting") {
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(-2.5e-300) == "-2.5e-300");
    CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);

    const ProblemSpec s = default_spec();
    const PathEnsemble ens = generate_paths(s, {4, 3, 1});
    const WealthEnsemble x = integrate_wealth(ens, Strategy::merton());
    std::ostringstream out;
    write_path_csv(out, ens, x, 2);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "path,t,W,E,H,X");
    std::size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 2 * 5);

    const WealthEnsemble partial = integrate_wealth(ens, Strategy::merton(), {4});
    std::ostringstream sink;
    CHECK_THROWS_AS(write_path_csv(sink, ens, partial, 1), Error);
}
