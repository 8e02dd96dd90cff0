#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "quadrant/analysis.hpp"
#include "quadrant/errors.hpp"

using namespace quadrant;
using namespace quadrant::analysis;

namespace {

// Direct-definition oracle: covariance over the product of standard deviations,
// accumulated in extended precision.
double pearson_bruteforce(const std::vector<double>& x, const std::vector<double>& y) {
    const size_t n = x.size();
    long double mx = 0.0L, my = 0.0L;
    for (size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    long double cov = 0.0L, vx = 0.0L, vy = 0.0L;
    for (size_t i = 0; i < n; ++i) {
        cov += (x[i] - mx) * (y[i] - my);
        vx += (x[i] - mx) * (x[i] - mx);
        vy += (y[i] - my) * (y[i] - my);
    }
    return static_cast<double>(cov / sqrtl(vx * vy));
}

long double t_pdf(long double s, long double nu) {
    const long double ln_c = lgammal((nu + 1.0L) / 2.0L) - lgammal(nu / 2.0L) -
                             0.5L * logl(nu * 3.14159265358979323846264338327950288L);
    return expl(ln_c - (nu + 1.0L) / 2.0L * log1pl(s * s / nu));
}

// Two-sided p by quadrature: 2 * integral of the t density over [T, inf),
// mapped to [0, 1) via s = T + u/(1-u), composite Simpson rule.
double p_value_quadrature(double r, int n) {
    const long double nu = n - 2;
    const long double ar = fabsl((long double)r);
    const long double T = ar * sqrtl(nu / (1.0L - ar * ar));
    const int steps = 20000;  // even
    const long double h = 1.0L / steps;
    auto g = [&](long double u) -> long double {
        if (u >= 1.0L) return 0.0L;
        const long double s = T + u / (1.0L - u);
        const long double jac = 1.0L / ((1.0L - u) * (1.0L - u));
        return t_pdf(s, nu) * jac;
    };
    long double acc = g(0.0L) + g(1.0L);
    for (int i = 1; i < steps; ++i) acc += g(i * h) * (i % 2 ? 4.0L : 2.0L);
    return static_cast<double>(2.0L * acc * h / 3.0L);
}

}  // namespace

TEST_CASE("pearson matches hand-computed examples") {
    std::vector<double> a{1, 2, 3, 4};
    CHECK(pearson(a, a) == 1.0);

    std::vector<double> neg{-1, -2, -3, -4};
    CHECK(pearson(a, neg) == -1.0);

    std::vector<double> y{1, 3, 2, 4};
    CHECK(pearson(a, y) == 0.8);
}

TEST_CASE("pearson rejects bad input") {
    std::vector<double> c{1, 1, 1};
    std::vector<double> v{1, 2, 3};
    CHECK_THROWS_AS((void)pearson(c, v), ConstantInput);
    CHECK_THROWS_AS((void)pearson(v, c), ConstantInput);
    std::vector<double> two{1, 2};
    CHECK_THROWS_AS((void)pearson(two, two), TooFewPoints);
    std::vector<double> five{1, 2, 3, 4, 5};
    CHECK_THROWS_AS((void)pearson(v, five), LengthMismatch);
}

TEST_CASE("pearson agrees with the brute-force definition") {
    std::mt19937 rng(20240817);
    std::uniform_int_distribution<int> len(5, 50);
    std::uniform_real_distribution<double> val(-100.0, 100.0);
    for (int trial = 0; trial < 300; ++trial) {
        const int n = len(rng);
        std::vector<double> x(n), y(n);
        for (int i = 0; i < n; ++i) {
            x[i] = val(rng);
            y[i] = val(rng);
        }
        CHECK(std::fabs(pearson(x, y) - pearson_bruteforce(x, y)) < 1e-12);
    }
}

TEST_CASE("pearson symmetry and affine invariance") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> val(-10.0, 10.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> x(12), y(12);
        for (int i = 0; i < 12; ++i) {
            x[i] = val(rng);
            y[i] = val(rng);
        }
        const double r = pearson(x, y);
        CHECK(pearson(y, x) == r);

        std::vector<double> xs(12), xf(12);
        for (int i = 0; i < 12; ++i) {
            xs[i] = 3.5 * x[i] + 2.0;
            xf[i] = -2.0 * x[i] + 1.0;
        }
        CHECK(std::fabs(pearson(xs, y) - r) < 1e-12);
        CHECK(std::fabs(pearson(xf, y) + r) < 1e-12);
    }
}

TEST_CASE("p_value trivial points") {
    CHECK(p_value(0.0, 10) == 1.0);
    CHECK(p_value(1.0, 5) == 0.0);
    CHECK(p_value(-1.0, 5) == 0.0);
    CHECK_THROWS_AS((void)p_value(0.5, 2), TooFewPoints);
    CHECK_THROWS_AS((void)p_value(1.5, 5), RangeError);
}

TEST_CASE("p_value matches t-density quadrature") {
    for (int tenths = 1; tenths <= 9; tenths += 2) {
        const double r = tenths / 10.0;
        for (int n : {4, 7, 12, 30}) {
            const double expected = p_value_quadrature(r, n);
            CHECK(std::fabs(p_value(r, n) - expected) < 1e-6);
            CHECK(std::fabs(p_value(-r, n) - expected) < 1e-6);
        }
    }
}

TEST_CASE("p_value monotonic in |r| and n") {
    for (int n : {4, 8, 20}) {
        double prev = 1.0 + 1e-9;
        for (int tenths = 1; tenths <= 9; ++tenths) {
            const double p = p_value(tenths / 10.0, n);
            CHECK(p < prev);
            prev = p;
        }
    }
    for (double r : {0.3, 0.6, 0.9}) {
        double prev = 1.0 + 1e-9;
        for (int n : {4, 6, 10, 18, 30}) {
            const double p = p_value(r, n);
            CHECK(p < prev);
            prev = p;
        }
    }
}

TEST_CASE("star thresholds including boundaries") {
    CHECK(stars_for(0.2) == Stars::none);
    CHECK(stars_for(0.05) == Stars::none);
    CHECK(stars_for(0.05 - 1e-9) == Stars::one);
    CHECK(stars_for(0.01) == Stars::one);
    CHECK(stars_for(0.01 - 1e-9) == Stars::two);
    CHECK(stars_for(0.001) == Stars::two);
    CHECK(stars_for(0.001 - 1e-9) == Stars::three);
    CHECK(star_string(Stars::three) == "***");
    CHECK(star_string(Stars::none) == "");
}

TEST_CASE("format_r renders to two decimals") {
    CHECK(format_r(0.959) == "0.96");
    CHECK(format_r(-0.049) == "-0.05");
    CHECK(format_r(1.0) == "1.00");
    CHECK(format_r(0.0) == "0.00");
}

TEST_CASE("normalize_metric endpoints and pass-through") {
    CHECK(normalize_metric(-10.0, MetricKind::ideology) == 0.0);
    CHECK(normalize_metric(0.0, MetricKind::ideology) == 50.0);
    CHECK(normalize_metric(10.0, MetricKind::ideology) == 100.0);
    CHECK(normalize_metric(61.10, MetricKind::performance) == 61.10);
    CHECK_THROWS_AS((void)normalize_metric(11.0, MetricKind::ideology), RangeError);
    CHECK_THROWS_AS((void)normalize_metric(-0.5, MetricKind::performance), RangeError);
    CHECK_THROWS_AS((void)normalize_metric(100.5, MetricKind::performance), RangeError);
}

TEST_CASE("normalize_metric strictly monotone on ideology") {
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> val(-10.0, 10.0);
    for (int trial = 0; trial < 1000; ++trial) {
        double a = val(rng), b = val(rng);
        if (a > b) std::swap(a, b);
        if (a == b) continue;
        CHECK(normalize_metric(a, MetricKind::ideology) < normalize_metric(b, MetricKind::ideology));
    }
}

TEST_CASE("correlation_matrix diagonal, symmetry, abs transform") {
    MetricVector e_llm{"e_llm", "E LLM", {{"m1", -6.0}, {"m2", 1.0}, {"m3", 7.0}, {"m4", 2.0}}};
    MetricVector f_ang{"f_ang", "F Ang", {{"m1", -6.5}, {"m2", 0.5}, {"m3", 6.0}, {"m4", 2.5}}};
    MetricVector t_sens{"t_sens", "T Sens", {{"m1", 60.0}, {"m2", 42.0}, {"m3", 55.0}, {"m4", 48.0}}};

    auto matrix = correlation_matrix({e_llm, f_ang, t_sens}, {"f_ang", "f_tox"}, "all");
    CHECK(matrix.run_filter == "all");
    REQUIRE(matrix.cells.size() == 3);
    REQUIRE(matrix.abs_transformed == std::vector<std::string>{"f_ang"});

    for (size_t i = 0; i < 3; ++i) {
        REQUIRE(matrix.cells[i][i].result.has_value());
        CHECK(matrix.cells[i][i].result->r == 1.0);
        CHECK(matrix.cells[i][i].result->p == 0.0);
        CHECK(matrix.cells[i][i].result->stars == Stars::three);
    }
    for (size_t i = 0; i < 3; ++i)
        for (size_t j = 0; j < 3; ++j) {
            REQUIRE(matrix.cells[i][j].result.has_value() ==
                    matrix.cells[j][i].result.has_value());
            if (matrix.cells[i][j].result)
                CHECK(matrix.cells[i][j].result->r == matrix.cells[j][i].result->r);
        }

    // |f_ang| was correlated, not the signed values.
    std::vector<double> xs{-6.0, 1.0, 7.0, 2.0};
    std::vector<double> abs_ys{6.5, 0.5, 6.0, 2.5};
    CHECK(matrix.cells[0][1].result->r == doctest::Approx(pearson(xs, abs_ys)).epsilon(1e-15));
}

TEST_CASE("correlation_matrix pairwise-complete and unavailable cells") {
    MetricVector a{"e_llm", "E LLM", {{"m1", 1.0}, {"m2", 2.0}, {"m3", 3.0}, {"m4", 4.0}}};
    MetricVector b{"e_econ", "E Econ", {{"m1", 2.0}, {"m2", 4.0}, {"m3", 5.0}}};
    MetricVector c{"p_perc", "P Perc", {{"m1", 10.0}, {"m2", 20.0}}};
    MetricVector d{"t_know", "T Know", {{"m1", 5.0}, {"m2", 5.0}, {"m3", 5.0}, {"m4", 5.0}}};

    auto matrix = correlation_matrix({a, b, c, d}, {}, "aligned");
    CHECK(matrix.abs_transformed.empty());

    REQUIRE(matrix.cells[0][1].result.has_value());
    CHECK(matrix.cells[0][1].result->n == 3);

    CHECK_FALSE(matrix.cells[0][2].result.has_value());
    CHECK(matrix.cells[0][2].unavailable_reason.find("TooFewPoints") != std::string::npos);

    CHECK_FALSE(matrix.cells[0][3].result.has_value());
    CHECK(matrix.cells[0][3].unavailable_reason.find("ConstantInput") != std::string::npos);

    // Diagonal of a constant metric still reports r = 1 by definition.
    REQUIRE(matrix.cells[3][3].result.has_value());
    CHECK(matrix.cells[3][3].result->r == 1.0);
}

TEST_CASE("metric catalog lists the ten analysis metrics in table order") {
    const auto& cat = metric_catalog();
    REQUIRE(cat.size() == 10);
    CHECK(cat[0].first == "e_llm");
    CHECK(cat[0].second == "E LLM");
    CHECK(cat[8].second == "P Δ");
    CHECK(metric_kind("e_soc") == MetricKind::ideology);
    CHECK(metric_kind("t_know") == MetricKind::performance);
    CHECK(metric_kind("mmlu") == MetricKind::performance);
    CHECK_THROWS_AS((void)metric_kind("bogus"), RangeError);
}
