#include "quadrant/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "quadrant/errors.hpp"

namespace quadrant::analysis {

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw LengthMismatch("pearson: input lengths differ (" + std::to_string(x.size()) +
                             " vs " + std::to_string(y.size()) + ")");
    const size_t n = x.size();
    if (n < 3) throw TooFewPoints("pearson: need at least 3 points, got " + std::to_string(n));

    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);

    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0) throw ConstantInput("pearson: first input is constant");
    if (syy == 0.0) throw ConstantInput("pearson: second input is constant");
    return sxy / std::sqrt(sxx * syy);
}

namespace {

// Continued fraction for the incomplete beta function, modified Lentz method.
double betacf(double a, double b, double x) {
    constexpr int max_iter = 200;
    constexpr double eps = 3.0e-14;
    constexpr double fpmin = 1.0e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) return h;
    }
    throw RangeError("incomplete_beta_regularized: continued fraction did not converge");
}

}  // namespace

double incomplete_beta_regularized(double a, double b, double x) {
    if (a <= 0.0 || b <= 0.0)
        throw RangeError("incomplete_beta_regularized: a and b must be positive");
    if (x < 0.0 || x > 1.0)
        throw RangeError("incomplete_beta_regularized: x must lie in [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;

    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double p_value(double r, int n) {
    if (n < 3) throw TooFewPoints("p_value: need at least 3 points, got " + std::to_string(n));
    if (std::fabs(r) > 1.0 + 1e-12)
        throw RangeError("p_value: correlation out of range: " + std::to_string(r));
    const double ar = std::min(std::fabs(r), 1.0);
    if (ar >= 1.0) return 0.0;

    const double nu = static_cast<double>(n - 2);
    const double t2 = ar * ar * nu / (1.0 - ar * ar);
    const double x = nu / (nu + t2);
    const double p = incomplete_beta_regularized(nu / 2.0, 0.5, x);
    return std::clamp(p, 0.0, 1.0);
}

Stars stars_for(double p) {
    if (p < 0.001) return Stars::three;
    if (p < 0.01) return Stars::two;
    if (p < 0.05) return Stars::one;
    return Stars::none;
}

std::string star_string(Stars s) {
    switch (s) {
        case Stars::three: return "***";
        case Stars::two: return "**";
        case Stars::one: return "*";
        default: return "";
    }
}

std::string format_r(double r) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", r);
    return buf;
}

double normalize_metric(double value, MetricKind kind) {
    switch (kind) {
        case MetricKind::ideology:
            if (value < -10.0 || value > 10.0)
                throw RangeError("normalize_metric: ideology value outside [-10, 10]: " +
                                 std::to_string(value));
            return (value + 10.0) * 5.0;
        case MetricKind::performance:
            if (value < 0.0 || value > 100.0)
                throw RangeError("normalize_metric: performance value outside [0, 100]: " +
                                 std::to_string(value));
            return value;
    }
    throw RangeError("normalize_metric: unknown metric kind");
}

CorrelationMatrix correlation_matrix(const std::vector<MetricVector>& vectors,
                                     const std::vector<std::string>& abs_transform_ids,
                                     const std::string& run_filter) {
    std::vector<MetricVector> work = vectors;
    std::set<std::string> abs_ids(abs_transform_ids.begin(), abs_transform_ids.end());
    for (auto& v : work) {
        if (!abs_ids.count(v.id)) continue;
        for (auto& [run, value] : v.values) value = std::fabs(value);
    }

    const size_t m = work.size();
    CorrelationMatrix out;
    out.run_filter = run_filter;
    for (const auto& v : work) {
        out.metric_ids.push_back(v.id);
        out.metric_labels.push_back(v.label);
        if (abs_ids.count(v.id)) out.abs_transformed.push_back(v.id);
    }
    out.cells.assign(m, std::vector<CorrelationCell>(m));

    for (size_t i = 0; i < m; ++i) {
        CorrelationResult diag;
        diag.r = 1.0;
        diag.p = 0.0;
        diag.n = static_cast<int>(work[i].values.size());
        diag.stars = Stars::three;
        out.cells[i][i].result = diag;
    }

    for (size_t i = 0; i < m; ++i) {
        for (size_t j = i + 1; j < m; ++j) {
            std::vector<double> xs, ys;
            for (const auto& [run, value] : work[i].values) {
                auto it = work[j].values.find(run);
                if (it == work[j].values.end()) continue;
                xs.push_back(value);
                ys.push_back(it->second);
            }
            CorrelationCell cell;
            if (xs.size() < 3) {
                cell.unavailable_reason =
                    "TooFewPoints: " + std::to_string(xs.size()) + " shared runs";
            } else {
                try {
                    CorrelationResult res;
                    res.r = pearson(xs, ys);
                    res.n = static_cast<int>(xs.size());
                    res.p = p_value(res.r, res.n);
                    res.stars = stars_for(res.p);
                    cell.result = res;
                } catch (const ConstantInput& e) {
                    cell.unavailable_reason = std::string("ConstantInput: ") + e.what();
                }
            }
            out.cells[i][j] = cell;
            out.cells[j][i] = cell;
        }
    }
    return out;
}

const std::vector<std::pair<std::string, std::string>>& metric_catalog() {
    static const std::vector<std::pair<std::string, std::string>> catalog = {
        {"e_llm", "E LLM"},   {"e_econ", "E Econ"}, {"e_soc", "E Soc"},
        {"f_sent", "F Sent"}, {"f_ang", "F Ang"},   {"f_tox", "F Tox"},
        {"t_sens", "T Sens"}, {"t_know", "T Know"}, {"p_delta", "P Δ"},
        {"p_perc", "P Perc"},
    };
    return catalog;
}

MetricKind metric_kind(const std::string& metric_id) {
    if (metric_id == "e_econ" || metric_id == "e_soc" || metric_id == "f_sent" ||
        metric_id == "f_ang" || metric_id == "f_tox" || metric_id == "e_llm")
        return MetricKind::ideology;
    if (metric_id == "t_sens" || metric_id == "t_know" || metric_id == "p_perc" ||
        metric_id == "p_delta" || metric_id == "mmlu")
        return MetricKind::performance;
    throw RangeError("metric_kind: unknown metric id: " + metric_id);
}

}  // namespace quadrant::analysis
