#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace quadrant::analysis {

/// Product-moment correlation over equal-length vectors.
/// Throws LengthMismatch, TooFewPoints (n < 3), ConstantInput.
double pearson(std::span<const double> x, std::span<const double> y);

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
/// Exposed for the statistics below and for oracle cross-checks in tests.
double incomplete_beta_regularized(double a, double b, double x);

/// Two-sided p-value for a Pearson r at sample size n: t = r*sqrt((n-2)/(1-r^2)),
/// p = I_{nu/(nu+t^2)}(nu/2, 1/2) with nu = n-2 degrees of freedom.
/// |r| = 1 yields p = 0. Throws TooFewPoints (n < 3), RangeError (|r| > 1).
double p_value(double r, int n);

enum class Stars { none, one, two, three };

/// Significance stars: p < 0.05 (*), p < 0.01 (**), p < 0.001 (***).
Stars stars_for(double p);
std::string star_string(Stars s);

/// "%.2f" rendering used in every correlation table ("0.96", "-0.05", "1.00").
std::string format_r(double r);

enum class MetricKind { ideology, performance };

/// Map a metric onto the 0-100 reporting scale. Ideology values live in
/// [-10, 10] and map linearly with 0 -> 50 (neutral); performance values are
/// already percentages and pass through. Out-of-domain input -> RangeError.
double normalize_metric(double value, MetricKind kind);

/// One named metric observed across model runs (run id -> value).
struct MetricVector {
    std::string id;     // stable key, e.g. "f_ang"
    std::string label;  // display label, e.g. "F Ang"
    std::map<std::string, double> values;
};

struct CorrelationResult {
    double r = 0.0;
    double p = 1.0;
    int n = 0;
    Stars stars = Stars::none;
};

struct CorrelationCell {
    std::optional<CorrelationResult> result;  // empty when unavailable
    std::string unavailable_reason;
};

struct CorrelationMatrix {
    std::vector<std::string> metric_ids;
    std::vector<std::string> metric_labels;
    std::vector<std::vector<CorrelationCell>> cells;  // [row][col], symmetric
    std::vector<std::string> abs_transformed;         // ids |.|-transformed before correlating
    std::string run_filter;                           // which runs fed the vectors
};

/// Symmetric matrix over the given metrics, pairwise-complete on run ids.
/// Vectors whose id appears in abs_transform_ids are |.|-transformed first.
/// Diagonal cells are exactly r = 1, p = 0. Cells with fewer than 3 shared
/// observations or a constant input are marked unavailable, not fatal.
CorrelationMatrix correlation_matrix(const std::vector<MetricVector>& vectors,
                                     const std::vector<std::string>& abs_transform_ids,
                                     const std::string& run_filter);

/// The ten metric ids/labels of the cross-dimension analysis, in table order.
const std::vector<std::pair<std::string, std::string>>& metric_catalog();

/// Metric kind for normalization, by catalog id (plus "mmlu").
MetricKind metric_kind(const std::string& metric_id);

}  // namespace quadrant::analysis
