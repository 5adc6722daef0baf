#pragma once
// Statistical primitives: agreement, rank correlation, t-tests, multiple
// comparison correction, McNemar's test, and classification reports.
//
// p-values come from the regularized incomplete beta and gamma functions
// evaluated with Lentz's continued fraction; no external numeric library.

#include "incivility/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace incivility::stats {

enum class Direction { FirstHigher, SecondHigher };

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::optional<double> degrees_of_freedom;
    std::optional<Direction> direction;
};

namespace detail {

inline double continued_fraction_beta(double a, double b, double x) {
    constexpr int kMaxIter = 500;
    constexpr double kEps = 1e-15;
    constexpr double kTiny = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace detail

// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::continued_fraction_beta(a, b, x) / a;
    return 1.0 - front * detail::continued_fraction_beta(b, a, 1.0 - x) / b;
}

// Regularized upper incomplete gamma Q(a, x).
inline double incomplete_gamma_upper(double a, double x) {
    if (x <= 0.0) return 1.0;
    const double log_front = -x + a * std::log(x) - std::lgamma(a);
    if (x < a + 1.0) {
        double sum = 1.0 / a;
        double term = sum;
        for (int n = 1; n < 1000; ++n) {
            term *= x / (a + n);
            sum += term;
            if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
        }
        return 1.0 - sum * std::exp(log_front);
    }
    constexpr double kTiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 1000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = b + an / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16) break;
    }
    return std::exp(log_front) * h;
}

// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
inline double student_t_two_sided_p(double t, double df) {
    if (std::isinf(t)) return 0.0;
    return std::clamp(incomplete_beta(df / 2.0, 0.5, df / (df + t * t)), 0.0, 1.0);
}

// P(X >= x) for chi-square with k degrees of freedom.
inline double chi_square_sf(double x, double k) { return std::clamp(incomplete_gamma_upper(k / 2.0, x / 2.0), 0.0, 1.0); }

inline double normal_two_sided_p(double z) { return std::clamp(std::erfc(std::fabs(z) / std::sqrt(2.0)), 0.0, 1.0); }

inline double mean(std::span<const double> xs) {
    double sum = 0.0;
    for (double x : xs) sum += x;
    return xs.empty() ? 0.0 : sum / static_cast<double>(xs.size());
}

// Unbiased sample variance (n - 1 denominator).
inline double sample_variance(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return ss / static_cast<double>(xs.size() - 1);
}

// ---------------------------------------------------------------------------
// Agreement

// Cohen's kappa between two labelings over any equality-comparable, ordered
// label type. Labels may come from different alphabets (e.g. a Tie outcome on
// one side only); such labels simply never agree. The p-value tests kappa = 0
// with the large-sample standard error sqrt(p_e / (n (1 - p_e))).
template <typename Label>
TestResult cohen_kappa(std::span<const Label> labels_a, std::span<const Label> labels_b) {
    if (labels_a.size() != labels_b.size()) throw Error(Errc::Shape, "labelings differ in length");
    if (labels_a.empty()) throw Error(Errc::InsufficientData, "kappa needs at least one item");
    const double n = static_cast<double>(labels_a.size());
    std::map<Label, double> marg_a;
    std::map<Label, double> marg_b;
    double agree = 0.0;
    for (std::size_t i = 0; i < labels_a.size(); ++i) {
        marg_a[labels_a[i]] += 1.0;
        marg_b[labels_b[i]] += 1.0;
        if (labels_a[i] == labels_b[i]) agree += 1.0;
    }
    const double p_o = agree / n;
    double p_e = 0.0;
    for (const auto& [label, count] : marg_a) {
        auto it = marg_b.find(label);
        if (it != marg_b.end()) p_e += (count / n) * (it->second / n);
    }
    TestResult r;
    if (p_e >= 1.0 - 1e-15) {
        r.statistic = p_o >= 1.0 ? 1.0 : 0.0;
        r.p_value = 1.0;
        return r;
    }
    r.statistic = (p_o - p_e) / (1.0 - p_e);
    const double se0 = std::sqrt(p_e / (n * (1.0 - p_e)));
    r.p_value = se0 > 0.0 ? normal_two_sided_p(r.statistic / se0) : (r.statistic == 0.0 ? 1.0 : 0.0);
    return r;
}

template <typename Label>
TestResult cohen_kappa(const std::vector<Label>& a, const std::vector<Label>& b) {
    return cohen_kappa(std::span<const Label>(a), std::span<const Label>(b));
}

template <typename Label>
double raw_agreement(const std::vector<Label>& a, const std::vector<Label>& b) {
    if (a.size() != b.size()) throw Error(Errc::Shape, "labelings differ in length");
    if (a.empty()) return 0.0;
    std::size_t agree = 0;
    for (std::size_t i = 0; i < a.size(); ++i) agree += a[i] == b[i] ? 1 : 0;
    return static_cast<double>(agree) / static_cast<double>(a.size());
}

// ---------------------------------------------------------------------------
// Correlation

// 1-based ranks; tied values share the average of their positions.
inline std::vector<double> average_ranks(std::span<const double> xs) {
    std::vector<std::size_t> order(xs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return xs[l] < xs[r]; });
    std::vector<double> ranks(xs.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
        const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
    const double mx = mean(x);
    const double my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw Error(Errc::UndefinedCorrelation, "constant input");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// Spearman's rho as the Pearson correlation of average ranks. The p-value uses
// the t approximation with n - 2 degrees of freedom.
inline TestResult spearman_rho(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error(Errc::Shape, "sequences differ in length");
    if (x.size() < 2) throw Error(Errc::InsufficientData, "spearman needs at least two observations");
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    TestResult r;
    r.statistic = pearson(rx, ry);
    const double n = static_cast<double>(x.size());
    if (x.size() > 2) {
        r.degrees_of_freedom = n - 2.0;
        const double denom = 1.0 - r.statistic * r.statistic;
        r.p_value = denom <= 0.0 ? 0.0 : student_t_two_sided_p(r.statistic * std::sqrt((n - 2.0) / denom), n - 2.0);
    }
    return r;
}

inline TestResult spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
    return spearman_rho(std::span<const double>(x), std::span<const double>(y));
}

// ---------------------------------------------------------------------------
// t-tests

enum class TTestKind { Unpaired, Paired, OneSample };

namespace detail {

inline TestResult finish_t(double t, double df) {
    TestResult r;
    r.statistic = t;
    r.degrees_of_freedom = df;
    r.p_value = student_t_two_sided_p(t, df);
    if (t > 0) r.direction = Direction::FirstHigher;
    if (t < 0) r.direction = Direction::SecondHigher;
    return r;
}

}  // namespace detail

inline TestResult one_sample_t_test(std::span<const double> a, double mu0) {
    if (a.size() < 2) throw Error(Errc::InsufficientData, "one-sample t-test needs at least two observations");
    const double var = sample_variance(a);
    if (var <= 0.0) throw Error(Errc::DegenerateVariance, "sample has zero variance");
    const double n = static_cast<double>(a.size());
    return detail::finish_t((mean(a) - mu0) / std::sqrt(var / n), n - 1.0);
}

inline TestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw Error(Errc::Shape, "paired samples differ in length");
    if (a.size() < 2) throw Error(Errc::InsufficientData, "paired t-test needs at least two pairs");
    std::vector<double> diff(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
    return one_sample_t_test(diff, 0.0);
}

// Welch's unequal-variance test with Welch-Satterthwaite degrees of freedom.
inline TestResult welch_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) throw Error(Errc::InsufficientData, "unpaired t-test needs two observations per group");
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double va = sample_variance(a) / na;
    const double vb = sample_variance(b) / nb;
    const double se2 = va + vb;
    if (se2 <= 0.0) throw Error(Errc::DegenerateVariance, "both groups have zero variance");
    const double df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    return detail::finish_t((mean(a) - mean(b)) / std::sqrt(se2), df);
}

// Pooled-variance Student test, kept for sensitivity checks against Welch.
inline TestResult student_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) throw Error(Errc::InsufficientData, "unpaired t-test needs two observations per group");
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double pooled = ((na - 1.0) * sample_variance(a) + (nb - 1.0) * sample_variance(b)) / (na + nb - 2.0);
    if (pooled <= 0.0) throw Error(Errc::DegenerateVariance, "pooled variance is zero");
    return detail::finish_t((mean(a) - mean(b)) / std::sqrt(pooled * (1.0 / na + 1.0 / nb)), na + nb - 2.0);
}

struct TTestOptions {
    bool equal_variance = false;  // unpaired only
    double mu0 = 0.0;             // one-sample only
};

inline TestResult t_test(TTestKind kind, std::span<const double> a, std::span<const double> b = {}, TTestOptions options = {}) {
    switch (kind) {
    case TTestKind::OneSample: return one_sample_t_test(a, options.mu0);
    case TTestKind::Paired: return paired_t_test(a, b);
    case TTestKind::Unpaired: return options.equal_variance ? student_t_test(a, b) : welch_t_test(a, b);
    }
    throw Error(Errc::Config, "unknown t-test kind");
}

// ---------------------------------------------------------------------------
// Multiple comparisons

// flag i is true iff p_i <= family_alpha / m; m defaults to the number of
// p-values but can be set explicitly when the family is larger than the input.
inline std::vector<bool> bonferroni(std::span<const double> p_values, double family_alpha,
                                    std::optional<std::size_t> family_size = std::nullopt) {
    if (!(family_alpha > 0.0 && family_alpha < 1.0)) throw Error(Errc::Range, "family alpha must lie in (0,1)");
    const std::size_t m = family_size.value_or(p_values.size());
    std::vector<bool> flags(p_values.size(), false);
    if (m == 0) return flags;
    const double threshold = family_alpha / static_cast<double>(m);
    for (std::size_t i = 0; i < p_values.size(); ++i) flags[i] = p_values[i] <= threshold;
    return flags;
}

inline std::vector<bool> bonferroni(const std::vector<double>& p, double family_alpha,
                                    std::optional<std::size_t> family_size = std::nullopt) {
    return bonferroni(std::span<const double>(p), family_alpha, family_size);
}

// ---------------------------------------------------------------------------
// McNemar

// b = items only the first model gets right, c = items only the second gets
// right; chi-square = (b - c)^2 / (b + c) without continuity correction.
inline TestResult mcnemar_from_counts(std::size_t b, std::size_t c) {
    if (b + c == 0) throw Error(Errc::NoDiscordance, "models agree on every item");
    const double diff = static_cast<double>(b) - static_cast<double>(c);
    TestResult r;
    r.statistic = diff * diff / static_cast<double>(b + c);
    r.degrees_of_freedom = 1.0;
    r.p_value = chi_square_sf(r.statistic, 1.0);
    if (b > c) r.direction = Direction::FirstHigher;
    if (c > b) r.direction = Direction::SecondHigher;
    return r;
}

template <typename Label>
TestResult mcnemar(const std::vector<Label>& preds_a, const std::vector<Label>& preds_b, const std::vector<Label>& gold) {
    if (preds_a.size() != gold.size() || preds_b.size() != gold.size()) throw Error(Errc::Shape, "sequences differ in length");
    std::size_t b = 0, c = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        const bool ok_a = preds_a[i] == gold[i];
        const bool ok_b = preds_b[i] == gold[i];
        if (ok_a && !ok_b) ++b;
        if (!ok_a && ok_b) ++c;
    }
    return mcnemar_from_counts(b, c);
}

// ---------------------------------------------------------------------------
// Classification report

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
};

template <typename Label>
struct ClassificationReport {
    std::vector<std::pair<Label, ClassMetrics>> per_class;
    ClassMetrics weighted;  // support holds the total
    double accuracy = 0.0;

    const ClassMetrics& at(const Label& label) const {
        for (const auto& [l, m] : per_class) {
            if (l == label) return m;
        }
        throw Error(Errc::Schema, "label absent from report");
    }
};

// Per-class precision/recall/F1 (0 when a denominator is 0) and averages
// weighted by gold support. `labels` fixes the reported classes and their
// order; labels seen in the data but missing from it are appended.
template <typename Label>
ClassificationReport<Label> classification_report(const std::vector<Label>& preds, const std::vector<Label>& gold,
                                                  std::vector<Label> labels = {}) {
    if (preds.size() != gold.size()) throw Error(Errc::Shape, "predictions and gold differ in length");
    if (gold.empty()) throw Error(Errc::InsufficientData, "empty label sequences");
    auto add_label = [&](const Label& l) {
        if (std::find(labels.begin(), labels.end(), l) == labels.end()) labels.push_back(l);
    };
    for (const auto& l : gold) add_label(l);
    for (const auto& l : preds) add_label(l);

    ClassificationReport<Label> report;
    const double total = static_cast<double>(gold.size());
    std::size_t correct = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) correct += preds[i] == gold[i] ? 1 : 0;
    report.accuracy = static_cast<double>(correct) / total;
    report.weighted.support = gold.size();

    for (const auto& label : labels) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < gold.size(); ++i) {
            const bool p = preds[i] == label;
            const bool g = gold[i] == label;
            if (p && g) ++tp;
            if (p && !g) ++fp;
            if (!p && g) ++fn;
        }
        ClassMetrics m;
        m.support = tp + fn;
        m.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        m.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
        m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
        const double share = static_cast<double>(m.support) / total;
        report.weighted.precision += share * m.precision;
        report.weighted.recall += share * m.recall;
        report.weighted.f1 += share * m.f1;
        report.per_class.emplace_back(label, m);
    }
    return report;
}

}  // namespace incivility::stats
