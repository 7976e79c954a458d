#pragma once

// Reference implementations used only by tests. Each one takes a different
// route from the library code it checks: covariance eigendecomposition by
// cyclic Jacobi rotations instead of SVD, exhaustive enumeration instead of
// Lloyd iterations, O(n^2) scans instead of running maxima, closed-form 2x2
// algebra instead of Cholesky solves, and Boost's Student-t CDF instead of the
// hand-rolled incomplete beta.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

/// Sample covariance of the columns of `x` (rows are observations).
inline Matrix covariance(const Matrix& x) {
    const std::size_t n = x.size();
    const std::size_t d = x[0].size();
    std::vector<double> mean(d, 0.0);
    for (const auto& r : x)
        for (std::size_t j = 0; j < d; ++j) mean[j] += r[j] / static_cast<double>(n);
    Matrix c(d, std::vector<double>(d, 0.0));
    for (const auto& r : x)
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) c[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]) / static_cast<double>(n - 1);
    return c;
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.
inline std::vector<double> jacobi_eigenvalues(Matrix a) {
    const std::size_t n = a.size();
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += a[i][j] * a[i][j];
        if (off < 1e-30) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a[p][q]) < 1e-300) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k][p];
                    const double akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p][k];
                    const double aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = a[i][i];
    std::sort(ev.rbegin(), ev.rend());
    return ev;
}

/// Minimum k=2 inertia over every nonempty bipartition.
inline double exhaustive_bipartition_inertia(const Matrix& x) {
    const std::size_t n = x.size();
    const std::size_t d = x[0].size();
    double best = std::numeric_limits<double>::infinity();
    for (std::uint64_t mask = 1; mask + 1 < (std::uint64_t{1} << n); ++mask) {
        if (mask & 1) continue;  // fix point 0 in group 0 to halve the search
        double total = 0.0;
        for (int g = 0; g < 2; ++g) {
            std::vector<double> mean(d, 0.0);
            double count = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (((mask >> i) & 1) != static_cast<std::uint64_t>(g)) continue;
                for (std::size_t j = 0; j < d; ++j) mean[j] += x[i][j];
                count += 1;
            }
            for (auto& m : mean) m /= count;
            for (std::size_t i = 0; i < n; ++i) {
                if (((mask >> i) & 1) != static_cast<std::uint64_t>(g)) continue;
                for (std::size_t j = 0; j < d; ++j) total += (x[i][j] - mean[j]) * (x[i][j] - mean[j]);
            }
        }
        best = std::min(best, total);
    }
    return best;
}

inline double euclid(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
    return std::sqrt(s);
}

/// Average silhouette straight from the definition.
inline double silhouette(const Matrix& x, const std::vector<int>& labels) {
    const std::size_t n = x.size();
    std::map<int, int> sizes;
    for (int l : labels) ++sizes[l];
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (sizes[labels[i]] == 1) continue;
        double a = 0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i && labels[j] == labels[i]) a += euclid(x[i], x[j]);
        a /= sizes[labels[i]] - 1;
        double b = std::numeric_limits<double>::infinity();
        for (const auto& [other, size] : sizes) {
            if (other == labels[i]) continue;
            double s = 0;
            for (std::size_t j = 0; j < n; ++j)
                if (labels[j] == other) s += euclid(x[i], x[j]);
            b = std::min(b, s / size);
        }
        total += (b - a) / std::max(a, b);
    }
    return total / static_cast<double>(n);
}

/// Max over all i <= j of (w_i - w_j) / w_i on the path [base, w_1..w_n], in %.
inline double exhaustive_drawdown(const std::vector<double>& returns, double base = 100.0) {
    std::vector<double> w{base};
    for (double r : returns) w.push_back(w.back() * (1.0 + r));
    double worst = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i)
        for (std::size_t j = i; j < w.size(); ++j) worst = std::max(worst, (w[i] - w[j]) / w[i]);
    return 100.0 * worst;
}

struct Ols {
    double intercept;
    double slope;
};

/// Solves the 2x2 normal equations [n Sx; Sx Sxx] [a b]' = [Sy Sxy]' by Cramer's rule.
inline Ols ols(const std::vector<double>& y, const std::vector<double>& x) {
    double n = static_cast<double>(x.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double det = n * sxx - sx * sx;
    return {(sy * sxx - sx * sxy) / det, (n * sxy - sx * sy) / det};
}

/// Two-sided Pearson p-value via Boost's Student-t distribution.
inline double pearson_p(double r, std::size_t n) {
    const double dof = static_cast<double>(n) - 2.0;
    const double t = r * std::sqrt(dof / (1.0 - r * r));
    boost::math::students_t dist(dof);
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

inline double normal_pdf(double x, double mean, double var) {
    return std::exp(-(x - mean) * (x - mean) / (2.0 * var)) / std::sqrt(2.0 * std::numbers::pi * var);
}

/// Gaussian naive Bayes posterior of class 2 from ML fits, by direct density products.
inline double naive_bayes_posterior(const Matrix& x, const std::vector<int>& y, const std::vector<double>& point) {
    const std::size_t d = point.size();
    double joint[2];
    for (int c = 0; c < 2; ++c) {
        double count = 0;
        std::vector<double> mean(d, 0.0), var(d, 0.0);
        for (std::size_t i = 0; i < x.size(); ++i)
            if (y[i] == c + 1) {
                count += 1;
                for (std::size_t j = 0; j < d; ++j) mean[j] += x[i][j];
            }
        for (auto& m : mean) m /= count;
        for (std::size_t i = 0; i < x.size(); ++i)
            if (y[i] == c + 1)
                for (std::size_t j = 0; j < d; ++j) var[j] += (x[i][j] - mean[j]) * (x[i][j] - mean[j]) / count;
        double p = count / static_cast<double>(x.size());
        for (std::size_t j = 0; j < d; ++j) p *= normal_pdf(point[j], mean[j], std::max(var[j], 1e-9));
        joint[c] = p;
    }
    return joint[1] / (joint[0] + joint[1]);
}

/// Sigma^-1 (mu2 - mu1) for two features, pooled ML covariance plus `ridge_abs` on the diagonal.
inline std::vector<double> lda_direction_2d(const Matrix& x, const std::vector<int>& y, double ridge_abs = 0.0) {
    double mu[2][2] = {{0, 0}, {0, 0}};
    double cnt[2] = {0, 0};
    for (std::size_t i = 0; i < x.size(); ++i) {
        const int c = y[i] - 1;
        cnt[c] += 1;
        mu[c][0] += x[i][0];
        mu[c][1] += x[i][1];
    }
    for (int c = 0; c < 2; ++c) {
        mu[c][0] /= cnt[c];
        mu[c][1] /= cnt[c];
    }
    double s00 = 0, s01 = 0, s11 = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const int c = y[i] - 1;
        const double a = x[i][0] - mu[c][0];
        const double b = x[i][1] - mu[c][1];
        s00 += a * a;
        s01 += a * b;
        s11 += b * b;
    }
    const double n = static_cast<double>(x.size());
    s00 = s00 / n + ridge_abs;
    s11 = s11 / n + ridge_abs;
    s01 /= n;
    const double det = s00 * s11 - s01 * s01;
    const double d0 = mu[1][0] - mu[0][0];
    const double d1 = mu[1][1] - mu[0][1];
    return {(s11 * d0 - s01 * d1) / det, (-s01 * d0 + s00 * d1) / det};
}

}  // namespace oracle
