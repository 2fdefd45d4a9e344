// SPDX-License-Identifier: Apache-2.0
// Reference implementations written independently of the library code, used
// to check it. They favour the textbook formula over numerical care.
#pragma once

#include <cmath>
#include <cstddef>
#include <set>
#include <string>
#include <vector>

namespace vice::testing::oracle {

/// r = (n Σxy − Σx Σy) / sqrt((n Σx² − (Σx)²)(n Σy² − (Σy)²)).
inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    long double sx = 0, sy = 0, sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxy += static_cast<long double>(x[i]) * y[i];
        sxx += static_cast<long double>(x[i]) * x[i];
        syy += static_cast<long double>(y[i]) * y[i];
    }
    const long double num = n * sxy - sx * sy;
    const long double den = std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
    return static_cast<double>(num / den);
}

/// Rank table by counting: rank = 1 + #{smaller} + (#{equal} − 1) / 2.
inline std::vector<double> rank(const std::vector<double>& v) {
    std::vector<double> out;
    for (double a : v) {
        int less = 0, equal = 0;
        for (double b : v) {
            less += b < a ? 1 : 0;
            equal += b == a ? 1 : 0;
        }
        out.push_back(1.0 + less + (equal - 1) / 2.0);
    }
    return out;
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    return pearson(rank(x), rank(y));
}

/// Bland-Altman from the definitions.
struct BA {
    double mean_diff, sd, low, high;
};

inline BA bland_altman(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    double sum = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sum += a[i] - b[i];
    }
    const double m = sum / n;
    double ss = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ss += (a[i] - b[i] - m) * (a[i] - b[i] - m);
    }
    const double sd = std::sqrt(ss / (n - 1));
    return {m, sd, m - 1.96 * sd, m + 1.96 * sd};
}

/// (remain ∖ remove) ∪ add over plain string sets.
inline std::set<std::string> expected(const std::set<std::string>& remain, const std::set<std::string>& remove,
                                      const std::set<std::string>& add) {
    std::set<std::string> out;
    for (const auto& r : remain) {
        if (!remove.contains(r)) {
            out.insert(r);
        }
    }
    out.insert(add.begin(), add.end());
    return out;
}

} // namespace vice::testing::oracle
