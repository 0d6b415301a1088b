#pragma once

// Brute-force average-precision reference: builds the full PR staircase and
// integrates it with a literal max scan per recall step. Kept independent of
// the library's envelope computation.

#include <algorithm>
#include <numeric>
#include <utility>
#include <vector>

namespace testutil {

inline double ap_bruteforce(const std::vector<std::pair<double, bool>>& scored,
                            int64_t truth_count) {
    if (truth_count == 0) return scored.empty() ? 1.0 : 0.0;
    if (scored.empty()) return 0.0;

    std::vector<size_t> order(scored.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return scored[a].first > scored[b].first; });

    const size_t n = order.size();
    std::vector<double> precision(n), recall(n);
    int64_t tp = 0;
    for (size_t k = 0; k < n; ++k) {
        if (scored[order[k]].second) ++tp;
        precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
        recall[k] = static_cast<double>(tp) / static_cast<double>(truth_count);
    }

    double ap = 0.0;
    double prev_recall = 0.0;
    for (size_t k = 0; k < n; ++k) {
        if (recall[k] <= prev_recall) continue;
        // p_env(r) = max precision over every prefix with recall >= r.
        double best = 0.0;
        for (size_t j = 0; j < n; ++j) {
            if (recall[j] >= recall[k]) best = std::max(best, precision[j]);
        }
        ap += (recall[k] - prev_recall) * best;
        prev_recall = recall[k];
    }
    return ap;
}

}  // namespace testutil
