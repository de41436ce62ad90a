#include "acceptance.hpp"

#include <cmath>
#include <cstdio>
#include <optional>
#include <vector>

#include "metrics.hpp"
#include "rng.hpp"

// The rank-sum AUC must agree with a quadratic pairwise oracle (ties count
// one half) to 1e-12 on random instances, including tie-heavy ones where
// scores are drawn from alphabets as small as two values.

namespace {

std::optional<double> pairwise_auc(const std::vector<double>& scores,
                                   const std::vector<int>& labels) {
    double pairs = 0.0;
    double credit = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 0) continue;
            pairs += 1.0;
            if (scores[i] > scores[j]) credit += 1.0;
            else if (scores[i] == scores[j]) credit += 0.5;
        }
    }
    if (pairs == 0.0) return std::nullopt;
    return credit / pairs;
}

} // namespace

int main() {
    using namespace acceptance;
    adaf2m2::Rng rng(0xa0c);
    const int instances = 200;
    const double tol = 1e-12;
    double worst = 0.0;
    int defined = 0;
    int single_class = 0;
    for (int t = 0; t < instances; ++t) {
        int n = 1 + static_cast<int>(rng.uniform_int(1000));
        // A third of the instances use a tiny score alphabet to force ties;
        // another third quantize to one decimal; the rest are continuous.
        int mode = t % 3;
        int alphabet = 2 + static_cast<int>(rng.uniform_int(5));
        double pos_rate = rng.uniform(0.05, 0.95);
        std::vector<double> scores(static_cast<std::size_t>(n));
        std::vector<int> labels(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            double s = rng.uniform();
            if (mode == 0) s = std::floor(s * alphabet) / alphabet;
            else if (mode == 1) s = std::round(s * 10.0) / 10.0;
            scores[static_cast<std::size_t>(i)] = s;
            labels[static_cast<std::size_t>(i)] = rng.bernoulli(pos_rate) ? 1 : 0;
        }
        auto fast = adaf2m2::auc(scores, labels);
        auto slow = pairwise_auc(scores, labels);
        if (fast.has_value() != slow.has_value()) {
            return fail("c6 (auc oracle)",
                        "definedness mismatch on instance " + std::to_string(t));
        }
        if (!fast) {
            ++single_class;
            continue;
        }
        ++defined;
        double diff = std::fabs(*fast - *slow);
        worst = std::max(worst, diff);
        if (diff > tol) {
            std::printf("  instance %d (n=%d, mode=%d): fast %.17g oracle %.17g\n",
                        t, n, mode, *fast, *slow);
            return fail("c6 (auc oracle)", "disagreement " + std::to_string(diff));
        }
    }
    return pass("c6 (auc oracle)",
                std::to_string(defined) + " instances matched to 1e-12 (worst diff " +
                    std::to_string(worst) + "), " + std::to_string(single_class) +
                    " single-class instances undefined on both sides");
}
