#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <unordered_set>

#include "rng.hpp"

namespace adaf2m2 {

FdReport finite_difference_check(const std::function<double()>& loss,
                                 const std::function<void()>& compute_grads,
                                 std::span<Parameter* const> params,
                                 const FdOptions& opts) {
    const double l0 = loss();
    const double l1 = loss();
    if (std::memcmp(&l0, &l1, sizeof(double)) != 0)
        throw NumericError("finite_difference_check: objective is not deterministic (" +
                           std::to_string(l0) + " vs " + std::to_string(l1) + ")");

    compute_grads();
    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (const Parameter* p : params)
        analytic.emplace_back(p->grad.data(), p->grad.data() + p->grad.size());

    FdReport report;
    Rng rng(opts.seed);
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Parameter* p = params[pi];
        const std::size_t total = p->value.size();

        std::vector<std::size_t> coords;
        if (total <= opts.exhaustive_limit) {
            coords.resize(total);
            for (std::size_t i = 0; i < total; ++i) coords[i] = i;
        } else {
            std::unordered_set<std::size_t> seen;
            const std::size_t want = std::min(opts.sample_coords, total);
            while (seen.size() < want) seen.insert(rng.uniform_int(total));
            coords.assign(seen.begin(), seen.end());
            std::sort(coords.begin(), coords.end());
        }

        for (const std::size_t c : coords) {
            double* slot = p->value.data() + c;
            const double saved = *slot;
            *slot = saved + opts.eps;
            const double lp = loss();
            *slot = saved - opts.eps;
            const double lm = loss();
            *slot = saved;

            const double numeric = (lp - lm) / (2.0 * opts.eps);
            const double a = analytic[pi][c];
            const double denom = std::max({std::fabs(a), std::fabs(numeric), opts.denom_floor});
            const double rel = std::fabs(a - numeric) / denom;
            ++report.coords_checked;
            if (rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst_param = p->id;
                report.worst_coord = static_cast<int>(c);
                report.worst_analytic = a;
                report.worst_numeric = numeric;
            }
        }
    }
    return report;
}

} // namespace adaf2m2
