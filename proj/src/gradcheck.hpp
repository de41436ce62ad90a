#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace adaf2m2 {

struct FdOptions {
    double eps = 1e-5;
    // Parameters with more coordinates than this get a seeded random subset
    // of `sample_coords` coordinates instead of an exhaustive sweep.
    std::size_t exhaustive_limit = 400;
    std::size_t sample_coords = 256;
    std::uint64_t seed = 0x5eed;
    // The central-difference quotient carries ~ulp(loss)/(2*eps) of rounding
    // noise (~1e-11 for a unit-scale loss), so gradients below this magnitude
    // are compared absolutely against it rather than relatively.
    double denom_floor = 1e-6;
};

struct FdReport {
    double max_rel_error = 0.0;
    std::string worst_param;
    int worst_coord = -1;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
    std::size_t coords_checked = 0;
};

// Central-difference check of analytic gradients.
//
// `loss` must be a deterministic pure forward evaluation of the scalar
// objective (no gradient side effects); `compute_grads` must zero the
// accumulators and fill each parameter's grad for that same objective.
// Relative error uses denominator max(|analytic|, |numeric|, denom_floor).
// Throws NumericError if `loss` is not bit-deterministic, since finite
// differences would be meaningless.
FdReport finite_difference_check(const std::function<double()>& loss,
                                 const std::function<void()>& compute_grads,
                                 std::span<Parameter* const> params,
                                 const FdOptions& opts = {});

} // namespace adaf2m2
