#pragma once

#include "recipemeta/tensor.hpp"

#include <functional>
#include <vector>

namespace recipemeta::ad {

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::size_t checked = 0;
    /// Entries whose +/- eps perturbation moved some relu input across zero.
    std::size_t excluded = 0;
};

/// Compares backward() against central differences for every entry of every
/// parameter. Relative error is |a - n| / max(1e-8, |a| + |n|).
/// Throws std::domain_error if a non-finite loss or gradient shows up.
///
/// If `reference` is given, the finite differences are taken on it instead of
/// on f. It must equal f up to a constant wherever the relu sign pattern is
/// unchanged, e.g. a hinge loss with its margin dropped, which keeps the
/// differences clear of the rounding that the margin introduces.
GradCheckResult grad_check(const std::function<Tensor()>& f, std::vector<Tensor> params, double eps,
                           const std::function<Tensor()>& reference = {});

}  // namespace recipemeta::ad
