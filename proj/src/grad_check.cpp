#include "recipemeta/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace recipemeta::ad {

namespace {

double finite_or_throw(double v, const char* what) {
    if (!std::isfinite(v)) throw std::domain_error(std::string("grad_check: non-finite ") + what);
    return v;
}

}  // namespace

GradCheckResult grad_check(const std::function<Tensor()>& f, std::vector<Tensor> params, double eps,
                           const std::function<Tensor()>& reference) {
    if (!(eps > 0.0)) throw std::invalid_argument("grad_check: eps must be positive");

    for (auto& p : params) p.zero_grad();
    {
        Tensor loss = f();
        finite_or_throw(loss.item(), "loss");
        backward(loss);
    }
    std::vector<std::vector<double>> analytic;
    for (const auto& p : params) {
        analytic.emplace_back(p.grad().begin(), p.grad().end());
        for (double g : analytic.back()) finite_or_throw(g, "gradient");
    }

    auto evaluate = [&](std::vector<signed char>& signs) {
        NoGradGuard no_grad;
        KinkProbe probe;
        double v = finite_or_throw((reference ? reference() : f()).item(), "loss");
        signs = probe.signs();
        return v;
    };

    GradCheckResult result;
    std::vector<signed char> plus_signs, minus_signs;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        auto data = params[pi].mutable_data();
        for (std::size_t i = 0; i < data.size(); ++i) {
            const double saved = data[i];
            data[i] = saved + eps;
            const double up = evaluate(plus_signs);
            data[i] = saved - eps;
            const double down = evaluate(minus_signs);
            data[i] = saved;

            if (plus_signs != minus_signs) {
                ++result.excluded;
                continue;
            }
            const double numeric = (up - down) / (2.0 * eps);
            const double a = analytic[pi][i];
            const double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
            result.max_relative_error = std::max(result.max_relative_error, rel);
            ++result.checked;
        }
    }
    for (auto& p : params) p.zero_grad();
    return result;
}

}  // namespace recipemeta::ad
