#include "recipemeta/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace recipemeta::ad {

using detail::Node;

namespace {

thread_local bool t_grad_enabled = true;
thread_local std::vector<signed char>* t_kink_signs = nullptr;

// c (m x n) += a (m x k) * b (k x n)
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = c + i * n;
        const double* ai = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = ai[p];
            if (aip == 0.0) continue;
            const double* bp = b + p * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
        }
    }
}

// c (m x k) += a (m x n) * b^T, b is (k x n)
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t n, std::size_t k) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * n;
        double* ci = c + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double* bp = b + p * n;
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += ai[j] * bp[j];
            ci[p] += s;
        }
    }
}

// c (k x n) += a^T * b, a is (m x k), b is (m x n)
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * k;
        const double* bi = b + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = ai[p];
            if (aip == 0.0) continue;
            double* cp = c + p * n;
            for (std::size_t j = 0; j < n; ++j) cp[j] += aip * bi[j];
        }
    }
}

void require_same(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) throw ShapeError(op, a.shape(), b.shape());
}

void require_scalar(const char* op, const Tensor& s) {
    if (s.shape() != Shape{1, 1}) throw ShapeError(op, "expected a 1x1 tensor, got " + s.shape().str());
}

bool tracked(const Node& parent) { return parent.requires_grad; }

}  // namespace

ShapeError::ShapeError(const char* op, Shape a, Shape b)
    : std::invalid_argument(std::string(op) + ": shape mismatch " + a.str() + " vs " + b.str()) {}

ShapeError::ShapeError(const char* op, const std::string& detail)
    : std::invalid_argument(std::string(op) + ": " + detail) {}

std::shared_ptr<Node> node_of(const Tensor& t) { return t.node_; }

Tensor make_op_result(Shape shape, const char* op, std::vector<Tensor> inputs, std::vector<double> value) {
    auto n = std::make_shared<Node>();
    n->shape = shape;
    n->value = std::move(value);
    n->op = op;
    bool track = false;
    if (t_grad_enabled) {
        for (const auto& in : inputs) track = track || in.requires_grad();
    }
    if (track) {
        n->requires_grad = true;
        n->parents.reserve(inputs.size());
        for (const auto& in : inputs) n->parents.push_back(node_of(in));
    }
    return Tensor(std::move(n));
}

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad) {
    if (data.size() != shape.size()) {
        throw ShapeError("tensor", "data length " + std::to_string(data.size()) + " does not match shape " +
                                       shape.str());
    }
    node_ = std::make_shared<Node>();
    node_->shape = shape;
    node_->value = std::move(data);
    node_->requires_grad = requires_grad;
    if (requires_grad) node_->grad.assign(node_->value.size(), 0.0);
}

Tensor Tensor::zeros(std::size_t rows, std::size_t cols, bool requires_grad) {
    return Tensor({rows, cols}, std::vector<double>(rows * cols, 0.0), requires_grad);
}

Tensor Tensor::scalar(double v, bool requires_grad) { return Tensor({1, 1}, {v}, requires_grad); }

Tensor Tensor::row(std::vector<double> v, bool requires_grad) {
    const auto n = v.size();
    return Tensor({1, n}, std::move(v), requires_grad);
}

double Tensor::item() const {
    if (size() != 1) throw ShapeError("item", "tensor " + shape().str() + " is not a scalar");
    return node_->value[0];
}

void Tensor::zero_grad() {
    if (node_->requires_grad) node_->grad.assign(node_->value.size(), 0.0);
}

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

bool grad_enabled() { return t_grad_enabled; }

KinkProbe::KinkProbe() : previous_(t_kink_signs) { t_kink_signs = &signs_; }
KinkProbe::~KinkProbe() { t_kink_signs = previous_; }

// ---------------------------------------------------------------------------
// elementwise

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows()) throw ShapeError("matmul", a.shape(), b.shape());
    const auto m = a.rows(), k = a.cols(), n = b.cols();
    std::vector<double> out(m * n, 0.0);
    gemm_nn(a.data().data(), b.data().data(), out.data(), m, k, n);
    auto r = make_op_result({m, n}, "matmul", {a, b}, std::move(out));
    if (r.requires_grad()) {
        r.node()->backward = [m, k, n](Node& self) {
            auto& pa = *self.parents[0];
            auto& pb = *self.parents[1];
            if (tracked(pa)) gemm_nt(self.grad.data(), pb.value.data(), pa.grad.data(), m, n, k);
            if (tracked(pb)) gemm_tn(pa.value.data(), self.grad.data(), pb.grad.data(), m, k, n);
        };
    }
    return r;
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same("add", a, b);
    std::vector<double> out(a.size());
    auto x = a.data(), y = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
    auto r = make_op_result(a.shape(), "add", {a, b}, std::move(out));
    if (r.requires_grad()) {
        r.node()->backward = [](Node& self) {
            for (auto& p : self.parents) {
                if (!tracked(*p)) continue;
                for (std::size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i];
            }
        };
    }
    return r;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same("sub", a, b);
    std::vector<double> out(a.size());
    auto x = a.data(), y = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] - y[i];
    auto r = make_op_result(a.shape(), "sub", {a, b}, std::move(out));
    if (r.requires_grad()) {
        r.node()->backward = [](Node& self) {
            auto& pa = *self.parents[0];
            auto& pb = *self.parents[1];
            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                if (tracked(pa)) pa.grad[i] += self.grad[i];
                if (tracked(pb)) pb.grad[i] -= self.grad[i];
            }
        };
    }
    return r;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
    require_same("hadamard", a, b);
    std::vector<double> out(a.size());
    auto x = a.data(), y = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
    auto r = make_op_result(a.shape(), "hadamard", {a, b}, std::move(out));
    if (r.requires_grad()) {
        r.node()->backward = [](Node& self) {
            auto& pa = *self.parents[0];
            auto& pb = *self.parents[1];
            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                if (tracked(pa)) pa.grad[i] += self.grad[i] * pb.value[i];
                if (tracked(pb)) pb.grad[i] += self.grad[i] * pa.value[i];
            }
        };
    }
    return r;
}

Tensor scale(const Tensor& a, double s) {
    std::vector<double> out(a.data().begin(), a.data().end());
    for (auto& v : out) v *= s;
    auto r = make_op_result(a.shape(), "scale", {a}, std::move(out));
    if (r.requires_grad()) {
        r.node()->backward = [s](Node& self) {
            auto& pa = *self.parents[0];
            for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += s * self.grad[i];
        };
    }
    return r;
}

Tensor add_scalar(const Tensor& a, double s) {
    std::vector<double> out(a.data().begin(), a.data().end());
    for (auto& v : out) v += s;
    auto r = make_op_result(a.shape(), "add_scalar", {a}, std::move(out));
    if (r.requires_grad()) {
        r.node()->backward = [](Node& self) {
            auto& pa = *self.parents[0];
            for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i];
        };
    }
    return r;
}

Tensor mul_scalar(const Tensor& a, const Tensor& s) {
    require_scalar("mul_scalar", s);
    const double k = s.item();
    std::vector<double> out(a.data().begin(), a.data().end());
    for (auto& v : out) v *= k;
    auto r = make_op_result(a.shape(), "mul_scalar", {a, s}, std::move(out));
    if (r.requires_grad()) {
        r.node()->backward = [](Node& self) {
            auto& pa = *self.parents[0];
            auto& ps = *self.parents[1];
            const double k = ps.value[0];
            double ds = 0.0;
            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                if (tracked(pa)) pa.grad[i] += k * self.grad[i];
                ds += self.grad[i] * pa.value[i];
            }
            if (tracked(ps)) ps.grad[0] += ds;
        };
    }
    return r;
}

Tensor add_row(const Tensor& a, const Tensor& row) {
    if (row.rows() != 1 || row.cols() != a.cols()) throw ShapeError("add_row", a.shape(), row.shape());
    const auto m = a.rows(), n = a.cols();
    std::vector<double> out(a.data().begin(), a.data().end());
    auto b = row.data();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] += b[j];
    }
    auto r = make_op_result(a.shape(), "add_row", {a, row}, std::move(out));
    if (r.requires_grad()) {
        r.node()->backward = [m, n](Node& self) {
            auto& pa = *self.parents[0];
            auto& pb = *self.parents[1];
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    const double g = self.grad[i * n + j];
                    if (tracked(pa)) pa.grad[i * n + j] += g;
                    if (tracked(pb)) pb.grad[j] += g;
                }
            }
        };
    }
    return r;
}

Tensor relu(const Tensor& a) {
    auto x = a.data();
    std::vector<double> out(x.size());
    // NaN passes through so a diverged loss stays visible
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] < 0.0 ? 0.0 : x[i];
    if (t_kink_signs) {
        for (double v : x) t_kink_signs->push_back(static_cast<signed char>((v > 0.0) - (v < 0.0)));
    }
    auto r = make_op_result(a.shape(), "relu", {a}, std::move(out));
    if (r.requires_grad()) {
        r.node()->backward = [](Node& self) {
            auto& pa = *self.parents[0];
            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                if (pa.value[i] > 0.0) pa.grad[i] += self.grad[i];
            }
        };
    }
    return r;
}

Tensor tanh(const Tensor& a) {
    auto x = a.data();
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::tanh(x[i]);
    auto r = make_op_result(a.shape(), "tanh", {a}, std::move(out));
    if (r.requires_grad()) {
        r.node()->backward = [](Node& self) {
            auto& pa = *self.parents[0];
            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                const double y = self.value[i];
                pa.grad[i] += self.grad[i] * (1.0 - y * y);
            }
        };
    }
    return r;
}

Tensor softmax(const Tensor& a, int axis) {
    if (axis != 0 && axis != 1) throw ShapeError("softmax", "axis must be 0 or 1");
    const auto m = a.rows(), n = a.cols();
    // groups are rows (axis 1) or columns (axis 0), each of `len` elements
    const std::size_t groups = axis == 1 ? m : n;
    const std::size_t len = axis == 1 ? n : m;
    auto at = [=](std::size_t g, std::size_t i) { return axis == 1 ? g * n + i : i * n + g; };
    auto x = a.data();
    std::vector<double> out(x.size());
    for (std::size_t g = 0; g < groups; ++g) {
        double mx = -INFINITY;
        for (std::size_t i = 0; i < len; ++i) mx = std::max(mx, x[at(g, i)]);
        double z = 0.0;
        for (std::size_t i = 0; i < len; ++i) {
            out[at(g, i)] = std::exp(x[at(g, i)] - mx);
            z += out[at(g, i)];
        }
        for (std::size_t i = 0; i < len; ++i) out[at(g, i)] /= z;
    }
    auto r = make_op_result(a.shape(), "softmax", {a}, std::move(out));
    if (r.requires_grad()) {
        r.node()->backward = [=](Node& self) {
            auto& pa = *self.parents[0];
            for (std::size_t g = 0; g < groups; ++g) {
                double s = 0.0;
                for (std::size_t i = 0; i < len; ++i) s += self.grad[at(g, i)] * self.value[at(g, i)];
                for (std::size_t i = 0; i < len; ++i) {
                    pa.grad[at(g, i)] += self.value[at(g, i)] * (self.grad[at(g, i)] - s);
                }
            }
        };
    }
    return r;
}

Tensor sum(const Tensor& a) {
    double s = 0.0;
    for (double v : a.data()) s += v;
    auto r = make_op_result({1, 1}, "sum", {a}, {s});
    if (r.requires_grad()) {
        r.node()->backward = [](Node& self) {
            auto& pa = *self.parents[0];
            for (auto& g : pa.grad) g += self.grad[0];
        };
    }
    return r;
}

Tensor mean(const Tensor& a, int axis) {
    if (axis != 0 && axis != 1) throw ShapeError("mean", "axis must be 0 or 1");
    const auto m = a.rows(), n = a.cols();
    const std::size_t count = axis == 0 ? m : n;
    if (count == 0) throw ShapeError("mean", "cannot average over an empty axis of " + a.shape().str());
    Shape out_shape = axis == 0 ? Shape{1, n} : Shape{m, 1};
    std::vector<double> out(out_shape.size(), 0.0);
    auto x = a.data();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) out[axis == 0 ? j : i] += x[i * n + j];
    }
    const double inv = 1.0 / static_cast<double>(count);
    for (auto& v : out) v *= inv;
    auto r = make_op_result(out_shape, "mean", {a}, std::move(out));
    if (r.requires_grad()) {
        r.node()->backward = [=](Node& self) {
            auto& pa = *self.parents[0];
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < n; ++j) pa.grad[i * n + j] += inv * self.grad[axis == 0 ? j : i];
            }
        };
    }
    return r;
}

Tensor dot(const Tensor& a, const Tensor& b) {
    require_same("dot", a, b);
    double s = 0.0;
    auto x = a.data(), y = b.data();
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    auto r = make_op_result({1, 1}, "dot", {a, b}, {s});
    if (r.requires_grad()) {
        r.node()->backward = [](Node& self) {
            auto& pa = *self.parents[0];
            auto& pb = *self.parents[1];
            const double g = self.grad[0];
            for (std::size_t i = 0; i < pa.value.size(); ++i) {
                if (tracked(pa)) pa.grad[i] += g * pb.value[i];
                if (tracked(pb)) pb.grad[i] += g * pa.value[i];
            }
        };
    }
    return r;
}

Tensor slice(const Tensor& a, std::size_t row_begin, std::size_t row_end, std::size_t col_begin,
             std::size_t col_end) {
    if (row_begin > row_end || row_end > a.rows() || col_begin > col_end || col_end > a.cols()) {
        throw ShapeError("slice", "range [" + std::to_string(row_begin) + ":" + std::to_string(row_end) + ", " +
                                      std::to_string(col_begin) + ":" + std::to_string(col_end) +
                                      "] out of bounds for " + a.shape().str());
    }
    const auto m = row_end - row_begin, n = col_end - col_begin, src_n = a.cols();
    std::vector<double> out(m * n);
    auto x = a.data();
    for (std::size_t i = 0; i < m; ++i) {
        std::copy_n(x.begin() + static_cast<std::ptrdiff_t>((row_begin + i) * src_n + col_begin), n,
                    out.begin() + static_cast<std::ptrdiff_t>(i * n));
    }
    auto r = make_op_result({m, n}, "slice", {a}, std::move(out));
    if (r.requires_grad()) {
        r.node()->backward = [=](Node& self) {
            auto& pa = *self.parents[0];
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    pa.grad[(row_begin + i) * src_n + col_begin + j] += self.grad[i * n + j];
                }
            }
        };
    }
    return r;
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
    if (parts.empty()) throw ShapeError("concat", "no inputs");
    if (axis != 0 && axis != 1) throw ShapeError("concat", "axis must be 0 or 1");
    std::size_t m = 0, n = 0;
    for (const auto& p : parts) {
        if (axis == 0) {
            if (p.cols() != parts[0].cols()) throw ShapeError("concat", parts[0].shape(), p.shape());
            m += p.rows();
        } else {
            if (p.rows() != parts[0].rows()) throw ShapeError("concat", parts[0].shape(), p.shape());
            n += p.cols();
        }
    }
    if (axis == 0) n = parts[0].cols();
    else m = parts[0].rows();

    std::vector<double> out(m * n);
    std::vector<std::size_t> offsets;  // row offset (axis 0) or column offset (axis 1) per part
    std::size_t off = 0;
    for (const auto& p : parts) {
        offsets.push_back(off);
        auto x = p.data();
        if (axis == 0) {
            std::copy(x.begin(), x.end(), out.begin() + static_cast<std::ptrdiff_t>(off * n));
            off += p.rows();
        } else {
            const auto pn = p.cols();
            for (std::size_t i = 0; i < m; ++i) {
                std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(i * pn), pn,
                            out.begin() + static_cast<std::ptrdiff_t>(i * n + off));
            }
            off += pn;
        }
    }
    auto r = make_op_result({m, n}, "concat", parts, std::move(out));
    if (r.requires_grad()) {
        r.node()->backward = [=](Node& self) {
            for (std::size_t k = 0; k < self.parents.size(); ++k) {
                auto& p = *self.parents[k];
                if (!tracked(p)) continue;
                const auto pm = p.shape.rows, pn = p.shape.cols;
                for (std::size_t i = 0; i < pm; ++i) {
                    for (std::size_t j = 0; j < pn; ++j) {
                        const auto src = axis == 0 ? (offsets[k] + i) * n + j : i * n + offsets[k] + j;
                        p.grad[i * pn + j] += self.grad[src];
                    }
                }
            }
        };
    }
    return r;
}

// ---------------------------------------------------------------------------
// graph helpers

Tensor gather_rows(const Tensor& a, std::span<const std::uint32_t> index) {
    const auto n = a.cols();
    std::vector<double> out(index.size() * n);
    auto x = a.data();
    for (std::size_t i = 0; i < index.size(); ++i) {
        if (index[i] >= a.rows()) {
            throw ShapeError("gather_rows", "index " + std::to_string(index[i]) + " out of range for " +
                                                a.shape().str());
        }
        std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(index[i] * n), n,
                    out.begin() + static_cast<std::ptrdiff_t>(i * n));
    }
    auto r = make_op_result({index.size(), n}, "gather_rows", {a}, std::move(out));
    if (r.requires_grad()) {
        r.node()->backward = [n, idx = std::vector<std::uint32_t>(index.begin(), index.end())](Node& self) {
            auto& pa = *self.parents[0];
            for (std::size_t i = 0; i < idx.size(); ++i) {
                double* dst = pa.grad.data() + idx[i] * n;
                const double* src = self.grad.data() + i * n;
                for (std::size_t j = 0; j < n; ++j) dst[j] += src[j];
            }
        };
    }
    return r;
}

namespace {

void check_offsets(const char* op, const Tensor& a, std::span<const std::uint64_t> offsets) {
    if (offsets.empty() || offsets.front() != 0 || offsets.back() != a.rows()) {
        throw ShapeError(op, "segment offsets do not cover the " + std::to_string(a.rows()) + " input rows");
    }
}

}  // namespace

Tensor segment_sum(const Tensor& a, std::span<const std::uint64_t> offsets) {
    check_offsets("segment_sum", a, offsets);
    const auto segs = offsets.size() - 1, n = a.cols();
    std::vector<double> out(segs * n, 0.0);
    auto x = a.data();
    for (std::size_t s = 0; s < segs; ++s) {
        double* dst = out.data() + s * n;
        for (auto k = offsets[s]; k < offsets[s + 1]; ++k) {
            const double* src = x.data() + k * n;
            for (std::size_t j = 0; j < n; ++j) dst[j] += src[j];
        }
    }
    auto r = make_op_result({segs, n}, "segment_sum", {a}, std::move(out));
    if (r.requires_grad()) {
        r.node()->backward = [n, off = std::vector<std::uint64_t>(offsets.begin(), offsets.end())](Node& self) {
            auto& pa = *self.parents[0];
            for (std::size_t s = 0; s + 1 < off.size(); ++s) {
                const double* src = self.grad.data() + s * n;
                for (auto k = off[s]; k < off[s + 1]; ++k) {
                    double* dst = pa.grad.data() + k * n;
                    for (std::size_t j = 0; j < n; ++j) dst[j] += src[j];
                }
            }
        };
    }
    return r;
}

Tensor segment_softmax(const Tensor& a, std::span<const std::uint64_t> offsets) {
    check_offsets("segment_softmax", a, offsets);
    const auto segs = offsets.size() - 1, n = a.cols();
    auto x = a.data();
    std::vector<double> out(x.size());
    std::vector<double> mx(n), z(n);
    for (std::size_t s = 0; s < segs; ++s) {
        if (offsets[s] == offsets[s + 1]) continue;
        std::fill(mx.begin(), mx.end(), -INFINITY);
        std::fill(z.begin(), z.end(), 0.0);
        for (auto k = offsets[s]; k < offsets[s + 1]; ++k) {
            for (std::size_t j = 0; j < n; ++j) mx[j] = std::max(mx[j], x[k * n + j]);
        }
        for (auto k = offsets[s]; k < offsets[s + 1]; ++k) {
            for (std::size_t j = 0; j < n; ++j) {
                out[k * n + j] = std::exp(x[k * n + j] - mx[j]);
                z[j] += out[k * n + j];
            }
        }
        for (auto k = offsets[s]; k < offsets[s + 1]; ++k) {
            for (std::size_t j = 0; j < n; ++j) out[k * n + j] /= z[j];
        }
    }
    auto r = make_op_result(a.shape(), "segment_softmax", {a}, std::move(out));
    if (r.requires_grad()) {
        r.node()->backward = [n, off = std::vector<std::uint64_t>(offsets.begin(), offsets.end())](Node& self) {
            auto& pa = *self.parents[0];
            std::vector<double> dot(n);
            for (std::size_t s = 0; s + 1 < off.size(); ++s) {
                std::fill(dot.begin(), dot.end(), 0.0);
                for (auto k = off[s]; k < off[s + 1]; ++k) {
                    for (std::size_t j = 0; j < n; ++j) dot[j] += self.grad[k * n + j] * self.value[k * n + j];
                }
                for (auto k = off[s]; k < off[s + 1]; ++k) {
                    for (std::size_t j = 0; j < n; ++j) {
                        pa.grad[k * n + j] += self.value[k * n + j] * (self.grad[k * n + j] - dot[j]);
                    }
                }
            }
        };
    }
    return r;
}

Tensor rowwise_dot(const Tensor& a, const Tensor& b) {
    require_same("rowwise_dot", a, b);
    const auto m = a.rows(), n = a.cols();
    auto x = a.data(), y = b.data();
    std::vector<double> out(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) out[i] += x[i * n + j] * y[i * n + j];
    }
    auto r = make_op_result({m, 1}, "rowwise_dot", {a, b}, std::move(out));
    if (r.requires_grad()) {
        r.node()->backward = [m, n](Node& self) {
            auto& pa = *self.parents[0];
            auto& pb = *self.parents[1];
            for (std::size_t i = 0; i < m; ++i) {
                const double g = self.grad[i];
                for (std::size_t j = 0; j < n; ++j) {
                    if (tracked(pa)) pa.grad[i * n + j] += g * pb.value[i * n + j];
                    if (tracked(pb)) pb.grad[i * n + j] += g * pa.value[i * n + j];
                }
            }
        };
    }
    return r;
}

// ---------------------------------------------------------------------------
// reverse pass

void backward(const Tensor& loss) {
    if (loss.shape() != Shape{1, 1}) {
        throw ShapeError("backward", "loss must be a 1x1 scalar, got " + loss.shape().str());
    }
    Node* root = loss.node();
    if (!root->requires_grad) return;

    // iterative post-order DFS gives a topological order (parents before children)
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack{{root, 0}};
    visited.insert(root);
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* p = node->parents[next++].get();
            if (p->requires_grad && visited.insert(p).second) stack.push_back({p, 0});
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    for (Node* n : order) {
        if (n->is_leaf()) {
            if (n->grad.size() != n->value.size()) n->grad.assign(n->value.size(), 0.0);
        } else {
            n->grad.assign(n->value.size(), 0.0);
        }
    }
    if (root->is_leaf()) {
        root->grad[0] += 1.0;
        return;
    }
    root->grad[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if ((*it)->backward) (*it)->backward(**it);
    }
}

}  // namespace recipemeta::ad
