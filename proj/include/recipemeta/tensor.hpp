#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

// Dense row-major float64 matrices with a reverse-mode tape. Every tensor is
// two-dimensional; vectors are 1 x n and scalars are 1 x 1.
namespace recipemeta::ad {

struct Shape {
    std::size_t rows = 0;
    std::size_t cols = 0;

    std::size_t size() const { return rows * cols; }
    std::string str() const { return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]"; }
    friend bool operator==(const Shape&, const Shape&) = default;
};

class ShapeError : public std::invalid_argument {
public:
    ShapeError(const char* op, Shape a, Shape b);
    ShapeError(const char* op, const std::string& detail);
};

namespace detail {

struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    bool requires_grad = false;
    const char* op = "leaf";
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward;

    bool is_leaf() const { return parents.empty(); }
};

}  // namespace detail

class Tensor {
public:
    Tensor() = default;
    Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

    static Tensor zeros(std::size_t rows, std::size_t cols, bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);
    static Tensor row(std::vector<double> v, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    Shape shape() const { return node_->shape; }
    std::size_t rows() const { return node_->shape.rows; }
    std::size_t cols() const { return node_->shape.cols; }
    std::size_t size() const { return node_->value.size(); }

    std::span<const double> data() const { return node_->value; }
    /// Direct write access; only meaningful on leaves (parameters).
    std::span<double> mutable_data() { return node_->value; }
    double at(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }
    double item() const;

    bool requires_grad() const { return node_->requires_grad; }
    std::span<const double> grad() const { return node_->grad; }
    std::span<double> mutable_grad() { return node_->grad; }
    void zero_grad();

    const char* op() const { return node_->op; }
    detail::Node* node() const { return node_.get(); }

private:
    friend Tensor make_op_result(Shape, const char*, std::vector<Tensor>, std::vector<double>);
    friend std::shared_ptr<detail::Node> node_of(const Tensor&);

    explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}
    std::shared_ptr<detail::Node> node_;
};

/// Disables tape recording for its lifetime (inference).
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

bool grad_enabled();

/// While alive, every relu records the sign of each input it sees (-1, 0, +1).
/// Used by the gradient checker to detect kink crossings.
class KinkProbe {
public:
    KinkProbe();
    ~KinkProbe();
    KinkProbe(const KinkProbe&) = delete;
    KinkProbe& operator=(const KinkProbe&) = delete;

    const std::vector<signed char>& signs() const { return signs_; }

private:
    std::vector<signed char> signs_;
    std::vector<signed char>* previous_;
};

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
/// a * s where s is a 1 x 1 tensor.
Tensor mul_scalar(const Tensor& a, const Tensor& s);
/// Adds a 1 x c row to every row of a.
Tensor add_row(const Tensor& a, const Tensor& row);
Tensor relu(const Tensor& a);
Tensor tanh(const Tensor& a);
/// axis 1 normalizes each row, axis 0 each column. Max-subtracted.
Tensor softmax(const Tensor& a, int axis);
Tensor sum(const Tensor& a);
/// axis 0 -> 1 x cols, axis 1 -> rows x 1.
Tensor mean(const Tensor& a, int axis);
Tensor dot(const Tensor& a, const Tensor& b);
Tensor slice(const Tensor& a, std::size_t row_begin, std::size_t row_end, std::size_t col_begin,
             std::size_t col_end);
Tensor concat(const std::vector<Tensor>& parts, int axis);

// Graph helpers. `offsets` delimit consecutive row segments (size = segments + 1).
Tensor gather_rows(const Tensor& a, std::span<const std::uint32_t> index);
Tensor segment_sum(const Tensor& a, std::span<const std::uint64_t> offsets);
/// Softmax over the rows of each segment, independently per column.
Tensor segment_softmax(const Tensor& a, std::span<const std::uint64_t> offsets);
/// rows x 1 of per-row inner products.
Tensor rowwise_dot(const Tensor& a, const Tensor& b);

/// Accumulates d(loss)/d(leaf) into every grad-tracked leaf reachable from loss.
void backward(const Tensor& loss);

}  // namespace recipemeta::ad
