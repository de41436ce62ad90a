#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace adaf2m2 {

// Row-major dense matrix of f64. Shape is fixed at construction; every
// operation that combines matrices checks shapes and throws ShapeError
// naming both operands on mismatch.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& at(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    double at(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

    std::span<double> row(int r) { return {data_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)}; }
    std::span<const double> row(int r) const { return {data_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)}; }

    void fill(double v);
    bool same_shape(const Matrix& other) const { return rows_ == other.rows_ && cols_ == other.cols_; }
    std::string shape_str() const;

    bool all_finite() const;

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

// A trainable tensor: value plus a gradient accumulator of identical shape,
// identified by a stable id used for checkpointing and optimizer state.
struct Parameter {
    Parameter(std::string id_, int rows, int cols)
        : id(std::move(id_)), value(rows, cols), grad(rows, cols) {}

    std::string id;
    Matrix value;
    Matrix grad;

    void zero_grad() { grad.fill(0.0); }
};

// Handle to a value recorded on a Tape. Values are dense f64 vectors
// (scalars are length-1 vectors).
using ValueId = std::uint32_t;
inline constexpr ValueId kNoValue = 0xffffffffu;

// Reverse-mode tape. One tape records the forward computation of one sample's
// training graph (a serving forward, or the main + auxiliary forwards of one
// training sample); tapes are never shared across samples. backward() walks
// the records in exact reverse creation order and accumulates into Parameter
// gradient buffers, so replaying backward twice doubles every accumulator.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Leaves -------------------------------------------------------------
    ValueId input(std::span<const double> values);          // constant, no gradient flow
    ValueId scalar_input(double v);
    ValueId param_row(Parameter& p, int row);                // one table row
    ValueId param_rows_mean(Parameter& p, std::span<const int> rows); // mean pooling

    // Primitives ----------------------------------------------------------
    // y = W x + b. W is (out x in), b is (out x 1).
    ValueId affine(Parameter& w, Parameter& b, ValueId x);
    ValueId relu(ValueId x);
    ValueId sigmoid(ValueId x);
    ValueId softmax(ValueId x);
    ValueId concat(std::span<const ValueId> parts);
    ValueId add(ValueId a, ValueId b);                       // elementwise, equal length
    ValueId sum(std::span<const ValueId> parts);             // elementwise, equal lengths
    ValueId dot(ValueId a, ValueId b);                       // scalar
    ValueId scale_const(ValueId x, double c);
    // out = w[index] * x : the per-feature weighting primitive. Gradients obey
    // d/dx = w[index] * g and d/dw[index] = <x, g>.
    ValueId scale_entry(ValueId x, ValueId w, int index);
    // [ ||v||, log1p(||v||), sqrt(||v||), ||v||^2 ]
    ValueId norm_features(ValueId v);
    // -y log(p) - (1-y) log(1-p) with p clamped to [1e-7, 1-1e-7] before the
    // logs. y must be exactly 0 or 1.
    ValueId cross_entropy(ValueId p, double label);

    // Introspection --------------------------------------------------------
    std::size_t node_count() const { return nodes_.size(); }
    int length(ValueId id) const { return nodes_[id].len; }
    std::span<const double> value(ValueId id) const;
    // Gradient of the last backward() root w.r.t. this value.
    std::span<const double> grad(ValueId id) const;

    // Runs reverse-mode accumulation from a scalar value. Seeds the root with
    // `seed` and adds the resulting parameter gradients into each touched
    // Parameter's accumulator.
    void backward(ValueId root, double seed = 1.0);

    // Drops all records but keeps allocated capacity for reuse.
    void clear();

    // Debug mode: verify every produced value is finite, throwing
    // NumericError naming the offending op.
    void set_check_finite(bool on) { check_finite_ = on; }

    static double cross_entropy_value(double p, double label);
    static void norm_features_values(std::span<const double> v, double out[4]);
    static double stable_sigmoid(double x);

private:
    enum class Op : std::uint8_t {
        Input, ParamRow, ParamRowsMean, Affine, Relu, Sigmoid, Softmax,
        Concat, Add, Sum, Dot, ScaleConst, ScaleEntry, NormFeatures, CrossEntropy
    };

    struct Node {
        Op op;
        int len = 0;              // output length
        std::uint32_t out = 0;    // offset into the value/grad arenas
        ValueId a = kNoValue;
        ValueId b = kNoValue;
        std::uint32_t args_off = 0;  // Concat/Sum inputs or pooled row list
        std::uint32_t args_len = 0;
        Parameter* p1 = nullptr;
        Parameter* p2 = nullptr;
        int index = -1;           // row for ParamRow, entry for ScaleEntry
        double c0 = 0.0;          // label / scale constant
    };

    ValueId push(Node n);
    double* out_ptr(ValueId id) { return values_.data() + nodes_[id].out; }
    const double* out_ptr(ValueId id) const { return values_.data() + nodes_[id].out; }
    double* grad_ptr(ValueId id) { return grads_.data() + nodes_[id].out; }
    void require_scalar(ValueId id, const char* what) const;
    void check_node_finite(ValueId id) const;
    static const char* op_name(Op op);

    std::vector<Node> nodes_;
    std::vector<double> values_;
    std::vector<double> grads_;
    std::vector<std::uint32_t> args_;
    bool check_finite_ = false;
};

} // namespace adaf2m2
