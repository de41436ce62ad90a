#include "tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace adaf2m2 {

Matrix::Matrix(int rows, int cols) : rows_(rows), cols_(cols) {
    if (rows < 0 || cols < 0) throw ShapeError("Matrix: negative dimension (" + std::to_string(rows) + "x" + std::to_string(cols) + ")");
    data_.assign(static_cast<std::size_t>(rows) * cols, 0.0);
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

std::string Matrix::shape_str() const {
    return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
}

bool Matrix::all_finite() const {
    for (const double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

double Tape::stable_sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double Tape::cross_entropy_value(double p, double label) {
    constexpr double kEps = 1e-7;
    // a non-finite prediction must surface in the loss, not clamp to the edge
    if (!std::isfinite(p)) return p;
    const double pc = std::clamp(p, kEps, 1.0 - kEps);
    return -label * std::log(pc) - (1.0 - label) * std::log(1.0 - pc);
}

void Tape::norm_features_values(std::span<const double> v, double out[4]) {
    double sq = 0.0;
    for (const double x : v) sq += x * x;
    const double n = std::sqrt(sq);
    out[0] = n;
    out[1] = std::log1p(n);
    out[2] = std::sqrt(n);
    out[3] = sq;
}

const char* Tape::op_name(Op op) {
    switch (op) {
        case Op::Input: return "input";
        case Op::ParamRow: return "param_row";
        case Op::ParamRowsMean: return "param_rows_mean";
        case Op::Affine: return "affine";
        case Op::Relu: return "relu";
        case Op::Sigmoid: return "sigmoid";
        case Op::Softmax: return "softmax";
        case Op::Concat: return "concat";
        case Op::Add: return "add";
        case Op::Sum: return "sum";
        case Op::Dot: return "dot";
        case Op::ScaleConst: return "scale_const";
        case Op::ScaleEntry: return "scale_entry";
        case Op::NormFeatures: return "norm_features";
        case Op::CrossEntropy: return "cross_entropy";
    }
    return "?";
}

ValueId Tape::push(Node n) {
    n.out = static_cast<std::uint32_t>(values_.size());
    values_.resize(values_.size() + n.len, 0.0);
    nodes_.push_back(n);
    return static_cast<ValueId>(nodes_.size() - 1);
}

std::span<const double> Tape::value(ValueId id) const {
    const Node& n = nodes_[id];
    return {values_.data() + n.out, static_cast<std::size_t>(n.len)};
}

std::span<const double> Tape::grad(ValueId id) const {
    const Node& n = nodes_[id];
    return {grads_.data() + n.out, static_cast<std::size_t>(n.len)};
}

void Tape::require_scalar(ValueId id, const char* what) const {
    if (nodes_[id].len != 1)
        throw ShapeError(std::string(what) + ": expected scalar, got length " + std::to_string(nodes_[id].len));
}

void Tape::check_node_finite(ValueId id) const {
    if (!check_finite_) return;
    const Node& n = nodes_[id];
    for (int i = 0; i < n.len; ++i) {
        const double v = values_[n.out + i];
        if (!std::isfinite(v))
            throw NumericError(std::string("non-finite value in '") + op_name(n.op) + "' node #" + std::to_string(id) + " at entry " + std::to_string(i));
    }
}

ValueId Tape::input(std::span<const double> values) {
    Node n;
    n.op = Op::Input;
    n.len = static_cast<int>(values.size());
    const ValueId id = push(n);
    std::memcpy(out_ptr(id), values.data(), values.size() * sizeof(double));
    check_node_finite(id);
    return id;
}

ValueId Tape::scalar_input(double v) { return input({&v, 1}); }

ValueId Tape::param_row(Parameter& p, int row) {
    if (row < 0 || row >= p.value.rows())
        throw ShapeError("param_row: row " + std::to_string(row) + " out of range for '" + p.id + "' " + p.value.shape_str());
    Node n;
    n.op = Op::ParamRow;
    n.len = p.value.cols();
    n.p1 = &p;
    n.index = row;
    const ValueId id = push(n);
    std::memcpy(out_ptr(id), p.value.row(row).data(), n.len * sizeof(double));
    check_node_finite(id);
    return id;
}

ValueId Tape::param_rows_mean(Parameter& p, std::span<const int> rows) {
    if (rows.empty()) throw ShapeError("param_rows_mean: empty row set for '" + p.id + "'");
    for (const int r : rows)
        if (r < 0 || r >= p.value.rows())
            throw ShapeError("param_rows_mean: row " + std::to_string(r) + " out of range for '" + p.id + "' " + p.value.shape_str());
    Node n;
    n.op = Op::ParamRowsMean;
    n.len = p.value.cols();
    n.p1 = &p;
    n.args_off = static_cast<std::uint32_t>(args_.size());
    n.args_len = static_cast<std::uint32_t>(rows.size());
    for (const int r : rows) args_.push_back(static_cast<std::uint32_t>(r));
    const ValueId id = push(n);
    double* out = out_ptr(id);
    std::fill(out, out + n.len, 0.0);
    for (const int r : rows) {
        const double* src = p.value.row(r).data();
        for (int i = 0; i < n.len; ++i) out[i] += src[i];
    }
    const double inv = 1.0 / static_cast<double>(rows.size());
    for (int i = 0; i < n.len; ++i) out[i] *= inv;
    check_node_finite(id);
    return id;
}

ValueId Tape::affine(Parameter& w, Parameter& b, ValueId x) {
    const int in_len = nodes_[x].len;
    if (w.value.cols() != in_len)
        throw ShapeError("affine: input length " + std::to_string(in_len) + " does not match '" + w.id + "' " + w.value.shape_str());
    if (b.value.rows() != w.value.rows() || b.value.cols() != 1)
        throw ShapeError("affine: bias '" + b.id + "' " + b.value.shape_str() + " does not match '" + w.id + "' " + w.value.shape_str());
    Node n;
    n.op = Op::Affine;
    n.len = w.value.rows();
    n.a = x;
    n.p1 = &w;
    n.p2 = &b;
    const ValueId id = push(n);
    double* out = out_ptr(id);
    const double* in = out_ptr(x);
    const double* wd = w.value.data();
    const double* bd = b.value.data();
    for (int i = 0; i < n.len; ++i) {
        double acc = bd[i];
        const double* wrow = wd + static_cast<std::size_t>(i) * in_len;
        for (int j = 0; j < in_len; ++j) acc += wrow[j] * in[j];
        out[i] = acc;
    }
    check_node_finite(id);
    return id;
}

ValueId Tape::relu(ValueId x) {
    Node n;
    n.op = Op::Relu;
    n.len = nodes_[x].len;
    n.a = x;
    const ValueId id = push(n);
    double* out = out_ptr(id);
    const double* in = out_ptr(x);
    for (int i = 0; i < n.len; ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
    check_node_finite(id);
    return id;
}

ValueId Tape::sigmoid(ValueId x) {
    Node n;
    n.op = Op::Sigmoid;
    n.len = nodes_[x].len;
    n.a = x;
    const ValueId id = push(n);
    double* out = out_ptr(id);
    const double* in = out_ptr(x);
    for (int i = 0; i < n.len; ++i) out[i] = stable_sigmoid(in[i]);
    check_node_finite(id);
    return id;
}

ValueId Tape::softmax(ValueId x) {
    Node n;
    n.op = Op::Softmax;
    n.len = nodes_[x].len;
    n.a = x;
    const ValueId id = push(n);
    double* out = out_ptr(id);
    const double* in = out_ptr(x);
    double mx = in[0];
    for (int i = 1; i < n.len; ++i) mx = std::max(mx, in[i]);
    double z = 0.0;
    for (int i = 0; i < n.len; ++i) {
        out[i] = std::exp(in[i] - mx);
        z += out[i];
    }
    for (int i = 0; i < n.len; ++i) out[i] /= z;
    check_node_finite(id);
    return id;
}

ValueId Tape::concat(std::span<const ValueId> parts) {
    Node n;
    n.op = Op::Concat;
    n.len = 0;
    n.args_off = static_cast<std::uint32_t>(args_.size());
    n.args_len = static_cast<std::uint32_t>(parts.size());
    for (const ValueId p : parts) {
        n.len += nodes_[p].len;
        args_.push_back(p);
    }
    const ValueId id = push(n);
    double* out = out_ptr(id);
    for (const ValueId p : parts) {
        const Node& pn = nodes_[p];
        std::memcpy(out, values_.data() + pn.out, pn.len * sizeof(double));
        out += pn.len;
    }
    return id;
}

ValueId Tape::add(ValueId a, ValueId b) {
    if (nodes_[a].len != nodes_[b].len)
        throw ShapeError("add: length mismatch " + std::to_string(nodes_[a].len) + " vs " + std::to_string(nodes_[b].len));
    Node n;
    n.op = Op::Add;
    n.len = nodes_[a].len;
    n.a = a;
    n.b = b;
    const ValueId id = push(n);
    double* out = out_ptr(id);
    const double* pa = out_ptr(a);
    const double* pb = out_ptr(b);
    for (int i = 0; i < n.len; ++i) out[i] = pa[i] + pb[i];
    check_node_finite(id);
    return id;
}

ValueId Tape::sum(std::span<const ValueId> parts) {
    if (parts.empty()) throw ShapeError("sum: empty input list");
    const int len = nodes_[parts[0]].len;
    for (const ValueId p : parts)
        if (nodes_[p].len != len)
            throw ShapeError("sum: length mismatch " + std::to_string(nodes_[p].len) + " vs " + std::to_string(len));
    Node n;
    n.op = Op::Sum;
    n.len = len;
    n.args_off = static_cast<std::uint32_t>(args_.size());
    n.args_len = static_cast<std::uint32_t>(parts.size());
    for (const ValueId p : parts) args_.push_back(p);
    const ValueId id = push(n);
    double* out = out_ptr(id);
    std::fill(out, out + len, 0.0);
    for (const ValueId p : parts) {
        const double* src = out_ptr(p);
        for (int i = 0; i < len; ++i) out[i] += src[i];
    }
    check_node_finite(id);
    return id;
}

ValueId Tape::dot(ValueId a, ValueId b) {
    if (nodes_[a].len != nodes_[b].len)
        throw ShapeError("dot: length mismatch " + std::to_string(nodes_[a].len) + " vs " + std::to_string(nodes_[b].len));
    Node n;
    n.op = Op::Dot;
    n.len = 1;
    n.a = a;
    n.b = b;
    const ValueId id = push(n);
    const double* pa = out_ptr(a);
    const double* pb = out_ptr(b);
    double acc = 0.0;
    const int len = nodes_[a].len;
    for (int i = 0; i < len; ++i) acc += pa[i] * pb[i];
    *out_ptr(id) = acc;
    check_node_finite(id);
    return id;
}

ValueId Tape::scale_const(ValueId x, double c) {
    Node n;
    n.op = Op::ScaleConst;
    n.len = nodes_[x].len;
    n.a = x;
    n.c0 = c;
    const ValueId id = push(n);
    double* out = out_ptr(id);
    const double* in = out_ptr(x);
    for (int i = 0; i < n.len; ++i) out[i] = c * in[i];
    check_node_finite(id);
    return id;
}

ValueId Tape::scale_entry(ValueId x, ValueId w, int index) {
    if (index < 0 || index >= nodes_[w].len)
        throw ShapeError("scale_entry: index " + std::to_string(index) + " out of range for weight vector of length " + std::to_string(nodes_[w].len));
    Node n;
    n.op = Op::ScaleEntry;
    n.len = nodes_[x].len;
    n.a = x;
    n.b = w;
    n.index = index;
    const ValueId id = push(n);
    double* out = out_ptr(id);
    const double* in = out_ptr(x);
    const double wi = out_ptr(w)[index];
    for (int i = 0; i < n.len; ++i) out[i] = wi * in[i];
    check_node_finite(id);
    return id;
}

ValueId Tape::norm_features(ValueId v) {
    Node n;
    n.op = Op::NormFeatures;
    n.len = 4;
    n.a = v;
    const ValueId id = push(n);
    norm_features_values({out_ptr(v), static_cast<std::size_t>(nodes_[v].len)}, out_ptr(id));
    check_node_finite(id);
    return id;
}

ValueId Tape::cross_entropy(ValueId p, double label) {
    require_scalar(p, "cross_entropy");
    if (label != 0.0 && label != 1.0)
        throw NumericError("cross_entropy: label must be 0 or 1, got " + std::to_string(label));
    Node n;
    n.op = Op::CrossEntropy;
    n.len = 1;
    n.a = p;
    n.c0 = label;
    const ValueId id = push(n);
    *out_ptr(id) = cross_entropy_value(*out_ptr(p), label);
    check_node_finite(id);
    return id;
}

void Tape::backward(ValueId root, double seed) {
    require_scalar(root, "backward");
    grads_.assign(values_.size(), 0.0);
    grads_[nodes_[root].out] = seed;

    for (std::uint32_t idx = root + 1; idx-- > 0;) {
        const Node& n = nodes_[idx];
        const double* g = grads_.data() + n.out;
        switch (n.op) {
            case Op::Input:
                break;
            case Op::ParamRow: {
                double* pg = n.p1->grad.row(n.index).data();
                for (int i = 0; i < n.len; ++i) pg[i] += g[i];
                break;
            }
            case Op::ParamRowsMean: {
                const double inv = 1.0 / static_cast<double>(n.args_len);
                for (std::uint32_t k = 0; k < n.args_len; ++k) {
                    double* pg = n.p1->grad.row(static_cast<int>(args_[n.args_off + k])).data();
                    for (int i = 0; i < n.len; ++i) pg[i] += inv * g[i];
                }
                break;
            }
            case Op::Affine: {
                const Node& xa = nodes_[n.a];
                const int in_len = xa.len;
                const double* x = values_.data() + xa.out;
                double* xg = grads_.data() + xa.out;
                const double* wd = n.p1->value.data();
                double* wg = n.p1->grad.data();
                double* bg = n.p2->grad.data();
                for (int i = 0; i < n.len; ++i) {
                    const double gi = g[i];
                    if (gi == 0.0) continue;
                    bg[i] += gi;
                    double* wgrow = wg + static_cast<std::size_t>(i) * in_len;
                    const double* wrow = wd + static_cast<std::size_t>(i) * in_len;
                    for (int j = 0; j < in_len; ++j) {
                        wgrow[j] += gi * x[j];
                        xg[j] += gi * wrow[j];
                    }
                }
                break;
            }
            case Op::Relu: {
                const Node& xa = nodes_[n.a];
                const double* x = values_.data() + xa.out;
                double* xg = grads_.data() + xa.out;
                for (int i = 0; i < n.len; ++i)
                    if (x[i] > 0.0) xg[i] += g[i];
                break;
            }
            case Op::Sigmoid: {
                const double* y = values_.data() + n.out;
                double* xg = grads_.data() + nodes_[n.a].out;
                for (int i = 0; i < n.len; ++i) xg[i] += g[i] * y[i] * (1.0 - y[i]);
                break;
            }
            case Op::Softmax: {
                const double* y = values_.data() + n.out;
                double* xg = grads_.data() + nodes_[n.a].out;
                double gy = 0.0;
                for (int i = 0; i < n.len; ++i) gy += g[i] * y[i];
                for (int i = 0; i < n.len; ++i) xg[i] += y[i] * (g[i] - gy);
                break;
            }
            case Op::Concat: {
                const double* gp = g;
                for (std::uint32_t k = 0; k < n.args_len; ++k) {
                    const Node& part = nodes_[args_[n.args_off + k]];
                    double* pg = grads_.data() + part.out;
                    for (int i = 0; i < part.len; ++i) pg[i] += gp[i];
                    gp += part.len;
                }
                break;
            }
            case Op::Add: {
                double* ga = grads_.data() + nodes_[n.a].out;
                double* gb = grads_.data() + nodes_[n.b].out;
                for (int i = 0; i < n.len; ++i) {
                    ga[i] += g[i];
                    gb[i] += g[i];
                }
                break;
            }
            case Op::Sum: {
                for (std::uint32_t k = 0; k < n.args_len; ++k) {
                    double* pg = grads_.data() + nodes_[args_[n.args_off + k]].out;
                    for (int i = 0; i < n.len; ++i) pg[i] += g[i];
                }
                break;
            }
            case Op::Dot: {
                const double g0 = g[0];
                const Node& na = nodes_[n.a];
                const Node& nb = nodes_[n.b];
                const double* av = values_.data() + na.out;
                const double* bv = values_.data() + nb.out;
                double* ga = grads_.data() + na.out;
                double* gb = grads_.data() + nb.out;
                for (int i = 0; i < na.len; ++i) {
                    ga[i] += g0 * bv[i];
                    gb[i] += g0 * av[i];
                }
                break;
            }
            case Op::ScaleConst: {
                double* xg = grads_.data() + nodes_[n.a].out;
                for (int i = 0; i < n.len; ++i) xg[i] += n.c0 * g[i];
                break;
            }
            case Op::ScaleEntry: {
                const Node& xa = nodes_[n.a];
                const Node& wn = nodes_[n.b];
                const double wi = values_[wn.out + n.index];
                const double* x = values_.data() + xa.out;
                double* xg = grads_.data() + xa.out;
                double acc = 0.0;
                for (int i = 0; i < n.len; ++i) {
                    xg[i] += wi * g[i];
                    acc += x[i] * g[i];
                }
                grads_[wn.out + n.index] += acc;
                break;
            }
            case Op::NormFeatures: {
                const double* y = values_.data() + n.out;
                const double norm = y[0];
                if (norm < 1e-12) break; // zero vector: subgradient 0
                const Node& xa = nodes_[n.a];
                const double* x = values_.data() + xa.out;
                double* xg = grads_.data() + xa.out;
                // d||v||/dv = v/||v||; chain through each transform of the norm
                const double coeff = (g[0] + g[1] / (1.0 + norm) + g[2] * 0.5 / std::sqrt(norm)) / norm + g[3] * 2.0;
                for (int i = 0; i < xa.len; ++i) xg[i] += coeff * x[i];
                break;
            }
            case Op::CrossEntropy: {
                constexpr double kEps = 1e-7;
                const double p = std::clamp(values_[nodes_[n.a].out], kEps, 1.0 - kEps);
                grads_[nodes_[n.a].out] += g[0] * (p - n.c0) / (p * (1.0 - p));
                break;
            }
        }
    }
}

void Tape::clear() {
    nodes_.clear();
    values_.clear();
    grads_.clear();
    args_.clear();
}

} // namespace adaf2m2
