#pragma once

// Feedforward ReLU networks, their interval abstraction and weight-change metrics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "onv/errors.hpp"
#include "onv/geometry.hpp"

namespace onv {

/// Dense row-major matrix.
class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix from_rows(const std::vector<Vector>& rows) {
        if (rows.empty()) {
            throw InvalidInput("Matrix: no rows");
        }
        Matrix m(rows.size(), rows.front().size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r].size() != m.cols_) {
                throw InvalidInput("Matrix: ragged row " + std::to_string(r));
            }
            std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
        }
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

enum class Activation { relu, linear };

inline const char* to_string(Activation a) { return a == Activation::relu ? "relu" : "linear"; }

struct Layer {
    Matrix weights; ///< out × in
    Vector bias;
    Activation activation = Activation::relu;

    std::size_t in_dim() const { return weights.cols(); }
    std::size_t out_dim() const { return weights.rows(); }

    friend bool operator==(const Layer&, const Layer&) = default;
};

class Network {
  public:
    Network() = default;

    explicit Network(std::vector<Layer> layers) : layers_(std::move(layers)) {
        if (layers_.empty()) {
            throw InvalidInput("Network: at least one layer required");
        }
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            const auto& l = layers_[i];
            if (l.weights.rows() == 0 || l.weights.cols() == 0 || l.bias.size() != l.weights.rows()) {
                throw InvalidInput("Network: layer " + std::to_string(i) + " has inconsistent shapes");
            }
            if (i > 0 && l.in_dim() != layers_[i - 1].out_dim()) {
                throw InvalidInput("Network: layer " + std::to_string(i) + " expects " + std::to_string(l.in_dim()) +
                                   " inputs, previous layer gives " + std::to_string(layers_[i - 1].out_dim()));
            }
            if (i + 1 < layers_.size() && l.activation != Activation::relu) {
                throw InvalidInput("Network: hidden layer " + std::to_string(i) + " must use relu");
            }
            for (double w : l.weights.data()) {
                if (!std::isfinite(w)) {
                    throw InvalidInput("Network: non-finite weight in layer " + std::to_string(i));
                }
            }
            for (double b : l.bias) {
                if (!std::isfinite(b)) {
                    throw InvalidInput("Network: non-finite bias in layer " + std::to_string(i));
                }
            }
        }
    }

    const std::vector<Layer>& layers() const { return layers_; }
    const Layer& layer(std::size_t i) const { return layers_[i]; }
    std::size_t depth() const { return layers_.size(); }
    std::size_t input_dim() const { return layers_.front().in_dim(); }
    std::size_t output_dim() const { return layers_.back().out_dim(); }

    /// Copy with layer `i` replaced; shapes must match.
    Network with_layer(std::size_t i, Layer l) const {
        auto ls = layers_;
        ls.at(i) = std::move(l);
        return Network(std::move(ls));
    }

    friend bool operator==(const Network&, const Network&) = default;

  private:
    std::vector<Layer> layers_;
};

inline bool same_architecture(const Network& a, const Network& b) {
    if (a.depth() != b.depth()) {
        return false;
    }
    for (std::size_t i = 0; i < a.depth(); ++i) {
        const auto& la = a.layer(i);
        const auto& lb = b.layer(i);
        if (la.in_dim() != lb.in_dim() || la.out_dim() != lb.out_dim() || la.activation != lb.activation) {
            return false;
        }
    }
    return true;
}

inline Vector apply_layer(const Layer& l, std::span<const double> x) {
    Vector z(l.out_dim());
    for (std::size_t r = 0; r < l.out_dim(); ++r) {
        double s = l.bias[r];
        const auto w = l.weights.row(r);
        for (std::size_t c = 0; c < w.size(); ++c) {
            s += w[c] * x[c];
        }
        z[r] = l.activation == Activation::relu ? std::max(s, 0.0) : s;
    }
    return z;
}

inline Vector forward(const Network& net, std::span<const double> x) {
    if (x.size() != net.input_dim()) {
        throw InvalidInput("forward: input has dimension " + std::to_string(x.size()) + ", network expects " +
                           std::to_string(net.input_dim()));
    }
    Vector z(x.begin(), x.end());
    for (const auto& l : net.layers()) {
        z = apply_layer(l, z);
    }
    return z;
}

// ---------------------------------------------------------------------------
// Weight-change metrics
// ---------------------------------------------------------------------------

struct LayerDiff {
    Vector per_layer;

    double max() const { return per_layer.empty() ? 0.0 : *std::max_element(per_layer.begin(), per_layer.end()); }

    /// True when only the final entry may be non-zero.
    bool last_layer_only() const {
        for (std::size_t i = 0; i + 1 < per_layer.size(); ++i) {
            if (per_layer[i] != 0.0) {
                return false;
            }
        }
        return true;
    }

    friend bool operator==(const LayerDiff&, const LayerDiff&) = default;
};

/// Per layer, the max absolute row sum of `[W_a − W_b, b_a − b_b]`.
inline LayerDiff layerwise_diff(const Network& a, const Network& b) {
    if (!same_architecture(a, b)) {
        throw InvalidInput("layerwise_diff: architecture mismatch");
    }
    LayerDiff d;
    d.per_layer.resize(a.depth(), 0.0);
    for (std::size_t i = 0; i < a.depth(); ++i) {
        const auto& la = a.layer(i);
        const auto& lb = b.layer(i);
        double worst = 0.0;
        for (std::size_t r = 0; r < la.out_dim(); ++r) {
            double s = std::abs(la.bias[r] - lb.bias[r]);
            const auto wa = la.weights.row(r);
            const auto wb = lb.weights.row(r);
            for (std::size_t c = 0; c < wa.size(); ++c) {
                s += std::abs(wa[c] - wb[c]);
            }
            worst = std::max(worst, s);
        }
        d.per_layer[i] = worst;
    }
    return d;
}

inline LayerDiff max_step_diff(std::span<const Network> trace) {
    if (trace.size() < 2) {
        throw InvalidInput("max_step_diff: trace needs at least two networks");
    }
    LayerDiff out = layerwise_diff(trace[0], trace[1]);
    for (std::size_t t = 2; t < trace.size(); ++t) {
        const auto d = layerwise_diff(trace[t - 1], trace[t]);
        for (std::size_t i = 0; i < d.per_layer.size(); ++i) {
            out.per_layer[i] = std::max(out.per_layer[i], d.per_layer[i]);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Training step
// ---------------------------------------------------------------------------

/// One step of gradient descent on `‖f(x) − target‖²`.
inline Network gradient_step(const Network& net, std::span<const double> x, std::span<const double> target, double lr,
                             bool last_layer_only) {
    if (x.size() != net.input_dim() || target.size() != net.output_dim()) {
        throw InvalidInput("gradient_step: shape mismatch");
    }
    if (!(lr > 0.0)) {
        throw InvalidInput("gradient_step: learning rate must be positive");
    }
    const std::size_t n = net.depth();
    std::vector<Vector> acts; // acts[i] = input of layer i; acts[n] = output
    std::vector<Vector> pre;
    acts.emplace_back(x.begin(), x.end());
    for (const auto& l : net.layers()) {
        Vector z(l.out_dim());
        Vector a(l.out_dim());
        for (std::size_t r = 0; r < l.out_dim(); ++r) {
            z[r] = l.bias[r] + dot(l.weights.row(r), acts.back());
            a[r] = l.activation == Activation::relu ? std::max(z[r], 0.0) : z[r];
        }
        pre.push_back(std::move(z));
        acts.push_back(std::move(a));
    }

    auto layers = net.layers();
    Vector delta(net.output_dim());
    for (std::size_t r = 0; r < delta.size(); ++r) {
        delta[r] = 2.0 * (acts[n][r] - target[r]);
    }
    const std::size_t stop = last_layer_only ? n - 1 : 0;
    for (std::size_t i = n; i-- > stop;) {
        const Layer& old = net.layer(i);
        if (old.activation == Activation::relu) {
            for (std::size_t r = 0; r < delta.size(); ++r) {
                if (!(pre[i][r] > 0.0)) {
                    delta[r] = 0.0;
                }
            }
        }
        Vector next(old.in_dim(), 0.0);
        if (i > stop) {
            for (std::size_t r = 0; r < old.out_dim(); ++r) {
                const auto w = old.weights.row(r);
                for (std::size_t c = 0; c < w.size(); ++c) {
                    next[c] += w[c] * delta[r];
                }
            }
        }
        Layer& l = layers[i];
        for (std::size_t r = 0; r < l.out_dim(); ++r) {
            auto w = l.weights.row(r);
            for (std::size_t c = 0; c < w.size(); ++c) {
                w[c] -= lr * delta[r] * acts[i][c];
            }
            l.bias[r] -= lr * delta[r];
        }
        delta = std::move(next);
    }
    return Network(std::move(layers));
}

// ---------------------------------------------------------------------------
// Interval networks
// ---------------------------------------------------------------------------

struct IntervalLayer {
    Matrix weights_lo;
    Matrix weights_hi;
    Vector bias_lo;
    Vector bias_hi;
    Activation activation = Activation::relu;

    std::size_t in_dim() const { return weights_lo.cols(); }
    std::size_t out_dim() const { return weights_lo.rows(); }

    friend bool operator==(const IntervalLayer&, const IntervalLayer&) = default;
};

class IntervalNetwork {
  public:
    IntervalNetwork() = default;

    explicit IntervalNetwork(std::vector<IntervalLayer> layers) : layers_(std::move(layers)) {
        if (layers_.empty()) {
            throw InvalidInput("IntervalNetwork: at least one layer required");
        }
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            const auto& l = layers_[i];
            if (l.weights_hi.rows() != l.out_dim() || l.weights_hi.cols() != l.in_dim() ||
                l.bias_lo.size() != l.out_dim() || l.bias_hi.size() != l.out_dim()) {
                throw InvalidInput("IntervalNetwork: layer " + std::to_string(i) + " has inconsistent shapes");
            }
            if (i > 0 && l.in_dim() != layers_[i - 1].out_dim()) {
                throw InvalidInput("IntervalNetwork: layer " + std::to_string(i) + " breaks the shape chain");
            }
            for (std::size_t k = 0; k < l.weights_lo.data().size(); ++k) {
                if (!(l.weights_lo.data()[k] <= l.weights_hi.data()[k])) {
                    throw InvalidInput("IntervalNetwork: inverted weight interval in layer " + std::to_string(i));
                }
            }
            for (std::size_t k = 0; k < l.bias_lo.size(); ++k) {
                if (!(l.bias_lo[k] <= l.bias_hi[k])) {
                    throw InvalidInput("IntervalNetwork: inverted bias interval in layer " + std::to_string(i));
                }
            }
        }
    }

    const std::vector<IntervalLayer>& layers() const { return layers_; }
    const IntervalLayer& layer(std::size_t i) const { return layers_[i]; }
    std::size_t depth() const { return layers_.size(); }
    std::size_t input_dim() const { return layers_.front().in_dim(); }

  private:
    std::vector<IntervalLayer> layers_;
};

inline IntervalLayer widen_layer(const Layer& l, double r) {
    if (!(r >= 0.0)) {
        throw InvalidInput("build_inn: negative radius");
    }
    IntervalLayer il{l.weights, l.weights, l.bias, l.bias, l.activation};
    for (auto& w : il.weights_lo.data()) {
        w -= r;
    }
    for (auto& w : il.weights_hi.data()) {
        w += r;
    }
    for (auto& b : il.bias_lo) {
        b -= r;
    }
    for (auto& b : il.bias_hi) {
        b += r;
    }
    return il;
}

/// Widens every weight and bias of layer `i` by `radius.per_layer[i]`.
inline IntervalNetwork build_inn(const Network& net, const LayerDiff& radius) {
    if (radius.per_layer.size() != net.depth()) {
        throw InvalidInput("build_inn: radius length does not match layer count");
    }
    std::vector<IntervalLayer> ls;
    ls.reserve(net.depth());
    for (std::size_t i = 0; i < net.depth(); ++i) {
        ls.push_back(widen_layer(net.layer(i), radius.per_layer[i]));
    }
    return IntervalNetwork(std::move(ls));
}

inline bool inn_layer_contains(const IntervalLayer& il, const Layer& l) {
    const auto& w = l.weights.data();
    for (std::size_t k = 0; k < w.size(); ++k) {
        if (w[k] < il.weights_lo.data()[k] || w[k] > il.weights_hi.data()[k]) {
            return false;
        }
    }
    for (std::size_t k = 0; k < l.bias.size(); ++k) {
        if (l.bias[k] < il.bias_lo[k] || l.bias[k] > il.bias_hi[k]) {
            return false;
        }
    }
    return true;
}

inline bool inn_contains(const IntervalNetwork& inn, const Network& net) {
    if (inn.depth() != net.depth()) {
        throw InvalidInput("inn_contains: architecture mismatch");
    }
    for (std::size_t i = 0; i < net.depth(); ++i) {
        const auto& il = inn.layer(i);
        const auto& l = net.layer(i);
        if (il.in_dim() != l.in_dim() || il.out_dim() != l.out_dim() || il.activation != l.activation) {
            throw InvalidInput("inn_contains: architecture mismatch at layer " + std::to_string(i));
        }
    }
    for (std::size_t i = 0; i < net.depth(); ++i) {
        if (!inn_layer_contains(inn.layer(i), net.layer(i))) {
            return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Lipschitz bound and generators
// ---------------------------------------------------------------------------

struct LipschitzBound {
    double value = 0.0;
};

/// Product of per-layer operator ∞-norms (bias excluded).
inline LipschitzBound lipschitz_upper(const Network& net) {
    double L = 1.0;
    for (const auto& l : net.layers()) {
        double worst = 0.0;
        for (std::size_t r = 0; r < l.out_dim(); ++r) {
            worst = std::max(worst, norm1(l.weights.row(r)));
        }
        L *= worst;
    }
    return {L};
}

/// Weights uniform in `[-1, 1]/sqrt(fan_in)`, biases uniform in `[-0.1, 0.1]`.
/// `dims` lists layer widths from input to output.
inline Network random_network(const std::vector<std::size_t>& dims, std::uint64_t seed,
                              Activation last = Activation::linear) {
    if (dims.size() < 2) {
        throw InvalidInput("random_network: need at least input and output widths");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Layer> layers;
    for (std::size_t i = 1; i < dims.size(); ++i) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(dims[i - 1]));
        Layer l{Matrix(dims[i], dims[i - 1]), Vector(dims[i]),
                i + 1 == dims.size() ? last : Activation::relu};
        for (auto& w : l.weights.data()) {
            w = u(rng) * scale;
        }
        for (auto& b : l.bias) {
            b = 0.1 * u(rng);
        }
        layers.push_back(std::move(l));
    }
    return Network(std::move(layers));
}

} // namespace onv
