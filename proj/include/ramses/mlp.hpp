#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ramses/rng.hpp"
#include "ramses/types.hpp"

namespace ramses {

enum class Activation { kLinear, kRelu, kTanh, kSigmoid };

namespace detail {

inline Matrix apply_activation(const Matrix& z, Activation act) {
    switch (act) {
        case Activation::kLinear: return z;
        case Activation::kRelu: return z.cwiseMax(0.0);
        case Activation::kTanh: return z.array().tanh();
        case Activation::kSigmoid: return (1.0 / (1.0 + (-z.array()).exp()));
    }
    return z;
}

// derivative expressed through the activation output a = act(z)
inline Matrix activation_grad(const Matrix& a, Activation act) {
    switch (act) {
        case Activation::kLinear: return Matrix::Ones(a.rows(), a.cols());
        case Activation::kRelu: return (a.array() > 0.0).cast<double>();
        case Activation::kTanh: return 1.0 - a.array().square();
        case Activation::kSigmoid: return a.array() * (1.0 - a.array());
    }
    return Matrix::Ones(a.rows(), a.cols());
}

}  // namespace detail

// A dense layer with optional inverted dropout on its output and per-
// parameter Adam moment accumulators.
struct DenseLayer {
    Matrix weights;  // in x out
    Eigen::RowVectorXd bias;
    Activation activation = Activation::kLinear;
    double dropout = 0.0;

    Matrix m_w, v_w;
    Eigen::RowVectorXd m_b, v_b;
};

struct MlpCache {
    std::vector<Matrix> inputs;   // per layer, the matrix fed to it
    std::vector<Matrix> outputs;  // per layer, post-activation post-dropout
    std::vector<Matrix> masks;    // per layer, dropout mask (empty = none)
    bool training = false;
};

struct MlpGradients {
    std::vector<Matrix> weights;
    std::vector<Eigen::RowVectorXd> bias;
};

// Minimal multi-layer perceptron on row-batched inputs. Dropout masks are
// drawn only in training mode; inference is deterministic.
class Mlp {
public:
    Mlp() = default;

    void add_layer(Eigen::Index in, Eigen::Index out, Activation act, double dropout, Rng& rng) {
        if (!layers_.empty() && layers_.back().weights.cols() != in)
            throw std::invalid_argument("Mlp: layer dimensions do not chain");
        DenseLayer layer;
        // scaled uniform init in (-limit, limit)
        const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
        std::uniform_real_distribution<double> u(-limit, limit);
        layer.weights = Matrix::NullaryExpr(in, out, [&](Eigen::Index, Eigen::Index) { return u(rng); });
        layer.bias = Eigen::RowVectorXd::Zero(out);
        layer.activation = act;
        layer.dropout = dropout;
        layer.m_w = Matrix::Zero(in, out);
        layer.v_w = Matrix::Zero(in, out);
        layer.m_b = Eigen::RowVectorXd::Zero(out);
        layer.v_b = Eigen::RowVectorXd::Zero(out);
        layers_.push_back(std::move(layer));
    }

    Eigen::Index input_dim() const { return layers_.front().weights.rows(); }
    Eigen::Index output_dim() const { return layers_.back().weights.cols(); }
    std::vector<DenseLayer>& layers() { return layers_; }
    const std::vector<DenseLayer>& layers() const { return layers_; }

    Matrix forward(const Matrix& x, bool training, Rng* rng, MlpCache* cache = nullptr) const {
        if (x.cols() != input_dim()) throw std::invalid_argument("Mlp: input dimension mismatch");
        if (cache) {
            cache->inputs.clear();
            cache->outputs.clear();
            cache->masks.clear();
            cache->training = training;
        }
        Matrix a = x;
        for (const auto& layer : layers_) {
            if (cache) cache->inputs.push_back(a);
            Matrix z = (a * layer.weights).rowwise() + layer.bias;
            a = detail::apply_activation(z, layer.activation);
            Matrix mask;
            if (training && layer.dropout > 0.0) {
                if (!rng) throw std::invalid_argument("Mlp: training forward needs an rng");
                std::bernoulli_distribution keep(1.0 - layer.dropout);
                mask = Matrix::NullaryExpr(a.rows(), a.cols(), [&](Eigen::Index, Eigen::Index) {
                    return keep(*rng) ? 1.0 / (1.0 - layer.dropout) : 0.0;
                });
                a = a.cwiseProduct(mask);
            }
            if (cache) {
                cache->outputs.push_back(a);
                cache->masks.push_back(std::move(mask));
            }
        }
        return a;
    }

    // Reverse-mode gradients for the batch that produced `cache`; the output
    // gradient carries any loss normalization. When input_grad is supplied it
    // receives dL/d(input), which lets callers chain through stacked nets.
    MlpGradients backward(const MlpCache& cache, const Matrix& output_grad,
                          Matrix* input_grad = nullptr) const {
        if (!cache.training || cache.inputs.size() != layers_.size())
            throw std::invalid_argument("Mlp: backward needs a training-mode cache");
        MlpGradients grads;
        grads.weights.resize(layers_.size());
        grads.bias.resize(layers_.size());

        Matrix delta = output_grad;
        for (std::size_t li = layers_.size(); li-- > 0;) {
            const DenseLayer& layer = layers_[li];
            Matrix post = cache.outputs[li];
            if (cache.masks[li].size() > 0) {
                delta = delta.cwiseProduct(cache.masks[li]);
                // undo the mask to recover act(z) for the derivative
                post = post.cwiseQuotient(
                    cache.masks[li].unaryExpr([](double m) { return m == 0.0 ? 1.0 : m; }));
            }
            delta = delta.cwiseProduct(detail::activation_grad(post, layer.activation));
            grads.weights[li] = cache.inputs[li].transpose() * delta;
            grads.bias[li] = delta.colwise().sum();
            if (li > 0 || input_grad) delta = delta * layer.weights.transpose();
        }
        if (input_grad) *input_grad = std::move(delta);
        return grads;
    }

    void adam_step(const MlpGradients& grads, double rate, double beta1 = 0.9,
                   double beta2 = 0.999, double eps = 1e-8) {
        ++step_;
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step_));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step_));
        for (std::size_t li = 0; li < layers_.size(); ++li) {
            DenseLayer& layer = layers_[li];
            layer.m_w = beta1 * layer.m_w + (1.0 - beta1) * grads.weights[li];
            layer.v_w = beta2 * layer.v_w + (1.0 - beta2) * grads.weights[li].cwiseAbs2();
            layer.weights -=
                rate * (layer.m_w / c1).cwiseQuotient(((layer.v_w / c2).cwiseSqrt().array() + eps).matrix());
            layer.m_b = beta1 * layer.m_b + (1.0 - beta1) * grads.bias[li];
            layer.v_b = beta2 * layer.v_b + (1.0 - beta2) * grads.bias[li].cwiseAbs2();
            layer.bias -=
                rate * (layer.m_b / c1).cwiseQuotient(((layer.v_b / c2).cwiseSqrt().array() + eps).matrix());
        }
    }

    std::uint64_t steps() const { return step_; }

private:
    std::vector<DenseLayer> layers_;
    std::uint64_t step_ = 0;
};

// Mean binary cross-entropy with clamped predictions.
inline double bce_loss(const Matrix& pred, const Matrix& target) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols())
        throw std::invalid_argument("bce_loss: shape mismatch");
    double loss = 0.0;
    for (Eigen::Index i = 0; i < pred.rows(); ++i)
        for (Eigen::Index j = 0; j < pred.cols(); ++j) {
            const double p = std::clamp(pred(i, j), 1e-12, 1.0 - 1e-12);
            const double y = target(i, j);
            loss += -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
        }
    return loss / static_cast<double>(pred.rows() * pred.cols());
}

inline Matrix bce_grad(const Matrix& pred, const Matrix& target) {
    Matrix grad(pred.rows(), pred.cols());
    const double n = static_cast<double>(pred.rows() * pred.cols());
    for (Eigen::Index i = 0; i < pred.rows(); ++i)
        for (Eigen::Index j = 0; j < pred.cols(); ++j) {
            const double p = std::clamp(pred(i, j), 1e-12, 1.0 - 1e-12);
            grad(i, j) = (p - target(i, j)) / (p * (1.0 - p)) / n;
        }
    return grad;
}

}  // namespace ramses
