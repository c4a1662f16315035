#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace frls {

/// Fully connected Q-network with rectified-linear hidden layers and a linear
/// output layer, templated on the scalar type.
///
/// Parameters flatten layer by layer: the weight matrix (out x in) in
/// row-major order, then the bias vector. Every component that exchanges or
/// compares models relies on this order.
template <typename Scalar>
class QNetwork {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using RowMajorMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  QNetwork() : QNetwork(std::vector<int>{13, 64, 64, 3}) {}

  explicit QNetwork(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
    if (sizes_.size() < 2) throw std::invalid_argument("QNetwork: need input and output layers");
    for (int s : sizes_)
      if (s < 1) throw std::invalid_argument("QNetwork: layer sizes must be positive");
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      weights_.push_back(Matrix::Zero(sizes_[l + 1], sizes_[l]));
      biases_.push_back(Vector::Zero(sizes_[l + 1]));
    }
  }

  static Eigen::Index parameter_count(const std::vector<int>& sizes) {
    Eigen::Index count = 0;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l)
      count += static_cast<Eigen::Index>(sizes[l]) * sizes[l + 1] + sizes[l + 1];
    return count;
  }

  Eigen::Index parameter_count() const { return parameter_count(sizes_); }
  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  const std::vector<int>& layer_sizes() const { return sizes_; }
  std::size_t num_layers() const { return weights_.size(); }

  Matrix& weight(std::size_t layer) { return weights_[layer]; }
  const Matrix& weight(std::size_t layer) const { return weights_[layer]; }
  Vector& bias(std::size_t layer) { return biases_[layer]; }
  const Vector& bias(std::size_t layer) const { return biases_[layer]; }

  /// He-uniform weights, zero biases.
  template <typename Generator>
  void init_random(Generator& gen) {
    for (auto& w : weights_) {
      const Scalar limit = std::sqrt(Scalar(6) / static_cast<Scalar>(w.cols()));
      std::uniform_real_distribution<double> dist(-limit, limit);
      for (Eigen::Index i = 0; i < w.rows(); ++i)
        for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = static_cast<Scalar>(dist(gen));
    }
    for (auto& b : biases_) b.setZero();
  }

  Vector flatten() const {
    Vector out(parameter_count());
    Eigen::Index pos = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      const RowMajorMatrix w = weights_[l];
      out.segment(pos, w.size()) = Eigen::Map<const Vector>(w.data(), w.size());
      pos += w.size();
      out.segment(pos, biases_[l].size()) = biases_[l];
      pos += biases_[l].size();
    }
    return out;
  }

  void unflatten(const Eigen::Ref<const Vector>& params) {
    if (params.size() != parameter_count())
      throw std::invalid_argument("QNetwork: parameter vector has the wrong length");
    Eigen::Index pos = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      auto& w = weights_[l];
      w = Eigen::Map<const RowMajorMatrix>(params.data() + pos, w.rows(), w.cols());
      pos += w.size();
      biases_[l] = params.segment(pos, biases_[l].size());
      pos += biases_[l].size();
    }
  }

  /// params -= rate * direction, with `direction` in the flattened order.
  void descend(const Eigen::Ref<const Vector>& direction, Scalar rate) {
    if (direction.size() != parameter_count())
      throw std::invalid_argument("QNetwork: direction vector has the wrong length");
    Eigen::Index pos = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      auto& w = weights_[l];
      w -= rate * Eigen::Map<const RowMajorMatrix>(direction.data() + pos, w.rows(), w.cols());
      pos += w.size();
      biases_[l] -= rate * direction.segment(pos, biases_[l].size());
      pos += biases_[l].size();
    }
  }

  /// Batched forward pass; columns of `inputs` are samples.
  Matrix forward(const Eigen::Ref<const Matrix>& inputs) const {
    if (inputs.rows() != input_dim())
      throw std::invalid_argument("QNetwork: input dimension mismatch");
    Matrix h = inputs;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      Matrix z = weights_[l] * h;
      z.colwise() += biases_[l];
      h = (l + 1 < weights_.size()) ? Matrix(z.cwiseMax(Scalar(0))) : std::move(z);
    }
    return h;
  }

  Vector forward_one(const Eigen::Ref<const Vector>& input) const {
    return forward(Matrix(input)).col(0);
  }

  /// Loss (1/B) sum_i 0.5 (Q(s_i, a_i) - y_i)^2 and its gradient with respect
  /// to the flattened parameters.
  Scalar td_loss(const Eigen::Ref<const Matrix>& states, const std::vector<int>& actions,
                 const Eigen::Ref<const Vector>& targets, Vector* gradient) const {
    const Eigen::Index batch = states.cols();
    if (batch == 0) throw std::invalid_argument("QNetwork: empty batch");
    if (static_cast<Eigen::Index>(actions.size()) != batch || targets.size() != batch)
      throw std::invalid_argument("QNetwork: batch shape mismatch");
    if (states.rows() != input_dim())
      throw std::invalid_argument("QNetwork: input dimension mismatch");

    std::vector<Matrix> activations;
    activations.reserve(weights_.size() + 1);
    activations.emplace_back(states);
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      Matrix z = weights_[l] * activations.back();
      z.colwise() += biases_[l];
      if (l + 1 < weights_.size()) z = z.cwiseMax(Scalar(0));
      activations.push_back(std::move(z));
    }
    const Matrix& q = activations.back();
    Matrix delta = Matrix::Zero(q.rows(), batch);
    Scalar loss = 0;
    const Scalar inv_batch = Scalar(1) / static_cast<Scalar>(batch);
    for (Eigen::Index i = 0; i < batch; ++i) {
      const int a = actions[i];
      if (a < 0 || a >= output_dim()) throw std::invalid_argument("QNetwork: action out of range");
      const Scalar err = q(a, i) - targets[i];
      loss += Scalar(0.5) * err * err;
      delta(a, i) = err * inv_batch;
    }
    loss *= inv_batch;
    if (gradient == nullptr) return loss;

    gradient->resize(parameter_count());
    std::vector<Eigen::Index> offsets(weights_.size());
    Eigen::Index pos = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      offsets[l] = pos;
      pos += weights_[l].size() + biases_[l].size();
    }
    for (std::size_t l = weights_.size(); l-- > 0;) {
      const RowMajorMatrix grad_w = delta * activations[l].transpose();
      gradient->segment(offsets[l], grad_w.size()) =
          Eigen::Map<const Vector>(grad_w.data(), grad_w.size());
      gradient->segment(offsets[l] + grad_w.size(), biases_[l].size()) = delta.rowwise().sum();
      if (l > 0) {
        Matrix back = weights_[l].transpose() * delta;
        // ReLU derivative, taken as 0 at the kink.
        delta = back.cwiseProduct(
            activations[l].unaryExpr([](Scalar v) { return v > Scalar(0) ? Scalar(1) : Scalar(0); }));
      }
    }
    return loss;
  }

 private:
  std::vector<int> sizes_;
  std::vector<Matrix> weights_;
  std::vector<Vector> biases_;
};

}  // namespace frls
