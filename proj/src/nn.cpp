#include "srmpc/nn.hpp"

#include <cmath>

#include "srmpc/error.hpp"

namespace srmpc {

Mlp::Mlp(std::vector<int> dims, Activation hidden) : dims_(std::move(dims)), hidden_(hidden) {
  if (dims_.size() < 2) throw InvalidArgument("Mlp needs at least an input and an output layer");
  Eigen::Index n = 0;
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    if (dims_[l] <= 0 || dims_[l + 1] <= 0) throw InvalidArgument("Mlp layer sizes must be positive");
    offsets_.push_back(n);
    n += static_cast<Eigen::Index>(dims_[l + 1]) * (dims_[l] + 1);
  }
  params_ = Eigen::VectorXd::Zero(n);
}

void Mlp::initialize(std::mt19937_64& rng, double output_gain) {
  std::normal_distribution<double> n01;
  for (int l = 0; l < num_layers(); ++l) {
    const int in = dims_[static_cast<std::size_t>(l)];
    const int out = dims_[static_cast<std::size_t>(l) + 1];
    const double scale = (l + 1 == num_layers() ? output_gain : 1.0) / std::sqrt(static_cast<double>(in));
    const Eigen::Index w = weight_offset(l);
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(in) * out; ++i) params_[w + i] = scale * n01(rng);
    params_.segment(w + static_cast<Eigen::Index>(in) * out, out).setZero();
  }
}

Eigen::Map<Eigen::VectorXd> Mlp::output_bias() {
  const int l = num_layers() - 1;
  const Eigen::Index in = dims_[static_cast<std::size_t>(l)];
  return {params_.data() + weight_offset(l) + in * output_dim(), output_dim()};
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x) const {
  MlpCache cache;
  return forward(x, cache);
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, MlpCache& cache) const {
  if (x.rows() != input_dim()) throw InvalidArgument("Mlp input has the wrong dimension");
  cache.inputs.clear();
  cache.outputs.clear();
  Eigen::MatrixXd h = x;
  for (int l = 0; l < num_layers(); ++l) {
    const Eigen::Index in = dims_[static_cast<std::size_t>(l)];
    const Eigen::Index out = dims_[static_cast<std::size_t>(l) + 1];
    const Eigen::Map<const Eigen::MatrixXd> W(params_.data() + weight_offset(l), out, in);
    const Eigen::Map<const Eigen::VectorXd> b(params_.data() + weight_offset(l) + in * out, out);
    cache.inputs.push_back(h);
    Eigen::MatrixXd z = W * h;
    z.colwise() += b;
    if (l + 1 < num_layers() && hidden_ == Activation::Tanh) z = z.array().tanh();
    cache.outputs.push_back(z);
    h = std::move(z);
  }
  return h;
}

Eigen::MatrixXd Mlp::backward(const MlpCache& cache, const Eigen::MatrixXd& grad_out, Eigen::VectorXd& grad) const {
  if (grad.size() == 0) grad = Eigen::VectorXd::Zero(num_params());
  Eigen::MatrixXd delta = grad_out;
  for (int l = num_layers() - 1; l >= 0; --l) {
    const Eigen::Index in = dims_[static_cast<std::size_t>(l)];
    const Eigen::Index out = dims_[static_cast<std::size_t>(l) + 1];
    if (l + 1 < num_layers() && hidden_ == Activation::Tanh) {
      const auto& y = cache.outputs[static_cast<std::size_t>(l)];
      delta.array() *= 1.0 - y.array().square();
    }
    const Eigen::Map<const Eigen::MatrixXd> W(params_.data() + weight_offset(l), out, in);
    Eigen::Map<Eigen::MatrixXd> dW(grad.data() + weight_offset(l), out, in);
    Eigen::Map<Eigen::VectorXd> db(grad.data() + weight_offset(l) + in * out, out);
    dW.noalias() += delta * cache.inputs[static_cast<std::size_t>(l)].transpose();
    db += delta.rowwise().sum();
    delta = W.transpose() * delta;
  }
  return delta;
}

void AdamState::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
  if (m.size() != params.size()) {
    m = Eigen::VectorXd::Zero(params.size());
    v = Eigen::VectorXd::Zero(params.size());
    t = 0;
  }
  Eigen::VectorXd g = grad;
  if (max_grad_norm > 0.0) {
    const double norm = g.norm();
    if (norm > max_grad_norm) g *= max_grad_norm / norm;
  }
  ++t;
  m = beta1 * m + (1.0 - beta1) * g;
  v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  params.array() -= learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + epsilon);
}

}  // namespace srmpc
