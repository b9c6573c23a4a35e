#pragma once

#include <random>
#include <vector>

#include <Eigen/Core>

namespace srmpc {

enum class Activation { Tanh, Identity };

// Intermediate values of a batched forward pass, needed by backward().
struct MlpCache {
  std::vector<Eigen::MatrixXd> inputs;  // input to each layer
  std::vector<Eigen::MatrixXd> outputs;  // activated output of each layer
};

// Fully connected network with a shared hidden activation and a linear output
// layer. All weights and biases live in one flat parameter vector, layer by
// layer: W (out x in, column-major) then b.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<int> dims, Activation hidden);

  // Gaussian fan-in initialization; the output layer is scaled by output_gain.
  void initialize(std::mt19937_64& rng, double output_gain = 1.0);

  const std::vector<int>& dims() const { return dims_; }
  Activation hidden_activation() const { return hidden_; }
  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }
  int num_layers() const { return static_cast<int>(dims_.size()) - 1; }
  Eigen::Index num_params() const { return params_.size(); }

  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }
  // Bias vector of the output layer.
  Eigen::Map<Eigen::VectorXd> output_bias();

  // Inputs and outputs are column batches (dim x batch).
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, MlpCache& cache) const;
  // Adds dL/dparams to grad (resized and zeroed if empty) and returns dL/dx.
  Eigen::MatrixXd backward(const MlpCache& cache, const Eigen::MatrixXd& grad_out, Eigen::VectorXd& grad) const;

 private:
  Eigen::Index weight_offset(int layer) const { return offsets_[static_cast<std::size_t>(layer)]; }

  std::vector<int> dims_;
  Activation hidden_ = Activation::Tanh;
  std::vector<Eigen::Index> offsets_;
  Eigen::VectorXd params_;
};

struct AdamState {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Gradients with a larger global norm are rescaled; <= 0 disables.
  double max_grad_norm = 0.5;
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long t = 0;

  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);
};

}  // namespace srmpc
