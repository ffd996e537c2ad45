#include "bqr/net.hpp"

#include <cmath>
#include <random>
#include <string>

#include "bqr/error.hpp"

namespace bqr {

namespace {

struct Activations {
  std::vector<Eigen::MatrixXd> pre;   // trunk pre-activations, width x b
  std::vector<Eigen::MatrixXd> post;  // post[0] = input, post[l+1] = relu(pre[l])
  Eigen::MatrixXd out;                // outputs x b
};

// Columns of `x` are samples.
Activations run_forward(const QuantileNet& net, const Eigen::MatrixXd& x) {
  Activations act;
  const std::size_t trunk = net.layer_count() - 1;
  act.pre.reserve(trunk);
  act.post.reserve(trunk + 1);
  act.post.push_back(x);
  for (std::size_t l = 0; l < trunk; ++l) {
    Eigen::MatrixXd z = net.weight(l) * act.post.back();
    z.colwise() += net.bias(l);
    act.post.push_back(z.cwiseMax(0.0));
    act.pre.push_back(std::move(z));
  }
  act.out = net.weight(trunk) * act.post.back();
  act.out.colwise() += net.bias(trunk);
  return act;
}

void check_inputs(const QuantileNet& net, const Eigen::MatrixXd& inputs) {
  if (static_cast<std::size_t>(inputs.cols()) != net.input_dim()) {
    throw ShapeError("input has " + std::to_string(inputs.cols()) +
                     " features, network expects " +
                     std::to_string(net.input_dim()));
  }
  if (!inputs.allFinite()) throw DomainError("input features must be finite");
}

}  // namespace

QuantileNet::QuantileNet(std::size_t input_dim,
                         std::vector<std::size_t> trunk_widths, TauGrid grid)
    : input_dim_(input_dim),
      trunk_widths_(std::move(trunk_widths)),
      grid_(std::move(grid)) {
  if (input_dim_ == 0) throw InvalidArchitecture("input_dim must be positive");
  if (trunk_widths_.empty()) {
    throw InvalidArchitecture("trunk must have at least one layer");
  }
  for (std::size_t w : trunk_widths_) {
    if (w == 0) throw InvalidArchitecture("trunk layer width must be positive");
  }
  std::size_t offset = 0;
  for (std::size_t l = 0; l < layer_count(); ++l) {
    offsets_.push_back(offset);
    offset += layer_outputs(l) * layer_inputs(l) + layer_outputs(l);
  }
  params_ = Vector::Zero(static_cast<Eigen::Index>(offset));
}

std::size_t QuantileNet::layer_inputs(std::size_t layer) const {
  return layer == 0 ? input_dim_ : trunk_widths_.at(layer - 1);
}

std::size_t QuantileNet::layer_outputs(std::size_t layer) const {
  return layer < trunk_widths_.size() ? trunk_widths_[layer] : grid_.size();
}

std::size_t QuantileNet::weight_offset(std::size_t layer) const {
  return offsets_.at(layer);
}

std::size_t QuantileNet::bias_offset(std::size_t layer) const {
  return offsets_.at(layer) + layer_outputs(layer) * layer_inputs(layer);
}

void QuantileNet::set_params(const Vector& flat) {
  if (flat.size() != params_.size()) {
    throw ShapeError("parameter vector has " + std::to_string(flat.size()) +
                     " entries, network has " +
                     std::to_string(params_.size()));
  }
  if (!flat.allFinite()) throw DomainError("parameters must be finite");
  params_ = flat;
}

QuantileNet::ConstMatrixMap QuantileNet::weight(std::size_t layer) const {
  return {params_.data() + weight_offset(layer),
          static_cast<Eigen::Index>(layer_outputs(layer)),
          static_cast<Eigen::Index>(layer_inputs(layer))};
}

QuantileNet::ConstVectorMap QuantileNet::bias(std::size_t layer) const {
  return {params_.data() + bias_offset(layer),
          static_cast<Eigen::Index>(layer_outputs(layer))};
}

QuantileNet::MatrixMap QuantileNet::weight(std::size_t layer) {
  return {params_.data() + weight_offset(layer),
          static_cast<Eigen::Index>(layer_outputs(layer)),
          static_cast<Eigen::Index>(layer_inputs(layer))};
}

QuantileNet::VectorMap QuantileNet::bias(std::size_t layer) {
  return {params_.data() + bias_offset(layer),
          static_cast<Eigen::Index>(layer_outputs(layer))};
}

QuantileNet init_net(std::size_t input_dim,
                     std::vector<std::size_t> trunk_widths, TauGrid grid,
                     std::uint64_t seed) {
  QuantileNet net(input_dim, std::move(trunk_widths), std::move(grid));
  std::mt19937_64 rng(seed);
  const std::size_t head = net.layer_count() - 1;
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const double fan_in = static_cast<double>(net.layer_inputs(l));
    const double variance = (l == head ? 1.0 : 2.0) / fan_in;
    std::normal_distribution<double> dist(0.0, std::sqrt(variance));
    auto w = net.weight(l);
    // Column-major fill keeps the draw order aligned with params().
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = dist(rng);
    }
  }
  return net;
}

LatentPrediction forward(const QuantileNet& net, std::span<const double> x) {
  if (x.size() != net.input_dim()) {
    throw ShapeError("input has " + std::to_string(x.size()) +
                     " features, network expects " +
                     std::to_string(net.input_dim()));
  }
  Eigen::MatrixXd column(static_cast<Eigen::Index>(x.size()), 1);
  for (std::size_t i = 0; i < x.size(); ++i) {
    column(static_cast<Eigen::Index>(i), 0) = x[i];
  }
  if (!column.allFinite()) throw DomainError("input features must be finite");
  const Activations act = run_forward(net, column);
  return LatentPrediction(
      std::vector<double>(act.out.data(), act.out.data() + act.out.size()));
}

Eigen::MatrixXd forward_batch(const QuantileNet& net,
                              const Eigen::MatrixXd& inputs) {
  check_inputs(net, inputs);
  return run_forward(net, inputs.transpose()).out.transpose();
}

LossAndGradient backward(const QuantileNet& net, const Eigen::MatrixXd& inputs,
                         std::span<const int> labels, const LossSpec& spec) {
  if (inputs.rows() == 0) throw EmptyBatch("backward called on an empty batch");
  if (static_cast<std::size_t>(inputs.rows()) != labels.size()) {
    throw ShapeError("batch has " + std::to_string(inputs.rows()) +
                     " rows but " + std::to_string(labels.size()) + " labels");
  }
  if (spec.outputs() != net.outputs()) {
    throw ShapeError("loss spec grid does not match the network heads");
  }
  check_inputs(net, inputs);

  const Activations act = run_forward(net, inputs.transpose());
  const Eigen::Index batch = inputs.rows();
  const auto m = static_cast<std::size_t>(net.outputs());

  // Upstream gradient dL/d(out), already scaled for the batch mean.
  Eigen::MatrixXd delta(act.out.rows(), batch);
  double loss_sum = 0.0;
  for (Eigen::Index b = 0; b < batch; ++b) {
    std::span<const double> pred(act.out.col(b).data(), m);
    std::span<double> grad(delta.col(b).data(), m);
    loss_sum += total_loss_grad(labels[static_cast<std::size_t>(b)], pred,
                                spec, grad);
  }
  const double inv_batch = 1.0 / static_cast<double>(batch);
  delta *= inv_batch;

  LossAndGradient result;
  result.loss = loss_sum * inv_batch;
  result.gradient = Eigen::VectorXd::Zero(net.params().size());

  for (std::size_t l = net.layer_count(); l-- > 0;) {
    const Eigen::MatrixXd& input = act.post[l];
    Eigen::Map<Eigen::MatrixXd> grad_w(
        result.gradient.data() + net.weight_offset(l),
        static_cast<Eigen::Index>(net.layer_outputs(l)),
        static_cast<Eigen::Index>(net.layer_inputs(l)));
    Eigen::Map<Eigen::VectorXd> grad_b(
        result.gradient.data() + net.bias_offset(l),
        static_cast<Eigen::Index>(net.layer_outputs(l)));
    grad_w.noalias() = delta * input.transpose();
    grad_b = delta.rowwise().sum();
    if (l == 0) break;
    Eigen::MatrixXd upstream = net.weight(l).transpose() * delta;
    delta = (act.pre[l - 1].array() > 0.0).select(upstream, 0.0);
  }
  return result;
}

std::size_t param_count(const QuantileNet& net) { return net.param_count(); }

Eigen::VectorXd flatten(const QuantileNet& net) { return net.params(); }

QuantileNet unflatten(const QuantileNet& shape, const Eigen::VectorXd& flat) {
  QuantileNet net = shape;
  net.set_params(flat);
  return net;
}

// For one sample and head j, dF_j/dW_l is the outer product of the
// back-propagated signal at layer l and that layer's input, so its max-norm
// is the product of the two column max-norms.
double output_weight_grad_maxnorm(const QuantileNet& net,
                                  const Eigen::MatrixXd& inputs) {
  if (inputs.rows() == 0) throw EmptyBatch("empty batch");
  check_inputs(net, inputs);
  const Activations act = run_forward(net, inputs.transpose());
  const std::size_t head = net.layer_count() - 1;
  const Eigen::Index batch = inputs.rows();

  double best = 0.0;
  const Eigen::VectorXd input_norm =
      act.post[head].cwiseAbs().colwise().maxCoeff().transpose();
  best = std::max(best, input_norm.maxCoeff());

  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(net.outputs()); ++j) {
    Eigen::MatrixXd delta =
        net.weight(head).row(j).transpose().replicate(1, batch);
    for (std::size_t l = head; l-- > 0;) {
      delta = (act.pre[l].array() > 0.0).select(delta, 0.0);
      const Eigen::VectorXd delta_norm =
          delta.cwiseAbs().colwise().maxCoeff().transpose();
      const Eigen::VectorXd in_norm =
          act.post[l].cwiseAbs().colwise().maxCoeff().transpose();
      best = std::max(best, delta_norm.cwiseProduct(in_norm).maxCoeff());
      if (l == 0) break;
      delta = net.weight(l).transpose() * delta;
    }
  }
  return best;
}

}  // namespace bqr
