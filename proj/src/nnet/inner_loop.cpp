#include "metadiv/nnet/inner_loop.hpp"

#include "metadiv/error.hpp"

namespace metadiv::nnet {
namespace {

void require_mlp_layout(const ParamVars& params) {
  if (params.empty() || params.size() % 2 != 0) {
    throw InvalidInput("expected weight/bias pairs on the tape");
  }
}

Matrix one_hot(std::span<const int> labels, Eigen::Index classes) {
  Matrix y = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= classes) throw InvalidInput("label out of range");
    y(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  }
  return y;
}

}  // namespace

ParamVars to_graph(Graph& graph, const ParameterSet& params, bool requires_grad) {
  ParamVars vars;
  vars.reserve(2 * params.layers.size());
  for (const auto& l : params.layers) {
    vars.push_back(graph.leaf(l.weight, requires_grad));
    vars.push_back(graph.leaf(Matrix(l.bias), requires_grad));
  }
  return vars;
}

ParameterSet values_of(const Graph& graph, const ParamVars& vars) {
  require_mlp_layout(vars);
  ParameterSet out;
  for (std::size_t i = 0; i < vars.size(); i += 2) {
    out.layers.push_back({graph.value(vars[i]), graph.value(vars[i + 1]).row(0)});
  }
  return out;
}

ParameterSet grads_of(const Graph& graph, const ParamVars& vars) {
  require_mlp_layout(vars);
  ParameterSet out;
  for (std::size_t i = 0; i < vars.size(); i += 2) {
    out.layers.push_back({graph.grad(vars[i]), graph.grad(vars[i + 1]).row(0)});
  }
  return out;
}

Var graph_logits(Graph& graph, const ParamVars& params, Var x) {
  require_mlp_layout(params);
  Var h = x;
  const std::size_t layers = params.size() / 2;
  for (std::size_t i = 0; i < layers; ++i) {
    h = graph.add_row(graph.matmul(h, params[2 * i]), params[2 * i + 1]);
    if (i + 1 < layers) h = graph.relu(h);
  }
  return h;
}

Var graph_loss(Graph& graph, const ParamVars& params, const Matrix& x, std::span<const int> labels) {
  return graph.softmax_cross_entropy(graph_logits(graph, params, graph.constant(x)), labels);
}

ParamVars analytic_gradient(Graph& graph, const ParamVars& params, const Matrix& x,
                            std::span<const int> labels) {
  require_mlp_layout(params);
  const std::size_t layers = params.size() / 2;
  if (static_cast<std::size_t>(x.rows()) != labels.size() || labels.empty()) {
    throw InvalidInput("analytic_gradient: label count mismatch");
  }

  // inputs[i] feeds layer i; pre[i] is layer i's pre-activation.
  std::vector<Var> inputs{graph.constant(x)};
  std::vector<Var> pre;
  for (std::size_t i = 0; i < layers; ++i) {
    pre.push_back(graph.add_row(graph.matmul(inputs.back(), params[2 * i]), params[2 * i + 1]));
    if (i + 1 < layers) inputs.push_back(graph.relu(pre.back()));
  }

  const Var probs = graph.softmax(pre.back());
  const Var targets = graph.constant(one_hot(labels, graph.value(probs).cols()));
  Var delta = graph.scale(graph.sub(probs, targets), 1.0 / static_cast<double>(labels.size()));

  ParamVars grads(params.size());
  for (std::size_t i = layers; i-- > 0;) {
    grads[2 * i] = graph.matmul_tn(inputs[i], delta);
    grads[2 * i + 1] = graph.col_sum(delta);
    if (i > 0) {
      const Var upstream = graph.matmul_nt(delta, params[2 * i]);
      delta = graph.hadamard(upstream, graph.relu_mask(pre[i - 1]));
    }
  }
  return grads;
}

ParamVars inner_adapted_params(Graph& graph, const ParamVars& init, const GradientBuilder& gradient,
                               std::size_t steps, double inner_lr, bool second_order) {
  ParamVars theta = init;
  for (std::size_t s = 0; s < steps; ++s) {
    ParamVars grads = gradient(graph, theta);
    if (grads.size() != theta.size()) throw InvalidInput("gradient builder returned wrong arity");
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const Var g = second_order ? grads[i] : graph.detach(grads[i]);
      theta[i] = graph.sub(theta[i], graph.scale(g, inner_lr));
    }
  }
  return theta;
}

ParamVars inner_adapted_params(Graph& graph, const ParamVars& init, const Matrix& support_x,
                               std::span<const int> support_y, std::size_t steps, double inner_lr,
                               bool second_order) {
  const GradientBuilder builder = [&](Graph& g, const ParamVars& theta) {
    return analytic_gradient(g, theta, support_x, support_y);
  };
  return inner_adapted_params(graph, init, builder, steps, inner_lr, second_order);
}

MetaGradient maml_task_gradient(const ParameterSet& params, const Matrix& support_x,
                                std::span<const int> support_y, const Matrix& query_x,
                                std::span<const int> query_y, std::size_t steps, double inner_lr,
                                bool second_order) {
  Graph graph;
  const ParamVars init = to_graph(graph, params, true);
  const ParamVars adapted =
      inner_adapted_params(graph, init, support_x, support_y, steps, inner_lr, second_order);
  const Var z = graph_logits(graph, adapted, graph.constant(query_x));
  const Var loss = graph.softmax_cross_entropy(z, query_y);
  graph.backward(loss);
  return {graph.value(loss)(0, 0), accuracy(graph.value(z), query_y), grads_of(graph, init)};
}

ParameterSet sgd_adapt(const ParameterSet& params, const Matrix& x, std::span<const int> labels,
                       std::size_t steps, double lr) {
  ParameterSet theta = params;
  for (std::size_t s = 0; s < steps; ++s) {
    const auto lg = loss_and_grad(theta, x, labels);
    for (std::size_t i = 0; i < theta.layers.size(); ++i) {
      theta.layers[i].weight -= lr * lg.grads.layers[i].weight;
      theta.layers[i].bias -= lr * lg.grads.layers[i].bias;
    }
  }
  return theta;
}

}  // namespace metadiv::nnet
