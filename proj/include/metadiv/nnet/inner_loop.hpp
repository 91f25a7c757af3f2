#pragma once

#include "metadiv/nnet/graph.hpp"
#include "metadiv/nnet/mlp.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace metadiv::nnet {

/// Tape handles of a parameter list: weight, bias, weight, bias, ... for an MLP,
/// or any flat list for the generic inner loop.
using ParamVars = std::vector<Var>;

ParamVars to_graph(Graph& graph, const ParameterSet& params, bool requires_grad = true);
ParameterSet values_of(const Graph& graph, const ParamVars& vars);
ParameterSet grads_of(const Graph& graph, const ParamVars& vars);

Var graph_logits(Graph& graph, const ParamVars& params, Var x);
Var graph_loss(Graph& graph, const ParamVars& params, const Matrix& x, std::span<const int> labels);

/// Gradient of the mean cross-entropy written out as tape ops (the backprop
/// recurrences recorded as forward nodes), so it can itself be differentiated.
ParamVars analytic_gradient(Graph& graph, const ParamVars& params, const Matrix& x,
                            std::span<const int> labels);

using GradientBuilder = std::function<ParamVars(Graph&, const ParamVars&)>;

/// theta_{j+1} = theta_j - inner_lr * grad(theta_j), `steps` times. With
/// second_order the gradients stay on the tape; otherwise each one is detached
/// so the outer derivative treats it as a constant. Values agree bitwise.
ParamVars inner_adapted_params(Graph& graph, const ParamVars& init, const GradientBuilder& gradient,
                               std::size_t steps, double inner_lr, bool second_order);

/// MLP specialization adapting on a labeled support batch.
ParamVars inner_adapted_params(Graph& graph, const ParamVars& init, const Matrix& support_x,
                               std::span<const int> support_y, std::size_t steps, double inner_lr,
                               bool second_order);

struct MetaGradient {
  double query_loss = 0.0;
  double query_accuracy = 0.0;
  ParameterSet grads;
};

/// Query loss after inner adaptation on the support batch, differentiated with
/// respect to the initial parameters.
MetaGradient maml_task_gradient(const ParameterSet& params, const Matrix& support_x,
                                std::span<const int> support_y, const Matrix& query_x,
                                std::span<const int> query_y, std::size_t steps, double inner_lr,
                                bool second_order);

/// Plain SGD adaptation off the tape (used at meta-test time).
ParameterSet sgd_adapt(const ParameterSet& params, const Matrix& x, std::span<const int> labels,
                       std::size_t steps, double lr);

}  // namespace metadiv::nnet
