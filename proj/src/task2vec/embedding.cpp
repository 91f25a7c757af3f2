#include "metadiv/task2vec/embedding.hpp"

#include "metadiv/error.hpp"
#include "metadiv/nnet/mlp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

namespace metadiv::task2vec {

CombinedSet combined_set(const gaussbench::FewShotTask& task) {
  const Matrix x = task.combined_x();
  const std::vector<int> y = task.combined_y();
  if (x.rows() == 0) throw InvalidInput("combined_set: empty task");
  std::vector<std::size_t> order(y.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const auto ia = static_cast<Eigen::Index>(a);
      const auto ib = static_cast<Eigen::Index>(b);
      if (x(ia, c) != x(ib, c)) return x(ia, c) < x(ib, c);
    }
    return y[a] < y[b];
  });
  CombinedSet out;
  out.x.resize(x.rows(), x.cols());
  out.y.resize(y.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    out.x.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(order[i]));
    out.y[i] = y[order[i]];
  }
  out.n_way = task.n_way();
  return out;
}

std::uint64_t fingerprint(const CombinedSet& set) {
  std::uint64_t h = mix64(static_cast<std::uint64_t>(set.n_way));
  for (Eigen::Index i = 0; i < set.x.rows(); ++i) {
    for (Eigen::Index c = 0; c < set.x.cols(); ++c) {
      h = mix64(h ^ std::bit_cast<std::uint64_t>(set.x(i, c)));
    }
    h = mix64(h ^ static_cast<std::uint64_t>(set.y[static_cast<std::size_t>(i)]));
  }
  return h;
}

nnet::LogisticHead fit_task_head(const ProbeNetwork& probe, const CombinedSet& set,
                                 const nnet::LogisticOptions& options) {
  return nnet::fit_logistic_head(probe.features(set.x), set.y, set.n_way, options).head;
}

nnet::LogisticHead fit_task_head(const ProbeNetwork& probe, const gaussbench::FewShotTask& task,
                                 const nnet::LogisticOptions& options) {
  return fit_task_head(probe, combined_set(task), options);
}

TaskEmbedding fim_diag_embedding(const ProbeNetwork& probe, const nnet::LogisticHead& head,
                                 const CombinedSet& set, std::size_t n_mc, RngStream& rng) {
  if (n_mc == 0) throw InvalidInput("fim_diag_embedding: n_mc must be positive");
  const auto& layers = probe.feature_params().layers;
  const std::size_t depth = layers.size();
  const Eigen::Index n = set.x.rows();
  if (head.weights.rows() != static_cast<Eigen::Index>(probe.feature_dim())) {
    throw InvalidInput("fim_diag_embedding: head does not match probe width");
  }

  const std::vector<ProbeLayerTrace> trace = probe.trace(set.x);
  const Matrix probs =
      nnet::softmax_rows(nnet::head_logits(head, trace.back().pre.cwiseMax(0.0)));
  const Eigen::Index n_way = probs.cols();

  std::vector<Matrix> squared_inputs;
  std::vector<Matrix> masks;
  for (const auto& t : trace) {
    squared_inputs.push_back(t.input.cwiseProduct(t.input));
    masks.push_back((t.pre.array() > 0.0).cast<double>().matrix());
  }

  std::vector<Matrix> weight_acc;
  std::vector<RowVector> bias_acc;
  for (const auto& layer : layers) {
    weight_acc.push_back(Matrix::Zero(layer.weight.rows(), layer.weight.cols()));
    bias_acc.push_back(RowVector::Zero(layer.bias.size()));
  }

  for (std::size_t rep = 0; rep < n_mc; ++rep) {
    // d log p(yhat | x) / d logits = onehot(yhat) - p
    Matrix g = -probs;
    for (Eigen::Index i = 0; i < n; ++i) {
      double u = rng.uniform();
      Eigen::Index pick = n_way - 1;
      for (Eigen::Index k = 0; k < n_way; ++k) {
        u -= probs(i, k);
        if (u < 0.0) {
          pick = k;
          break;
        }
      }
      g(i, pick) += 1.0;
    }
    Matrix dh = g * head.weights.transpose();
    for (std::size_t l = depth; l-- > 0;) {
      Matrix dz = dh.cwiseProduct(masks[l]);
      dz.array().rowwise() *= trace[l].inv_scale.array();
      const Matrix dz2 = dz.cwiseProduct(dz);
      weight_acc[l].noalias() += squared_inputs[l].transpose() * dz2;
      bias_acc[l] += dz2.colwise().sum();
      if (l > 0) dh = dz * layers[l].weight.transpose();
    }
  }

  nnet::ParameterSet fisher;
  for (std::size_t l = 0; l < depth; ++l) fisher.layers.push_back({weight_acc[l], bias_acc[l]});
  TaskEmbedding emb;
  emb.values = fisher.flatten() / (static_cast<double>(n) * static_cast<double>(n_mc));
  emb.n_mc = n_mc;
  return emb;
}

TaskEmbedding fim_diag_embedding(const ProbeNetwork& probe, const nnet::LogisticHead& head,
                                 const gaussbench::FewShotTask& task, std::size_t n_mc,
                                 RngStream& rng) {
  return fim_diag_embedding(probe, head, combined_set(task), n_mc, rng);
}

TaskEmbedding embed_task(const ProbeNetwork& probe, const gaussbench::FewShotTask& task,
                         std::size_t n_mc, const RngStream& rng,
                         const nnet::LogisticOptions& options) {
  const CombinedSet set = combined_set(task);
  const nnet::LogisticHead head = fit_task_head(probe, set, options);
  const std::uint64_t key = fingerprint(set);
  RngStream stream = rng.split(key);
  TaskEmbedding emb = fim_diag_embedding(probe, head, set, n_mc, stream);
  emb.task_id = std::to_string(key);
  return emb;
}

double cosine_distance(const TaskEmbedding& a, const TaskEmbedding& b) {
  if (a.values.size() != b.values.size()) {
    throw InvalidInput("cosine_distance: embeddings differ in length");
  }
  const double na2 = a.values.squaredNorm();
  const double nb2 = b.values.squaredNorm();
  if (!(na2 > 0.0) || !(nb2 > 0.0)) throw UndefinedResult("cosine_distance: zero embedding");
  if (a.values == b.values) return 0.0;
  const double d = 1.0 - a.values.dot(b.values) / std::sqrt(na2 * nb2);
  return std::clamp(d, 0.0, 1.0);
}

}  // namespace metadiv::task2vec
