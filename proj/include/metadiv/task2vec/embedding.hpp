#pragma once

#include "metadiv/gaussbench/benchmark.hpp"
#include "metadiv/nnet/logistic_head.hpp"
#include "metadiv/numerics/rng.hpp"
#include "metadiv/task2vec/probe.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace metadiv::task2vec {

inline constexpr std::size_t kDefaultMcSamples = 5;

/// Diagonal of the Fisher information over probe feature-extractor weights,
/// in ParameterSet::flatten order.
struct TaskEmbedding {
  Vector values;
  std::string task_id;
  std::size_t n_mc = 0;
};

/// Support and query points merged and sorted by (x, label), so the result does
/// not depend on how the points were split or ordered.
struct CombinedSet {
  Matrix x;
  std::vector<int> y;
  std::size_t n_way = 0;
};

CombinedSet combined_set(const gaussbench::FewShotTask& task);

/// Content hash of a combined set; equal point multisets hash equally.
std::uint64_t fingerprint(const CombinedSet& set);

/// Logistic-regression head on probe features of the combined set.
nnet::LogisticHead fit_task_head(const ProbeNetwork& probe, const gaussbench::FewShotTask& task,
                                 const nnet::LogisticOptions& options = {});
nnet::LogisticHead fit_task_head(const ProbeNetwork& probe, const CombinedSet& set,
                                 const nnet::LogisticOptions& options = {});

/// For every combined point and each of n_mc repetitions, samples a label from
/// the model's predictive distribution and accumulates the squared gradient of
/// its log-likelihood; returns the average.
TaskEmbedding fim_diag_embedding(const ProbeNetwork& probe, const nnet::LogisticHead& head,
                                 const CombinedSet& set, std::size_t n_mc, RngStream& rng);
TaskEmbedding fim_diag_embedding(const ProbeNetwork& probe, const nnet::LogisticHead& head,
                                 const gaussbench::FewShotTask& task, std::size_t n_mc,
                                 RngStream& rng);

/// Head fit plus embedding. The label-sampling stream is rng.split(fingerprint),
/// so identical point sets get identical embeddings.
TaskEmbedding embed_task(const ProbeNetwork& probe, const gaussbench::FewShotTask& task,
                         std::size_t n_mc, const RngStream& rng,
                         const nnet::LogisticOptions& options = {});

/// 1 - <a,b> / (|a| |b|), clamped to [0, 1]. Throws UndefinedResult on a zero
/// embedding.
double cosine_distance(const TaskEmbedding& a, const TaskEmbedding& b);

}  // namespace metadiv::task2vec
