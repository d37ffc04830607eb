#pragma once

// Relaxed toy score evaluated from the raw parameters with Eigen, used as a
// finite-difference oracle for the analytic one-hot gradient.

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "rmscope/toyrm.hpp"

namespace rmscope::oracle {

struct RelaxedToy {
  Eigen::MatrixXd E;  // V x D
  Eigen::MatrixXd W;  // D x D
  Eigen::VectorXd u;
  Eigen::VectorXd p;

  RelaxedToy(const ToyModelParams& params, const PromptSpec& prompt) {
    const auto V = static_cast<Eigen::Index>(params.vocab_size);
    const auto D = static_cast<Eigen::Index>(params.embed_dim);
    E.resize(V, D);
    W.resize(D, D);
    u.resize(D);
    p.resize(D);
    for (Eigen::Index v = 0; v < V; ++v)
      for (Eigen::Index d = 0; d < D; ++d)
        E(v, d) = params.embeddings[static_cast<std::size_t>(v * D + d)];
    for (Eigen::Index r = 0; r < D; ++r) {
      for (Eigen::Index c = 0; c < D; ++c) W(r, c) = params.mix(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
      u(r) = params.projection[static_cast<std::size_t>(r)];
    }
    const auto pv = prompt_vector(params, prompt);
    for (Eigen::Index d = 0; d < D; ++d) p(d) = pv[static_cast<std::size_t>(d)];
  }

  // X is L x V, rows summing to one at the one-hot point.
  double score(const Eigen::MatrixXd& X) const {
    const Eigen::VectorXd h = (X * E).colwise().sum().transpose() / static_cast<double>(X.rows());
    return u.dot((W * h + p).array().tanh().matrix());
  }

  static Eigen::MatrixXd onehot(std::span<const TokenId> tokens, std::size_t vocab) {
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(tokens.size()),
                                              static_cast<Eigen::Index>(vocab));
    for (std::size_t i = 0; i < tokens.size(); ++i) X(static_cast<Eigen::Index>(i), tokens[i]) = 1.0;
    return X;
  }
};

}  // namespace rmscope::oracle
