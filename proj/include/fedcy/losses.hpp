#pragma once

#include <span>
#include <vector>

#include "fedcy/engine/expr.hpp"
#include "fedcy/model.hpp"

namespace fedcy::losses {

using engine::Array;
using engine::Expr;

enum class Similarity { cosine, negative_squared_distance };

/// How the spread of the cycle-back distribution enters the loss.
///   variance:         (k - mu)^2 / var   + lambda_sigma * log(var)
///   squared_variance: (k - mu)^2 / var^2 + lambda_sigma * log(var)
enum class VarianceMode { variance, squared_variance };

struct TccConfig {
  double tau = 0.05;
  double lambda_sigma = 1.0;
  double lambda_t = 10.0;
  double variance_floor = 1e-6;
  Similarity similarity = Similarity::cosine;
  VarianceMode variance_mode = VarianceMode::variance;

  void validate() const;
};

struct ContrastiveConfig {
  double tau = 0.1;
  double lambda_c = 10.0;

  void validate() const;
};

/// Floor applied to probabilities inside the cross-entropy logarithm.
inline constexpr double kProbabilityFloor = 1e-12;

/// An embedding sequence expression together with its number of rows.
struct Sequence {
  Expr embeddings;  // length x d
  std::size_t length;
};

// Expression builders --------------------------------------------------------
//
// These are differentiable with respect to whatever leaves the inputs carry.
// Frame indices inside the cycle-back statistics are 1-based.

/// Pairwise similarity Q(a_i, b_j) as an (rows(a) x rows(b)) matrix.
Expr similarity_matrix(const Expr& a, const Expr& b, Similarity similarity);

/// Per-index cycle-back losses L(u_k, V) for k = 1..n, as an (n x 1) matrix.
Expr cycle_back_losses(const Sequence& u, const Sequence& v, const TccConfig& cfg);

Expr cycle_back_loss(std::size_t k, const Sequence& u, const Sequence& v, const TccConfig& cfg);
Expr tcc_pair_loss(const Sequence& u, const Sequence& v, const TccConfig& cfg);

/// lambda_t / (|B|(|B|-1)) times the sum of pair losses over ordered pairs.
Expr tcc_batch_objective(const std::vector<Sequence>& clips, const TccConfig& cfg);

/// NT-xent of an anchor against candidates; candidates[0] is the positive and
/// the rest are negatives.
Expr ntxent(const Expr& anchor, const std::vector<Expr>& candidates, const ContrastiveConfig& cfg);

/// Supervised contrastive loss of a batch whose rows carry the given 1-based
/// class labels. Classes with fewer than two members contribute nothing.
Expr supervised_contrastive_batch(const Expr& embeddings, std::span<const int> labels,
                                  const ContrastiveConfig& cfg);

/// -sum(y * log(max(p, floor))) for one-hot y and probability vector p.
Expr cross_entropy(const Expr& y, const Expr& p);

/// Batch mean of -log(max(p[row, label-1], floor)).
Expr mean_cross_entropy(const Expr& probabilities, std::span<const int> labels, std::size_t num_phases);

/// Mean cross-entropy plus lambda_c times the supervised contrastive loss of
/// the phi embeddings, over the model's Variable leaves.
Expr labeled_objective(const model::ModelConfig& config, const Array& frames, std::span<const int> labels,
                       const ContrastiveConfig& cfg);

// Array-level evaluation -----------------------------------------------------

struct SoftNeighbor {
  Array v_tilde;  // d
  Array alpha;    // m
};

SoftNeighbor soft_nearest_neighbor(const Array& u, const Array& v, const TccConfig& cfg);
double cycle_back_loss(std::size_t k, const Array& u, const Array& v, const TccConfig& cfg);
double tcc_pair_loss(const Array& u, const Array& v, const TccConfig& cfg);
double tcc_batch_objective(std::span<const Array> clips, const TccConfig& cfg);
double ntxent(const Array& anchor, const Array& positive, std::span<const Array> negatives,
              const ContrastiveConfig& cfg);

/// `batch_size` must equal the number of rows and labels.
double supervised_contrastive_batch(const Array& embeddings, std::span<const int> labels, std::size_t batch_size,
                                    const ContrastiveConfig& cfg);

double cross_entropy(const Array& y, const Array& p);
double labeled_objective(const model::ParameterSet& params, const Array& frames, std::span<const int> labels,
                         const ContrastiveConfig& cfg);

}  // namespace fedcy::losses
