#include <cmath>
#include <map>
#include <stdexcept>

#include "fedcy/engine/autodiff.hpp"
#include "fedcy/losses.hpp"

namespace fedcy::losses {

namespace eng = fedcy::engine;
using eng::Shape;

void ContrastiveConfig::validate() const {
  if (!(tau > 0.0)) throw std::invalid_argument("contrastive.tau must be positive");
  if (!(lambda_c >= 0.0)) throw std::invalid_argument("contrastive.lambda_c must be nonnegative");
}

Expr ntxent(const Expr& anchor, const std::vector<Expr>& candidates, const ContrastiveConfig& cfg) {
  if (candidates.empty()) throw std::invalid_argument("ntxent needs a positive");
  std::vector<Expr> logits;
  logits.reserve(candidates.size());
  for (const auto& c : candidates) logits.push_back(eng::scale(eng::cosine(anchor, c), 1.0 / cfg.tau));
  const Expr stacked = eng::stack_rows(logits);
  // -log(e^{s_p} / sum e^{s}) = logsumexp(s) - s_p, computed max-shifted.
  return eng::sub(eng::logsumexp(stacked, 0), logits.front());
}

Expr supervised_contrastive_batch(const Expr& embeddings, std::span<const int> labels, const ContrastiveConfig& cfg) {
  const std::size_t b = labels.size();
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < b; ++i) members[labels[i]].push_back(i);

  const Expr logits = eng::scale(eng::cosine_matrix(embeddings, embeddings), 1.0 / cfg.tau);
  std::vector<Expr> class_terms;
  for (const auto& [label, own] : members) {
    if (own.size() < 2) continue;
    std::vector<std::size_t> others;
    for (std::size_t i = 0; i < b; ++i) {
      if (labels[i] != label) others.push_back(i);
    }
    // One row per (anchor, positive): [s_ap, s_an for every negative n].
    const std::size_t rows = own.size() * (own.size() - 1);
    const std::size_t cols = 1 + others.size();
    std::vector<std::size_t> table, positives;
    table.reserve(rows * cols);
    positives.reserve(rows);
    for (std::size_t a : own) {
      for (std::size_t p : own) {
        if (p == a) continue;
        table.push_back(a * b + p);
        positives.push_back(a * b + p);
        for (std::size_t n : others) table.push_back(a * b + n);
      }
    }
    const Expr lse = eng::logsumexp(eng::gather(logits, std::move(table), Shape{rows, cols}), 1);
    const Expr pos = eng::gather(logits, std::move(positives), Shape{rows});
    class_terms.push_back(eng::scale(eng::sum(eng::sub(lse, pos)), 1.0 / static_cast<double>(own.size() - 1)));
  }
  if (class_terms.empty()) return Expr::literal(Array::scalar(0.0));
  return eng::scale(eng::sum(eng::stack_rows(class_terms)), 1.0 / static_cast<double>(b));
}

double ntxent(const Array& anchor, const Array& positive, std::span<const Array> negatives,
              const ContrastiveConfig& cfg) {
  cfg.validate();
  if (anchor.rank() != 1 || positive.shape() != anchor.shape()) {
    throw eng::ShapeError("ntxent: anchor and positive must be vectors of equal length");
  }
  std::vector<Expr> candidates{Expr::literal(positive)};
  for (const auto& n : negatives) {
    if (n.shape() != anchor.shape()) throw eng::ShapeError("ntxent: negative has wrong shape");
    candidates.push_back(Expr::literal(n));
  }
  return eng::evaluate(ntxent(Expr::literal(anchor), candidates, cfg), {}).item();
}

double supervised_contrastive_batch(const Array& embeddings, std::span<const int> labels, std::size_t batch_size,
                                    const ContrastiveConfig& cfg) {
  cfg.validate();
  if (embeddings.rank() != 2) throw eng::ShapeError("supervised_contrastive_batch: embeddings must be a matrix");
  if (labels.size() != batch_size || embeddings.rows() != batch_size) {
    throw std::invalid_argument("supervised_contrastive_batch: class sets do not add up to the batch size");
  }
  if (batch_size == 0) throw std::invalid_argument("supervised_contrastive_batch: empty batch");
  return eng::evaluate(supervised_contrastive_batch(Expr::literal(embeddings), labels, cfg), {}).item();
}

}  // namespace fedcy::losses
