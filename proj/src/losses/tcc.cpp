#include <stdexcept>
#include <string>

#include "fedcy/engine/autodiff.hpp"
#include "fedcy/losses.hpp"

namespace fedcy::losses {

namespace eng = fedcy::engine;
using eng::Shape;

void TccConfig::validate() const {
  if (!(tau > 0.0)) throw std::invalid_argument("tcc.tau must be positive");
  if (!(lambda_sigma >= 0.0)) throw std::invalid_argument("tcc.lambda_sigma must be nonnegative");
  if (!(lambda_t >= 0.0)) throw std::invalid_argument("tcc.lambda_t must be nonnegative");
  if (!(variance_floor > 0.0)) throw std::invalid_argument("tcc.variance_floor must be positive");
}

Expr similarity_matrix(const Expr& a, const Expr& b, Similarity similarity) {
  return similarity == Similarity::cosine ? eng::cosine_matrix(a, b) : eng::neg_sq_dist_matrix(a, b);
}

Expr cycle_back_losses(const Sequence& u, const Sequence& v, const TccConfig& cfg) {
  const std::size_t n = u.length;
  const double inv_tau = 1.0 / cfg.tau;

  // alpha: soft assignment of each u_k over V; v_tilde: its soft nearest neighbour.
  const Expr alpha = eng::softmax(eng::scale(similarity_matrix(u.embeddings, v.embeddings, cfg.similarity), inv_tau), 1);
  const Expr v_tilde = eng::matmul(alpha, v.embeddings);
  // beta: row k holds the similarities of v_tilde(u_k) back to U.
  const Expr beta = eng::softmax(eng::scale(similarity_matrix(v_tilde, u.embeddings, cfg.similarity), inv_tau), 1);

  Array index_col(Shape{n, 1});
  Array index_grid(Shape{n, n});
  for (std::size_t k = 0; k < n; ++k) {
    index_col[k] = static_cast<double>(k + 1);
    for (std::size_t i = 0; i < n; ++i) index_grid.at(k, i) = static_cast<double>(i + 1);
  }
  const Expr indices = Expr::literal(index_col);

  const Expr mu = eng::matmul(beta, indices);
  const Expr spread = eng::sub(Expr::literal(index_grid), eng::matmul(mu, Expr::literal(Array(Shape{1, n}, 1.0))));
  const Expr variance = eng::matmul(eng::mul(eng::square(spread), beta), Expr::literal(Array(Shape{n, 1}, 1.0)));
  const Expr var = eng::clamp_min(variance, cfg.variance_floor);

  const Expr err = eng::square(eng::sub(indices, mu));
  const Expr denom = cfg.variance_mode == VarianceMode::variance ? var : eng::square(var);
  return eng::add(eng::div(err, denom), eng::scale(eng::log(var), cfg.lambda_sigma));
}

Expr cycle_back_loss(std::size_t k, const Sequence& u, const Sequence& v, const TccConfig& cfg) {
  if (k < 1 || k > u.length) throw std::out_of_range("cycle_back_loss: index out of range");
  return eng::gather(cycle_back_losses(u, v, cfg), {k - 1}, Shape{});
}

Expr tcc_pair_loss(const Sequence& u, const Sequence& v, const TccConfig& cfg) {
  const Expr forward = eng::sum(cycle_back_losses(u, v, cfg));
  const Expr backward = eng::sum(cycle_back_losses(v, u, cfg));
  return eng::scale(eng::add(forward, backward), 1.0 / static_cast<double>(u.length + v.length));
}

Expr tcc_batch_objective(const std::vector<Sequence>& clips, const TccConfig& cfg) {
  const std::size_t b = clips.size();
  if (b < 2) throw std::invalid_argument("tcc_batch_objective needs at least two clips");
  // The pair loss is exactly symmetric, so each unordered pair counts twice.
  std::vector<Expr> pairs;
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t k = i + 1; k < b; ++k) pairs.push_back(tcc_pair_loss(clips[i], clips[k], cfg));
  }
  const Expr total = eng::sum(eng::stack_rows(pairs));
  return eng::scale(total, 2.0 * cfg.lambda_t / static_cast<double>(b * (b - 1)));
}

// Array-level ----------------------------------------------------------------

namespace {

void check_sequence(const Array& a, const char* what) {
  if (a.rank() != 2) {
    throw eng::ShapeError(std::string(what) + " must be a matrix, got shape " + eng::shape_string(a.shape()));
  }
  if (a.rows() == 0) throw std::invalid_argument(std::string(what) + " is empty");
}

void check_same_dim(const Array& a, const Array& b) {
  if (a.cols() != b.cols()) throw eng::ShapeError("embedding dimensions differ");
}

Sequence literal_sequence(const Array& a) { return Sequence{Expr::literal(a), a.rows()}; }

}  // namespace

SoftNeighbor soft_nearest_neighbor(const Array& u, const Array& v, const TccConfig& cfg) {
  cfg.validate();
  check_sequence(v, "V");
  if (u.rank() != 1 || u.size() != v.cols()) throw eng::ShapeError("u must be a vector matching V's columns");
  const Expr u_row = Expr::literal(Array::matrix(1, u.size(), u.values()));
  const Expr alpha = eng::softmax(eng::scale(similarity_matrix(u_row, Expr::literal(v), cfg.similarity), 1.0 / cfg.tau), 1);
  const Array a = eng::evaluate(alpha, {});
  const Array vt = eng::evaluate(eng::matmul(Expr::literal(a), Expr::literal(v)), {});
  return SoftNeighbor{Array::vector(vt.values()), Array::vector(a.values())};
}

double cycle_back_loss(std::size_t k, const Array& u, const Array& v, const TccConfig& cfg) {
  cfg.validate();
  check_sequence(u, "U");
  check_sequence(v, "V");
  check_same_dim(u, v);
  return eng::evaluate(cycle_back_loss(k, literal_sequence(u), literal_sequence(v), cfg), {}).item();
}

double tcc_pair_loss(const Array& u, const Array& v, const TccConfig& cfg) {
  cfg.validate();
  check_sequence(u, "U");
  check_sequence(v, "V");
  check_same_dim(u, v);
  return eng::evaluate(tcc_pair_loss(literal_sequence(u), literal_sequence(v), cfg), {}).item();
}

double tcc_batch_objective(std::span<const Array> clips, const TccConfig& cfg) {
  cfg.validate();
  if (clips.size() < 2) throw std::invalid_argument("tcc_batch_objective needs at least two clips");
  std::vector<Sequence> seqs;
  for (const auto& c : clips) {
    check_sequence(c, "clip");
    check_same_dim(c, clips.front());
    seqs.push_back(literal_sequence(c));
  }
  return eng::evaluate(tcc_batch_objective(seqs, cfg), {}).item();
}

}  // namespace fedcy::losses
