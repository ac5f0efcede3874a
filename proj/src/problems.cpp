#include "sqn/problems.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace sqn {

// ---------------------------------------------------------------------------
// Quadratic problem

QuadraticProblem::QuadraticProblem(Mat a, Mat sigma)
    : a_(std::move(a)), sigma_(std::move(sigma)) {
  if (a_.rows() != a_.cols() || sigma_.rows() != a_.rows() ||
      sigma_.cols() != a_.rows())
    throw InvalidInput("QuadraticProblem: dimension mismatch");
  auto l = linalg::cholesky(sigma_);
  if (!l) throw NotPositiveDefinite();
  chol_sigma_ = *l;
  const Vec ones = Vec::Ones(a_.rows());
  x_star_ = Eigen::LLT<Mat>(a_).solve(ones);
  f_star_ = -0.5 * ones.dot(x_star_);
  auto [lo, hi] = linalg::eig_extremes(a_);
  lambda_min_ = lo;
  lambda_max_ = hi;
}

Batch QuadraticProblem::sample_batch(std::mt19937_64& rng, int n) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  Batch batch;
  batch.xi.reserve(n);
  const Eigen::Index d = dim();
  for (int k = 0; k < n; ++k) {
    Vec g(d);
    for (Eigen::Index i = 0; i < d; ++i) g(i) = normal(rng);
    batch.xi.push_back(chol_sigma_ * g);
  }
  return batch;
}

std::vector<Vec> QuadraticProblem::grad_per_sample(const Vec& x,
                                                   const Batch& batch) const {
  const Vec ax = a_ * x;
  const double sum_x = x.sum();  // 1'x
  std::vector<Vec> grads;
  grads.reserve(batch.xi.size());
  for (const auto& xi : batch.xi) {
    // grad f(x, xi) = A x - 1 - (1'x) xi - (xi'x) 1
    Vec g = ax;
    g.array() -= 1.0 + xi.dot(x);
    g -= sum_x * xi;
    grads.push_back(std::move(g));
  }
  return grads;
}

double QuadraticProblem::true_objective(const Vec& x) const {
  return 0.5 * x.dot(a_ * x) - x.sum();
}

QuadraticProblem gen_quadratic(std::uint64_t seed, int d, double kappa_target,
                               double wishart_scale) {
  if (d < 2) throw InvalidInput("gen_quadratic: d must be >= 2");
  if (kappa_target <= 1.0) throw InvalidInput("gen_quadratic: kappa must be > 1");
  if (wishart_scale <= 0.0)
    throw InvalidInput("gen_quadratic: wishart_scale must be positive");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Mat g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = normal(rng);
  const Mat q = Eigen::HouseholderQR<Mat>(g).householderQ();

  // log10(lambda) ~ U[0, log10(kappa)], sorted, extremes pinned to 1 and kappa.
  std::uniform_real_distribution<double> unif(0.0, std::log10(kappa_target));
  std::vector<double> lambdas(d);
  for (auto& l : lambdas) l = std::pow(10.0, unif(rng));
  std::sort(lambdas.begin(), lambdas.end());
  lambdas.front() = 1.0;
  lambdas.back() = kappa_target;

  Mat a = q * Eigen::Map<Vec>(lambdas.data(), d).asDiagonal() * q.transpose();
  a = 0.5 * (a + a.transpose()).eval();

  // Wishart(V = c I, n = d) via Bartlett: Sigma = c * T T', T lower triangular
  // with T_ii = sqrt(chi2(n - i)) and standard normal strict lower part.
  Mat t = Mat::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    std::chi_squared_distribution<double> chi2(static_cast<double>(d - i));
    t(i, i) = std::sqrt(chi2(rng));
    for (int j = 0; j < i; ++j) t(i, j) = normal(rng);
  }
  Mat sigma = wishart_scale * (t * t.transpose());
  sigma = 0.5 * (sigma + sigma.transpose()).eval();

  return QuadraticProblem(std::move(a), std::move(sigma));
}

// ---------------------------------------------------------------------------
// Logistic regression

LogisticProblem::LogisticProblem(Mat features, std::vector<int> labels,
                                 double lambda_lr)
    : features_(std::move(features)), labels_(std::move(labels)),
      lambda_lr_(lambda_lr) {
  if (features_.rows() == 0) throw InvalidInput("LogisticProblem: empty dataset");
  if (static_cast<Eigen::Index>(labels_.size()) != features_.rows())
    throw InvalidInput("LogisticProblem: feature/label count mismatch");
  if (!features_.allFinite())
    throw InvalidInput("LogisticProblem: non-finite features");
  if (lambda_lr_ < 0.0) throw InvalidInput("LogisticProblem: negative lambda");
  int max_label = 0;
  for (int l : labels_) {
    if (l < 0) throw InvalidInput("LogisticProblem: negative label");
    max_label = std::max(max_label, l);
  }
  n_classes_ = max_label + 1;
  if (n_classes_ < 2) n_classes_ = 2;
}

Batch LogisticProblem::sample_batch(std::mt19937_64& rng, int n) const {
  std::uniform_int_distribution<int> pick(0, static_cast<int>(features_.rows()) - 1);
  Batch batch;
  batch.indices.reserve(n);
  for (int k = 0; k < n; ++k) batch.indices.push_back(pick(rng));
  return batch;
}

namespace {

Vec stable_softmax(const Vec& logits) {
  Vec z = logits.array() - logits.maxCoeff();
  z = z.array().exp();
  return z / z.sum();
}

}  // namespace

Vec LogisticProblem::grad_one(const Vec& x, int index) const {
  const Eigen::Index f = features_.cols();
  if (index < 0 || index >= features_.rows())
    throw InvalidInput("LogisticProblem: sample index out of range");
  const Vec feat = features_.row(index);
  Vec logits(n_classes_);
  for (int c = 0; c < n_classes_; ++c) logits(c) = x.segment(c * f, f).dot(feat);
  Vec prob = stable_softmax(logits);
  prob(labels_[index]) -= 1.0;

  Vec g = lambda_lr_ * x;
  for (int c = 0; c < n_classes_; ++c) g.segment(c * f, f) += prob(c) * feat;
  return g;
}

std::vector<Vec> LogisticProblem::grad_per_sample(const Vec& x,
                                                  const Batch& batch) const {
  if (x.size() != dim()) throw InvalidInput("LogisticProblem: bad x dimension");
  std::vector<Vec> grads;
  grads.reserve(batch.indices.size());
  for (int idx : batch.indices) grads.push_back(grad_one(x, idx));
  return grads;
}

double LogisticProblem::true_objective(const Vec& x) const {
  const Eigen::Index f = features_.cols();
  const Eigen::Index n = features_.rows();
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec feat = features_.row(i);
    Vec logits(n_classes_);
    for (int c = 0; c < n_classes_; ++c) logits(c) = x.segment(c * f, f).dot(feat);
    const double mx = logits.maxCoeff();
    const double lse = mx + std::log((logits.array() - mx).exp().sum());
    loss += lse - logits(labels_[i]);
  }
  return loss / static_cast<double>(n) + 0.5 * lambda_lr_ * x.squaredNorm();
}

Vec LogisticProblem::full_gradient(const Vec& x) const {
  Vec g = Vec::Zero(dim());
  for (Eigen::Index i = 0; i < features_.rows(); ++i) g += grad_one(x, static_cast<int>(i));
  return g / static_cast<double>(features_.rows());
}

std::optional<double> LogisticProblem::smoothness() const {
  if (!smoothness_cache_) smoothness_cache_ = logistic_smoothness(*this);
  return smoothness_cache_;
}

double logistic_smoothness(const LogisticProblem& prob) {
  const Mat& x = prob.features();
  const double n = static_cast<double>(x.rows());
  const Mat gram = x.transpose() * x / n;

  // Power iteration on the f x f Gram matrix.
  Vec v = Vec::Ones(gram.rows()).normalized();
  double lambda = 0.0;
  for (int it = 0; it < 1000; ++it) {
    Vec w = gram * v;
    const double norm = w.norm();
    if (norm == 0.0) {
      lambda = 0.0;
      break;
    }
    w /= norm;
    const double next = w.dot(gram * w);
    const bool converged = std::abs(next - lambda) <= 1e-6 * std::max(1.0, std::abs(next));
    lambda = next;
    v = std::move(w);
    if (converged) break;
  }
  return 0.5 * lambda + prob.lambda_lr();
}

// ---------------------------------------------------------------------------
// File ingestion

namespace {

[[noreturn]] void parse_fail(const std::string& path, long line, const std::string& msg) {
  throw InvalidInput(path + ":" + std::to_string(line) + ": " + msg);
}

double parse_double(const std::string& tok, const std::string& path, long line) {
  std::size_t pos = 0;
  double v;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception&) {
    parse_fail(path, line, "expected a number, got '" + tok + "'");
  }
  if (pos != tok.size()) parse_fail(path, line, "trailing garbage in '" + tok + "'");
  return v;
}

int parse_label(const std::string& tok, const std::string& path, long line) {
  const double v = parse_double(tok, path, line);
  const int l = static_cast<int>(std::llround(v));
  if (static_cast<double>(l) != v || l < 0)
    parse_fail(path, line, "label must be a nonnegative integer, got '" + tok + "'");
  return l;
}

LogisticProblem load_libsvm(const std::string& path, double lambda_lr) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path);

  std::vector<int> labels;
  std::vector<std::vector<std::pair<int, double>>> rows;
  int max_index = 0;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;  // blank line
    labels.push_back(parse_label(tok, path, line_no));
    std::vector<std::pair<int, double>> row;
    while (ls >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos)
        parse_fail(path, line_no, "expected idx:val, got '" + tok + "'");
      const double idx_d = parse_double(tok.substr(0, colon), path, line_no);
      const int idx = static_cast<int>(idx_d);
      if (static_cast<double>(idx) != idx_d || idx < 1)
        parse_fail(path, line_no, "feature index must be a positive integer");
      const double val = parse_double(tok.substr(colon + 1), path, line_no);
      row.emplace_back(idx, val);
      max_index = std::max(max_index, idx);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InvalidInput(path + ": empty file");

  Mat features = Mat::Zero(static_cast<Eigen::Index>(rows.size()), max_index);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (const auto& [idx, val] : rows[i])
      features(static_cast<Eigen::Index>(i), idx - 1) = val;
  return LogisticProblem(std::move(features), std::move(labels), lambda_lr);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

LogisticProblem load_csv(const std::string& path, double lambda_lr) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path);

  std::string line;
  long line_no = 0;
  if (!std::getline(in, line)) throw InvalidInput(path + ": empty file");
  ++line_no;
  const std::size_t n_cols = split_csv(line).size();
  if (n_cols < 2) parse_fail(path, line_no, "need at least one feature and a label column");

  std::vector<int> labels;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv(line);
    if (cells.size() != n_cols)
      parse_fail(path, line_no, "expected " + std::to_string(n_cols) + " columns, got " +
                                    std::to_string(cells.size()));
    std::vector<double> row(n_cols - 1);
    for (std::size_t j = 0; j + 1 < n_cols; ++j)
      row[j] = parse_double(cells[j], path, line_no);
    labels.push_back(parse_label(cells.back(), path, line_no));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InvalidInput(path + ": no data rows");

  Mat features(static_cast<Eigen::Index>(rows.size()),
               static_cast<Eigen::Index>(n_cols - 1));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j + 1 < n_cols; ++j)
      features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return LogisticProblem(std::move(features), std::move(labels), lambda_lr);
}

}  // namespace

LogisticProblem logistic_from_file(const std::string& path, DatasetFormat format,
                                   double lambda_lr) {
  return format == DatasetFormat::libsvm ? load_libsvm(path, lambda_lr)
                                         : load_csv(path, lambda_lr);
}

}  // namespace sqn
