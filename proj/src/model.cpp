#include "embalance/model.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "embalance/errors.hpp"
#include "embalance/textfmt.hpp"

namespace embalance {

Vec NonlinearModel::rhs(double t, const Vec& x, const Vec& u) const {
  Vec dx = drift(t, x);
  if (u.size() > 0) dx.noalias() += input_map(t) * u;
  return dx;
}

Vec NonlinearModel::impulse_increment(double scale, const Vec& direction) const {
  if (impulse_jump) return impulse_jump(scale, direction);
  return input_map(0.0) * (scale * direction);
}

LTVModel LTVModel::constant(const Mat& A, const Mat& B, const Mat& C) {
  if (A.rows() != A.cols() || B.rows() != A.rows() || C.cols() != A.rows())
    throw ConfigError("LTI matrices have inconsistent shapes");
  LTVModel m;
  m.n = A.rows();
  m.p = B.cols();
  m.q = C.rows();
  m.A = [A](double) { return A; };
  m.B = [B](double) { return B; };
  m.C = [C](double) { return C; };
  m.lti = LtiMatrices{A, B, C};
  return m;
}

NonlinearModel LTVModel::to_nonlinear(const std::string& name) const {
  NonlinearModel m;
  m.name = name;
  m.n = n;
  m.p = p;
  m.q = q;
  if (lti) {
    const Mat A0 = lti->A, B0 = lti->B, C0 = lti->C;
    m.drift = [A0](double, const Vec& x) -> Vec { return A0 * x; };
    m.input_map = [B0](double) { return B0; };
    m.output_map = [C0](double, const Vec& x) -> Vec { return C0 * x; };
  } else {
    auto Af = A, Bf = B, Cf = C;
    m.drift = [Af](double t, const Vec& x) -> Vec { return Af(t) * x; };
    m.input_map = Bf;
    m.output_map = [Cf](double t, const Vec& x) -> Vec { return Cf(t) * x; };
  }
  m.equilibrium = Vec::Zero(n);
  return m;
}

Vec BilinearModel::rhs(const Vec& x, double u) const {
  Vec dx = A * x;
  if (u != 0.0) {
    dx.noalias() += u * (N * x);
    dx.noalias() += u * B;
  }
  return dx;
}

Vec BilinearModel::impulse_jump(double c) const {
  const Index terms = nilpotency_index > 0 ? nilpotency_index : embalance::nilpotency_index(N);
  if (terms == 0) throw NotNilpotent("impulse response series of a non-nilpotent N does not terminate");
  Vec term = B;
  Vec sum = B;
  for (Index k = 1; k < terms; ++k) {
    term = (0.5 * c) * (N * term);
    sum += term;
  }
  return c * sum;
}

NonlinearModel BilinearModel::impulse_view() const {
  NonlinearModel m;
  m.name = "bilinear-impulse";
  m.n = dim();
  m.p = 1;
  m.q = 1;
  const Mat A0 = A;
  const Mat B0 = B;
  const RowVec C0 = C;
  m.drift = [A0](double, const Vec& x) -> Vec { return A0 * x; };
  m.input_map = [B0](double) { return B0; };
  m.output_map = [C0](double, const Vec& x) -> Vec { return Vec::Constant(1, C0.dot(x)); };
  m.equilibrium = Vec::Zero(dim());
  BilinearModel copy = *this;
  if (copy.nilpotency_index == 0) copy.nilpotency_index = embalance::nilpotency_index(N);
  m.impulse_jump = [copy](double scale, const Vec& direction) -> Vec {
    return copy.impulse_jump(scale * direction(0));
  };
  return m;
}

Index nilpotency_index(const Mat& N, double tol) {
  const double base = std::max(1.0, N.norm());
  if (N.norm() == 0.0) return 1;
  Mat power = N;
  double scale = base;
  for (Index k = 1; k <= N.rows(); ++k) {
    if (power.norm() <= tol * scale) return k;
    power = power * N;
    scale *= base;
  }
  return 0;
}

void PerturbationSets::validate(Index dim) const {
  if (scales.empty()) throw ConfigError("perturbation set M is empty");
  for (double c : scales)
    if (c == 0.0 || !std::isfinite(c)) throw ConfigError("perturbation scales must be finite and nonzero");
  for (const Mat& T : rotations) {
    if (T.rows() != dim || T.cols() != dim)
      throw ConfigError("rotation has dimension " + std::to_string(T.rows()) + ", expected " +
                        std::to_string(dim));
    if ((T.transpose() * T - Mat::Identity(dim, dim)).cwiseAbs().maxCoeff() > 1e-12)
      throw ConfigError("rotation matrix is not orthogonal to 1e-12");
  }
}

std::vector<Mat> PerturbationSets::rotations_for(Index dim) const {
  validate(dim);
  if (rotations.empty()) return {Mat::Identity(dim, dim)};
  return rotations;
}

std::string PerturbationSets::summary() const {
  std::ostringstream os;
  os << "M=" << textfmt::from_list(scales) << " T=";
  if (rotations.empty()) os << "{I}";
  else os << rotations.size() << " rotations";
  return os.str();
}

std::vector<Mat> random_rotations(Index dim, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Mat> out;
  for (std::size_t k = 0; k < count; ++k) {
    Mat G(dim, dim);
    for (Index j = 0; j < dim; ++j)
      for (Index i = 0; i < dim; ++i) G(i, j) = normal(rng);
    Eigen::HouseholderQR<Mat> qr(G);
    Mat Q = qr.householderQ() * Mat::Identity(dim, dim);
    // Fix the column signs so that R has a positive diagonal.
    Mat R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Index j = 0; j < dim; ++j)
      if (R(j, j) < 0) Q.col(j) = -Q.col(j);
    out.push_back(std::move(Q));
  }
  return out;
}

// ---------------------------------------------------------------------------

double resistor_current(double v) { return std::expm1(kDiodeExponent * v) + v; }

NonlinearModel build_rc_ladder(Index n) {
  if (n < 2) throw ConfigError("rc ladder needs at least 2 nodes");
  NonlinearModel m;
  m.name = "rc-ladder";
  m.n = n;
  m.p = 1;
  m.q = 1;
  m.ladder = RcLadderInfo{n};
  // drift = -grad V:  node 1 loses g(v1) to ground and g(v1 - v2) downstream;
  // node k gains g(v_{k-1} - v_k) and loses g(v_k - v_{k+1}).
  m.drift = [n](double, const Vec& x) -> Vec {
    Vec dx(n);
    dx(0) = -resistor_current(x(0));
    for (Index k = 1; k < n; ++k) dx(k) = 0.0;
    for (Index k = 0; k + 1 < n; ++k) {
      const double i = resistor_current(x(k) - x(k + 1));
      dx(k) -= i;
      dx(k + 1) += i;
    }
    return dx;
  };
  Mat B = Mat::Zero(n, 1);
  B(0, 0) = 1.0;
  m.input_map = [B](double) { return B; };
  m.output_map = [](double, const Vec& x) -> Vec { return Vec::Constant(1, x(0)); };
  m.equilibrium = Vec::Zero(n);
  return m;
}

namespace {

double branch_energy(double v) {
  const double e = kDiodeExponent * v;
  if (e > kExponentLimit)
    throw ExponentOverflow("potential exponent " + std::to_string(e) + " exceeds " +
                           std::to_string(kExponentLimit));
  return std::exp(e) / kDiodeExponent - v + 0.5 * v * v;
}

}  // namespace

double potential(const RcLadderInfo& ladder, const Vec& x) {
  if (x.size() != ladder.nodes) throw ConfigError("potential: state has wrong dimension");
  double V = branch_energy(x(0));
  for (Index k = 0; k + 1 < ladder.nodes; ++k) V += branch_energy(x(k) - x(k + 1));
  return V;
}

Vec potential_gradient(const RcLadderInfo& ladder, const Vec& x) {
  return -build_rc_ladder(ladder.nodes).drift(0.0, x);
}

LTVModel random_stable_lti(Index n, std::uint64_t seed, Index p, Index q) {
  if (n < 1) throw ConfigError("random_stable_lti needs n >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> band(1.0, 1.5);
  std::normal_distribution<double> normal(0.0, 1.0);
  // A = -D + K with D diagonal in [1, 1.5] and K skew-symmetric: the field of values, hence
  // every eigenvalue, has real part in [-1.5, -1], and cond(e^{-A t}) <= e^{0.5 t}.
  Mat A = Mat::Zero(n, n);
  for (Index i = 0; i < n; ++i) A(i, i) = -band(rng);
  Mat G(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) G(i, j) = normal(rng);
  A += 0.5 * (G - G.transpose()) / std::sqrt(static_cast<double>(n));
  Mat B(n, p), C(q, n);
  for (Index j = 0; j < p; ++j)
    for (Index i = 0; i < n; ++i) B(i, j) = normal(rng);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < q; ++i) C(i, j) = normal(rng);
  return LTVModel::constant(A, B, C);
}

// ---------------------------------------------------------------------------

namespace {

Mat matrix_from(const textfmt::Document& doc, const std::string& key, Index rows, Index cols) {
  auto it = doc.find(key);
  if (it == doc.end()) throw ConfigError("missing key '" + key + "'");
  auto values = textfmt::to_list(key, it->second);
  if (static_cast<Index>(values.size()) != rows * cols)
    throw ConfigError("key '" + key + "' expects " + std::to_string(rows * cols) + " values");
  Mat m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = values[static_cast<std::size_t>(i * cols + j)];
  return m;
}

std::string list_from(const Mat& m) {
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(m.size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) values.push_back(m(i, j));
  return textfmt::from_list(values);
}

Index dim_from(const textfmt::Document& doc, const std::string& key) {
  auto it = doc.find(key);
  if (it == doc.end()) throw ConfigError("missing key '" + key + "'");
  auto v = textfmt::to_int(key, it->second);
  if (v < 1) throw ConfigError("key '" + key + "' must be positive");
  return static_cast<Index>(v);
}

void write_doc(const std::string& path, const textfmt::Document& doc) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open '" + path + "' for writing");
  textfmt::write(os, doc);
}

}  // namespace

LtiMatrices load_lti(const std::string& path) {
  auto doc = textfmt::parse_file(path);
  const Index n = dim_from(doc, "n"), p = dim_from(doc, "p"), q = dim_from(doc, "q");
  return {matrix_from(doc, "A", n, n), matrix_from(doc, "B", n, p), matrix_from(doc, "C", q, n)};
}

void save_lti(const std::string& path, const LtiMatrices& m) {
  textfmt::Document doc{{"n", std::to_string(m.A.rows())},
                        {"p", std::to_string(m.B.cols())},
                        {"q", std::to_string(m.C.rows())},
                        {"A", list_from(m.A)},
                        {"B", list_from(m.B)},
                        {"C", list_from(m.C)}};
  write_doc(path, doc);
}

BilinearModel load_bilinear(const std::string& path) {
  auto doc = textfmt::parse_file(path);
  const Index n = dim_from(doc, "n");
  BilinearModel m;
  m.A = matrix_from(doc, "A", n, n);
  m.N = matrix_from(doc, "N", n, n);
  m.B = matrix_from(doc, "B", n, 1);
  m.C = matrix_from(doc, "C", 1, n);
  if (auto it = doc.find("nilpotency_index"); it != doc.end())
    m.nilpotency_index = static_cast<Index>(textfmt::to_int("nilpotency_index", it->second));
  return m;
}

void save_bilinear(const std::string& path, const BilinearModel& m) {
  textfmt::Document doc{{"n", std::to_string(m.dim())},
                        {"p", "1"},
                        {"q", "1"},
                        {"A", list_from(m.A)},
                        {"N", list_from(m.N)},
                        {"B", list_from(m.B)},
                        {"C", list_from(m.C)},
                        {"nilpotency_index", std::to_string(m.nilpotency_index)}};
  write_doc(path, doc);
}

NonlinearModel model_preset(const std::string& name, Index nodes, std::uint64_t seed) {
  if (name == "rc-ladder") return build_rc_ladder(nodes);
  if (name == "random-lti") return random_stable_lti(nodes, seed).to_nonlinear("random-lti");
  throw ConfigError("unknown model preset '" + name + "'");
}

}  // namespace embalance
