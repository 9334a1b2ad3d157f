#include "folqr/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

namespace folqr::model {
namespace {

// ---------------------------------------------------------------------------
// Transfer-function text parser
// ---------------------------------------------------------------------------

class Scanner {
 public:
  explicit Scanner(const std::string& text) : text_(text) {}

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool eof() {
    skip_ws();
    return pos_ >= text_.size();
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c, const char* what) {
    if (!accept(c)) throw ParseError(std::string("expected ") + what, pos_);
  }

  // Unsigned decimal/scientific number. The sign is handled by the term list.
  double number() {
    skip_ws();
    const std::size_t start = pos_;
    std::size_t p = pos_;
    auto digits = [&] {
      std::size_t n = 0;
      while (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) ++p, ++n;
      return n;
    };
    std::size_t int_digits = digits();
    std::size_t frac_digits = 0;
    if (p < text_.size() && text_[p] == '.') {
      ++p;
      frac_digits = digits();
    }
    if (int_digits + frac_digits == 0) throw ParseError("expected a number", start);
    if (p < text_.size() && (text_[p] == 'e' || text_[p] == 'E')) {
      std::size_t q = p + 1;
      if (q < text_.size() && (text_[q] == '+' || text_[q] == '-')) ++q;
      std::size_t exp_start = q;
      while (q < text_.size() && std::isdigit(static_cast<unsigned char>(text_[q]))) ++q;
      if (q > exp_start) p = q;
    }
    const double value = std::stod(text_.substr(start, p - start));
    pos_ = p;
    return value;
  }

  std::size_t position() const { return pos_; }

 private:
  const std::string& text_;
  std::size_t pos_ = 0;
};

// term := [coeff ['*']] ['s' ['^' ['('] signed-number [')']]]
Term parse_term(Scanner& sc, double sign) {
  Term t{sign, 0.0};
  bool have_coeff = false;
  char c = sc.peek();
  if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
    t.coefficient = sign * sc.number();
    have_coeff = true;
    sc.accept('*');
  }
  if (sc.peek() == 's' || sc.peek() == 'S') {
    sc.accept(sc.peek());
    t.exponent = 1.0;
    if (sc.accept('^')) {
      const bool paren = sc.accept('(');
      double esign = 1.0;
      if (sc.accept('-')) esign = -1.0;
      t.exponent = esign * sc.number();
      if (paren) sc.expect(')', "')'");
    }
  } else if (!have_coeff) {
    throw ParseError("expected a coefficient or 's'", sc.position());
  }
  return t;
}

// poly := ['('] term (('+'|'-') term)* [')']
std::vector<Term> parse_poly(Scanner& sc) {
  const bool paren = sc.accept('(');
  std::vector<Term> terms;
  double sign = 1.0;
  if (sc.accept('-')) sign = -1.0;
  terms.push_back(parse_term(sc, sign));
  for (;;) {
    if (sc.accept('+')) {
      terms.push_back(parse_term(sc, 1.0));
    } else if (sc.accept('-')) {
      terms.push_back(parse_term(sc, -1.0));
    } else {
      break;
    }
  }
  if (paren) sc.expect(')', "')'");
  return terms;
}

// Sorts descending by exponent, rejects duplicates, drops zero coefficients.
std::vector<Term> canonicalize(std::vector<Term> terms, std::size_t error_pos) {
  std::sort(terms.begin(), terms.end(),
            [](const Term& a, const Term& b) { return a.exponent > b.exponent; });
  for (std::size_t i = 1; i < terms.size(); ++i) {
    if (terms[i].exponent == terms[i - 1].exponent) {
      throw std::invalid_argument("duplicate exponent " + std::to_string(terms[i].exponent) +
                                  " in polynomial ending at position " + std::to_string(error_pos));
    }
  }
  terms.erase(std::remove_if(terms.begin(), terms.end(),
                             [](const Term& t) { return t.coefficient == 0.0; }),
              terms.end());
  return terms;
}

}  // namespace

void FractionalTransferFunction::validate() const {
  if (denominator.empty()) throw std::invalid_argument("empty denominator");
  auto check_order = [](const std::vector<Term>& terms, const char* side) {
    for (std::size_t i = 0; i < terms.size(); ++i) {
      if (terms[i].exponent < 0.0)
        throw std::invalid_argument(std::string(side) + " exponent below zero");
      if (i > 0 && terms[i].exponent >= terms[i - 1].exponent)
        throw std::invalid_argument(std::string(side) +
                                    " exponents not strictly decreasing or duplicated");
    }
  };
  check_order(numerator, "numerator");
  check_order(denominator, "denominator");
  if (denominator.front().coefficient == 0.0)
    throw std::invalid_argument("leading denominator coefficient is zero");
  if (numerator.empty()) throw std::invalid_argument("empty numerator");
  if (numerator_degree() >= denominator_degree())
    throw std::invalid_argument("transfer function is not strictly proper");
}

double FractionalTransferFunction::numerator_degree() const {
  return numerator.empty() ? 0.0 : numerator.front().exponent;
}

double FractionalTransferFunction::denominator_degree() const {
  return denominator.empty() ? 0.0 : denominator.front().exponent;
}

std::complex<double> FractionalTransferFunction::evaluate(std::complex<double> s) const {
  auto poly = [&](const std::vector<Term>& terms) {
    std::complex<double> acc = 0.0;
    for (const Term& t : terms) {
      acc += t.exponent == 0.0 ? std::complex<double>(t.coefficient)
                               : t.coefficient * std::pow(s, t.exponent);
    }
    return acc;
  };
  return poly(numerator) / poly(denominator);
}

FractionalTransferFunction parse_fractional_tf(const std::string& text) {
  Scanner sc(text);
  FractionalTransferFunction tf;
  tf.numerator = parse_poly(sc);
  sc.expect('/', "'/' between numerator and denominator");
  tf.denominator = parse_poly(sc);
  if (!sc.eof()) throw ParseError("unexpected trailing input", sc.position());
  tf.numerator = canonicalize(std::move(tf.numerator), sc.position());
  tf.denominator = canonicalize(std::move(tf.denominator), sc.position());
  tf.validate();
  return tf;
}

std::optional<Rational> commensurate_base_order(const std::vector<double>& exponents,
                                                std::int64_t max_denominator,
                                                double tolerance) {
  if (max_denominator < 1) throw std::invalid_argument("max_denominator must be >= 1");
  for (double e : exponents)
    if (e <= 0.0) throw std::invalid_argument("exponents must be positive");
  std::optional<Rational> best;
  for (std::int64_t b = 1; b <= max_denominator; ++b) {
    std::int64_t g = 0;
    bool ok = true;
    for (double e : exponents) {
      const double scaled = e * static_cast<double>(b);
      const std::int64_t a = std::llround(scaled);
      if (a < 1 || std::abs(scaled - static_cast<double>(a)) > tolerance * static_cast<double>(b)) {
        ok = false;
        break;
      }
      g = std::gcd(g, a);
    }
    if (!ok) continue;
    Rational q(g, b);
    if (!best || q.value() > best->value()) best = q;
  }
  return best;
}

namespace {

// Maps an exponent onto a ladder rung index; returns -1 when it does not land
// on any rung within tolerance.
int rung_index(double exponent, const std::vector<double>& cumulative, double tol = 1e-9) {
  for (std::size_t p = 0; p < cumulative.size(); ++p) {
    if (std::abs(exponent - cumulative[p]) <= tol) return static_cast<int>(p);
  }
  return -1;
}

}  // namespace

PseudoStateSpace to_pseudo_state_space(const FractionalTransferFunction& tf,
                                       CompanionForm form, bool force_chain) {
  tf.validate();
  const double lead = tf.denominator.front().coefficient;
  const double top_exponent = tf.denominator.front().exponent;

  // All positive exponents decide whether a commensurate base exists.
  std::vector<double> positive;
  for (const Term& t : tf.denominator)
    if (t.exponent > 0.0) positive.push_back(t.exponent);
  for (const Term& t : tf.numerator)
    if (t.exponent > 0.0) positive.push_back(t.exponent);

  std::vector<double> orders;          // per-state n_i, chain (ladder) order
  std::vector<double> cumulative;      // cumulative order of ladder rung p
  std::optional<Rational> base;

  if (!force_chain) {
    if (auto q = commensurate_base_order(positive)) {
      // GL stepping requires orders <= 1; shrink an integer base accordingly
      // (q/k is still a common base for any integer k >= 1).
      Rational use = *q;
      if (use.value() > 1.0) {
        const auto k = static_cast<std::int64_t>(std::ceil(use.value()));
        use = Rational(use.num, use.den * k);
      }
      const double qv = use.value();
      const double n_states = top_exponent / qv;
      const auto n = static_cast<Eigen::Index>(std::llround(n_states));
      if (n >= 1 && std::abs(n_states - static_cast<double>(n)) <= 1e-9 * n_states) {
        base = use;
        orders.assign(static_cast<std::size_t>(n), qv);
        cumulative.resize(static_cast<std::size_t>(n));
        for (Eigen::Index p = 0; p < n; ++p)
          cumulative[static_cast<std::size_t>(p)] = static_cast<double>(p) * qv;
      }
    }
  }

  if (orders.empty()) {
    // Implicit-order chain over the positive denominator exponents.
    std::vector<double> m;
    for (const Term& t : tf.denominator)
      if (t.exponent > 0.0) m.push_back(t.exponent);
    std::sort(m.begin(), m.end());
    double prev = 0.0;
    cumulative.push_back(0.0);
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double n_i = m[i] - prev;
      if (n_i <= 0.0 || n_i > 1.0 + 1e-12)
        throw std::invalid_argument("implicit order " + std::to_string(n_i) +
                                    " outside (0, 1]; no automatic split is performed");
      orders.push_back(std::min(n_i, 1.0));
      if (i + 1 < m.size()) cumulative.push_back(m[i]);
      prev = m[i];
    }
    base = commensurate_base_order(orders);
  }

  const auto n = static_cast<Eigen::Index>(orders.size());

  // Rung-indexed coefficient vectors (monic normalization throughout).
  Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
  for (const Term& t : tf.denominator) {
    if (t.exponent == top_exponent) continue;
    const int p = rung_index(t.exponent, cumulative);
    if (p < 0)
      throw std::invalid_argument("denominator exponent " + std::to_string(t.exponent) +
                                  " not representable on the state ladder");
    a[p] = t.coefficient / lead;
  }
  Eigen::RowVectorXd c = Eigen::RowVectorXd::Zero(n);
  for (const Term& t : tf.numerator) {
    const int p = rung_index(t.exponent, cumulative);
    if (p < 0)
      throw std::invalid_argument("numerator exponent " + std::to_string(t.exponent) +
                                  " not representable on the state ladder");
    c[p] = t.coefficient / lead;
  }

  PseudoStateSpace ss;
  ss.A = Eigen::MatrixXd::Zero(n, n);
  ss.B = Eigen::MatrixXd::Zero(n, 1);
  ss.C = Eigen::MatrixXd::Zero(1, n);
  ss.base_order = base;
  if (form == CompanionForm::bottom_row) {
    for (Eigen::Index i = 0; i + 1 < n; ++i) ss.A(i, i + 1) = 1.0;
    ss.A.row(n - 1) = -a.transpose();
    ss.B(n - 1, 0) = 1.0;
    ss.C.row(0) = c;
    ss.orders = orders;
  } else {
    for (Eigen::Index i = 0; i + 1 < n; ++i) ss.A(i + 1, i) = 1.0;
    for (Eigen::Index j = 0; j < n; ++j) ss.A(0, j) = -a[n - 1 - j];
    ss.B(0, 0) = 1.0;
    for (Eigen::Index j = 0; j < n; ++j) ss.C(0, j) = c[n - 1 - j];
    ss.orders.assign(orders.rbegin(), orders.rend());
  }
  return ss;
}

PseudoStateSpace preset(const std::string& name) {
  PseudoStateSpace ss;
  if (name == "example1_eq7") {
    ss.A = Eigen::MatrixXd{{0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}, {-0.0005121, -0.05331, 0.0}};
    ss.B = Eigen::MatrixXd{{0.0}, {0.0}, {1.0 / 107.2882}};
    ss.C = Eigen::MatrixXd{{1.0, 0.0, 0.0}};
    ss.orders = {0.93529, 0.87101, 0.93529};
    ss.base_order = commensurate_base_order(ss.orders);  // none within the default bound
    return ss;
  }
  if (name == "example2_eq9") {
    ss.A = Eigen::MatrixXd::Zero(6, 6);
    ss.A(0, 2) = -0.2;
    ss.A(0, 3) = 0.05;
    ss.A(0, 5) = -0.01;
    for (Eigen::Index i = 1; i < 6; ++i) ss.A(i, i - 1) = 1.0;
    ss.B = Eigen::MatrixXd::Zero(6, 1);
    ss.B(0, 0) = 1.0;
    ss.C = Eigen::MatrixXd{{0.0, 0.0, 0.0, 0.0, 0.01, 0.05}};
    ss.orders.assign(6, 0.32);
    ss.base_order = Rational(8, 25);
    return ss;
  }
  throw std::invalid_argument("unknown preset '" + name + "'");
}

Eigen::MatrixXcd resolvent_matrix(const PseudoStateSpace& ss, double omega,
                                  ResolventMode mode) {
  const Eigen::Index n = ss.state_count();
  Eigen::MatrixXcd M = -ss.A.cast<std::complex<double>>();
  const std::complex<double> jw(0.0, omega);
  if (mode == ResolventMode::literal) {
    for (Eigen::Index i = 0; i < n; ++i) M(i, i) += jw;
  } else {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double ni = ss.orders[static_cast<std::size_t>(i)];
      M(i, i) += omega == 0.0 ? std::complex<double>(0.0) : std::pow(jw, ni);
    }
  }
  return M;
}

Eigen::MatrixXcd resolvent_solve(const PseudoStateSpace& ss, double omega,
                                 ResolventMode mode, const Eigen::MatrixXcd& rhs) {
  const Eigen::MatrixXcd M = resolvent_matrix(ss, omega, mode);
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(M);
  if (!lu.isInvertible())
    throw SingularMatrixError("singular resolvent at omega = " + std::to_string(omega));
  return lu.solve(rhs);
}

Eigen::MatrixXcd frequency_response(const PseudoStateSpace& ss, double omega,
                                    ResolventMode mode) {
  if (!(omega >= 0.0) || !std::isfinite(omega))
    throw std::invalid_argument("omega must be finite and non-negative");
  return ss.C.cast<std::complex<double>>() *
         resolvent_solve(ss, omega, mode, ss.B.cast<std::complex<double>>());
}

}  // namespace folqr::model
