// Phases, q-matrices, graded multi-indices, truncation windows and the
// x_n / y_n integer sequences. Everything here is an immutable value type.
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace qwold {

using cplx = std::complex<double>;
inline constexpr double kPi = 3.141592653589793238462643383279502884;

enum class ErrorCode {
  invalid_input = 2,
  unknown_fixture = 3,
  inconsistent_phase = 4,
  precondition = 5,
  not_converged = 6,
  rank_mismatch = 7,
};

struct Error : std::runtime_error {
  ErrorCode code;
  Error(ErrorCode c, const std::string& what) : std::runtime_error(what), code(c) {}
};

[[noreturn]] inline void fail(ErrorCode c, const std::string& what) { throw Error(c, what); }

/// A unimodular scalar. Rational rotations exp(2*pi*i*p/r) carry exact
/// integer-exponent arithmetic; raw angles fall back to floating point.
class Phase {
 public:
  Phase() : rational_(true), num_(0), den_(1), theta_(0.0) {}

  static Phase one() { return Phase(); }

  static Phase rotation(std::int64_t p, std::int64_t r) {
    if (r < 1) fail(ErrorCode::invalid_input, "phase order must be positive");
    Phase q;
    q.rational_ = true;
    q.den_ = r;
    q.num_ = ((p % r) + r) % r;
    q.reduce();
    return q;
  }

  static Phase radians(double theta) {
    Phase q;
    q.rational_ = false;
    q.theta_ = theta;
    return q;
  }

  bool rational() const { return rational_; }
  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  /// Multiplicative order (rational phases only; the stored form is reduced).
  std::int64_t order() const { return den_; }
  double angle() const { return rational_ ? 2.0 * kPi * double(num_) / double(den_) : theta_; }

  cplx value() const {
    if (rational_) {
      // quarter turns are exact; everything else goes through libm once
      if (num_ == 0) return {1.0, 0.0};
      if (2 * num_ == den_) return {-1.0, 0.0};
      if (4 * num_ == den_) return {0.0, 1.0};
      if (4 * num_ == 3 * den_) return {0.0, -1.0};
      return std::polar(1.0, 2.0 * kPi * double(num_) / double(den_));
    }
    return std::polar(1.0, theta_);
  }

  Phase operator*(const Phase& o) const {
    if (rational_ && o.rational_) {
      std::int64_t r = std::lcm(den_, o.den_);
      std::int64_t p = num_ * (r / den_) + o.num_ * (r / o.den_);
      return rotation(p, r);
    }
    return radians(angle() + o.angle());
  }

  Phase conj() const {
    if (rational_) return rotation(-num_, den_);
    return radians(-theta_);
  }

  Phase pow(std::int64_t k) const {
    if (rational_) {
      __int128 p = static_cast<__int128>(num_) * k;
      std::int64_t pm = static_cast<std::int64_t>(((p % den_) + den_) % den_);
      return rotation(pm, den_);
    }
    return radians(double(k) * theta_);
  }

  /// Exact comparison: reduced exponents for rationals, bit-equal angles otherwise.
  bool operator==(const Phase& o) const {
    if (rational_ != o.rational_) return false;
    if (rational_) return num_ == o.num_ && den_ == o.den_;
    return theta_ == o.theta_;
  }
  bool operator!=(const Phase& o) const { return !(*this == o); }

  bool approx(const Phase& o, double tol) const { return std::abs(value() - o.value()) <= tol; }

  /// Canonical order used to canonicalize coefficient contributions.
  bool before(const Phase& o) const {
    if (rational_ != o.rational_) return rational_;
    if (rational_) return den_ != o.den_ ? den_ < o.den_ : num_ < o.num_;
    return theta_ < o.theta_;
  }

  std::string str() const {
    if (rational_) return std::to_string(num_) + "/" + std::to_string(den_);
    return "rad:" + std::to_string(theta_);
  }

  /// Accepts "p/r" and "rad:theta".
  static Phase parse(const std::string& text) {
    if (text.rfind("rad:", 0) == 0) {
      try {
        return radians(std::stod(text.substr(4)));
      } catch (const std::exception&) {
        fail(ErrorCode::invalid_input, "bad phase angle: " + text);
      }
    }
    auto slash = text.find('/');
    if (slash == std::string::npos)
      fail(ErrorCode::invalid_input, "bad phase literal (want p/r or rad:theta): " + text);
    try {
      std::int64_t p = std::stoll(text.substr(0, slash));
      std::int64_t r = std::stoll(text.substr(slash + 1));
      return rotation(p, r);
    } catch (const Error&) {
      throw;
    } catch (const std::exception&) {
      fail(ErrorCode::invalid_input, "bad phase literal: " + text);
    }
  }

 private:
  void reduce() {
    std::int64_t g = std::gcd(num_, den_);
    if (g > 1) {
      num_ /= g;
      den_ /= g;
    }
  }

  bool rational_;
  std::int64_t num_, den_;
  double theta_;
};

inline Phase phase_pow(const Phase& q, std::int64_t k) { return q.pow(k); }

/// x_1 = 0, x_n = x_{n-1} + n - 1 and y_1 = 1, y_n = y_{n-1} + n.
inline std::pair<std::int64_t, std::int64_t> xy_sequences(std::int64_t n) {
  if (n < 1) fail(ErrorCode::invalid_input, "xy_sequences needs n >= 1");
  std::int64_t x = 0, y = 1;
  for (std::int64_t k = 2; k <= n; ++k) {
    x += k - 1;
    y += k;
  }
  return {x, y};
}

/// The commutation data of a d-tuple: q(i,i) = 1 and q(i,j) = conj(q(j,i)).
/// Indices are 0-based.
class QMatrix {
 public:
  explicit QMatrix(int d) : d_(d), entries_(std::size_t(d) * d, Phase::one()) {
    if (d < 1) fail(ErrorCode::invalid_input, "QMatrix dimension must be >= 1");
  }

  /// The Eq.-style power convention q(i,j) = q^(j-i).
  static QMatrix power_convention(int d, const Phase& q) {
    QMatrix m(d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) m.set(i, j, q.pow(j - i));
    return m;
  }

  static QMatrix pair(const Phase& q) {
    QMatrix m(2);
    m.set(0, 1, q);
    m.set(1, 0, q.conj());
    return m;
  }

  int dim() const { return d_; }
  const Phase& at(int i, int j) const { return entries_[std::size_t(i) * d_ + j]; }
  void set(int i, int j, const Phase& q) { entries_[std::size_t(i) * d_ + j] = q; }

  bool valid(double tol = 1e-14) const {
    for (int i = 0; i < d_; ++i) {
      if (at(i, i).rational()) {
        if (at(i, i) != Phase::one()) return false;
      } else if (std::abs(at(i, i).value() - cplx(1, 0)) > tol) {
        return false;
      }
      for (int j = 0; j < d_; ++j) {
        const Phase &a = at(i, j), &b = at(j, i);
        if (a.rational() && b.rational()) {
          if (a != b.conj()) return false;
        } else if (std::abs(a.value() - std::conj(b.value())) > tol) {
          return false;
        }
      }
    }
    return true;
  }

  void require_valid() const {
    if (!valid()) fail(ErrorCode::invalid_input, "QMatrix violates q(i,i)=1 / q(i,j)=conj(q(j,i))");
  }

 private:
  int d_;
  std::vector<Phase> entries_;
};

/// q_i = prod_j q(i,j) (0-based i).
inline Phase qi_product(const QMatrix& q, int i) {
  q.require_valid();
  if (i < 0 || i >= q.dim()) fail(ErrorCode::invalid_input, "qi_product index out of range");
  Phase p = Phase::one();
  for (int j = 0; j < q.dim(); ++j) p = p * q.at(i, j);
  return p;
}

/// Monomial exponent vector z_1^{n_1} ... z_d^{n_d}. Bilateral spaces allow
/// negative exponents.
struct GradedIndex {
  std::vector<int> exps;

  GradedIndex() = default;
  explicit GradedIndex(std::vector<int> e) : exps(std::move(e)) {}
  static GradedIndex zero(int d) { return GradedIndex(std::vector<int>(d, 0)); }

  int dim() const { return int(exps.size()); }
  int total() const {
    int t = 0;
    for (int e : exps) t += e;
    return t;
  }
  bool nonnegative() const {
    for (int e : exps)
      if (e < 0) return false;
    return true;
  }

  bool operator==(const GradedIndex& o) const { return exps == o.exps; }
  /// Graded-lexicographic order: total degree first, then lex on exponents.
  bool operator<(const GradedIndex& o) const {
    int ta = total(), tb = o.total();
    if (ta != tb) return ta < tb;
    return exps < o.exps;
  }
};

/// Per-variable cap N with a band allowance b; vectors of total degree
/// < N - b pass through band-b words without truncation loss.
struct TruncationWindow {
  int cap = 0;   // basis exponents live in [0, cap)
  int band = 0;  // max degree raise/lower of the word under test

  TruncationWindow() = default;
  TruncationWindow(int n, int b) : cap(n), band(b) {
    if (n < 1 || b < 0) fail(ErrorCode::invalid_input, "bad truncation window");
  }

  int safe_cap() const { return cap - band; }
  bool usable() const { return safe_cap() >= 1; }
  bool safe_degree(int total) const { return total < safe_cap(); }
};

}  // namespace qwold
