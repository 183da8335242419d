// Lazy graded-operator algebra on (H^2(D^d) (x) F) (+) K_u, applied exactly to
// finitely supported vectors, plus densification to truncated matrices.
//
// Operators are finite sums of scaled atom words. Atoms act on the full direct
// sum; atoms of the Hardy summand annihilate K_u vectors and vice versa, so a
// block-diagonal model is simply a sum of Hardy terms and a K_u term.
#pragma once

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qwold/coef.hpp"

namespace qwold {

struct SpaceSignature {
  int d = 1;
  int fiber_dim = 1;
  int ku_dim = 0;
  bool bilateral = false;  // Laurent exponents (d must be 1)

  SpaceSignature() = default;
  SpaceSignature(int d_, int fiber, int ku, bool bilat = false)
      : d(d_), fiber_dim(fiber), ku_dim(ku), bilateral(bilat) {
    if (d < 0 || ku < 0 || (d >= 1 && fiber < 1) || (d == 0 && fiber != 0))
      fail(ErrorCode::invalid_input, "bad space signature");
    if (bilateral && d != 1) fail(ErrorCode::invalid_input, "bilateral spaces are one-variable");
  }

  bool operator==(const SpaceSignature& o) const {
    return d == o.d && fiber_dim == o.fiber_dim && ku_dim == o.ku_dim && bilateral == o.bilateral;
  }
  bool operator!=(const SpaceSignature& o) const { return !(*this == o); }
  void require_match(const SpaceSignature& o) const {
    if (*this != o) fail(ErrorCode::precondition, "space signature mismatch");
  }
};

/// Label of one basis vector: z^mono (x) e_fiber, or the ku-th K_u slot.
struct BasisKey {
  GradedIndex mono;
  int fiber = 0;
  int ku = -1;

  static BasisKey hardy(GradedIndex m, int f) {
    BasisKey k;
    k.mono = std::move(m);
    k.fiber = f;
    return k;
  }
  static BasisKey ku_slot(int j) {
    BasisKey k;
    k.ku = j;
    return k;
  }

  bool is_ku() const { return ku >= 0; }
  int degree() const { return is_ku() ? 0 : mono.total(); }

  bool operator==(const BasisKey& o) const {
    return ku == o.ku && (is_ku() || (mono == o.mono && fiber == o.fiber));
  }
  bool operator<(const BasisKey& o) const {
    if (is_ku() != o.is_ku()) return !is_ku();
    if (is_ku()) return ku < o.ku;
    if (!(mono == o.mono)) return mono < o.mono;
    return fiber < o.fiber;
  }

  std::string str() const {
    if (is_ku()) return "ku[" + std::to_string(ku) + "]";
    std::string s = "z[";
    for (int i = 0; i < mono.dim(); ++i) s += (i ? "," : "") + std::to_string(mono.exps[i]);
    return s + "]*f" + std::to_string(fiber);
  }
};

using Vec = std::map<BasisKey, Coef>;

/// <u, v>, linear in the first slot and conjugate-linear in the second, as an
/// exact coefficient.
inline Coef inner_product(const Vec& u, const Vec& v) {
  Coef r;
  auto iu = u.begin();
  auto iv = v.begin();
  while (iu != u.end() && iv != v.end()) {
    if (iu->first < iv->first) {
      ++iu;
    } else if (iv->first < iu->first) {
      ++iv;
    } else {
      r.add(iu->second * iv->second.conj());
      ++iu;
      ++iv;
    }
  }
  return r;
}

inline double norm2(const Vec& v) {
  double s = 0.0;
  for (const auto& [k, c] : v) s += std::norm(c.value());
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// Structured maps: partial phase-permutations, closed under product and
// adjoint, exact in exponent arithmetic. Projections, phase-permutation
// unitaries, clocks and cyclic shifts all live here.
// ---------------------------------------------------------------------------
class StructuredMap {
 public:
  StructuredMap(int rows, int cols) : rows_(rows), cols_(cols), row_(cols, -1), phase_(cols) {}

  static StructuredMap identity(int n) {
    StructuredMap m(n, n);
    for (int j = 0; j < n; ++j) m.set(j, j, Phase::one());
    return m;
  }
  static StructuredMap diag(std::vector<Phase> phases) {
    StructuredMap m(int(phases.size()), int(phases.size()));
    for (int j = 0; j < int(phases.size()); ++j) m.set(j, j, phases[j]);
    return m;
  }
  /// Clock: e_k -> q^k e_k.
  static StructuredMap clock(int n, const Phase& q) {
    std::vector<Phase> p;
    for (int k = 0; k < n; ++k) p.push_back(q.pow(k));
    return diag(std::move(p));
  }
  /// Cyclic shift: e_k -> e_{k+1 mod n}.
  static StructuredMap cyclic_shift(int n) {
    StructuredMap m(n, n);
    for (int k = 0; k < n; ++k) m.set((k + 1) % n, k, Phase::one());
    return m;
  }
  static StructuredMap projection(const std::vector<bool>& keep) {
    StructuredMap m(int(keep.size()), int(keep.size()));
    for (int j = 0; j < int(keep.size()); ++j)
      if (keep[j]) m.set(j, j, Phase::one());
    return m;
  }
  /// e_j -> phase_j e_{perm[j]}.
  static StructuredMap phase_permutation(const std::vector<int>& perm, const std::vector<Phase>& phases) {
    StructuredMap m(int(perm.size()), int(perm.size()));
    for (int j = 0; j < int(perm.size()); ++j) m.set(perm[j], j, phases[j]);
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  void set(int row, int col, const Phase& p) {
    for (int j = 0; j < cols_; ++j)
      if (row_[j] == row) fail(ErrorCode::invalid_input, "structured map row used twice");
    row_[col] = row;
    phase_[col] = p;
  }

  std::optional<std::pair<int, Phase>> image(int col) const {
    if (row_[col] < 0) return std::nullopt;
    return std::make_pair(row_[col], phase_[col]);
  }

  /// this o inner (apply inner first).
  StructuredMap compose(const StructuredMap& inner) const {
    StructuredMap r(rows_, inner.cols_);
    for (int j = 0; j < inner.cols_; ++j) {
      auto mid = inner.image(j);
      if (!mid) continue;
      auto out = image(mid->first);
      if (!out) continue;
      r.row_[j] = out->first;
      r.phase_[j] = out->second * mid->second;
    }
    return r;
  }

  StructuredMap adjoint() const {
    StructuredMap r(cols_, rows_);
    for (int j = 0; j < cols_; ++j)
      if (row_[j] >= 0) {
        r.row_[row_[j]] = j;
        r.phase_[row_[j]] = phase_[j].conj();
      }
    return r;
  }

  bool is_unitary() const {
    if (rows_ != cols_) return false;
    for (int j = 0; j < cols_; ++j)
      if (row_[j] < 0) return false;
    return true;
  }

  Eigen::MatrixXcd dense() const {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(rows_, cols_);
    for (int j = 0; j < cols_; ++j)
      if (row_[j] >= 0) m(row_[j], j) = phase_[j].value();
    return m;
  }

 private:
  int rows_, cols_;
  std::vector<int> row_;
  std::vector<Phase> phase_;
};

/// A fiber / K_u block: structured (exact) or dense (numeric).
class FiberMatrix {
 public:
  FiberMatrix(StructuredMap s) : structured_(std::move(s)) {}             // NOLINT
  FiberMatrix(Eigen::MatrixXcd m) : dense_(std::move(m)) {}               // NOLINT

  bool structured() const { return structured_.has_value(); }
  const StructuredMap& as_structured() const { return *structured_; }
  int rows() const { return structured_ ? structured_->rows() : int(dense_->rows()); }
  int cols() const { return structured_ ? structured_->cols() : int(dense_->cols()); }

  FiberMatrix adjoint() const {
    if (structured_) return FiberMatrix(structured_->adjoint());
    return FiberMatrix(Eigen::MatrixXcd(dense_->adjoint()));
  }
  FiberMatrix compose(const FiberMatrix& inner) const {
    if (structured_ && inner.structured_) return FiberMatrix(structured_->compose(*inner.structured_));
    return FiberMatrix(Eigen::MatrixXcd(dense() * inner.dense()));
  }
  Eigen::MatrixXcd dense() const { return structured_ ? structured_->dense() : *dense_; }

 private:
  std::optional<StructuredMap> structured_;
  std::optional<Eigen::MatrixXcd> dense_;
};

using FiberMatrixPtr = std::shared_ptr<const FiberMatrix>;

inline FiberMatrixPtr make_fiber(StructuredMap s) { return std::make_shared<FiberMatrix>(std::move(s)); }
inline FiberMatrixPtr make_fiber(Eigen::MatrixXcd m) { return std::make_shared<FiberMatrix>(std::move(m)); }

// ---------------------------------------------------------------------------
// Atoms and lazy operators
// ---------------------------------------------------------------------------
struct Atom {
  enum class Kind { shift, coshift, rot, rot_var, fiber, ku, hardy_id, ku_id };

  Kind kind = Kind::hardy_id;
  int var = 0;      // shift / coshift / rot_var
  Phase phase;      // rot / rot_var
  FiberMatrixPtr mat;  // fiber / ku

  static Atom shift(int j) { return {Kind::shift, j, Phase::one(), nullptr}; }
  static Atom coshift(int j) { return {Kind::coshift, j, Phase::one(), nullptr}; }
  static Atom rot(const Phase& c) { return {Kind::rot, 0, c, nullptr}; }
  static Atom rot_var(int j, const Phase& c) { return {Kind::rot_var, j, c, nullptr}; }
  static Atom fiber(FiberMatrixPtr m) { return {Kind::fiber, 0, Phase::one(), std::move(m)}; }
  static Atom ku(FiberMatrixPtr m) { return {Kind::ku, 0, Phase::one(), std::move(m)}; }
  static Atom hardy_id() { return {Kind::hardy_id, 0, Phase::one(), nullptr}; }
  static Atom ku_id() { return {Kind::ku_id, 0, Phase::one(), nullptr}; }

  Atom adjoint() const {
    switch (kind) {
      case Kind::shift:
        return coshift(var);
      case Kind::coshift:
        return shift(var);
      case Kind::rot:
        return rot(phase.conj());
      case Kind::rot_var:
        return rot_var(var, phase.conj());
      case Kind::fiber:
        return fiber(std::make_shared<FiberMatrix>(mat->adjoint()));
      case Kind::ku:
        return ku(std::make_shared<FiberMatrix>(mat->adjoint()));
      default:
        return *this;
    }
  }

  int band() const { return kind == Kind::shift || kind == Kind::coshift ? 1 : 0; }
};

struct OpTerm {
  Phase phase;
  cplx factor = cplx(1.0, 0.0);
  std::vector<Atom> atoms;  // word, leftmost applies last
};

class LazyOperator {
 public:
  explicit LazyOperator(SpaceSignature sig) : sig_(sig) {}

  static LazyOperator zero(const SpaceSignature& sig) { return LazyOperator(sig); }
  static LazyOperator word(const SpaceSignature& sig, std::vector<Atom> atoms,
                           Phase phase = Phase::one(), cplx factor = cplx(1.0, 0.0)) {
    LazyOperator t(sig);
    t.terms_.push_back(OpTerm{phase, factor, std::move(atoms)});
    return t;
  }
  static LazyOperator hardy_identity(const SpaceSignature& sig) { return word(sig, {Atom::hardy_id()}); }
  static LazyOperator ku_identity(const SpaceSignature& sig) { return word(sig, {Atom::ku_id()}); }
  static LazyOperator identity(const SpaceSignature& sig) {
    LazyOperator t = hardy_identity(sig);
    if (sig.ku_dim > 0) t.terms_.push_back(OpTerm{Phase::one(), cplx(1.0, 0.0), {Atom::ku_id()}});
    return t;
  }

  const SpaceSignature& signature() const { return sig_; }
  const std::vector<OpTerm>& terms() const { return terms_; }

  int band() const {
    int b = 0;
    for (const auto& t : terms_) {
      int tb = 0;
      for (const auto& a : t.atoms) tb += a.band();
      b = std::max(b, tb);
    }
    return b;
  }

  Vec apply(const BasisKey& key) const {
    Vec out;
    apply_into(key, Coef::one(), out);
    return out;
  }

  Vec apply(const Vec& v) const {
    Vec out;
    for (const auto& [key, coef] : v) apply_into(key, coef, out);
    prune(out);
    return out;
  }

  LazyOperator compose(const LazyOperator& rhs) const {
    sig_.require_match(rhs.sig_);
    LazyOperator r(sig_);
    for (const auto& a : terms_)
      for (const auto& b : rhs.terms_) {
        OpTerm t;
        t.phase = a.phase * b.phase;
        t.factor = a.factor * b.factor;
        t.atoms = a.atoms;
        t.atoms.insert(t.atoms.end(), b.atoms.begin(), b.atoms.end());
        r.terms_.push_back(std::move(t));
      }
    return r;
  }

  LazyOperator add(const LazyOperator& rhs) const {
    sig_.require_match(rhs.sig_);
    LazyOperator r = *this;
    r.terms_.insert(r.terms_.end(), rhs.terms_.begin(), rhs.terms_.end());
    return r;
  }

  LazyOperator sub(const LazyOperator& rhs) const { return add(rhs.scale(cplx(-1.0, 0.0))); }

  LazyOperator scale(const Phase& p) const {
    LazyOperator r = *this;
    for (auto& t : r.terms_) t.phase = t.phase * p;
    return r;
  }
  LazyOperator scale(cplx f) const {
    LazyOperator r = *this;
    for (auto& t : r.terms_) t.factor *= f;
    return r;
  }

  LazyOperator adjoint() const {
    LazyOperator r(sig_);
    for (const auto& t : terms_) {
      OpTerm s;
      s.phase = t.phase.conj();
      s.factor = std::conj(t.factor);
      s.atoms.reserve(t.atoms.size());
      for (auto it = t.atoms.rbegin(); it != t.atoms.rend(); ++it) s.atoms.push_back(it->adjoint());
      r.terms_.push_back(std::move(s));
    }
    return r;
  }

  LazyOperator pow(int n) const {
    LazyOperator r = identity(sig_);
    for (int k = 0; k < n; ++k) r = compose(r);
    return r;
  }

 private:
  struct Path {
    BasisKey key;
    Phase phase;
    cplx factor;
  };

  void apply_into(const BasisKey& key, const Coef& coef, Vec& out) const {
    for (const auto& term : terms_) {
      std::vector<Path> paths{Path{key, term.phase, term.factor}};
      for (auto it = term.atoms.rbegin(); it != term.atoms.rend() && !paths.empty(); ++it)
        paths = step(*it, std::move(paths));
      for (const auto& p : paths) out[p.key].add_product(coef, p.phase, p.factor);
    }
  }

  std::vector<Path> step(const Atom& a, std::vector<Path> in) const {
    std::vector<Path> out;
    out.reserve(in.size());
    for (auto& p : in) {
      const bool on_ku = p.key.is_ku();
      switch (a.kind) {
        case Atom::Kind::shift:
          if (on_ku) break;
          p.key.mono.exps[a.var] += 1;
          out.push_back(std::move(p));
          break;
        case Atom::Kind::coshift:
          if (on_ku) break;
          if (!sig_.bilateral && p.key.mono.exps[a.var] == 0) break;  // annihilation, never wraparound
          p.key.mono.exps[a.var] -= 1;
          out.push_back(std::move(p));
          break;
        case Atom::Kind::rot:
          if (on_ku) break;
          p.phase = p.phase * a.phase.pow(p.key.mono.total());
          out.push_back(std::move(p));
          break;
        case Atom::Kind::rot_var:
          if (on_ku) break;
          p.phase = p.phase * a.phase.pow(p.key.mono.exps[a.var]);
          out.push_back(std::move(p));
          break;
        case Atom::Kind::fiber: {
          if (on_ku) break;
          if (a.mat->structured()) {
            auto im = a.mat->as_structured().image(p.key.fiber);
            if (!im) break;
            p.key.fiber = im->first;
            p.phase = p.phase * im->second;
            out.push_back(std::move(p));
          } else {
            const Eigen::MatrixXcd& m = a.mat->dense();
            for (int g = 0; g < m.rows(); ++g) {
              cplx e = m(g, p.key.fiber);
              if (e == cplx(0.0, 0.0)) continue;
              Path q = p;
              q.key.fiber = g;
              q.factor *= e;
              out.push_back(std::move(q));
            }
          }
          break;
        }
        case Atom::Kind::ku: {
          if (!on_ku) break;
          if (a.mat->structured()) {
            auto im = a.mat->as_structured().image(p.key.ku);
            if (!im) break;
            p.key.ku = im->first;
            p.phase = p.phase * im->second;
            out.push_back(std::move(p));
          } else {
            const Eigen::MatrixXcd& m = a.mat->dense();
            for (int g = 0; g < m.rows(); ++g) {
              cplx e = m(g, p.key.ku);
              if (e == cplx(0.0, 0.0)) continue;
              Path q = p;
              q.key.ku = g;
              q.factor *= e;
              out.push_back(std::move(q));
            }
          }
          break;
        }
        case Atom::Kind::hardy_id:
          if (on_ku) break;
          out.push_back(std::move(p));
          break;
        case Atom::Kind::ku_id:
          if (!on_ku) break;
          out.push_back(std::move(p));
          break;
      }
    }
    return out;
  }

  static void prune(Vec& v) {
    for (auto it = v.begin(); it != v.end();)
      it = it->second.is_zero() ? v.erase(it) : std::next(it);
  }

  SpaceSignature sig_;
  std::vector<OpTerm> terms_;
};

// ---------------------------------------------------------------------------
// Window bases and truncated matrices
// ---------------------------------------------------------------------------
class WindowBasis {
 public:
  /// Hardy box: exponents in [0, cap)^d, graded-lex, fiber-minor; K_u last.
  WindowBasis(const SpaceSignature& sig, int cap) : sig_(sig), cap_(cap), neg_cap_(0) {
    if (sig.bilateral) fail(ErrorCode::invalid_input, "use the bilateral constructor");
    if (cap < 1) fail(ErrorCode::invalid_input, "window cap must be >= 1");
    std::vector<GradedIndex> monos;
    GradedIndex cur = GradedIndex::zero(sig.d);
    enumerate(cur, 0, monos);
    std::sort(monos.begin(), monos.end());
    build(monos);
  }

  /// Bilateral window: Laurent exponents in [-neg, pos).
  WindowBasis(const SpaceSignature& sig, int neg, int pos) : sig_(sig), cap_(pos), neg_cap_(neg) {
    if (!sig.bilateral) fail(ErrorCode::invalid_input, "bilateral basis needs a bilateral signature");
    if (neg < 1 || pos < 1) fail(ErrorCode::invalid_input, "bilateral caps must be >= 1");
    std::vector<GradedIndex> monos;
    for (int k = -neg; k < pos; ++k) monos.push_back(GradedIndex({k}));
    build(monos);
  }

  const SpaceSignature& signature() const { return sig_; }
  int cap() const { return cap_; }
  int neg_cap() const { return neg_cap_; }
  int size() const { return int(keys_.size()); }
  int hardy_size() const { return int(keys_.size()) - sig_.ku_dim; }
  const BasisKey& key(int i) const { return keys_[i]; }
  const std::vector<BasisKey>& keys() const { return keys_; }

  std::optional<int> index(const BasisKey& k) const {
    auto it = index_.find(k);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  /// True when a band-b word applied to this vector cannot leave the box.
  bool safe(int i, int b) const {
    const BasisKey& k = keys_[i];
    if (k.is_ku()) return true;
    if (sig_.bilateral) {
      int e = k.mono.exps[0];
      return e - b >= -neg_cap_ && e + b < cap_;
    }
    return k.mono.total() + b < cap_;
  }

  std::vector<int> safe_indices(int band) const {
    std::vector<int> r;
    for (int i = 0; i < size(); ++i)
      if (safe(i, band)) r.push_back(i);
    return r;
  }

  static std::shared_ptr<const WindowBasis> make(const SpaceSignature& sig, int cap) {
    return std::make_shared<WindowBasis>(sig, cap);
  }
  static std::shared_ptr<const WindowBasis> make_bilateral(const SpaceSignature& sig, int neg, int pos) {
    return std::make_shared<WindowBasis>(sig, neg, pos);
  }

 private:
  void enumerate(GradedIndex& cur, int pos, std::vector<GradedIndex>& out) const {
    if (pos == sig_.d) {
      out.push_back(cur);
      return;
    }
    for (int e = 0; e < cap_; ++e) {
      cur.exps[pos] = e;
      enumerate(cur, pos + 1, out);
    }
  }

  void build(const std::vector<GradedIndex>& monos) {
    for (const auto& m : monos)
      for (int f = 0; f < std::max(sig_.fiber_dim, sig_.d == 0 ? 0 : 1); ++f)
        keys_.push_back(BasisKey::hardy(m, f));
    if (sig_.d == 0) keys_.clear();
    for (int j = 0; j < sig_.ku_dim; ++j) keys_.push_back(BasisKey::ku_slot(j));
    for (int i = 0; i < size(); ++i) index_[keys_[i]] = i;
  }

  SpaceSignature sig_;
  int cap_, neg_cap_;
  std::vector<BasisKey> keys_;
  std::map<BasisKey, int> index_;
};

using WindowBasisPtr = std::shared_ptr<const WindowBasis>;

/// Dense compression of an operator to a window basis, with band bookkeeping.
struct TruncatedMatrix {
  WindowBasisPtr basis;
  Eigen::MatrixXcd mat;
  int band = 0;

  TruncatedMatrix() = default;
  TruncatedMatrix(WindowBasisPtr b, Eigen::MatrixXcd m, int bd)
      : basis(std::move(b)), mat(std::move(m)), band(bd) {}

  static TruncatedMatrix identity(WindowBasisPtr b) {
    int n = b->size();
    return TruncatedMatrix(std::move(b), Eigen::MatrixXcd::Identity(n, n), 0);
  }

  int size() const { return int(mat.rows()); }

  TruncatedMatrix operator*(const TruncatedMatrix& o) const {
    require_same_basis(o);
    return TruncatedMatrix(basis, mat * o.mat, band + o.band);
  }
  TruncatedMatrix operator+(const TruncatedMatrix& o) const {
    require_same_basis(o);
    return TruncatedMatrix(basis, mat + o.mat, std::max(band, o.band));
  }
  TruncatedMatrix operator-(const TruncatedMatrix& o) const {
    require_same_basis(o);
    return TruncatedMatrix(basis, mat - o.mat, std::max(band, o.band));
  }
  TruncatedMatrix adjoint() const { return TruncatedMatrix(basis, mat.adjoint(), band); }
  TruncatedMatrix scaled(cplx c) const { return TruncatedMatrix(basis, c * mat, band); }

  std::vector<int> safe_indices(int extra_band = 0) const { return basis->safe_indices(band + extra_band); }

  void require_same_basis(const TruncatedMatrix& o) const {
    basis->signature().require_match(o.basis->signature());
    if (basis->size() != o.basis->size() || basis->cap() != o.basis->cap())
      fail(ErrorCode::precondition, "window mismatch");
  }
};

/// Entry (row, col) = coefficient of the row vector in T(col vector);
/// contributions outside the box are dropped and recorded via the band.
inline TruncatedMatrix densify(const LazyOperator& t, const WindowBasisPtr& basis) {
  t.signature().require_match(basis->signature());
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(basis->size(), basis->size());
  for (int j = 0; j < basis->size(); ++j) {
    Vec image = t.apply(basis->key(j));
    for (const auto& [key, coef] : image)
      if (auto i = basis->index(key)) m(*i, j) = coef.value();
  }
  return TruncatedMatrix(basis, std::move(m), t.band());
}

inline TruncatedMatrix densify(const LazyOperator& t, int cap) {
  return densify(t, WindowBasis::make(t.signature(), cap));
}

// ---------------------------------------------------------------------------
// Window comparisons
// ---------------------------------------------------------------------------
struct WindowComparison {
  bool pass = false;
  bool exact = false;         // every coefficient cancelled bit-exactly
  bool inconclusive = false;  // empty safe window
  double deviation = 0.0;
  int checked = 0;
  std::string witness;  // basis vector of largest deviation

  static WindowComparison empty_window() {
    WindowComparison c;
    c.inconclusive = true;
    return c;
  }
};

/// Compares images of every safe basis vector. With lazy inputs the
/// comparison is exact and tol = 0 is meaningful.
inline WindowComparison equal_on_window(const LazyOperator& a, const LazyOperator& b,
                                        const WindowBasisPtr& basis, double tol) {
  a.signature().require_match(b.signature());
  a.signature().require_match(basis->signature());
  const int band = std::max(a.band(), b.band());
  auto idx = basis->safe_indices(band);
  if (idx.empty()) return WindowComparison::empty_window();

  WindowComparison r;
  r.exact = true;
  for (int i : idx) {
    Vec va = a.apply(basis->key(i));
    Vec vb = b.apply(basis->key(i));
    for (const auto& [key, coef] : vb) va[key] = va[key] - coef;
    for (const auto& [key, coef] : va) {
      if (coef.is_zero()) continue;
      r.exact = false;
      double dev = std::abs(coef.value());
      if (dev > r.deviation) {
        r.deviation = dev;
        r.witness = basis->key(i).str();
      }
    }
    ++r.checked;
  }
  r.pass = r.deviation <= tol;
  return r;
}

inline WindowComparison equal_on_window(const LazyOperator& a, const LazyOperator& b, int cap,
                                        double tol) {
  return equal_on_window(a, b, WindowBasis::make(a.signature(), cap), tol);
}

inline WindowComparison equal_on_window(const TruncatedMatrix& a, const TruncatedMatrix& b,
                                        double tol) {
  a.require_same_basis(b);
  auto idx = a.basis->safe_indices(std::max(a.band, b.band));
  if (idx.empty()) return WindowComparison::empty_window();

  WindowComparison r;
  for (int j : idx) {
    Eigen::VectorXcd diff = a.mat.col(j) - b.mat.col(j);
    int row = 0;
    double dev = diff.cwiseAbs().maxCoeff(&row);
    if (dev > r.deviation) {
      r.deviation = dev;
      r.witness = a.basis->key(j).str();
    }
    ++r.checked;
  }
  r.exact = r.deviation == 0.0;
  r.pass = r.deviation <= tol;
  return r;
}

/// Exact isometry witness: <V e_k, V e_l> == <e_k, e_l> structurally, over all
/// safe basis pairs.
inline WindowComparison isometry_on_window(const LazyOperator& v, const WindowBasisPtr& basis) {
  auto idx = basis->safe_indices(v.band());
  if (idx.empty()) return WindowComparison::empty_window();

  std::vector<Vec> images;
  images.reserve(idx.size());
  for (int i : idx) images.push_back(v.apply(basis->key(i)));

  WindowComparison r;
  r.exact = true;
  for (std::size_t k = 0; k < idx.size(); ++k)
    for (std::size_t l = k; l < idx.size(); ++l) {
      Coef got = inner_product(images[k], images[l]);
      Coef want = k == l ? Coef::one() : Coef::zero();
      Coef diff = got - want;
      if (!diff.is_zero()) {
        r.exact = false;
        double dev = std::abs(diff.value());
        if (dev > r.deviation) {
          r.deviation = dev;
          r.witness = basis->key(idx[k]).str() + " vs " + basis->key(idx[l]).str();
        }
      }
      ++r.checked;
    }
  r.pass = r.deviation == 0.0;
  return r;
}

}  // namespace qwold
