// Coefficients as canonicalized sums of (phase, factor) contributions.
// Identities whose phase bookkeeping cancels in exponent arithmetic come out
// as literal zeros, which is what the zero-deviation checks rely on.
#pragma once

#include <algorithm>
#include <vector>

#include "qwold/core.hpp"

namespace qwold {

struct PhasedTerm {
  Phase phase;
  cplx factor;
};

class Coef {
 public:
  Coef() = default;
  Coef(cplx v) { add(Phase::one(), v); }  // NOLINT: implicit by design
  explicit Coef(const Phase& p, cplx f = cplx(1.0, 0.0)) { add(p, f); }

  static Coef zero() { return Coef(); }
  static Coef one() { return Coef(Phase::one()); }

  bool is_zero() const { return terms_.empty(); }
  const std::vector<PhasedTerm>& terms() const { return terms_; }

  /// Adds one contribution, keeping the term list canonical (sorted by phase,
  /// merged, exact zeros dropped).
  void add(const Phase& p, cplx f) {
    if (f == cplx(0.0, 0.0)) return;
    auto it = std::lower_bound(terms_.begin(), terms_.end(), p,
                               [](const PhasedTerm& t, const Phase& q) { return t.phase.before(q); });
    if (it != terms_.end() && it->phase == p) {
      it->factor += f;
      if (it->factor == cplx(0.0, 0.0)) terms_.erase(it);
    } else {
      terms_.insert(it, PhasedTerm{p, f});
    }
  }

  void add(const Coef& o) {
    for (const auto& t : o.terms_) add(t.phase, t.factor);
  }
  void add_product(const Coef& o, const Phase& p, cplx f) {
    for (const auto& t : o.terms_) add(t.phase * p, t.factor * f);
  }

  cplx value() const {
    cplx v(0.0, 0.0);
    for (const auto& t : terms_) v += t.phase.value() * t.factor;
    return v;
  }

  Coef operator+(const Coef& o) const {
    Coef r = *this;
    r.add(o);
    return r;
  }
  Coef operator-(const Coef& o) const {
    Coef r = *this;
    for (const auto& t : o.terms_) r.add(t.phase, -t.factor);
    return r;
  }
  Coef operator*(const Coef& o) const {
    Coef r;
    for (const auto& a : terms_)
      for (const auto& b : o.terms_) r.add(a.phase * b.phase, a.factor * b.factor);
    return r;
  }

  Coef times(const Phase& p) const {
    Coef r;
    for (const auto& t : terms_) r.add(t.phase * p, t.factor);
    return r;
  }
  Coef times(cplx f) const {
    Coef r;
    for (const auto& t : terms_) r.add(t.phase, t.factor * f);
    return r;
  }
  Coef conj() const {
    Coef r;
    for (const auto& t : terms_) r.add(t.phase.conj(), std::conj(t.factor));
    return r;
  }

  /// Structural equality of canonical forms (phases equal, factors bit-equal).
  bool equals_exact(const Coef& o) const {
    if (terms_.size() != o.terms_.size()) return false;
    for (std::size_t i = 0; i < terms_.size(); ++i)
      if (!(terms_[i].phase == o.terms_[i].phase) || terms_[i].factor != o.terms_[i].factor)
        return false;
    return true;
  }

 private:
  std::vector<PhasedTerm> terms_;
};

}  // namespace qwold
