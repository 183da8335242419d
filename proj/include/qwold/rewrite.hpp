// Canonical normal forms for phase-weighted words in the generators
// {g_1..g_d, g_1*..g_d*} modulo the q-commutation relations (plus, optionally,
// the doubly-q mixed relations). Generators model isometries, so g_i* g_i
// always cancels; a cancellation may reach through letters the pair is allowed
// to cross, with the crossing phases tracked exactly. Adjacent-pair rewriting
// alone is not confluent here (g2* g1* g1 reduces to g2* only after unsorting
// the starred block), which is why the cancel move is composite.
//
// Normal form: under q-comm, alternating starred/unstarred runs, each sorted
// by generator index, with no cancellable pair left. Under doubly-q, the
// unstarred letters (sorted) precede the starred ones (sorted), except that a
// g_i never crosses a later g_i* of the same generator.
#pragma once

#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "qwold/core.hpp"
#include "qwold/opalg.hpp"

namespace qwold {

enum class RelationKind { q_comm, doubly_q };

struct Letter {
  int gen = 0;  // 0-based
  bool star = false;

  bool operator==(const Letter& o) const { return gen == o.gen && star == o.star; }
  std::string str() const { return "g" + std::to_string(gen + 1) + (star ? "*" : ""); }
};

struct RelationSet {
  QMatrix q;
  RelationKind kind;

  explicit RelationSet(QMatrix qq, RelationKind k = RelationKind::q_comm) : q(std::move(qq)), kind(k) {
    q.require_valid();
  }
  static RelationSet pair(const Phase& ph, RelationKind k = RelationKind::q_comm) {
    return RelationSet(QMatrix::pair(ph), k);
  }

  bool exact() const {
    for (int i = 0; i < q.dim(); ++i)
      for (int j = 0; j < q.dim(); ++j)
        if (!q.at(i, j).rational()) return false;
    return true;
  }
};

struct Word {
  Phase phase;
  std::vector<Letter> letters;

  Word() = default;
  Word(Phase p, std::vector<Letter> ls) : phase(p), letters(std::move(ls)) {}

  static Word gen(int i) { return Word(Phase::one(), {Letter{i, false}}); }
  static Word gen_star(int i) { return Word(Phase::one(), {Letter{i, true}}); }

  Word operator*(const Word& o) const {
    Word r(phase * o.phase, letters);
    r.letters.insert(r.letters.end(), o.letters.begin(), o.letters.end());
    return r;
  }

  Word pow(int n) const {
    Word r(Phase::one(), {});
    for (int k = 0; k < n; ++k) r = r * *this;
    return r;
  }

  bool same_letters(const Word& o) const { return letters == o.letters; }

  std::string str() const {
    std::string s;
    if (!(phase == Phase::one())) s = "phase:" + phase.str() + " ";
    for (std::size_t i = 0; i < letters.size(); ++i) s += (i ? " " : "") + letters[i].str();
    return letters.empty() ? (s.empty() ? "1" : s + "1") : s;
  }

  /// Grammar: optional "phase:p/r" prefix, letters "g1" / "g1*", whitespace
  /// juxtaposition, parenthesized groups with "^n" powers.
  static Word parse(const std::string& text);
};

namespace detail {

struct WordParser {
  const std::string& s;
  std::size_t pos = 0;

  explicit WordParser(const std::string& text) : s(text) {}

  void skip_space() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }
  bool eat(char c) {
    skip_space();
    if (pos < s.size() && s[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }
  int integer() {
    skip_space();
    std::size_t start = pos;
    if (pos < s.size() && (s[pos] == '-' || s[pos] == '+')) ++pos;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos == start) fail(ErrorCode::invalid_input, "expected integer in word at offset " + std::to_string(pos));
    return std::stoi(s.substr(start, pos - start));
  }

  Word sequence(bool top) {
    Word w(Phase::one(), {});
    while (true) {
      skip_space();
      if (pos >= s.size()) break;
      char c = s[pos];
      if (c == ')') {
        if (top) fail(ErrorCode::invalid_input, "unbalanced ')' in word");
        break;
      }
      if (c == '(') {
        ++pos;
        Word inner = sequence(false);
        if (!eat(')')) fail(ErrorCode::invalid_input, "unbalanced '(' in word");
        int n = 1;
        skip_space();
        if (pos < s.size() && s[pos] == '^') {
          ++pos;
          n = integer();
          if (n < 0) fail(ErrorCode::invalid_input, "negative word power");
        }
        w = w * inner.pow(n);
      } else if (c == 'g') {
        ++pos;
        int idx = integer();
        if (idx < 1) fail(ErrorCode::invalid_input, "generator indices are 1-based");
        bool star = pos < s.size() && s[pos] == '*';
        if (star) ++pos;
        w.letters.push_back(Letter{idx - 1, star});
      } else if (s.compare(pos, 6, "phase:") == 0) {
        pos += 6;
        std::size_t start = pos;
        while (pos < s.size() && !std::isspace(static_cast<unsigned char>(s[pos])) && s[pos] != '(' && s[pos] != ')')
          ++pos;
        w.phase = w.phase * Phase::parse(s.substr(start, pos - start));
      } else if (c == '1') {
        ++pos;  // explicit empty word
      } else {
        fail(ErrorCode::invalid_input, std::string("unexpected character '") + c + "' in word");
      }
    }
    return w;
  }
};

}  // namespace detail

inline Word Word::parse(const std::string& text) {
  detail::WordParser p(text);
  Word w = p.sequence(true);
  return w;
}

struct NormalizeResult {
  Word word;
  std::vector<std::string> trace;
};

namespace detail {

// Move catalogue. A "swap" is one adjacent exchange permitted by the relation
// set; a "cancel" deletes a g_i* ... g_i pair after transporting the starred
// letter across everything in between (all crossings phase-tracked).
struct Move {
  enum class Kind { swap_adjacent, cancel } kind;
  int at = 0;     // swap position, or starred letter position
  int match = 0;  // cancel: position of the unstarred partner
};

// A pair g_i* ... g_i cancels when the starred letter can travel right and the
// unstarred one left until they meet. The crossing phase only depends on the
// crossed letter: q(i,j) for g_j*, q(j,i) for g_j, whichever of the pair does
// the crossing.
inline Phase crossing_phase(const RelationSet& rel, int gen, const Letter& l) {
  return l.star ? rel.q.at(gen, l.gen) : rel.q.at(l.gen, gen);
}

inline std::optional<Phase> swap_phase(const RelationSet& rel, const Letter& a, const Letter& b) {
  if (a.star == b.star) {
    if (a.gen > b.gen) return rel.q.at(a.gen, b.gen);
    return std::nullopt;
  }
  // doubly-q: mixed pairs of different generators exchange freely; orient them
  // unstarred-first, the one target order compatible with the g_i ... g_i*
  // walls (an unstarred g_i never crosses g_i*, and g_i* g_i cancels instead)
  if (rel.kind == RelationKind::doubly_q && a.star && !b.star && a.gen != b.gen)
    return rel.q.at(b.gen, a.gen);  // g_i* g_j = q(j,i) g_j g_i*
  return std::nullopt;
}

inline std::vector<Move> available_moves(const Word& w, const RelationSet& rel) {
  std::vector<Move> moves;
  const auto& ls = w.letters;
  for (int k = 0; k + 1 < int(ls.size()); ++k)
    if (swap_phase(rel, ls[k], ls[k + 1])) moves.push_back({Move::Kind::swap_adjacent, k, 0});
  for (int k = 0; k < int(ls.size()); ++k) {
    if (!ls[k].star) continue;
    const int i = ls[k].gen;
    // under q-comm the letters in between must split as a starred run (crossed
    // by g_i*) followed by an unstarred run (crossed by g_i); under doubly-q
    // everything except an earlier unstarred g_i can be crossed
    bool past_starred_run = false;
    for (int m = k + 1; m < int(ls.size()); ++m) {
      if (!ls[m].star && ls[m].gen == i) {
        moves.push_back({Move::Kind::cancel, k, m});
        break;
      }
      if (rel.kind == RelationKind::doubly_q) continue;
      if (ls[m].star) {
        if (past_starred_run) break;
      } else {
        past_starred_run = true;
      }
    }
  }
  return moves;
}

inline void apply_move(Word& w, const Move& mv, const RelationSet& rel, std::vector<std::string>* trace) {
  auto& ls = w.letters;
  if (mv.kind == Move::Kind::swap_adjacent) {
    Phase p = *swap_phase(rel, ls[mv.at], ls[mv.at + 1]);
    if (trace)
      trace->push_back("swap " + ls[mv.at].str() + " " + ls[mv.at + 1].str() + " at " +
                       std::to_string(mv.at) + ", phase " + p.str());
    std::swap(ls[mv.at], ls[mv.at + 1]);
    w.phase = w.phase * p;
  } else {
    Phase p = Phase::one();
    for (int l = mv.at + 1; l < mv.match; ++l) p = p * crossing_phase(rel, ls[mv.at].gen, ls[l]);
    if (trace)
      trace->push_back("cancel " + ls[mv.at].str() + " at " + std::to_string(mv.at) + " with " +
                       ls[mv.match].str() + " at " + std::to_string(mv.match) + ", phase " + p.str());
    ls.erase(ls.begin() + mv.match);
    ls.erase(ls.begin() + mv.at);
    w.phase = w.phase * p;
  }
}

inline NormalizeResult run_rewrite(Word w, const RelationSet& rel, std::mt19937_64* rng, bool with_trace) {
  NormalizeResult res;
  while (true) {
    auto moves = available_moves(w, rel);
    if (moves.empty()) break;
    std::size_t pick = 0;
    if (rng) {
      pick = std::size_t((*rng)() % moves.size());
    } else {
      // deterministic strategy: cancellations first, then the leftmost swap
      for (std::size_t i = 0; i < moves.size(); ++i)
        if (moves[i].kind == Move::Kind::cancel) {
          pick = i;
          break;
        }
    }
    apply_move(w, moves[pick], rel, with_trace ? &res.trace : nullptr);
  }
  res.word = std::move(w);
  return res;
}

}  // namespace detail

/// Unique normal form with accumulated phase; requires exact (rational
/// rotation) relation phases.
inline NormalizeResult normalize(const Word& w, const RelationSet& rel, bool with_trace = false) {
  if (!rel.exact())
    fail(ErrorCode::inconsistent_phase, "normalize needs rational-rotation relation phases");
  return detail::run_rewrite(w, rel, nullptr, with_trace);
}

/// Numeric-mode variant: angle phases allowed, equality left to the caller.
inline NormalizeResult normalize_numeric(const Word& w, const RelationSet& rel) {
  return detail::run_rewrite(w, rel, nullptr, false);
}

/// Same normal form through a randomized move order (confluence testing).
inline NormalizeResult normalize_randomized(const Word& w, const RelationSet& rel, std::mt19937_64& rng) {
  if (!rel.exact())
    fail(ErrorCode::inconsistent_phase, "normalize needs rational-rotation relation phases");
  return detail::run_rewrite(w, rel, &rng, false);
}

struct ProveResult {
  bool proved = false;
  Word lhs_normal, rhs_normal;
  std::vector<std::string> trace;
};

/// True iff the normal forms coincide, letters and phase.
inline ProveResult prove_identity(const Word& lhs, const Word& rhs, const RelationSet& rel) {
  ProveResult r;
  NormalizeResult ln = normalize(lhs, rel, true);
  NormalizeResult rn = normalize(rhs, rel, true);
  r.lhs_normal = ln.word;
  r.rhs_normal = rn.word;
  r.proved = ln.word.same_letters(rn.word) && ln.word.phase == rn.word.phase;
  r.trace.push_back("lhs: " + lhs.str());
  for (const auto& s : ln.trace) r.trace.push_back("  " + s);
  r.trace.push_back("  -> " + ln.word.str());
  r.trace.push_back("rhs: " + rhs.str());
  for (const auto& s : rn.trace) r.trace.push_back("  " + s);
  r.trace.push_back("  -> " + rn.word.str());
  return r;
}

/// The composed operator: letters map to ops / their adjoints, scaled by the
/// word phase. Empty word is the identity.
inline LazyOperator instantiate(const Word& w, const std::vector<LazyOperator>& ops) {
  if (ops.empty()) fail(ErrorCode::invalid_input, "instantiate needs at least one operator");
  const SpaceSignature& sig = ops.front().signature();
  for (const auto& op : ops) sig.require_match(op.signature());
  LazyOperator acc = LazyOperator::identity(sig);
  for (const auto& l : w.letters) {
    if (l.gen < 0 || l.gen >= int(ops.size())) fail(ErrorCode::invalid_input, "word letter out of range");
    acc = acc.compose(l.star ? ops[l.gen].adjoint() : ops[l.gen]);
  }
  return acc.scale(w.phase);
}

}  // namespace qwold
