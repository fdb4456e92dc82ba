#pragma once

// Independent evaluator for (phi, phi') of words in two infinitesimally free
// algebras. It uses free cumulants instead of centering: infinitesimal
// freeness is freeness for the dual-number valued state phi + eps phi'
// (eps^2 = 0), so a mixed moment is the sum over non-crossing partitions of
// products of cumulants, and blocks mixing the two algebras contribute zero.

#include <functional>
#include <utility>
#include <vector>

#include "typeb/infinitesimal.hpp"

namespace typeb_test {

template <class S>
struct Dual {
  S re{0}, eps{0};
  Dual operator+(const Dual& o) const { return {re + o.re, eps + o.eps}; }
  Dual operator-(const Dual& o) const { return {re - o.re, eps - o.eps}; }
  Dual operator*(const Dual& o) const { return {re * o.re, re * o.eps + eps * o.re}; }
};

using Partition = std::vector<std::vector<int>>;

inline bool crosses(const std::vector<int>& a, const std::vector<int>& b) {
  for (int i : a)
    for (int j : a)
      for (int k : b)
        for (int l : b)
          if (i < k && k < j && j < l) return true;
  return false;
}

inline std::vector<Partition> non_crossing_partitions(int n) {
  std::vector<Partition> all;
  Partition cur;
  std::function<void(int)> rec = [&](int i) {
    if (i == n) {
      for (std::size_t x = 0; x < cur.size(); ++x)
        for (std::size_t y = x + 1; y < cur.size(); ++y)
          if (crosses(cur[x], cur[y]) || crosses(cur[y], cur[x])) return;
      all.push_back(cur);
      return;
    }
    for (std::size_t b = 0; b < cur.size(); ++b) {
      cur[b].push_back(i);
      rec(i + 1);
      cur[b].pop_back();
    }
    cur.push_back({i});
    rec(i + 1);
    cur.pop_back();
  };
  rec(0);
  return all;
}

template <class S>
class FreeProductOracle {
 public:
  FreeProductOracle(const typeb::InfinitesimalState<S>& a, const typeb::InfinitesimalState<S>& e) : a_(a), e_(e) {}

  std::pair<S, S> evaluate(const typeb::NCWord<S>& word) const {
    Dual<S> m = moment(word);
    return {m.re, m.eps};
  }

 private:
  const typeb::InfinitesimalState<S>& state(int tag) const { return tag == 0 ? a_ : e_; }

  // phi + eps phi' of the in-algebra product of letters (all of one tag)
  Dual<S> single_algebra_moment(const typeb::NCWord<S>& w) const {
    if (w.empty()) return {S(1), S(0)};
    typeb::Element<S> x = w[0].element;
    for (std::size_t i = 1; i < w.size(); ++i) x = typeb::multiply(x, w[i].element);
    return {state(w[0].tag).phi(x), state(w[0].tag).phi_prime(x)};
  }

  // free cumulant of letters from one algebra, by Moebius recursion on NC(n)
  Dual<S> cumulant(const typeb::NCWord<S>& w) const {
    const int n = static_cast<int>(w.size());
    Dual<S> result = single_algebra_moment(w);
    for (const Partition& p : non_crossing_partitions(n)) {
      if (p.size() == 1) continue;
      Dual<S> prod{S(1), S(0)};
      for (const auto& block : p) prod = prod * cumulant(pick(w, block));
      result = result - prod;
    }
    return result;
  }

  Dual<S> moment(const typeb::NCWord<S>& w) const {
    const int n = static_cast<int>(w.size());
    if (n == 0) return {S(1), S(0)};
    Dual<S> total{S(0), S(0)};
    for (const Partition& p : non_crossing_partitions(n)) {
      Dual<S> prod{S(1), S(0)};
      bool mixed = false;
      for (const auto& block : p) {
        for (int i : block)
          if (w[static_cast<std::size_t>(i)].tag != w[static_cast<std::size_t>(block[0])].tag) mixed = true;
        if (mixed) break;
        prod = prod * cumulant(pick(w, block));
      }
      if (!mixed) total = total + prod;
    }
    return total;
  }

  static typeb::NCWord<S> pick(const typeb::NCWord<S>& w, const std::vector<int>& idx) {
    typeb::NCWord<S> out;
    for (int i : idx) out.push_back(w[static_cast<std::size_t>(i)]);
    return out;
  }

  const typeb::InfinitesimalState<S>& a_;
  const typeb::InfinitesimalState<S>& e_;
};

}  // namespace typeb_test
