#pragma once

// Seeded random expression corpora shared by the property tests.

#include <random>
#include <string>

namespace corpus {

// Random expression text.  Component mode uses dimension 2.
class Gen {
 public:
  Gen(unsigned seed, bool components, bool potentials = true)
      : rng_(seed), comp_(components), pot_(potentials) {}

  std::string scalar(int depth) {
    if (depth <= 0) return leaf();
    switch (pick(9)) {
      case 0: return "(" + scalar(depth - 1) + " + " + scalar(depth - 1) + ")";
      case 1: return "(" + scalar(depth - 1) + " - " + scalar(depth - 1) + ")";
      case 2: return scalar(depth - 1) + "*" + scalar(depth - 1);
      case 3: return "dot(" + vector(depth - 1) + ", " + vector(depth - 1) + ")";
      case 4: return "norm(" + vector(depth - 1) + " + e)^" + std::to_string(pick(5) - 2);
      case 5: return "inv(2 + " + square(depth - 1) + ")";
      case 6: return "sqrt(3 + " + square(depth - 1) + ")^" + std::to_string(pick(3) + 1);
      case 7: return "pow(" + scalar(depth - 1) + ", " + std::to_string(pick(3)) + ")";
      default:
        if (!pot_) return leaf();
        {
          int k = pick(3);
          std::string s = "U(" + std::to_string(k) + ";";
          for (int i = 0; i < k; ++i) s += (i ? ", " : " ") + vector(depth - 1);
          return s + ")";
        }
    }
  }

  std::string vector(int depth) {
    if (depth <= 0) return vleaf();
    switch (pick(5)) {
      case 0: return "(" + vector(depth - 1) + " + " + vector(depth - 1) + ")";
      case 1: return scalar(depth - 1) + "*" + vector(depth - 1);
      case 2: return "M(" + vector(depth - 1) + ")";
      case 3:
        if (!pot_) return vleaf();
        return "U(2; " + vector(depth - 1) + ")";
      default: return vleaf();
    }
  }

  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }

 private:
  std::string square(int depth) {
    std::string s = scalar(depth);
    return "(" + s + ")*(" + s + ")";
  }
  std::string leaf() {
    switch (pick(4)) {
      case 0: return std::to_string(pick(5) + 1) + "/" + std::to_string(pick(3) + 1);
      case 1: return "a";
      case 2: return comp_ ? "x_" + std::to_string(pick(2)) : "dot(x, xd)";
      default: return comp_ ? "xd_" + std::to_string(pick(2)) : "norm2(xd)";
    }
  }
  std::string vleaf() {
    switch (pick(3)) {
      case 0: return "x";
      case 1: return "xd";
      default: return comp_ ? "[a, x_1]" : "a*x";
    }
  }

  std::mt19937 rng_;
  bool comp_;
  bool pot_;
};

// Random Lagrangians in x and xd (abstract vectors).
class LagrangianGen {
 public:
  explicit LagrangianGen(unsigned seed) : rng_(seed) {}

  std::string scalar(int depth) {
    if (depth <= 0) return leaf();
    switch (pick(6)) {
      case 0: return "(" + scalar(depth - 1) + " + " + scalar(depth - 1) + ")";
      case 1: return scalar(depth - 1) + "*" + scalar(depth - 1);
      case 2: return "dot(" + vector(depth - 1) + ", " + vector(depth - 1) + ")";
      case 3: return "norm(x)^" + std::to_string(pick(5) - 2);
      case 4: {
        int k = pick(3);
        std::string s = "U(" + std::to_string(k) + ";";
        for (int i = 0; i < k; ++i) s += (i ? ", " : " ") + vector(0);
        return s + ")";
      }
      default: return leaf();
    }
  }
  std::string vector(int depth) {
    if (depth <= 0) return pick(2) ? "x" : "xd";
    switch (pick(3)) {
      case 0: return "(" + vector(depth - 1) + " + " + vector(depth - 1) + ")";
      case 1: return scalar(depth - 1) + "*" + vector(depth - 1);
      default: return "M(" + vector(depth - 1) + ")";
    }
  }
  // Regular Lagrangians: kinetic term plus a random velocity-linear and potential part.
  std::string regular() {
    return "1/2*norm2(xd) + " + std::to_string(pick(3) + 1) + "/5*dot(xd, " + vector_x(1) + ") - " +
           scalar_x(2);
  }

  std::string position_only(int depth) { return scalar_x(depth); }

  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }

 private:
  std::string leaf() {
    switch (pick(4)) {
      case 0: return std::to_string(pick(5) + 1) + "/" + std::to_string(pick(3) + 1);
      case 1: return "dot(x, xd)";
      case 2: return "norm2(xd)";
      default: return "U";
    }
  }
  std::string scalar_x(int depth) {
    if (depth <= 0) return pick(2) ? "U" : "norm2(x)";
    switch (pick(3)) {
      case 0: return "(" + scalar_x(depth - 1) + " + " + scalar_x(depth - 1) + ")";
      case 1: return scalar_x(depth - 1) + "*" + scalar_x(depth - 1);
      default: return "U(2; x, x)";
    }
  }
  std::string vector_x(int depth) {
    if (depth <= 0) return pick(2) ? "x" : "U(1;)";
    return pick(2) ? "M(" + vector_x(depth - 1) + ")" : scalar_x(0) + "*" + vector_x(depth - 1);
  }

  std::mt19937 rng_;
};

}  // namespace corpus
