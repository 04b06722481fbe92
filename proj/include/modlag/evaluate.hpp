#pragma once

// Floating-point evaluation of symbolic expressions.

#include "modlag/expr.hpp"

#include <Eigen/Dense>

#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace modlag {

// U^(k)(base)(a_1, ..., a_k) for concrete vectors.
using TensorEvaluator =
    std::function<double(int k, std::span<const double> base, std::span<const std::vector<double>> args)>;

class NumericEnv {
 public:
  explicit NumericEnv(int dimension) : dim_(dimension) {}

  int dimension() const { return dim_; }
  NumericEnv& set(Atom symbol, double value);
  NumericEnv& set(Atom symbol, std::vector<double> value);
  NumericEnv& set_potential(const std::string& name, TensorEvaluator u);
  NumericEnv& set_matrix(const std::string& name, Eigen::MatrixXd m);

  const double* scalar(Atom symbol) const;
  const std::vector<double>* vector(Atom symbol) const;
  const TensorEvaluator* potential(const std::string& name) const;
  const Eigen::MatrixXd* matrix(const std::string& name) const;

 private:
  int dim_;
  std::map<Atom, double, AtomLess> scalars_;
  std::map<Atom, std::vector<double>, AtomLess> vectors_;
  std::map<std::string, TensorEvaluator> potentials_;
  std::map<std::string, Eigen::MatrixXd> matrices_;
};

double evaluate(const Poly& e, const NumericEnv& env);
std::vector<double> evaluate(const VecPoly& e, const NumericEnv& env);
// Scalars come back as a one-element vector.
std::vector<double> evaluate(const Expr& e, const NumericEnv& env);

// Expressions compiled against a fixed environment; the listed input symbols
// are supplied per call as a flat array (vectors take `dimension` entries).
class NumericProgram {
 public:
  NumericProgram(const std::vector<Expr>& outputs, const std::vector<Atom>& inputs, const NumericEnv& env);
  ~NumericProgram();
  NumericProgram(NumericProgram&&) noexcept;
  NumericProgram& operator=(NumericProgram&&) noexcept;

  std::size_t input_size() const;
  // out[i] holds output i (size 1 for scalars).
  void run(std::span<const double> in, std::vector<std::vector<double>>& out) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace modlag
