#include "modlag/evaluate.hpp"

#include "modlag/error.hpp"

#include <cmath>
#include <unordered_map>
#include <variant>

namespace modlag {

NumericEnv& NumericEnv::set(Atom symbol, double value) {
  if (symbol->is_vector()) throw NumericsError("scalar value for vector symbol");
  scalars_[symbol] = value;
  return *this;
}

NumericEnv& NumericEnv::set(Atom symbol, std::vector<double> value) {
  if (!symbol->is_vector()) throw NumericsError("vector value for scalar symbol");
  if (static_cast<int>(value.size()) != dim_) throw NumericsError("vector value has wrong dimension");
  vectors_[symbol] = std::move(value);
  return *this;
}

NumericEnv& NumericEnv::set_potential(const std::string& name, TensorEvaluator u) {
  potentials_[name] = std::move(u);
  return *this;
}

NumericEnv& NumericEnv::set_matrix(const std::string& name, Eigen::MatrixXd m) {
  if (m.rows() != dim_ || m.cols() != dim_) throw NumericsError("matrix " + name + " has wrong shape");
  matrices_[name] = std::move(m);
  return *this;
}

const double* NumericEnv::scalar(Atom symbol) const {
  auto it = scalars_.find(symbol);
  return it == scalars_.end() ? nullptr : &it->second;
}

const std::vector<double>* NumericEnv::vector(Atom symbol) const {
  auto it = vectors_.find(symbol);
  return it == vectors_.end() ? nullptr : &it->second;
}

const TensorEvaluator* NumericEnv::potential(const std::string& name) const {
  auto it = potentials_.find(name);
  return it == potentials_.end() ? nullptr : &it->second;
}

const Eigen::MatrixXd* NumericEnv::matrix(const std::string& name) const {
  auto it = matrices_.find(name);
  return it == matrices_.end() ? nullptr : &it->second;
}

namespace {

struct CTerm {
  double c;
  std::vector<std::pair<int, int>> factors;  // (slot, exponent)
};
using CPoly = std::vector<CTerm>;
using CVec = std::vector<std::pair<int, CPoly>>;  // (vector slot, coefficient)

double ipow(double x, int e) {
  if (e < 0) {
    if (x == 0.0) throw NumericsError("division by zero");
    x = 1.0 / x;
    e = -e;
  }
  double r = 1.0;
  while (e) {
    if (e & 1) r *= x;
    x *= x;
    e >>= 1;
  }
  return r;
}

double run_poly(const CPoly& p, const std::vector<double>& mem) {
  double s = 0.0;
  for (const auto& t : p) {
    double v = t.c;
    for (auto [slot, e] : t.factors) v *= e == 1 ? mem[slot] : ipow(mem[slot], e);
    s += v;
  }
  return s;
}

void run_vec(const CVec& v, const std::vector<double>& mem, int dim, double* out) {
  for (int i = 0; i < dim; ++i) out[i] = 0.0;
  for (const auto& [slot, c] : v) {
    double k = run_poly(c, mem);
    for (int i = 0; i < dim; ++i) out[i] += k * mem[slot + i];
  }
}

struct Instr {
  AtomKind kind;
  int out;
  CPoly poly;              // Inv, Sqrt
  CVec vec;                // Pot/Grad base, Norm argument
  std::vector<int> args;   // Pot/Grad/Bilin/Apply argument slots
  Eigen::MatrixXd matrix;  // Bilin, Apply
  TensorEvaluator u;  // copied: the environment need not outlive the program
};

}  // namespace

struct NumericProgram::Impl {
  int dim = 0;
  std::vector<double> mem;
  std::vector<Instr> code;
  std::vector<std::pair<int, int>> inputs;  // (slot, width)
  std::size_t input_width = 0;
  std::vector<std::variant<CPoly, CVec>> outputs;

  const NumericEnv* env = nullptr;
  std::unordered_map<Atom, int> slots;
  std::unordered_map<Atom, bool> is_input;

  int alloc(int width) {
    int s = static_cast<int>(mem.size());
    mem.resize(mem.size() + static_cast<std::size_t>(width), 0.0);
    return s;
  }

  Eigen::MatrixXd chain_matrix(const MatrixChain& chain) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(dim, dim);
    for (const auto& f : chain) {
      const Eigen::MatrixXd* a = env->matrix(f.name);
      if (!a) throw NumericsError("unbound matrix " + f.name);
      Eigen::MatrixXd g = f.transposed ? Eigen::MatrixXd(a->transpose()) : *a;
      if (f.inverse) {
        Eigen::FullPivLU<Eigen::MatrixXd> lu(g);
        if (!lu.isInvertible()) throw NumericsError("singular matrix " + f.name);
        g = lu.inverse();
      }
      m = m * g;
    }
    return m;
  }

  CPoly compile(const Poly& p) {
    CPoly out;
    for (const auto& [m, c] : p.terms()) {
      CTerm t{c.to_double(), {}};
      for (const auto& f : m.factors()) t.factors.emplace_back(compile(f.atom), f.exponent);
      out.push_back(std::move(t));
    }
    return out;
  }

  CVec compile(const VecPoly& v) {
    CVec out;
    for (const auto& [a, c] : v.terms()) out.emplace_back(compile(a), compile(c));
    return out;
  }

  int compile(Atom a) {
    if (auto it = slots.find(a); it != slots.end()) return it->second;
    const int width = a->is_vector() ? dim : 1;
    int slot = -1;
    if (a->is_symbol()) {
      slot = alloc(width);
      if (!is_input.count(a)) {
        if (a->is_vector()) {
          const auto* v = env->vector(a);
          if (!v) throw NumericsError("unbound vector symbol");
          std::copy(v->begin(), v->end(), mem.begin() + slot);
        } else {
          const double* s = env->scalar(a);
          if (!s) throw NumericsError("unbound scalar symbol " + (a->name().empty() ? std::string("(jet)") : a->name()));
          mem[static_cast<std::size_t>(slot)] = *s;
        }
      }
      slots.emplace(a, slot);
      return slot;
    }
    if (a->kind() == AtomKind::Basis) {
      if (a->index() >= dim) throw NumericsError("basis index out of range");
      slot = alloc(dim);
      mem[static_cast<std::size_t>(slot + a->index())] = 1.0;
      slots.emplace(a, slot);
      return slot;
    }
    Instr ins;
    ins.kind = a->kind();
    switch (a->kind()) {
      case AtomKind::Pot:
      case AtomKind::Grad:
        if (const TensorEvaluator* u = env->potential(a->name()))
          ins.u = *u;
        else
          throw NumericsError("unbound potential " + a->name());
        ins.vec = compile(a->base());
        for (Atom x : a->args()) ins.args.push_back(compile(x));
        break;
      case AtomKind::Bilin:
      case AtomKind::Apply:
        ins.matrix = chain_matrix(a->chain());
        for (Atom x : a->args()) ins.args.push_back(compile(x));
        break;
      case AtomKind::Norm:
        ins.vec = compile(a->base());
        break;
      case AtomKind::Inv:
      case AtomKind::Sqrt:
        ins.poly = compile(a->poly());
        break;
      default:
        throw NumericsError("cannot evaluate atom");
    }
    ins.out = alloc(width);
    code.push_back(std::move(ins));
    slots.emplace(a, code.back().out);
    return code.back().out;
  }

  void execute() {
    std::vector<double> base(static_cast<std::size_t>(dim));
    std::vector<std::vector<double>> args;
    for (const Instr& ins : code) {
      switch (ins.kind) {
        case AtomKind::Pot:
        case AtomKind::Grad: {
          run_vec(ins.vec, mem, dim, base.data());
          const std::size_t n = ins.args.size() + (ins.kind == AtomKind::Grad ? 1 : 0);
          args.assign(n, std::vector<double>(static_cast<std::size_t>(dim)));
          for (std::size_t i = 0; i < ins.args.size(); ++i)
            std::copy_n(mem.begin() + ins.args[i], dim, args[i].begin());
          const int k = static_cast<int>(n);
          if (ins.kind == AtomKind::Pot) {
            mem[static_cast<std::size_t>(ins.out)] = ins.u(k, base, args);
          } else {
            for (int c = 0; c < dim; ++c) {
              std::fill(args.back().begin(), args.back().end(), 0.0);
              args.back()[static_cast<std::size_t>(c)] = 1.0;
              mem[static_cast<std::size_t>(ins.out + c)] = ins.u(k, base, args);
            }
          }
          break;
        }
        case AtomKind::Bilin: {
          Eigen::Map<const Eigen::VectorXd> x(mem.data() + ins.args[0], dim);
          Eigen::Map<const Eigen::VectorXd> y(mem.data() + ins.args[1], dim);
          mem[static_cast<std::size_t>(ins.out)] = x.dot(ins.matrix * y);
          break;
        }
        case AtomKind::Apply: {
          Eigen::Map<const Eigen::VectorXd> x(mem.data() + ins.args[0], dim);
          Eigen::VectorXd y = ins.matrix * x;
          std::copy_n(y.data(), dim, mem.begin() + ins.out);
          break;
        }
        case AtomKind::Norm: {
          run_vec(ins.vec, mem, dim, base.data());
          double s = 0.0;
          for (double b : base) s += b * b;
          mem[static_cast<std::size_t>(ins.out)] = std::sqrt(s);
          break;
        }
        case AtomKind::Inv: {
          const double v = run_poly(ins.poly, mem);
          if (v == 0.0) throw NumericsError("division by zero");
          mem[static_cast<std::size_t>(ins.out)] = 1.0 / v;
          break;
        }
        case AtomKind::Sqrt: {
          const double v = run_poly(ins.poly, mem);
          if (v < 0.0) throw NumericsError("square root of a negative number");
          mem[static_cast<std::size_t>(ins.out)] = std::sqrt(v);
          break;
        }
        default:
          break;
      }
    }
  }
};

NumericProgram::NumericProgram(const std::vector<Expr>& outputs, const std::vector<Atom>& inputs,
                               const NumericEnv& env)
    : impl_(std::make_unique<Impl>()) {
  Impl& p = *impl_;
  p.dim = env.dimension();
  p.env = &env;
  for (Atom a : inputs) {
    if (!a->is_symbol()) throw NumericsError("program inputs must be symbols");
    p.is_input[a] = true;
  }
  for (Atom a : inputs) {
    const int w = a->is_vector() ? p.dim : 1;
    p.inputs.emplace_back(p.compile(a), w);
    p.input_width += static_cast<std::size_t>(w);
  }
  for (const Expr& e : outputs) {
    if (e.is_scalar())
      p.outputs.emplace_back(p.compile(e.scalar()));
    else
      p.outputs.emplace_back(p.compile(e.vector()));
  }
  p.env = nullptr;
  p.slots.clear();
  p.is_input.clear();
}

NumericProgram::~NumericProgram() = default;
NumericProgram::NumericProgram(NumericProgram&&) noexcept = default;
NumericProgram& NumericProgram::operator=(NumericProgram&&) noexcept = default;

std::size_t NumericProgram::input_size() const { return impl_->input_width; }

void NumericProgram::run(std::span<const double> in, std::vector<std::vector<double>>& out) const {
  Impl& p = *impl_;
  if (in.size() != p.input_width) throw NumericsError("program input has wrong size");
  std::size_t k = 0;
  for (auto [slot, w] : p.inputs) {
    std::copy_n(in.begin() + static_cast<std::ptrdiff_t>(k), w, p.mem.begin() + slot);
    k += static_cast<std::size_t>(w);
  }
  p.execute();
  out.resize(p.outputs.size());
  for (std::size_t i = 0; i < p.outputs.size(); ++i) {
    if (const auto* s = std::get_if<CPoly>(&p.outputs[i])) {
      out[i].assign(1, run_poly(*s, p.mem));
    } else {
      out[i].resize(static_cast<std::size_t>(p.dim));
      run_vec(std::get<CVec>(p.outputs[i]), p.mem, p.dim, out[i].data());
    }
  }
}

std::vector<double> evaluate(const Expr& e, const NumericEnv& env) {
  NumericProgram prog({e}, {}, env);
  std::vector<std::vector<double>> out;
  prog.run({}, out);
  return out[0];
}

double evaluate(const Poly& e, const NumericEnv& env) { return evaluate(Expr(e), env)[0]; }

std::vector<double> evaluate(const VecPoly& e, const NumericEnv& env) { return evaluate(Expr(e), env); }

}  // namespace modlag
