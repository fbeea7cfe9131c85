#pragma once

#include <stdexcept>
#include <string>

namespace carnot {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define CARNOT_ERROR(Name)                      \
  class Name : public Error {                   \
   public:                                      \
    using Error::Error;                         \
  };

// group specification
class SyntaxError : public Error {
 public:
  SyntaxError(int line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};
CARNOT_ERROR(UnknownSymbol)
CARNOT_ERROR(DuplicateBracket)
CARNOT_ERROR(UnknownBuiltin)
CARNOT_ERROR(BadParameter)

// algebra violations found while building an algebra
class AlgebraViolation : public Error {
 public:
  AlgebraViolation(const std::string& what, int i, int j, int k)
      : Error(what), i(i), j(j), k(k) {}
  int i, j, k;
};
class GradingViolation : public AlgebraViolation {
 public:
  using AlgebraViolation::AlgebraViolation;
};
class JacobiViolation : public AlgebraViolation {
 public:
  using AlgebraViolation::AlgebraViolation;
};

// group arithmetic
CARNOT_ERROR(UnsupportedStep)
CARNOT_ERROR(AlgebraMismatch)

// subgroups and morphisms
CARNOT_ERROR(NotBracketClosed)
CARNOT_ERROR(LinearDependence)
CARNOT_ERROR(LayerViolation)
CARNOT_ERROR(BracketViolation)
CARNOT_ERROR(NotNormal)
CARNOT_ERROR(NotComplementary)
CARNOT_ERROR(NotAGraph)

// metric
CARNOT_ERROR(NotHeisenberg)
CARNOT_ERROR(NonConvergent)

// calculus
CARNOT_ERROR(ExtrapolationDiverged)
CARNOT_ERROR(DegenerateCoercivity)
CARNOT_ERROR(SingularRestriction)
class NoConvergence : public Error {
 public:
  NoConvergence(int iterations, double residual)
      : Error("no convergence after " + std::to_string(iterations) +
              " iterations, residual " + std::to_string(residual)),
        iterations(iterations),
        residual(residual) {}
  int iterations;
  double residual;
};

// measures and Heisenberg closed forms
CARNOT_ERROR(HypothesisViolated)
CARNOT_ERROR(CodimTooLarge)
CARNOT_ERROR(NotVertical)
CARNOT_ERROR(NotRotationallyInvariant)
CARNOT_ERROR(RepresentativeDisagreement)
CARNOT_ERROR(ShapeMismatch)
CARNOT_ERROR(RoutesDisagree)

#undef CARNOT_ERROR

}  // namespace carnot
