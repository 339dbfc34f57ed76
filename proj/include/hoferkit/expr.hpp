#pragma once

// Immutable expression trees for scalar fields on R^{2n}, compiled to a flat
// tape for fast evaluation and reverse-mode spatial gradients.

#include "hoferkit/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace hoferkit {

using json = nlohmann::ordered_json;

enum class OpKind : std::uint8_t {
  Const,       // c0 = value
  Coord,       // index = coordinate
  Sum,         // n-ary
  Product,     // n-ary
  Scale,       // c0 = factor, one child
  Poly1,       // coeffs = ascending polynomial coefficients, one child
  Smoothstep,  // c0 = edge0, c1 = edge1, one child (quintic, clamped)
  Truncator,   // index = level n, one child
  Bump,        // coeffs = center, c0 = inner_r, c1 = outer_r (radial, leaf)
};

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  OpKind kind;
  std::vector<ExprPtr> children;
  double c0 = 0.0;
  double c1 = 0.0;
  int index = 0;
  std::vector<double> coeffs;
};

// Node constructors.  Trees are immutable after construction.
ExprPtr expr_const(double value);
ExprPtr expr_coord(int index);
ExprPtr expr_sum(std::vector<ExprPtr> children);
ExprPtr expr_product(std::vector<ExprPtr> children);
ExprPtr expr_scale(double factor, ExprPtr child);
ExprPtr expr_poly1(std::vector<double> coeffs, ExprPtr child);
ExprPtr expr_smoothstep(double edge0, double edge1, ExprPtr child);
ExprPtr expr_truncator(int n, ExprPtr child);
ExprPtr expr_bump(std::vector<double> center, double inner_r, double outer_r);

/// Quintic smoothstep 6u^5-15u^4+10u^3 clamped to [0,1]; C^2 at both edges.
double quintic_smoothstep(double u);
double quintic_smoothstep_deriv(double u);

/// Radius R such that the tree evaluates to exactly 0 for |m| > R
/// (conservative; infinity when no compact factor gates the value).
double support_radius(const ExprNode& node);

/// Largest coordinate index referenced, or -1 for constant trees.
int max_coord_index(const ExprNode& node);

/// Symbolic partial derivative; supported on the polynomial subset
/// (Const/Coord/Sum/Product/Scale/Poly1).  Throws std::domain_error on
/// bump/smoothstep/truncator nodes.
ExprPtr expr_partial(const ExprPtr& node, int coord);

json expr_to_json(const ExprNode& node);
ExprPtr expr_from_json(const json& j);

// Flat, allocation-free evaluator.  Slot i holds the value of ops[i];
// children are contiguous in child_index.
class Tape {
 public:
  Tape() = default;
  explicit Tape(const ExprPtr& root);

  double eval(std::span<const double> m) const;
  /// out += scale * grad(m); returns the value.
  double eval_grad(std::span<const double> m, double scale, std::span<double> out) const;

  bool empty() const { return ops_.empty(); }

 private:
  struct Op {
    OpKind kind;
    int child_begin = 0;
    int child_count = 0;
    double c0 = 0.0;
    double c1 = 0.0;
    int index = 0;
    int data_begin = 0;  // into data_ (poly coeffs / bump center)
    int data_count = 0;
  };
  std::vector<Op> ops_;
  std::vector<int> child_index_;
  std::vector<double> data_;

  int compile(const ExprNode& node);
};

}  // namespace hoferkit
