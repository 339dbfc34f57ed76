#include "hoferkit/expr.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

namespace hoferkit {

ExprPtr expr_const(double value) {
  auto n = std::make_shared<ExprNode>();
  n->kind = OpKind::Const;
  n->c0 = value;
  return n;
}

ExprPtr expr_coord(int index) {
  if (index < 0) throw std::invalid_argument("coordinate index must be nonnegative");
  auto n = std::make_shared<ExprNode>();
  n->kind = OpKind::Coord;
  n->index = index;
  return n;
}

ExprPtr expr_sum(std::vector<ExprPtr> children) {
  if (children.empty()) throw std::invalid_argument("sum needs at least one child");
  auto n = std::make_shared<ExprNode>();
  n->kind = OpKind::Sum;
  n->children = std::move(children);
  return n;
}

ExprPtr expr_product(std::vector<ExprPtr> children) {
  if (children.empty()) throw std::invalid_argument("product needs at least one child");
  auto n = std::make_shared<ExprNode>();
  n->kind = OpKind::Product;
  n->children = std::move(children);
  return n;
}

ExprPtr expr_scale(double factor, ExprPtr child) {
  auto n = std::make_shared<ExprNode>();
  n->kind = OpKind::Scale;
  n->c0 = factor;
  n->children = {std::move(child)};
  return n;
}

ExprPtr expr_poly1(std::vector<double> coeffs, ExprPtr child) {
  if (coeffs.empty()) throw std::invalid_argument("poly1 needs coefficients");
  auto n = std::make_shared<ExprNode>();
  n->kind = OpKind::Poly1;
  n->coeffs = std::move(coeffs);
  n->children = {std::move(child)};
  return n;
}

ExprPtr expr_smoothstep(double edge0, double edge1, ExprPtr child) {
  if (!(edge0 < edge1)) throw std::invalid_argument("smoothstep needs edge0 < edge1");
  auto n = std::make_shared<ExprNode>();
  n->kind = OpKind::Smoothstep;
  n->c0 = edge0;
  n->c1 = edge1;
  n->children = {std::move(child)};
  return n;
}

ExprPtr expr_truncator(int level, ExprPtr child) {
  if (level < 1) throw std::invalid_argument("truncator level must be >= 1");
  auto n = std::make_shared<ExprNode>();
  n->kind = OpKind::Truncator;
  n->index = level;
  n->children = {std::move(child)};
  return n;
}

ExprPtr expr_bump(std::vector<double> center, double inner_r, double outer_r) {
  if (!(0.0 < inner_r && inner_r < outer_r))
    throw std::invalid_argument("bump needs 0 < inner_r < outer_r");
  auto n = std::make_shared<ExprNode>();
  n->kind = OpKind::Bump;
  n->coeffs = std::move(center);
  n->c0 = inner_r;
  n->c1 = outer_r;
  return n;
}

double quintic_smoothstep(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

double quintic_smoothstep_deriv(double u) {
  if (u <= 0.0 || u >= 1.0) return 0.0;
  const double a = u * (1.0 - u);
  return 30.0 * a * a;
}

namespace {

// f_n(s): exactly s for |s| >= 1/n, exactly 0 for |s| <= 1/(2n),
// s * S(blend) in between; odd, nondecreasing, C^2.
double truncator_value(int n, double s) {
  const double hi = 1.0 / n;
  const double lo = 0.5 / n;
  const double a = std::abs(s);
  if (a >= hi) return s;
  if (a <= lo) return 0.0;
  return s * quintic_smoothstep((a - lo) / (hi - lo));
}

double truncator_deriv(int n, double s) {
  const double hi = 1.0 / n;
  const double lo = 0.5 / n;
  const double a = std::abs(s);
  if (a >= hi) return 1.0;
  if (a <= lo) return 0.0;
  const double u = (a - lo) / (hi - lo);
  // d/ds [s S(u(|s|))] = S(u) + |s| S'(u) / (hi - lo)
  return quintic_smoothstep(u) + a * quintic_smoothstep_deriv(u) / (hi - lo);
}

double poly_eval(std::span<const double> coeffs, double u) {
  double v = 0.0;
  for (std::size_t i = coeffs.size(); i-- > 0;) v = v * u + coeffs[i];
  return v;
}

double poly_eval_deriv(std::span<const double> coeffs, double u) {
  double v = 0.0;
  for (std::size_t i = coeffs.size(); i-- > 1;) v = v * u + coeffs[i] * static_cast<double>(i);
  return v;
}

}  // namespace

double support_radius(const ExprNode& node) {
  switch (node.kind) {
    case OpKind::Const:
      return node.c0 == 0.0 ? 0.0 : kInfiniteRadius;
    case OpKind::Coord:
      return kInfiniteRadius;
    case OpKind::Sum: {
      double r = 0.0;
      for (const auto& c : node.children) r = std::max(r, support_radius(*c));
      return r;
    }
    case OpKind::Product: {
      double r = kInfiniteRadius;
      for (const auto& c : node.children) r = std::min(r, support_radius(*c));
      return r;
    }
    case OpKind::Scale:
      return support_radius(*node.children[0]);
    case OpKind::Poly1:
      return node.coeffs[0] == 0.0 ? support_radius(*node.children[0]) : kInfiniteRadius;
    case OpKind::Smoothstep:
      return node.c0 >= 0.0 ? support_radius(*node.children[0]) : kInfiniteRadius;
    case OpKind::Truncator:
      return support_radius(*node.children[0]);
    case OpKind::Bump: {
      double norm2 = 0.0;
      for (double c : node.coeffs) norm2 += c * c;
      return std::sqrt(norm2) + node.c1;
    }
  }
  return kInfiniteRadius;
}

int max_coord_index(const ExprNode& node) {
  int idx = node.kind == OpKind::Coord ? node.index : -1;
  if (node.kind == OpKind::Bump) idx = static_cast<int>(node.coeffs.size()) - 1;
  for (const auto& c : node.children) idx = std::max(idx, max_coord_index(*c));
  return idx;
}

ExprPtr expr_partial(const ExprPtr& node, int coord) {
  switch (node->kind) {
    case OpKind::Const:
      return expr_const(0.0);
    case OpKind::Coord:
      return expr_const(node->index == coord ? 1.0 : 0.0);
    case OpKind::Sum: {
      std::vector<ExprPtr> terms;
      terms.reserve(node->children.size());
      for (const auto& c : node->children) terms.push_back(expr_partial(c, coord));
      return expr_sum(std::move(terms));
    }
    case OpKind::Product: {
      std::vector<ExprPtr> terms;
      for (std::size_t j = 0; j < node->children.size(); ++j) {
        std::vector<ExprPtr> factors;
        for (std::size_t k = 0; k < node->children.size(); ++k)
          factors.push_back(k == j ? expr_partial(node->children[k], coord) : node->children[k]);
        terms.push_back(expr_product(std::move(factors)));
      }
      return expr_sum(std::move(terms));
    }
    case OpKind::Scale:
      return expr_scale(node->c0, expr_partial(node->children[0], coord));
    case OpKind::Poly1: {
      if (node->coeffs.size() == 1) return expr_const(0.0);
      std::vector<double> dc(node->coeffs.size() - 1);
      for (std::size_t i = 1; i < node->coeffs.size(); ++i)
        dc[i - 1] = node->coeffs[i] * static_cast<double>(i);
      return expr_product({expr_poly1(std::move(dc), node->children[0]),
                           expr_partial(node->children[0], coord)});
    }
    default:
      throw std::domain_error("expr_partial: node is not in the polynomial subset");
  }
}

json expr_to_json(const ExprNode& node) {
  json j;
  switch (node.kind) {
    case OpKind::Const:
      j["op"] = "const";
      j["params"] = {{"value", node.c0}};
      break;
    case OpKind::Coord:
      j["op"] = "coord";
      j["params"] = {{"index", node.index}};
      break;
    case OpKind::Sum:
      j["op"] = "sum";
      break;
    case OpKind::Product:
      j["op"] = "product";
      break;
    case OpKind::Scale:
      j["op"] = "scale";
      j["params"] = {{"factor", node.c0}};
      break;
    case OpKind::Poly1:
      j["op"] = "poly1";
      j["params"] = {{"coeffs", node.coeffs}};
      break;
    case OpKind::Smoothstep:
      j["op"] = "smoothstep";
      j["params"] = {{"edge0", node.c0}, {"edge1", node.c1}};
      break;
    case OpKind::Truncator:
      j["op"] = "truncator";
      j["params"] = {{"n", node.index}};
      break;
    case OpKind::Bump:
      j["op"] = "bump";
      j["params"] = {{"center", node.coeffs}, {"inner_r", node.c0}, {"outer_r", node.c1}};
      break;
  }
  if (!node.children.empty()) {
    json kids = json::array();
    for (const auto& c : node.children) kids.push_back(expr_to_json(*c));
    j["children"] = std::move(kids);
  }
  return j;
}

ExprPtr expr_from_json(const json& j) {
  const std::string op = j.at("op").get<std::string>();
  std::vector<ExprPtr> children;
  if (j.contains("children"))
    for (const auto& c : j.at("children")) children.push_back(expr_from_json(c));
  const auto params = [&]() -> const json& {
    static const json empty = json::object();
    return j.contains("params") ? j.at("params") : empty;
  }();

  if (op == "const") return expr_const(params.at("value").get<double>());
  if (op == "coord") return expr_coord(params.at("index").get<int>());
  if (op == "sum") return expr_sum(std::move(children));
  if (op == "product") return expr_product(std::move(children));
  if (op == "scale") {
    if (children.size() != 1) throw std::invalid_argument("scale needs one child");
    return expr_scale(params.at("factor").get<double>(), children[0]);
  }
  if (op == "poly1") {
    if (children.size() != 1) throw std::invalid_argument("poly1 needs one child");
    return expr_poly1(params.at("coeffs").get<std::vector<double>>(), children[0]);
  }
  if (op == "smoothstep") {
    if (children.size() != 1) throw std::invalid_argument("smoothstep needs one child");
    return expr_smoothstep(params.at("edge0").get<double>(), params.at("edge1").get<double>(),
                           children[0]);
  }
  if (op == "truncator") {
    if (children.size() != 1) throw std::invalid_argument("truncator needs one child");
    return expr_truncator(params.at("n").get<int>(), children[0]);
  }
  if (op == "bump")
    return expr_bump(params.at("center").get<std::vector<double>>(),
                     params.at("inner_r").get<double>(), params.at("outer_r").get<double>());
  throw std::invalid_argument("unknown expression op: " + op);
}

Tape::Tape(const ExprPtr& root) { compile(*root); }

int Tape::compile(const ExprNode& node) {
  std::vector<int> kids;
  kids.reserve(node.children.size());
  for (const auto& c : node.children) kids.push_back(compile(*c));

  Op op;
  op.kind = node.kind;
  op.c0 = node.c0;
  op.c1 = node.c1;
  op.index = node.index;
  op.child_begin = static_cast<int>(child_index_.size());
  op.child_count = static_cast<int>(kids.size());
  child_index_.insert(child_index_.end(), kids.begin(), kids.end());
  if (!node.coeffs.empty()) {
    op.data_begin = static_cast<int>(data_.size());
    op.data_count = static_cast<int>(node.coeffs.size());
    data_.insert(data_.end(), node.coeffs.begin(), node.coeffs.end());
  }
  ops_.push_back(op);
  return static_cast<int>(ops_.size()) - 1;
}

namespace {
struct Scratch {
  std::vector<double> values;
  std::vector<double> adjoints;
};
thread_local Scratch tape_scratch;
}  // namespace

double Tape::eval(std::span<const double> m) const {
  auto& vals = tape_scratch.values;
  if (vals.size() < ops_.size()) vals.resize(ops_.size());
  for (std::size_t i = 0; i < ops_.size(); ++i) {
    const Op& op = ops_[i];
    const int* kid = child_index_.data() + op.child_begin;
    double v = 0.0;
    switch (op.kind) {
      case OpKind::Const:
        v = op.c0;
        break;
      case OpKind::Coord:
        v = m[static_cast<std::size_t>(op.index)];
        break;
      case OpKind::Sum:
        for (int k = 0; k < op.child_count; ++k) v += vals[kid[k]];
        break;
      case OpKind::Product:
        v = 1.0;
        for (int k = 0; k < op.child_count; ++k) v *= vals[kid[k]];
        break;
      case OpKind::Scale:
        v = op.c0 * vals[kid[0]];
        break;
      case OpKind::Poly1:
        v = poly_eval({data_.data() + op.data_begin, static_cast<std::size_t>(op.data_count)},
                      vals[kid[0]]);
        break;
      case OpKind::Smoothstep:
        v = quintic_smoothstep((vals[kid[0]] - op.c0) / (op.c1 - op.c0));
        break;
      case OpKind::Truncator:
        v = truncator_value(op.index, vals[kid[0]]);
        break;
      case OpKind::Bump: {
        double r2 = 0.0;
        for (int k = 0; k < op.data_count; ++k) {
          const double d = m[static_cast<std::size_t>(k)] - data_[op.data_begin + k];
          r2 += d * d;
        }
        const double r = std::sqrt(r2);
        if (r <= op.c0)
          v = 1.0;
        else if (r >= op.c1)
          v = 0.0;
        else
          v = 1.0 - quintic_smoothstep((r - op.c0) / (op.c1 - op.c0));
        break;
      }
    }
    vals[i] = v;
  }
  return vals[ops_.size() - 1];
}

double Tape::eval_grad(std::span<const double> m, double scale, std::span<double> out) const {
  const double value = eval(m);
  auto& vals = tape_scratch.values;
  auto& adj = tape_scratch.adjoints;
  adj.assign(ops_.size(), 0.0);
  adj[ops_.size() - 1] = scale;
  for (std::size_t i = ops_.size(); i-- > 0;) {
    const Op& op = ops_[i];
    const double a = adj[i];
    if (a == 0.0) continue;
    const int* kid = child_index_.data() + op.child_begin;
    switch (op.kind) {
      case OpKind::Const:
        break;
      case OpKind::Coord:
        out[static_cast<std::size_t>(op.index)] += a;
        break;
      case OpKind::Sum:
        for (int k = 0; k < op.child_count; ++k) adj[kid[k]] += a;
        break;
      case OpKind::Product:
        for (int k = 0; k < op.child_count; ++k) {
          double p = a;
          for (int l = 0; l < op.child_count; ++l)
            if (l != k) p *= vals[kid[l]];
          adj[kid[k]] += p;
        }
        break;
      case OpKind::Scale:
        adj[kid[0]] += a * op.c0;
        break;
      case OpKind::Poly1:
        adj[kid[0]] +=
            a * poly_eval_deriv(
                    {data_.data() + op.data_begin, static_cast<std::size_t>(op.data_count)},
                    vals[kid[0]]);
        break;
      case OpKind::Smoothstep: {
        const double w = op.c1 - op.c0;
        adj[kid[0]] += a * quintic_smoothstep_deriv((vals[kid[0]] - op.c0) / w) / w;
        break;
      }
      case OpKind::Truncator:
        adj[kid[0]] += a * truncator_deriv(op.index, vals[kid[0]]);
        break;
      case OpKind::Bump: {
        double r2 = 0.0;
        for (int k = 0; k < op.data_count; ++k) {
          const double d = m[static_cast<std::size_t>(k)] - data_[op.data_begin + k];
          r2 += d * d;
        }
        const double r = std::sqrt(r2);
        if (r > op.c0 && r < op.c1) {
          const double w = op.c1 - op.c0;
          const double s = -a * quintic_smoothstep_deriv((r - op.c0) / w) / (w * r);
          for (int k = 0; k < op.data_count; ++k)
            out[static_cast<std::size_t>(k)] +=
                s * (m[static_cast<std::size_t>(k)] - data_[op.data_begin + k]);
        }
        break;
      }
    }
  }
  return value;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
  const std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  const std::size_t workers = std::min(hw, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr first_error;
  std::mutex error_mu;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      try {
        for (std::size_t i = w; i < count; i += workers) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace hoferkit
