#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "coingp/error.hpp"

namespace coingp {

enum class Symbol : std::uint8_t {
  Sin,
  Cos,
  Add,
  Sub,
  Div,
  Mul,
  Min,
  Max,
  Avg,
  Sqrt,
  Pos,
  Var,
  Const,
};

inline constexpr std::array<Symbol, 11> kFunctionSet{
    Symbol::Sin, Symbol::Cos, Symbol::Add, Symbol::Sub, Symbol::Div, Symbol::Mul,
    Symbol::Min, Symbol::Max, Symbol::Avg, Symbol::Sqrt, Symbol::Pos,
};

constexpr int arity(Symbol s) {
  switch (s) {
    case Symbol::Sin:
    case Symbol::Cos:
    case Symbol::Sqrt:
    case Symbol::Pos:
      return 1;
    case Symbol::Var:
    case Symbol::Const:
      return 0;
    default:
      return 2;
  }
}

constexpr bool is_terminal(Symbol s) { return s == Symbol::Var || s == Symbol::Const; }

constexpr std::string_view symbol_name(Symbol s) {
  switch (s) {
    case Symbol::Sin: return "sin";
    case Symbol::Cos: return "cos";
    case Symbol::Add: return "add";
    case Symbol::Sub: return "sub";
    case Symbol::Div: return "div";
    case Symbol::Mul: return "mul";
    case Symbol::Min: return "min";
    case Symbol::Max: return "max";
    case Symbol::Avg: return "avg";
    case Symbol::Sqrt: return "sqrt";
    case Symbol::Pos: return "pos";
    case Symbol::Var: return "var";
    case Symbol::Const: return "const";
  }
  return "?";
}

/// Divisors smaller than this in magnitude make protected division return 1.
inline constexpr double kDivisionGuard = 1e-9;

struct Node {
  Symbol symbol = Symbol::Const;
  std::uint8_t var = 0;
  double value = 0.0;

  static Node function(Symbol s) { return Node{s, 0, 0.0}; }
  static Node variable(int index) { return Node{Symbol::Var, static_cast<std::uint8_t>(index), 0.0}; }
  static Node constant(double v) { return Node{Symbol::Const, 0, v}; }

  int arity() const { return coingp::arity(symbol); }

  friend bool operator==(const Node&, const Node&) = default;
};

namespace detail {

inline double finite_or_zero(double x) { return std::isfinite(x) ? x : 0.0; }

inline double apply_unary(Symbol s, double a) {
  switch (s) {
    case Symbol::Sin: return finite_or_zero(std::sin(a));
    case Symbol::Cos: return finite_or_zero(std::cos(a));
    case Symbol::Sqrt: return a >= 0.0 ? finite_or_zero(std::sqrt(a)) : 0.0;
    case Symbol::Pos: return a >= 0.0 ? a : 0.0;
    default: return 0.0;
  }
}

inline double apply_binary(Symbol s, double a, double b) {
  switch (s) {
    case Symbol::Add: return finite_or_zero(a + b);
    case Symbol::Sub: return finite_or_zero(a - b);
    case Symbol::Mul: return finite_or_zero(a * b);
    case Symbol::Div: return std::abs(b) >= kDivisionGuard ? finite_or_zero(a / b) : 1.0;
    case Symbol::Min: return std::min(a, b);
    case Symbol::Max: return std::max(a, b);
    case Symbol::Avg: return finite_or_zero((a + b) * 0.5);
    default: return 0.0;
  }
}

}  // namespace detail

/// Expression tree stored as a prefix-ordered node sequence.
///
/// The subtree rooted at index i occupies [i, subtree_end(i)). Every
/// operation returns a new tree; a GpTree never changes after construction.
class GpTree {
 public:
  GpTree() : nodes_{Node::constant(0.0)} {}

  explicit GpTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {
    int open = 1;
    for (const Node& n : nodes_) {
      if (open == 0) throw ValidationError("tree has trailing nodes after a complete expression");
      open += n.arity() - 1;
    }
    if (nodes_.empty() || open != 0) throw ValidationError("tree is missing operands");
  }

  std::size_t size() const { return nodes_.size(); }
  std::span<const Node> nodes() const { return nodes_; }
  const Node& node(std::size_t i) const { return nodes_[i]; }

  std::size_t subtree_end(std::size_t i) const {
    int open = 1;
    while (open > 0) open += nodes_[i++].arity() - 1;
    return i;
  }

  std::size_t subtree_size(std::size_t i) const { return subtree_end(i) - i; }

  /// Subtree size of every node, in one reverse pass.
  std::vector<std::size_t> subtree_sizes() const {
    std::vector<std::size_t> sizes(nodes_.size());
    std::vector<std::size_t> stack;
    for (std::size_t k = nodes_.size(); k-- > 0;) {
      std::size_t s = 1;
      for (int c = 0; c < nodes_[k].arity(); ++c) {
        s += stack.back();
        stack.pop_back();
      }
      sizes[k] = s;
      stack.push_back(s);
    }
    return sizes;
  }

  /// Indices of the children of node i, left to right.
  std::vector<std::size_t> children(std::size_t i) const {
    std::vector<std::size_t> out;
    std::size_t c = i + 1;
    for (int k = 0; k < nodes_[i].arity(); ++k) {
      out.push_back(c);
      c = subtree_end(c);
    }
    return out;
  }

  GpTree subtree(std::size_t i) const {
    return GpTree(Raw{}, std::vector<Node>(nodes_.begin() + static_cast<std::ptrdiff_t>(i),
                                           nodes_.begin() + static_cast<std::ptrdiff_t>(subtree_end(i))));
  }

  /// Copy with the subtree at i replaced by `donor`.
  GpTree replace_subtree(std::size_t i, std::span<const Node> donor) const {
    const auto end = static_cast<std::ptrdiff_t>(subtree_end(i));
    std::vector<Node> out;
    out.reserve(nodes_.size() - static_cast<std::size_t>(end) + i + donor.size());
    out.insert(out.end(), nodes_.begin(), nodes_.begin() + static_cast<std::ptrdiff_t>(i));
    out.insert(out.end(), donor.begin(), donor.end());
    out.insert(out.end(), nodes_.begin() + end, nodes_.end());
    return GpTree(Raw{}, std::move(out));
  }

  /// Depth of every node below the root (root = 0).
  std::vector<int> node_depths() const {
    std::vector<int> depths(nodes_.size());
    std::vector<int> pending;  // unfilled child slots per open ancestor
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      while (!pending.empty() && pending.back() == 0) pending.pop_back();
      depths[i] = static_cast<int>(pending.size());
      if (!pending.empty()) --pending.back();
      if (const int a = nodes_[i].arity(); a > 0) pending.push_back(a);
    }
    return depths;
  }

  /// Height of the tree; a single leaf has depth 0.
  int depth() const {
    int best = 0;
    int current = 0;
    std::vector<int> pending;
    for (const Node& n : nodes_) {
      best = std::max(best, current);
      const int a = n.arity();
      if (a > 0) {
        pending.push_back(a);
        ++current;
      } else {
        while (!pending.empty() && --pending.back() == 0) {
          pending.pop_back();
          --current;
        }
      }
    }
    return best;
  }

  /// Largest Var index used, or -1 when the tree reads no input.
  int max_var_index() const {
    int best = -1;
    for (const Node& n : nodes_) {
      if (n.symbol == Symbol::Var) best = std::max(best, static_cast<int>(n.var));
    }
    return best;
  }

  friend bool operator==(const GpTree&, const GpTree&) = default;

 private:
  struct Raw {};
  GpTree(Raw, std::vector<Node> nodes) : nodes_(std::move(nodes)) {}

  std::vector<Node> nodes_;
};

inline int depth(const GpTree& tree) { return tree.depth(); }

namespace detail {

inline double eval_at(const GpTree& tree, std::size_t& i, std::span<const double> inputs) {
  const Node& n = tree.node(i++);
  switch (n.arity()) {
    case 0:
      return n.symbol == Symbol::Var ? inputs[n.var] : n.value;
    case 1:
      return apply_unary(n.symbol, eval_at(tree, i, inputs));
    default: {
      const double a = eval_at(tree, i, inputs);
      const double b = eval_at(tree, i, inputs);
      return apply_binary(n.symbol, a, b);
    }
  }
}

}  // namespace detail

/// Evaluates the tree on one input vector. Every operator is total.
inline double eval_tree(const GpTree& tree, std::span<const double> inputs) {
  if (tree.max_var_index() >= static_cast<int>(inputs.size())) {
    throw ValidationError("eval_tree: tree reads v" + std::to_string(tree.max_var_index()) +
                          " but only " + std::to_string(inputs.size()) + " inputs were given");
  }
  std::size_t i = 0;
  return detail::eval_at(tree, i, inputs);
}

/// Column-major fitness-case inputs: column k holds input k of every case.
class InputColumns {
 public:
  InputColumns() = default;
  InputColumns(std::size_t rows, int vars)
      : rows_(rows), vars_(vars), data_(rows * static_cast<std::size_t>(vars)) {}

  std::size_t rows() const { return rows_; }
  int vars() const { return vars_; }
  double& at(std::size_t row, int var) { return data_[static_cast<std::size_t>(var) * rows_ + row]; }
  std::span<const double> column(int var) const {
    return std::span<const double>(data_).subspan(static_cast<std::size_t>(var) * rows_, rows_);
  }

 private:
  std::size_t rows_ = 0;
  int vars_ = 0;
  std::vector<double> data_;
};

/// Evaluates the tree on every row of `columns`, writing into `out`.
///
/// Produces exactly the values eval_tree would give row by row; it only
/// changes the traversal order to process blocks of rows per node.
inline void eval_batch(const GpTree& tree, const InputColumns& columns, std::span<double> out) {
  if (tree.max_var_index() >= columns.vars()) {
    throw ValidationError("eval_batch: tree reads v" + std::to_string(tree.max_var_index()) +
                          " but cases have " + std::to_string(columns.vars()) + " inputs");
  }
  constexpr std::size_t kBlock = 64;
  using Block = std::array<double, kBlock>;
  const auto nodes = tree.nodes();
  // Reverse prefix order: each function finds its first operand on top.
  int needed = 0;
  int height = 0;
  for (std::size_t k = nodes.size(); k-- > 0;) {
    height += 1 - nodes[k].arity();
    needed = std::max(needed, height);
  }
  std::vector<Block> stack(static_cast<std::size_t>(needed));

  for (std::size_t start = 0; start < columns.rows(); start += kBlock) {
    const std::size_t len = std::min(kBlock, columns.rows() - start);
    std::size_t top = 0;
    for (std::size_t k = nodes.size(); k-- > 0;) {
      const Node& n = nodes[k];
      switch (n.arity()) {
        case 0: {
          Block& dst = stack[top++];
          if (n.symbol == Symbol::Var) {
            const auto col = columns.column(n.var).subspan(start, len);
            std::copy(col.begin(), col.end(), dst.begin());
          } else {
            std::fill_n(dst.begin(), len, n.value);
          }
          break;
        }
        case 1: {
          Block& a = stack[top - 1];
          for (std::size_t r = 0; r < len; ++r) a[r] = detail::apply_unary(n.symbol, a[r]);
          break;
        }
        default: {
          const Block& a = stack[top - 1];
          Block& b = stack[top - 2];
          for (std::size_t r = 0; r < len; ++r) b[r] = detail::apply_binary(n.symbol, a[r], b[r]);
          --top;
          break;
        }
      }
    }
    std::copy_n(stack[0].begin(), len, out.begin() + static_cast<std::ptrdiff_t>(start));
  }
}

/// Shortest text that parses back to exactly `v`.
inline std::string format_constant(double v) {
  char buf[40];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

/// Prefix s-expression, e.g. "(add (mul v0 0.5) v3)".
inline std::string to_sexpr(const GpTree& tree) {
  std::string out;
  std::vector<int> pending;
  for (const Node& n : tree.nodes()) {
    if (!out.empty() && out.back() != '(') out += ' ';
    if (n.symbol == Symbol::Var) {
      out += 'v' + std::to_string(n.var);
    } else if (n.symbol == Symbol::Const) {
      out += format_constant(n.value);
    } else {
      out += '(';
      out += symbol_name(n.symbol);
      pending.push_back(n.arity());
      continue;
    }
    while (!pending.empty() && --pending.back() == 0) {
      pending.pop_back();
      out += ')';
    }
  }
  return out;
}

namespace detail {

class SexprParser {
 public:
  explicit SexprParser(std::string_view text) : text_(text) {}

  GpTree parse() {
    std::vector<Node> nodes;
    parse_expr(nodes);
    skip_space();
    if (pos_ != text_.size()) fail("unexpected trailing text");
    return GpTree(std::move(nodes));
  }

 private:
  void parse_expr(std::vector<Node>& nodes) {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    if (text_[pos_] == '(') {
      ++pos_;
      const std::string_view name = token();
      const auto it = std::find_if(kFunctionSet.begin(), kFunctionSet.end(),
                                   [&](Symbol s) { return symbol_name(s) == name; });
      if (it == kFunctionSet.end()) fail("unknown function '" + std::string(name) + "'");
      nodes.push_back(Node::function(*it));
      for (int k = 0; k < arity(*it); ++k) parse_expr(nodes);
      skip_space();
      if (pos_ >= text_.size() || text_[pos_] != ')') {
        fail("expected ')' after " + std::to_string(arity(*it)) + " operand(s) of " +
             std::string(name));
      }
      ++pos_;
      return;
    }
    const std::string_view tok = token();
    if (tok.empty()) fail("expected a terminal");
    if (tok[0] == 'v') {
      int index = 0;
      for (char c : tok.substr(1)) {
        if (c < '0' || c > '9') fail("bad variable '" + std::string(tok) + "'");
        index = index * 10 + (c - '0');
        if (index > 255) fail("variable index too large");
      }
      if (tok.size() < 2) fail("bad variable '" + std::string(tok) + "'");
      nodes.push_back(Node::variable(index));
      return;
    }
    const std::string s(tok);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || !std::isfinite(v)) fail("bad constant '" + s + "'");
    nodes.push_back(Node::constant(v));
  }

  std::string_view token() {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != '(' && text_[pos_] != ')' &&
           !std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
    return text_.substr(start, pos_ - start);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  [[noreturn]] void fail(const std::string& why) const {
    throw FormatError("tree s-expression at offset " + std::to_string(pos_) + ": " + why);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline GpTree parse_sexpr(std::string_view text) { return detail::SexprParser(text).parse(); }

}  // namespace coingp
