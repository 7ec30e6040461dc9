#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "coingp/damage.hpp"
#include "coingp/error.hpp"
#include "coingp/fitness.hpp"
#include "coingp/imagery.hpp"
#include "coingp/tree.hpp"

namespace coingp {

/// A trained predictor: the evolved tree, its frozen training-set scaling,
/// and the window shape it was trained for.
struct Predictor {
  GpTree tree;
  ScalingCoefficients scaling;
  Topology topology = Topology::Moore;

  friend bool operator==(const Predictor&, const Predictor&) = default;
};

/// Tree file layout, one item per line:
///
///   (add (mul v0 0.5) v3)
///   a=0.25, b=1.0000000000000002
///   topology=moore
inline std::string to_text(const Predictor& p) {
  return to_sexpr(p.tree) + "\n" + format_scaling(p.scaling) + "\ntopology=" +
         std::string(to_string(p.topology)) + "\n";
}

inline Predictor parse_predictor(std::string_view text) {
  std::vector<std::string_view> lines;
  while (!text.empty()) {
    const std::size_t eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) lines.push_back(line);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
  }
  if (lines.size() != 3 || !lines[2].starts_with("topology=")) {
    throw FormatError("tree file must contain an s-expression, a scaling line and a topology line");
  }
  Predictor p{parse_sexpr(lines[0]), parse_scaling(lines[1]),
              parse_topology(lines[2].substr(std::string_view("topology=").size()))};
  if (p.tree.max_var_index() >= frontier_size(p.topology)) {
    throw ValidationError("tree reads v" + std::to_string(p.tree.max_var_index()) + " but the " +
                          std::string(to_string(p.topology)) + " window has only " +
                          std::to_string(frontier_size(p.topology)) + " inputs");
  }
  return p;
}

inline Predictor read_predictor_file(const std::filesystem::path& path) {
  return parse_predictor(read_file(path));
}

inline void write_predictor_file(const std::filesystem::path& path, const Predictor& p) {
  write_file(path, to_text(p));
}

}  // namespace coingp
