#pragma once

#include <optional>
#include <ostream>
#include <string>

#include "solar/env.hpp"
#include "solar/generator.hpp"
#include "solar/grid.hpp"

namespace solar {

/// One character per cell: digits for colors 0-9, '#' for the padding color.
inline std::string render_grid(const Grid& g, const std::string& indent = "  ") {
  std::string out;
  for (int r = 0; r < g.rows(); ++r) {
    out += indent;
    for (int c = 0; c < g.cols(); ++c) {
      const Cell v = g.at(r, c);
      out.push_back(v == kPadColor ? '#' : static_cast<char>('0' + v));
    }
    out.push_back('\n');
  }
  return out;
}

inline std::string render_action(const Action& a) {
  return op_name(a.op) + " (" + std::to_string(op_code(a.op)) + ") sel=[" + std::to_string(a.sel.x) + "," +
         std::to_string(a.sel.y) + "," + std::to_string(a.sel.h) + "," + std::to_string(a.sel.w) + "]";
}

inline void render_step(std::ostream& os, const Episode& ep, std::size_t t) {
  const Step& s = ep.steps[t];
  os << "t=" << t << " " << render_action(s.action) << " reward=" << s.reward
     << " terminated=" << (s.terminated ? "true" : "false") << "\n";
  os << " current " << s.current.rows() << "x" << s.current.cols() << ":\n" << render_grid(s.current);
  if (s.clipboard) {
    os << " clipboard " << s.clipboard->rows() << "x" << s.clipboard->cols() << ":\n" << render_grid(*s.clipboard);
  } else {
    os << " clipboard: none\n";
  }
}

inline void render_episode(std::ostream& os, const Episode& ep, std::optional<std::size_t> only_step = std::nullopt) {
  os << "episode " << ep.trajectory_id << " (" << kind_tag(ep.kind) << ", " << ep.steps.size() << " steps)\n";
  if (!only_step) {
    for (std::size_t i = 0; i < ep.demonstrations.size(); ++i) {
      os << "demo " << i << " input:\n" << render_grid(ep.demonstrations[i].input);
      os << "demo " << i << " output:\n" << render_grid(ep.demonstrations[i].output);
    }
    os << "test input:\n" << render_grid(ep.test_input);
    os << "test output:\n" << render_grid(ep.test_output);
    for (std::size_t t = 0; t < ep.steps.size(); ++t) render_step(os, ep, t);
  } else {
    render_step(os, ep, *only_step);
  }
}

}  // namespace solar
