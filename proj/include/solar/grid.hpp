#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace solar {

using Cell = std::uint8_t;

/// Highest playable ARC color.
inline constexpr Cell kMaxPlayableColor = 9;
/// Fill color for stored post-termination states. Never appears in a live episode.
inline constexpr Cell kPadColor = 10;

enum class GridErrc {
  InvalidGrid,
  SelectionOutOfBounds,
  NonSquareRotation,
  ExceedsMaxDims,
  ClipboardDimMismatch,
  EmptyClipboard,
  InvalidColor,
};

inline const char* to_string(GridErrc e) {
  switch (e) {
    case GridErrc::InvalidGrid: return "InvalidGrid";
    case GridErrc::SelectionOutOfBounds: return "SelectionOutOfBounds";
    case GridErrc::NonSquareRotation: return "NonSquareRotation";
    case GridErrc::ExceedsMaxDims: return "ExceedsMaxDims";
    case GridErrc::ClipboardDimMismatch: return "ClipboardDimMismatch";
    case GridErrc::EmptyClipboard: return "EmptyClipboard";
    case GridErrc::InvalidColor: return "InvalidColor";
  }
  return "Unknown";
}

class GridError : public std::runtime_error {
 public:
  GridError(GridErrc code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  GridErrc code() const noexcept { return code_; }

 private:
  GridErrc code_;
};

struct Dims {
  int rows = 0;
  int cols = 0;

  friend bool operator==(const Dims&, const Dims&) = default;
};

/// Bounding box. x indexes rows, y indexes columns; h and w are extents minus one,
/// so the bottom-right corner is (x + h, y + w).
struct Selection {
  int x = 0;
  int y = 0;
  int h = 0;
  int w = 0;

  int rows() const { return h + 1; }
  int cols() const { return w + 1; }
  int bottom() const { return x + h; }
  int right() const { return y + w; }
  bool is_square() const { return h == w; }
  bool well_formed() const { return x >= 0 && y >= 0 && h >= 0 && w >= 0; }

  friend bool operator==(const Selection&, const Selection&) = default;
};

/// Row-major rectangular matrix of colors 0..10.
class Grid {
 public:
  Grid() = default;

  Grid(int rows, int cols, Cell fill = 0) : rows_(rows), cols_(cols) {
    if (rows < 1 || cols < 1) {
      throw GridError(GridErrc::InvalidGrid, "dimensions must be positive");
    }
    if (fill > kPadColor) throw GridError(GridErrc::InvalidColor, "fill color > 10");
    cells_.assign(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), fill);
  }

  Grid(int rows, int cols, std::vector<Cell> cells)
      : rows_(rows), cols_(cols), cells_(std::move(cells)) {
    if (rows < 1 || cols < 1) {
      throw GridError(GridErrc::InvalidGrid, "dimensions must be positive");
    }
    if (cells_.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
      throw GridError(GridErrc::InvalidGrid, "cell count does not match dimensions");
    }
    for (Cell c : cells_) {
      if (c > kPadColor) throw GridError(GridErrc::InvalidColor, "cell value > 10");
    }
  }

  /// Builds a grid from nested rows; all rows must have equal length.
  static Grid from_rows(const std::vector<std::vector<int>>& rows) {
    if (rows.empty() || rows.front().empty()) {
      throw GridError(GridErrc::InvalidGrid, "empty grid");
    }
    const int n_rows = static_cast<int>(rows.size());
    const int n_cols = static_cast<int>(rows.front().size());
    std::vector<Cell> cells;
    cells.reserve(rows.size() * rows.front().size());
    for (const auto& row : rows) {
      if (static_cast<int>(row.size()) != n_cols) {
        throw GridError(GridErrc::InvalidGrid, "ragged rows");
      }
      for (int v : row) {
        if (v < 0 || v > kPadColor) throw GridError(GridErrc::InvalidColor, "cell value out of range");
        cells.push_back(static_cast<Cell>(v));
      }
    }
    return Grid(n_rows, n_cols, std::move(cells));
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  Dims dims() const { return {rows_, cols_}; }
  bool empty() const { return cells_.empty(); }

  Cell at(int r, int c) const { return cells_[index(r, c)]; }
  Cell& at(int r, int c) { return cells_[index(r, c)]; }

  const std::vector<Cell>& cells() const { return cells_; }

  bool contains(const Selection& sel) const {
    return sel.well_formed() && sel.bottom() < rows_ && sel.right() < cols_;
  }

  /// True when every cell is an ARC color 0..9.
  bool playable() const {
    return !cells_.empty() &&
           std::all_of(cells_.begin(), cells_.end(), [](Cell c) { return c <= kMaxPlayableColor; });
  }

  Selection whole() const { return {0, 0, rows_ - 1, cols_ - 1}; }

  std::vector<std::vector<int>> to_rows() const {
    std::vector<std::vector<int>> out(static_cast<std::size_t>(rows_));
    for (int r = 0; r < rows_; ++r) {
      out[r].reserve(static_cast<std::size_t>(cols_));
      for (int c = 0; c < cols_; ++c) out[r].push_back(at(r, c));
    }
    return out;
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t index(int r, int c) const {
    return static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(c);
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<Cell> cells_;
};

enum class RegionTransform { FlipV, FlipH, Rotate90, Rotate270 };

enum class MoveDirection { Up, Down, Left, Right };

namespace detail {

inline void require_inside(const Grid& grid, const Selection& sel) {
  if (!grid.contains(sel)) {
    throw GridError(GridErrc::SelectionOutOfBounds,
                    "selection (" + std::to_string(sel.x) + "," + std::to_string(sel.y) + "," +
                        std::to_string(sel.h) + "," + std::to_string(sel.w) + ") outside " +
                        std::to_string(grid.rows()) + "x" + std::to_string(grid.cols()) + " grid");
  }
}

inline void require_playable_color(int color) {
  if (color < 0 || color > kMaxPlayableColor) {
    throw GridError(GridErrc::InvalidColor, "color " + std::to_string(color) + " is not in 0..9");
  }
}

}  // namespace detail

/// FlipV reverses row order inside the selection, FlipH reverses column order.
/// Rotate90 is counterclockwise, Rotate270 clockwise; both need a square selection.
inline Grid transform_region(const Grid& grid, const Selection& sel, RegionTransform kind) {
  detail::require_inside(grid, sel);
  const bool rotation = kind == RegionTransform::Rotate90 || kind == RegionTransform::Rotate270;
  if (rotation && !sel.is_square()) {
    throw GridError(GridErrc::NonSquareRotation, "rotation needs h == w");
  }
  Grid out = grid;
  const int n_r = sel.rows();
  const int n_c = sel.cols();
  for (int i = 0; i < n_r; ++i) {
    for (int j = 0; j < n_c; ++j) {
      int src_i = i;
      int src_j = j;
      switch (kind) {
        case RegionTransform::FlipV: src_i = n_r - 1 - i; break;
        case RegionTransform::FlipH: src_j = n_c - 1 - j; break;
        case RegionTransform::Rotate90:
          src_i = j;
          src_j = n_c - 1 - i;
          break;
        case RegionTransform::Rotate270:
          src_i = n_r - 1 - j;
          src_j = i;
          break;
      }
      out.at(sel.x + i, sel.y + j) = grid.at(sel.x + src_i, sel.y + src_j);
    }
  }
  return out;
}

/// New dims are (x + h + 1, y + w + 1). Old content stays top-left aligned and is
/// cropped when shrinking; exposed cells are 0.
inline Grid resize_grid(const Grid& grid, const Selection& sel, Dims max_dims) {
  if (!sel.well_formed()) {
    throw GridError(GridErrc::SelectionOutOfBounds, "negative selection component");
  }
  const int new_rows = sel.x + sel.h + 1;
  const int new_cols = sel.y + sel.w + 1;
  if (new_rows > max_dims.rows || new_cols > max_dims.cols) {
    throw GridError(GridErrc::ExceedsMaxDims, std::to_string(new_rows) + "x" + std::to_string(new_cols) +
                                                  " exceeds " + std::to_string(max_dims.rows) + "x" +
                                                  std::to_string(max_dims.cols));
  }
  Grid out(new_rows, new_cols, 0);
  const int keep_r = std::min(new_rows, grid.rows());
  const int keep_c = std::min(new_cols, grid.cols());
  for (int r = 0; r < keep_r; ++r) {
    for (int c = 0; c < keep_c; ++c) out.at(r, c) = grid.at(r, c);
  }
  return out;
}

inline Grid copy_region(const Grid& grid, const Selection& sel) {
  detail::require_inside(grid, sel);
  std::vector<Cell> cells;
  cells.reserve(static_cast<std::size_t>(sel.rows()) * static_cast<std::size_t>(sel.cols()));
  for (int r = sel.x; r <= sel.bottom(); ++r) {
    for (int c = sel.y; c <= sel.right(); ++c) cells.push_back(grid.at(r, c));
  }
  return Grid(sel.rows(), sel.cols(), std::move(cells));
}

inline Grid paste_region(const Grid& grid, const std::optional<Grid>& clip, const Selection& sel) {
  if (!clip) throw GridError(GridErrc::EmptyClipboard, "nothing to paste");
  detail::require_inside(grid, sel);
  if (clip->rows() != sel.rows() || clip->cols() != sel.cols()) {
    throw GridError(GridErrc::ClipboardDimMismatch,
                    "clipboard " + std::to_string(clip->rows()) + "x" + std::to_string(clip->cols()) +
                        " vs selection " + std::to_string(sel.rows()) + "x" + std::to_string(sel.cols()));
  }
  Grid out = grid;
  for (int r = 0; r < sel.rows(); ++r) {
    for (int c = 0; c < sel.cols(); ++c) out.at(sel.x + r, sel.y + c) = clip->at(r, c);
  }
  return out;
}

/// Recolors the 4-connected same-color region that contains the selection's top-left cell.
inline Grid flood_fill(const Grid& grid, const Selection& sel, int color) {
  detail::require_inside(grid, sel);
  detail::require_playable_color(color);
  Grid out = grid;
  const Cell target = grid.at(sel.x, sel.y);
  const auto fill = static_cast<Cell>(color);
  if (target == fill) return out;
  std::vector<std::pair<int, int>> stack{{sel.x, sel.y}};
  out.at(sel.x, sel.y) = fill;
  while (!stack.empty()) {
    const auto [r, c] = stack.back();
    stack.pop_back();
    constexpr int kDr[] = {-1, 1, 0, 0};
    constexpr int kDc[] = {0, 0, -1, 1};
    for (int k = 0; k < 4; ++k) {
      const int nr = r + kDr[k];
      const int nc = c + kDc[k];
      if (nr < 0 || nc < 0 || nr >= out.rows() || nc >= out.cols()) continue;
      if (out.at(nr, nc) != target) continue;
      out.at(nr, nc) = fill;
      stack.emplace_back(nr, nc);
    }
  }
  return out;
}

/// Sets every selected cell to color.
inline Grid recolor_region(const Grid& grid, const Selection& sel, int color) {
  detail::require_inside(grid, sel);
  detail::require_playable_color(color);
  Grid out = grid;
  for (int r = sel.x; r <= sel.bottom(); ++r) {
    for (int c = sel.y; c <= sel.right(); ++c) out.at(r, c) = static_cast<Cell>(color);
  }
  return out;
}

/// Shifts selection contents one cell; content leaving the box is dropped and
/// vacated cells become 0. Cells outside the box are untouched.
inline Grid move_region(const Grid& grid, const Selection& sel, MoveDirection dir) {
  detail::require_inside(grid, sel);
  Grid out = grid;
  int dr = 0;
  int dc = 0;
  switch (dir) {
    case MoveDirection::Up: dr = -1; break;
    case MoveDirection::Down: dr = 1; break;
    case MoveDirection::Left: dc = -1; break;
    case MoveDirection::Right: dc = 1; break;
  }
  for (int r = sel.x; r <= sel.bottom(); ++r) {
    for (int c = sel.y; c <= sel.right(); ++c) {
      const int src_r = r - dr;
      const int src_c = c - dc;
      const bool inside = src_r >= sel.x && src_r <= sel.bottom() && src_c >= sel.y && src_c <= sel.right();
      out.at(r, c) = inside ? grid.at(src_r, src_c) : Cell{0};
    }
  }
  return out;
}

/// Vertical stack: top rows first, then bottom. Column counts must agree.
inline Grid stack_vertical(const Grid& top, const Grid& bottom) {
  if (top.cols() != bottom.cols()) throw GridError(GridErrc::InvalidGrid, "column mismatch in stack");
  std::vector<Cell> cells = top.cells();
  cells.insert(cells.end(), bottom.cells().begin(), bottom.cells().end());
  return Grid(top.rows() + bottom.rows(), top.cols(), std::move(cells));
}

}  // namespace solar
