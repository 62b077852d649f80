#include "focus/hydro.hpp"

#include <cmath>
#include <numbers>

#include "focus/error.hpp"

namespace focus::hydro {

bool is_valid_code(int code) {
  if (code == kSink) return true;
  for (const auto& s : kSteps) {
    if (s.code == code) return true;
  }
  return false;
}

std::optional<Step> step_for(int code) {
  for (const auto& s : kSteps) {
    if (s.code == code) return s;
  }
  return std::nullopt;
}

int mirror_code(int code) {
  switch (code) {
    case kEast: return kWest;
    case kWest: return kEast;
    case kNorthEast: return kNorthWest;
    case kNorthWest: return kNorthEast;
    case kSouthEast: return kSouthWest;
    case kSouthWest: return kSouthEast;
    default: return code;
  }
}

std::optional<GridIndex> downstream_of(const RasterGrid& dirs, GridIndex cell) {
  const auto s = step_for(static_cast<int>(dirs.at(cell)));
  if (!s) return std::nullopt;
  GridIndex next{cell.row + s->drow, cell.col + s->dcol};
  if (!dirs.contains(next)) return std::nullopt;
  return next;
}

RasterGrid d8_flow_direction(const RasterGrid& dem) {
  RasterGrid dirs(dem.width(), dem.height(), dem.cell_size(), dem.origin(), 0.0, dem.nodata());
  const double inv_diag = 1.0 / std::numbers::sqrt2;
  for (int r = 0; r < dem.height(); ++r) {
    for (int c = 0; c < dem.width(); ++c) {
      const double z = dem.at(r, c);
      if (dem.is_nodata(z)) throw ValidationError("d8_flow_direction: DEM contains nodata");
      double best = 0.0;
      int best_code = kSink;
      for (const auto& s : kSteps) {
        const int rr = r + s.drow;
        const int cc = c + s.dcol;
        if (!dem.contains(rr, cc)) continue;
        double drop = z - dem.at(rr, cc);
        if (s.drow != 0 && s.dcol != 0) drop *= inv_diag;
        if (drop > best) {
          best = drop;
          best_code = s.code;
        }
      }
      dirs.at(r, c) = best_code;
    }
  }
  return dirs;
}

RasterGrid flow_accumulation(const RasterGrid& dirs) {
  const int w = dirs.width();
  const int h = dirs.height();
  const std::size_t n = dirs.size();
  std::vector<int> indegree(n, 0);
  std::vector<std::int64_t> next(n, -1);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (auto d = downstream_of(dirs, {r, c})) {
        const std::size_t j = dirs.index(d->row, d->col);
        next[dirs.index(r, c)] = static_cast<std::int64_t>(j);
        ++indegree[j];
      }
    }
  }
  // Kahn's algorithm; the queue is a plain vector consumed front to back so
  // the processing order (and the floating point sums) is fixed.
  std::vector<std::size_t> order;
  order.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (indegree[i] == 0) order.push_back(i);
  }
  std::vector<double> acc(n, 0.0);
  for (std::size_t head = 0; head < order.size(); ++head) {
    const std::size_t i = order[head];
    if (next[i] < 0) continue;
    const auto j = static_cast<std::size_t>(next[i]);
    acc[j] += acc[i] + 1.0;
    if (--indegree[j] == 0) order.push_back(j);
  }
  if (order.size() != n) {
    for (std::size_t i = 0; i < n; ++i) {
      if (indegree[i] > 0) {
        throw CycleError("flow_accumulation: cycle through cell (row " + std::to_string(i / w) + ", col " +
                         std::to_string(i % w) + ")");
      }
    }
  }
  RasterGrid out(w, h, dirs.cell_size(), dirs.origin(), 0.0, dirs.nodata());
  std::copy(acc.begin(), acc.end(), out.values().begin());
  return out;
}

std::vector<GridIndex> downstream_path(const RasterGrid& dirs, GridIndex seed) {
  if (!dirs.contains(seed)) throw OutOfBoundsError("downstream_path: seed outside the grid");
  std::vector<GridIndex> path;
  std::vector<std::uint8_t> seen(dirs.size(), 0);
  seen[dirs.index(seed.row, seed.col)] = 1;
  GridIndex cur = seed;
  while (auto nxt = downstream_of(dirs, cur)) {
    auto& flag = seen[dirs.index(nxt->row, nxt->col)];
    if (flag) {
      throw CycleError("downstream_path: cycle through cell (row " + std::to_string(nxt->row) + ", col " +
                       std::to_string(nxt->col) + ")");
    }
    flag = 1;
    path.push_back(*nxt);
    cur = *nxt;
  }
  return path;
}

RasterGrid downstream_mask(const RasterGrid& dirs, GridIndex seed) {
  RasterGrid mask(dirs.width(), dirs.height(), dirs.cell_size(), dirs.origin(), 0.0, dirs.nodata());
  for (const auto& ix : downstream_path(dirs, seed)) mask.at(ix) = 1.0;
  return mask;
}

void validate_flow_directions(const RasterGrid& dirs) {
  for (int r = 0; r < dirs.height(); ++r) {
    for (int c = 0; c < dirs.width(); ++c) {
      const double v = dirs.at(r, c);
      const int code = static_cast<int>(v);
      if (static_cast<double>(code) != v || !is_valid_code(code)) {
        throw ValidationError("flow direction grid holds invalid code " + std::to_string(v));
      }
      if (auto s = step_for(code); s && !dirs.contains(r + s->drow, c + s->dcol)) {
        throw ValidationError("flow direction at (row " + std::to_string(r) + ", col " + std::to_string(c) +
                              ") leaves the grid");
      }
    }
  }
}

RasterGrid clip_outward_directions(RasterGrid dirs) {
  for (int r = 0; r < dirs.height(); ++r) {
    for (int c = 0; c < dirs.width(); ++c) {
      if (auto s = step_for(static_cast<int>(dirs.at(r, c))); s && !dirs.contains(r + s->drow, c + s->dcol)) {
        dirs.at(r, c) = kSink;
      }
    }
  }
  return dirs;
}

}  // namespace focus::hydro
