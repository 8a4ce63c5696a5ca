#pragma once

#include <array>
#include <string>
#include <vector>

#include "colsynth/problem_file.hpp"

namespace colsynth {

/**
 * The 3x3 beetle grid. Cells are named s_<row>_<col>, row 0 at the bottom.
 * Colored cells let the beetle pick a direction shared by all cells of the
 * same color; the fountain pushes it to a uniformly random neighbour; the
 * target pays reward 1 once and then moves to an absorbing sink. Moving into
 * a wall leaves the beetle in place.
 */
namespace beetle {

enum Color { Red, Green, Blue, Yellow, Fountain, Target };

inline constexpr std::array<std::array<Color, 3>, 3> kGrid = {{
    {Yellow, Red, Green},
    {Blue, Fountain, Yellow},
    {Blue, Blue, Target},
}};

inline constexpr std::array<const char*, 4> kColorParam = {"d_r", "d_g", "d_b", "d_y"};
inline constexpr std::array<Value, 4> kColorFeature = {0, 3, 1, 2};  // red, green, blue, yellow
inline constexpr std::array<const char*, 4> kActionLabel = {"N", "W", "S", "E"};
inline const std::vector<std::string> kArrows = {"↑", "←", "↓", "→"};

inline std::string cell(int row, int col) { return "s_" + std::to_string(row) + "_" + std::to_string(col); }

/// Cell reached from (row, col) by action a, staying put at walls.
inline std::pair<int, int> move(int row, int col, int a) {
  static constexpr int dr[4] = {1, 0, -1, 0};
  static constexpr int dc[4] = {0, -1, 0, 1};
  const int r = row + dr[a], c = col + dc[a];
  if (r < 0 || r > 2 || c < 0 || c > 2) return {row, col};
  return {r, c};
}

inline const char* start_constraint() {
  return "(or (and (= s_x 0) (= s_y 0)) (and (= s_x 2) (= s_y 0)) (and (= s_x 0) (= s_y 2)))";
}

}  // namespace beetle

inline ProblemFile gen_beetle(bool multi_start) {
  using namespace beetle;
  ProblemFile f;
  for (std::size_t i = 0; i < 4; ++i)
    f.parameters.push_back({kColorParam[i], ParamKind::Controllable, 0, 3, {kColorFeature[i]}});
  f.tau = "(distinct d_b d_y)";
  if (multi_start) {
    f.parameters.push_back({"s_x", ParamKind::Uncontrollable, 0, 2, {}});
    f.parameters.push_back({"s_y", ParamKind::Uncontrollable, 0, 2, {}});
    f.tau = std::string("(and (distinct d_b d_y) ") + start_constraint() + ")";
    ProblemFile::State start;
    start.name = "start";
    const int starts[3][2] = {{0, 0}, {2, 0}, {0, 2}};  // (s_x, s_y)
    for (const auto& xy : starts) {
      ProblemFile::Action a;
      a.label = "start_" + std::to_string(xy[0]) + "_" + std::to_string(xy[1]);
      a.guard = {{"s_x", xy[0]}, {"s_y", xy[1]}};
      a.transitions.push_back({cell(xy[1], xy[0]), "1"});
      start.actions.push_back(std::move(a));
    }
    f.states.push_back(std::move(start));
    f.initial = "start";
  } else {
    f.initial = cell(0, 0);
  }
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 3; ++col) {
      ProblemFile::State s;
      s.name = cell(row, col);
      const Color color = kGrid[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)];
      if (color == Target) {
        s.reward = "1";
        s.actions.push_back({"done", {}, {{"sink", "1"}}});
      } else if (color == Fountain) {
        ProblemFile::Action a{"splash", {}, {}};
        for (int d = 0; d < 4; ++d) {
          auto [r, c] = move(row, col, d);
          a.transitions.push_back({cell(r, c), "1/4"});
        }
        s.actions.push_back(std::move(a));
      } else {
        for (int d = 0; d < 4; ++d) {
          auto [r, c] = move(row, col, d);
          ProblemFile::Action a;
          a.label = kActionLabel[static_cast<std::size_t>(d)];
          a.guard = {{kColorParam[static_cast<std::size_t>(color)], d}};
          a.transitions.push_back({cell(r, c), "1"});
          s.actions.push_back(std::move(a));
        }
      }
      f.states.push_back(std::move(s));
    }
  }
  ProblemFile::State sink;
  sink.name = "sink";
  sink.actions.push_back({"stay", {}, {{"sink", "1"}}});
  f.states.push_back(std::move(sink));
  f.threshold = "1";
  return f;
}

}  // namespace colsynth
