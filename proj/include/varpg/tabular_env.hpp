#ifndef VARPG_TABULAR_ENV_HPP
#define VARPG_TABULAR_ENV_HPP

#include <functional>
#include <string>
#include <vector>

#include "varpg/rng.hpp"

namespace varpg {

enum class Cell : char { Free, Wall, Start, Goal, Risky };

// Grid maze. States are flat indices row*width+col; actions are
// 0=up, 1=down, 2=left, 3=right. Blocked or off-grid moves keep the agent in
// place. Every step pays `step_reward`, except that a step ending on a Risky
// cell pays a noise draw instead (noise mean matches step_reward).
struct GridMaze {
  int width = 0;
  int height = 0;
  std::vector<Cell> cells;  // row-major
  int start = 0;
  int goal = 0;
  double gamma = 0.999;
  int max_steps = 100;
  double step_reward = -1.0;

  int n_states() const { return width * height; }
  Cell at(int s) const { return cells[static_cast<std::size_t>(s)]; }
};

// Parses an ASCII map ('#' wall, '.' free, 'S' start, 'G' goal, 'R' risky).
// Throws map_error with row/column diagnostics on malformed input, missing or
// duplicate S/G, or an unreachable goal.
GridMaze parse_map(const std::string& text);

// The 6x6 default layout: bottom row `S.R..G`, interior walled, perimeter
// corridor as the 15-move risk-averse detour around the 5-move risky path.
extern const char* const kDefaultMazeText;

// BFS distance from start to goal; when avoid_risky is set, risky cells are
// treated as walls. Returns -1 if unreachable.
int shortest_path_moves(const GridMaze& maze, bool avoid_risky);

enum class NoiseKind { None, Gaussian, Pareto, Uniform, Handcraft };

// Risky-cell reward distribution; each kind has mean step_reward (-1):
//   Gaussian  -1 + 20 Z
//   Pareto    -1 - 20 (L - 1/2), L ~ Lomax(shape 3, scale 1), E L = 1/2
//   Uniform   U[-25, 23]
//   Handcraft U[-2,0] w.p. 0.95, U[-57,-56] w.p. 0.025, U[54,55] w.p. 0.025
struct NoiseSpec {
  NoiseKind kind = NoiseKind::None;
  double gaussian_mean = -1.0;
  double gaussian_sd = 20.0;
  double pareto_shape = 3.0;
  double pareto_span = 20.0;
  double uniform_lo = -25.0;
  double uniform_hi = 23.0;
};

const char* noise_name(NoiseKind kind);
bool noise_from_name(const std::string& name, NoiseKind& out);

// One draw from the risky-cell reward distribution (step_reward for None).
double sample_noise(const NoiseSpec& spec, double step_reward, Rng& rng);

struct StepResult {
  int next_state = 0;
  double reward = 0.0;
  bool done = false;  // goal reached; the step budget is enforced by rollout
};

StepResult step(const GridMaze& maze, const NoiseSpec& noise, int state, int action, Rng& rng);

struct Trajectory {
  std::vector<int> states;        // s_0 .. s_T
  std::vector<int> actions;       // a_0 .. a_{T-1}
  std::vector<double> rewards;    // r_1 .. r_T
  std::vector<double> rewards_to_go;
  double total_return = 0.0;      // gamma-discounted
  bool visited_risky = false;
  bool reached_goal = false;

  std::size_t length() const { return actions.size(); }
};

using ActionSampler = std::function<int(int state, Rng& rng)>;

Trajectory rollout_episode(const GridMaze& maze, const NoiseSpec& noise,
                           const ActionSampler& policy, Rng& rng);

std::vector<Trajectory> rollout_episodes(const GridMaze& maze, const NoiseSpec& noise,
                                         const ActionSampler& policy, std::size_t n, Rng& rng);

// Fraction of episodes that reached the goal without touching a risky cell.
double risk_averse_rate(const std::vector<Trajectory>& trajectories);

}  // namespace varpg

#endif  // VARPG_TABULAR_ENV_HPP
