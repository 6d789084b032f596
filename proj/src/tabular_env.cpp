#include "varpg/tabular_env.hpp"

#include <cmath>
#include <deque>
#include <sstream>

#include "varpg/errors.hpp"

namespace varpg {

const char* const kDefaultMazeText =
    "......\n"
    ".####.\n"
    ".####.\n"
    ".####.\n"
    ".####.\n"
    "S.R..G\n";

GridMaze parse_map(const std::string& text) {
  std::vector<std::string> rows;
  std::string line;
  std::istringstream in(text);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) rows.push_back(line);
  }
  if (rows.empty()) throw map_error("map: empty");

  GridMaze maze;
  maze.height = static_cast<int>(rows.size());
  maze.width = static_cast<int>(rows[0].size());
  int starts = 0, goals = 0;
  for (int r = 0; r < maze.height; ++r) {
    if (static_cast<int>(rows[r].size()) != maze.width)
      throw map_error("map: row " + std::to_string(r) + " has length " +
                      std::to_string(rows[r].size()) + ", expected " + std::to_string(maze.width));
    for (int c = 0; c < maze.width; ++c) {
      const int s = r * maze.width + c;
      switch (rows[r][c]) {
        case '.': maze.cells.push_back(Cell::Free); break;
        case '#': maze.cells.push_back(Cell::Wall); break;
        case 'R': maze.cells.push_back(Cell::Risky); break;
        case 'S':
          maze.cells.push_back(Cell::Start);
          maze.start = s;
          ++starts;
          break;
        case 'G':
          maze.cells.push_back(Cell::Goal);
          maze.goal = s;
          ++goals;
          break;
        default:
          throw map_error(std::string("map: bad character '") + rows[r][c] + "' at row " +
                          std::to_string(r) + " col " + std::to_string(c));
      }
    }
  }
  if (starts != 1) throw map_error("map: need exactly one S, found " + std::to_string(starts));
  if (goals != 1) throw map_error("map: need exactly one G, found " + std::to_string(goals));
  if (shortest_path_moves(maze, false) < 0) throw map_error("map: goal unreachable from start");
  return maze;
}

int shortest_path_moves(const GridMaze& maze, bool avoid_risky) {
  const int n = maze.n_states();
  std::vector<int> dist(n, -1);
  std::deque<int> queue;
  dist[maze.start] = 0;
  queue.push_back(maze.start);
  const int dr[4] = {-1, 1, 0, 0};
  const int dc[4] = {0, 0, -1, 1};
  while (!queue.empty()) {
    const int s = queue.front();
    queue.pop_front();
    if (s == maze.goal) return dist[s];
    const int r = s / maze.width, c = s % maze.width;
    for (int a = 0; a < 4; ++a) {
      const int nr = r + dr[a], nc = c + dc[a];
      if (nr < 0 || nr >= maze.height || nc < 0 || nc >= maze.width) continue;
      const int ns = nr * maze.width + nc;
      if (maze.at(ns) == Cell::Wall) continue;
      if (avoid_risky && maze.at(ns) == Cell::Risky) continue;
      if (dist[ns] < 0) {
        dist[ns] = dist[s] + 1;
        queue.push_back(ns);
      }
    }
  }
  return -1;
}

const char* noise_name(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::None:      return "none";
    case NoiseKind::Gaussian:  return "gaussian";
    case NoiseKind::Pareto:    return "pareto";
    case NoiseKind::Uniform:   return "uniform";
    case NoiseKind::Handcraft: return "handcraft";
  }
  return "?";
}

bool noise_from_name(const std::string& name, NoiseKind& out) {
  for (NoiseKind k : {NoiseKind::None, NoiseKind::Gaussian, NoiseKind::Pareto, NoiseKind::Uniform,
                      NoiseKind::Handcraft}) {
    if (name == noise_name(k)) {
      out = k;
      return true;
    }
  }
  return false;
}

double sample_noise(const NoiseSpec& spec, double step_reward, Rng& rng) {
  switch (spec.kind) {
    case NoiseKind::None:
      return step_reward;
    case NoiseKind::Gaussian:
      return spec.gaussian_mean + spec.gaussian_sd * rng.normal();
    case NoiseKind::Pareto: {
      // Lomax(shape, 1) via inverse cdf; mean 1/(shape-1) = 1/2 at shape 3,
      // so the shifted draw keeps mean -1 with a heavy left tail.
      const double lomax = std::pow(rng.uniform_pos(), -1.0 / spec.pareto_shape) - 1.0;
      return -1.0 - (lomax - 0.5) * spec.pareto_span;
    }
    case NoiseKind::Uniform:
      return rng.uniform(spec.uniform_lo, spec.uniform_hi);
    case NoiseKind::Handcraft: {
      const double u = rng.uniform();
      if (u < 0.95) return rng.uniform(-2.0, 0.0);
      if (u < 0.975) return rng.uniform(-57.0, -56.0);
      return rng.uniform(54.0, 55.0);
    }
  }
  return step_reward;
}

StepResult step(const GridMaze& maze, const NoiseSpec& noise, int state, int action, Rng& rng) {
  if (maze.at(state) == Cell::Goal) throw invalid_input("step: state is terminal");
  if (action < 0 || action > 3) throw invalid_input("step: bad action index");
  const int dr[4] = {-1, 1, 0, 0};
  const int dc[4] = {0, 0, -1, 1};
  const int r = state / maze.width, c = state % maze.width;
  const int nr = r + dr[action], nc = c + dc[action];
  int next = state;
  if (nr >= 0 && nr < maze.height && nc >= 0 && nc < maze.width) {
    const int cand = nr * maze.width + nc;
    if (maze.at(cand) != Cell::Wall) next = cand;
  }
  StepResult out;
  out.next_state = next;
  out.reward = maze.at(next) == Cell::Risky ? sample_noise(noise, maze.step_reward, rng)
                                            : maze.step_reward;
  out.done = maze.at(next) == Cell::Goal;
  return out;
}

Trajectory rollout_episode(const GridMaze& maze, const NoiseSpec& noise,
                           const ActionSampler& policy, Rng& rng) {
  Trajectory traj;
  int state = maze.start;
  traj.states.push_back(state);
  for (int t = 0; t < maze.max_steps; ++t) {
    const int action = policy(state, rng);
    const StepResult res = step(maze, noise, state, action, rng);
    traj.actions.push_back(action);
    traj.rewards.push_back(res.reward);
    traj.states.push_back(res.next_state);
    if (maze.at(res.next_state) == Cell::Risky) traj.visited_risky = true;
    state = res.next_state;
    if (res.done) {
      traj.reached_goal = true;
      break;
    }
  }
  traj.rewards_to_go.assign(traj.rewards.size(), 0.0);
  double rtg = 0.0;
  for (std::size_t t = traj.rewards.size(); t-- > 0;) {
    rtg = traj.rewards[t] + maze.gamma * rtg;
    traj.rewards_to_go[t] = rtg;
  }
  traj.total_return = traj.rewards_to_go.empty() ? 0.0 : traj.rewards_to_go[0];
  return traj;
}

std::vector<Trajectory> rollout_episodes(const GridMaze& maze, const NoiseSpec& noise,
                                         const ActionSampler& policy, std::size_t n, Rng& rng) {
  std::vector<Trajectory> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(rollout_episode(maze, noise, policy, rng));
  return out;
}

double risk_averse_rate(const std::vector<Trajectory>& trajectories) {
  if (trajectories.empty()) throw invalid_input("risk_averse_rate: empty batch");
  std::size_t hits = 0;
  for (const Trajectory& t : trajectories)
    if (t.reached_goal && !t.visited_risky) ++hits;
  return static_cast<double>(hits) / static_cast<double>(trajectories.size());
}

}  // namespace varpg
