#include "mechforge/optimize.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace mechforge {

SimplexResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective,
                          const Eigen::VectorXd& start, const Eigen::VectorXd& step,
                          double tolerance, int max_evaluations) {
  const Eigen::Index dim = start.size();
  const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;

  std::vector<Eigen::VectorXd> points;
  std::vector<double> values;
  int evaluations = 0;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++evaluations;
    return objective(x);
  };

  points.push_back(start);
  values.push_back(eval(start));
  for (Eigen::Index d = 0; d < dim; ++d) {
    Eigen::VectorXd x = start;
    x[d] += step[d] != 0.0 ? step[d] : 1e-3;
    points.push_back(x);
    values.push_back(eval(x));
  }

  std::vector<std::size_t> order(points.size());
  while (evaluations < max_evaluations) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t best = order.front(), worst = order.back(),
                      second_worst = order[order.size() - 2];
    if (values[worst] - values[best] < tolerance) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
    for (std::size_t k = 0; k + 1 < order.size(); ++k) centroid += points[order[k]];
    centroid /= static_cast<double>(dim);

    Eigen::VectorXd reflected = centroid + alpha * (centroid - points[worst]);
    double f_reflected = eval(reflected);
    if (f_reflected < values[best]) {
      Eigen::VectorXd expanded = centroid + gamma * (reflected - centroid);
      double f_expanded = eval(expanded);
      if (f_expanded < f_reflected) {
        points[worst] = expanded;
        values[worst] = f_expanded;
      } else {
        points[worst] = reflected;
        values[worst] = f_reflected;
      }
      continue;
    }
    if (f_reflected < values[second_worst]) {
      points[worst] = reflected;
      values[worst] = f_reflected;
      continue;
    }
    Eigen::VectorXd contracted = centroid + rho * (points[worst] - centroid);
    double f_contracted = eval(contracted);
    if (f_contracted < values[worst]) {
      points[worst] = contracted;
      values[worst] = f_contracted;
      continue;
    }
    for (std::size_t k = 1; k < order.size(); ++k) {
      points[order[k]] = points[best] + sigma * (points[order[k]] - points[best]);
      values[order[k]] = eval(points[order[k]]);
    }
  }

  std::size_t best = 0;
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k] < values[best]) best = k;
  }
  return SimplexResult{points[best], values[best], evaluations};
}

}  // namespace mechforge
