#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace agcnet {

/// One named trainable tensor plus its gradient accumulator.
struct Param {
  std::string name;
  Eigen::MatrixXd value;
  Eigen::MatrixXd grad;

  Param() = default;
  Param(std::string n, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(n)),
        value(Eigen::MatrixXd::Zero(rows, cols)),
        grad(Eigen::MatrixXd::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(); }
  Eigen::Index size() const { return value.size(); }
};

using ParamRegistry = std::vector<Param*>;

inline void zero_grads(const ParamRegistry& params) {
  for (Param* p : params) p->zero_grad();
}

}  // namespace agcnet
