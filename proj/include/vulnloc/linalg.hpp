#pragma once

#include <Eigen/Dense>

namespace vulnloc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

} // namespace vulnloc
