#pragma once

#include <Eigen/Dense>

#include <cstdint>

namespace csde {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

}  // namespace csde
