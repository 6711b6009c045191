#pragma once

#include <Eigen/Dense>

namespace embalance {

using Vec = Eigen::VectorXd;
using RowVec = Eigen::RowVectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

}  // namespace embalance
