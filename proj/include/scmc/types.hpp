#ifndef SCMC_TYPES_HPP
#define SCMC_TYPES_HPP

#include <Eigen/Dense>

namespace scmc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

}  // namespace scmc

#endif  // SCMC_TYPES_HPP
