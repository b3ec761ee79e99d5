// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

namespace tde
{

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

}  // namespace tde
