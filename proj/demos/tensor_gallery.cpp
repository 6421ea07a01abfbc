// Polarization-tensor gallery: analytic and numeric routes side by side.

#include <iostream>

#include "foldylax/tensors.hpp"

using namespace foldylax;

namespace {

void print3(const char* label, const CMat3& m) {
  std::cout << label << " (real part):\n";
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) std::cout << "  " << m(i, j).real();
    std::cout << "\n";
  }
}

}  // namespace

int main() {
  const CMat3 contrast = 2.0 * CMat3::Identity();  // eps = 3

  print3("ball, analytic", aniso_tensor_ball(contrast, 1.0));
  std::cout << "  (exact diagonal 8 pi / 5 = " << 8.0 * pi / 5.0 << ")\n\n";

  const VoxelMask ball = voxelize_ball(Vec3::Zero(), 1.0, 1.0 / 12.0);
  print3("ball, volume solve at h = r/12", aniso_tensor_numeric(ball, contrast));
  std::cout << "\n";

  print3("prolate spheroid (1,1,2), analytic",
         aniso_tensor_spheroid(contrast, Vec3(1.0, 1.0, 2.0)));
  std::cout << "\n";

  const VoxelMask blob = voxelize_lblob(Vec3::Zero(), 1.0, 1.0 / 16.0);
  print3("L-shaped blob, volume solve", aniso_tensor_numeric(blob, contrast));
  std::cout << "\n";

  const PecTensors pec = pec_tensors_numeric(icosphere(1.0, 3));
  std::cout << "PEC unit sphere (1280 panels):\n";
  std::cout << "  P diagonal ~ " << pec.P(0, 0) << "  (exact -4 pi = " << -4.0 * pi << ")\n";
  std::cout << "  T diagonal ~ " << pec.T(0, 0) << "  (exact  2 pi = " << 2.0 * pi << ")\n";
  return 0;
}
