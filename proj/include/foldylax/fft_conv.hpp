#pragma once

#include <fftw3.h>

#include <array>
#include <cstring>
#include <stdexcept>
#include <vector>

#include "foldylax/types.hpp"

namespace foldylax {

/// Translation-invariant 3x3 matrix kernel applied over a regular voxel grid
/// by zero-padded circular convolution:
///     out_i = sum_j K(x_i - x_j) w_j        (j runs over the same index set)
/// The kernel is tabulated once on the padded grid and multiplied in Fourier
/// space. Plans use FFTW_ESTIMATE so results do not depend on runtime tuning.
class GridConvolver {
 public:
  template <class KernelAt>
  GridConvolver(const std::array<int, 3>& dims, double h, KernelAt&& kernel_at,
                const CMat3& self_weight)
      : dims_(dims), pdims_{2 * dims[0], 2 * dims[1], 2 * dims[2]} {
    npad_ = static_cast<std::size_t>(pdims_[0]) * pdims_[1] * pdims_[2];
    for (auto& comp : khat_)
      for (auto& row : comp) row.assign(npad_, Complex(0));
    for (int c = 0; c < 3; ++c) {
      work_[c].assign(npad_, Complex(0));
      out_[c].assign(npad_, Complex(0));
    }
    plan_fwd_ = fftw_plan_dft_3d(pdims_[2], pdims_[1], pdims_[0],
                                 reinterpret_cast<fftw_complex*>(work_[0].data()),
                                 reinterpret_cast<fftw_complex*>(work_[0].data()),
                                 FFTW_FORWARD, FFTW_ESTIMATE);
    plan_bwd_ = fftw_plan_dft_3d(pdims_[2], pdims_[1], pdims_[0],
                                 reinterpret_cast<fftw_complex*>(work_[0].data()),
                                 reinterpret_cast<fftw_complex*>(work_[0].data()),
                                 FFTW_BACKWARD, FFTW_ESTIMATE);
    if (!plan_fwd_ || !plan_bwd_) throw std::runtime_error("GridConvolver: fftw plan failed");

    // Tabulate K on the padded grid in wrap-around order, one kernel
    // evaluation per displacement, then transform each component in place.
    for (int dl = -(dims[2] - 1); dl <= dims[2] - 1; ++dl)
      for (int dj = -(dims[1] - 1); dj <= dims[1] - 1; ++dj)
        for (int di = -(dims[0] - 1); di <= dims[0] - 1; ++di) {
          const CMat3 k = (di == 0 && dj == 0 && dl == 0)
                              ? self_weight
                              : CMat3(kernel_at(h * Vec3(di, dj, dl)));
          const std::size_t p = pidx(wrap(di, pdims_[0]), wrap(dj, pdims_[1]), wrap(dl, pdims_[2]));
          for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) khat_[a][b][p] = k(a, b);
        }
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        fftw_execute_dft(plan_fwd_, reinterpret_cast<fftw_complex*>(khat_[a][b].data()),
                         reinterpret_cast<fftw_complex*>(khat_[a][b].data()));
  }

  GridConvolver(const GridConvolver&) = delete;
  GridConvolver& operator=(const GridConvolver&) = delete;

  ~GridConvolver() {
    fftw_destroy_plan(plan_fwd_);
    fftw_destroy_plan(plan_bwd_);
  }

  /// idx/w/out are parallel arrays over the occupied voxels.
  void apply(const std::vector<std::array<int, 3>>& idx, const std::vector<CVec3>& w,
             std::vector<CVec3>& out) const {
    for (int c = 0; c < 3; ++c) std::fill(work_[c].begin(), work_[c].end(), Complex(0));
    for (std::size_t m = 0; m < idx.size(); ++m) {
      const std::size_t p = pidx(idx[m][0], idx[m][1], idx[m][2]);
      for (int c = 0; c < 3; ++c) work_[c][p] = w[m][c];
    }
    for (int c = 0; c < 3; ++c)
      fftw_execute_dft(plan_fwd_, reinterpret_cast<fftw_complex*>(work_[c].data()),
                       reinterpret_cast<fftw_complex*>(work_[c].data()));
    for (int a = 0; a < 3; ++a) {
      Complex* dst = out_[a].data();
      const Complex* k0 = khat_[a][0].data();
      const Complex* k1 = khat_[a][1].data();
      const Complex* k2 = khat_[a][2].data();
      const Complex* w0 = work_[0].data();
      const Complex* w1 = work_[1].data();
      const Complex* w2 = work_[2].data();
      for (std::size_t p = 0; p < npad_; ++p)
        dst[p] = k0[p] * w0[p] + k1[p] * w1[p] + k2[p] * w2[p];
      fftw_execute_dft(plan_bwd_, reinterpret_cast<fftw_complex*>(out_[a].data()),
                       reinterpret_cast<fftw_complex*>(out_[a].data()));
    }
    out.resize(idx.size());
    const double scale = 1.0 / static_cast<double>(npad_);
    for (std::size_t m = 0; m < idx.size(); ++m) {
      const std::size_t p = pidx(idx[m][0], idx[m][1], idx[m][2]);
      out[m] = CVec3(out_[0][p], out_[1][p], out_[2][p]) * scale;
    }
  }

  std::size_t padded_size() const { return npad_; }

 private:
  static int wrap(int d, int n) { return d >= 0 ? d : d + n; }
  std::size_t pidx(int i, int j, int l) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(pdims_[0]) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(pdims_[1]) * l);
  }

  std::array<int, 3> dims_;
  std::array<int, 3> pdims_;
  std::size_t npad_ = 0;
  std::array<std::array<std::vector<Complex>, 3>, 3> khat_;
  mutable std::array<std::vector<Complex>, 3> work_;
  mutable std::array<std::vector<Complex>, 3> out_;
  fftw_plan plan_fwd_ = nullptr;
  fftw_plan plan_bwd_ = nullptr;
};

/// Reference O(N^2) evaluation of the same sum; used for cross-checks and
/// for point sets that do not live on a common grid.
template <class KernelAt>
void direct_kernel_apply(const std::vector<Vec3>& centers, const std::vector<CVec3>& w,
                         KernelAt&& kernel_at, const CMat3& self_weight,
                         std::vector<CVec3>& out) {
  const std::size_t n = centers.size();
  out.assign(n, CVec3::Zero());
#pragma omp parallel for schedule(static)
  for (long long ii = 0; ii < static_cast<long long>(n); ++ii) {
    const std::size_t i = static_cast<std::size_t>(ii);
    CVec3 acc = self_weight * w[i];
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      acc += kernel_at(centers[i] - centers[j]) * w[j];
    }
    out[i] = acc;
  }
}

}  // namespace foldylax
