/******************************************************************************
 *
 * pdfluids
 * Copyright 2026 The pdfluids Authors
 *
 * This program is free software, distributed under the terms of the
 * Apache License, Version 2.0
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Separable, spatially varying, obstacle-aware Gaussian blur of MAC velocities
 *
 ******************************************************************************/
#include "pdfluids/blur.hpp"

#include <cmath>
#include <map>

#include "pdfluids/parallel.hpp"

namespace pdfluids {

std::vector<double> gaussian_taps(double radius)
{
  if (radius < 0.0)
    throw InvalidArgument("blur radius must be non-negative");
  if (radius == 0.0)
    return {1.0};
  const int half = static_cast<int>(std::ceil(3.0 * radius));
  std::vector<double> taps(2 * half + 1);
  for (int t = -half; t <= half; ++t)
    taps[t + half] = std::exp(-static_cast<double>(t) * t / (2.0 * radius * radius));
  return taps;
}

std::vector<char> blur_sample_mask(const CellFlags& flags)
{
  VelocityField layout(flags.dims);
  std::vector<char> mask(layout.data.size(), 0);
  for_each_face(layout, [&](int axis, int i, int j, int k, std::size_t idx) {
    const auto fc = face_cells(axis, i, j, k);
    mask[idx] = !flags.is_solid(fc.lo[0], fc.lo[1], fc.lo[2]) &&
                !flags.is_solid(fc.hi[0], fc.hi[1], fc.hi[2]);
  });
  return mask;
}

VelocityField face_average(const ScalarField& cell_values)
{
  const GridDims& d = cell_values.dims;
  VelocityField out(d);
  for_each_face(out, [&](int axis, int i, int j, int k, std::size_t idx) {
    const auto fc = face_cells(axis, i, j, k);
    double s = 0.0;
    int n = 0;
    if (d.contains_cell(fc.lo[0], fc.lo[1], fc.lo[2])) {
      s += cell_values.at(fc.lo[0], fc.lo[1], fc.lo[2]);
      ++n;
    }
    if (d.contains_cell(fc.hi[0], fc.hi[1], fc.hi[2])) {
      s += cell_values.at(fc.hi[0], fc.hi[1], fc.hi[2]);
      ++n;
    }
    out.data[idx] = n ? s / n : 0.0;
  });
  return out;
}

namespace {

class KernelCache {
 public:
  const std::vector<double>& get(double radius)
  {
    auto it = cache_.find(radius);
    if (it == cache_.end())
      it = cache_.emplace(radius, gaussian_taps(radius)).first;
    return it->second;
  }

 private:
  std::map<double, std::vector<double>> cache_;
};

// One 1D pass of component `axis` along direction `dir`, in place via `out`.
void blur_pass(std::span<const double> in,
               std::span<double> out,
               std::span<const double> face_radius,
               std::span<const char> mask,
               const std::array<int, 3>& e,
               int dir,
               bool transpose)
{
  const std::size_t stride = dir == 0 ? 1
                             : dir == 1
                                 ? static_cast<std::size_t>(e[0])
                                 : static_cast<std::size_t>(e[0]) * static_cast<std::size_t>(e[1]);
  const int len = e[dir];
  // Lines along `dir` are enumerated by the two remaining coordinates.
  const int o1 = dir == 0 ? 1 : 0;
  const int o2 = dir == 2 ? 1 : 2;
  const std::size_t lines = static_cast<std::size_t>(e[o1]) * e[o2];

  if (transpose)
    std::fill(out.begin(), out.end(), 0.0);

  parallel_for(0, lines, [&](std::size_t line) {
    KernelCache kernels;
    std::array<int, 3> c{};
    c[o1] = static_cast<int>(line % e[o1]);
    c[o2] = static_cast<int>(line / e[o1]);
    c[dir] = 0;
    const std::size_t base =
        static_cast<std::size_t>(c[0]) +
        static_cast<std::size_t>(e[0]) *
            (static_cast<std::size_t>(c[1]) + static_cast<std::size_t>(e[1]) * c[2]);
    for (int s = 0; s < len; ++s) {
      const std::size_t at = base + s * stride;
      const double r = face_radius[at];
      if (!mask[at] || r == 0.0) {
        if (transpose)
          out[at] += in[at];
        else
          out[at] = in[at];
        continue;
      }
      const auto& taps = kernels.get(r);
      const int half = static_cast<int>(taps.size() / 2);
      double wsum = 0.0;
      for (int t = -half; t <= half; ++t) {
        const int q = s + t;
        if (q < 0 || q >= len || !mask[base + q * stride])
          continue;
        wsum += taps[t + half];
      }
      if (transpose) {
        const double v = in[at] / wsum;
        for (int t = -half; t <= half; ++t) {
          const int q = s + t;
          if (q < 0 || q >= len || !mask[base + q * stride])
            continue;
          out[base + q * stride] += taps[t + half] * v;
        }
      }
      else {
        double acc = 0.0;
        for (int t = -half; t <= half; ++t) {
          const int q = s + t;
          if (q < 0 || q >= len || !mask[base + q * stride])
            continue;
          acc += taps[t + half] * in[base + q * stride];
        }
        out[at] = acc / wsum;
      }
    }
  }, 64);
}

}  // namespace

VelocityField blur_obstacle_aware(const VelocityField& field,
                                  const ScalarField& radius,
                                  const CellFlags& flags,
                                  bool transpose)
{
  require_same_dims(field.dims, radius.dims, "blur");
  require_same_dims(field.dims, flags.dims, "blur");
  const GridDims& d = field.dims;
  for (std::size_t c = 0; c < radius.values.size(); ++c) {
    if (radius.values[c] < 0.0 || !std::isfinite(radius.values[c]))
      throw InvalidArgument("blur radius must be finite and non-negative");
    if (radius.values[c] > 0.0 && flags.tags[c] == CellType::Solid)
      throw InvalidArgument("blur radius must be 0 at SOLID cells");
  }

  const VelocityField face_radius = face_average(radius);
  const std::vector<char> mask = blur_sample_mask(flags);
  VelocityField out = field;
  VelocityField tmp = field;
  const int dims = d.dimension();

  for (int axis = 0; axis < field.active_axes(); ++axis) {
    const auto e = d.face_extent(axis);
    const std::size_t off = field.offset(axis);
    const std::size_t n = d.face_count(axis);
    std::span<const double> fr(face_radius.data.data() + off, n);
    std::span<const char> fm(mask.data() + off, n);
    auto cur = out.component(axis);
    auto scratch = tmp.component(axis);
    for (int p = 0; p < dims; ++p) {
      const int dir = transpose ? dims - 1 - p : p;
      blur_pass(cur, scratch, fr, fm, e, dir, transpose);
      std::swap(cur, scratch);
    }
    if (cur.data() != out.data.data() + off)
      std::copy(cur.begin(), cur.end(), out.data.begin() + static_cast<std::ptrdiff_t>(off));
  }
  return out;
}

}  // namespace pdfluids
