/******************************************************************************
 *
 * pdfluids
 * Copyright 2026 The pdfluids Authors
 *
 * This program is free software, distributed under the terms of the
 * Apache License, Version 2.0
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Per-face pressure boundary conditions
 *
 ******************************************************************************/
#pragma once

#include <cstdint>
#include <vector>

#include "pdfluids/grid.hpp"

namespace pdfluids {

enum class FaceBc : std::uint8_t { Neumann = 0, Dirichlet = 1 };

//! How the pressure projection treats a face.
enum class FaceKind : std::uint8_t {
  Inactive,   // no FLUID cell on either side
  Interior,   // FLUID on both sides
  Dirichlet,  // ghost pressure 0 on the non-fluid side, velocity is updated
  Neumann,    // velocity kept as given
};

//! Boundary choice for every FLUID-SOLID face, stored in the velocity layout.
//! FLUID-EMPTY faces are always Dirichlet (free surface) and faces on the domain
//! border are always Neumann, whatever the table says.
class BcTable {
 public:
  BcTable() = default;
  explicit BcTable(const GridDims& d, FaceBc solid_default = FaceBc::Neumann);

  static BcTable all_neumann(const GridDims& d) { return BcTable(d, FaceBc::Neumann); }
  static BcTable all_dirichlet(const GridDims& d) { return BcTable(d, FaceBc::Dirichlet); }

  const GridDims& dims() const { return dims_; }
  FaceBc solid(std::size_t face_index) const { return tags_[face_index]; }
  void set_solid(std::size_t face_index, FaceBc bc) { tags_[face_index] = bc; }

 private:
  GridDims dims_;
  std::vector<FaceBc> tags_;
};

FaceKind face_kind(const CellFlags& flags, const BcTable& bc, int axis, int i, int j, int k,
                   std::size_t face_index);

//! face_kind for every entry of the velocity layout (inert components are Inactive).
std::vector<FaceKind> face_kinds(const CellFlags& flags, const BcTable& bc);

}  // namespace pdfluids
