/******************************************************************************
 *
 * pdfluids
 * Copyright 2026 The pdfluids Authors
 *
 * This program is free software, distributed under the terms of the
 * Apache License, Version 2.0
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * File formats: binary grid files, PGM images, convergence CSV logs and the
 * JSON run configuration.
 *
 * Grid file layout (little endian):
 *   "PDFG" | u16 version (1) | u8 kind (0 scalar, 1 MAC velocity) |
 *   u32 nx | u32 ny | u32 nz | f64 h | f64 payload, x-fastest
 * Velocity payloads hold the x, y and z face arrays back to back; the z block is
 * present in 2D as well.
 *
 ******************************************************************************/
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>

#include "pdfluids/prox.hpp"
#include "pdfluids/scenes.hpp"

namespace pdfluids {

inline constexpr std::uint16_t kGridFileVersion = 1;
inline constexpr std::size_t kGridHeaderBytes = 27;

using GridData = std::variant<ScalarField, VelocityField>;

std::string encode_grid(const ScalarField& field);
std::string encode_grid(const VelocityField& field);
//! Throws ParseError on a bad magic, unsupported version, unknown kind, implausible
//! dimensions or a payload of the wrong length.
GridData decode_grid(const std::string& bytes);

void write_grid(const std::filesystem::path& path, const ScalarField& field);
void write_grid(const std::filesystem::path& path, const VelocityField& field);
GridData read_grid(const std::filesystem::path& path);
ScalarField read_scalar_grid(const std::filesystem::path& path);
VelocityField read_velocity_grid(const std::filesystem::path& path);

//! Writes via a temporary file in the same directory and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

struct ValueRange {
  double lo = 0.0;
  double hi = 1.0;
};

//! 8-bit binary PGM (P5) of a scalar field, top row = highest y. Values are normalized
//! by the field's own min/max unless `range` is given; a constant field maps to 128.
//! 3D fields are sliced at the middle z layer.
std::string encode_pgm(const ScalarField& field, std::optional<ValueRange> range = std::nullopt);
//! Flags as three gray levels: SOLID 0, FLUID 160, EMPTY 255.
std::string encode_pgm(const CellFlags& flags);
void render_pgm(const ScalarField& field,
                const std::filesystem::path& path,
                std::optional<ValueRange> range = std::nullopt);
void render_pgm(const CellFlags& flags, const std::filesystem::path& path);

//! Header `iter,residual,epsilon,eps_cg,cg_iters`, one row per record, 17 significant
//! digits. Throws InvalidArgument on an empty log.
std::string format_convergence_csv(const ConvergenceLog& log);
void write_convergence_csv(const ConvergenceLog& log, const std::filesystem::path& path);

enum class SolverMethod { Projection, Pd, Admm, Iop, Direct };

std::string to_string(SolverMethod method);
SolverMethod parse_solver_method(const std::string& name);

//! Everything needed to reproduce a run.
struct RunConfig {
  SceneSpec scene = preset(SceneKind::Plume);
  SolverMethod method = SolverMethod::Projection;
  //! Take tau/sigma/theta/rho from the mean guiding weight.
  bool default_params = true;
  bool exact_prox = false;
  PdParams pd;
  AdmmParams admm;
  IopParams iop;
  GuidingSetup guiding;
  CgConfig cg;
  BcMode bc_mode = BcMode::Regular;
  bool krylov = true;
  bool persist_memory = false;
  int max_sweeps = 50;
  int frames = 100;
  int output_every = 1;
  std::string output_dir = "out";

  //! Throws InvalidArgument when any field is out of range.
  void validate() const;
  GuideOptions guide_options() const;
  SeparatingOptions separating_options() const;
  bool operator==(const RunConfig&) const = default;
};

//! Parses a JSON document; absent keys take the defaults of the scene preset. Unknown
//! keys and type errors throw ParseError; out-of-range values throw InvalidArgument.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string serialize_run_config(const RunConfig& config);

}  // namespace pdfluids
