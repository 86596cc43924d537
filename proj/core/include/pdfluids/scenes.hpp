/******************************************************************************
 *
 * pdfluids
 * Copyright 2026 The pdfluids Authors
 *
 * This program is free software, distributed under the terms of the
 * Apache License, Version 2.0
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Scene builders and time stepping: guided smoke (semi-Lagrangian advection,
 * Boussinesq buoyancy) and PIC/FLIP liquids with selectable wall treatment.
 *
 ******************************************************************************/
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pdfluids/guiding.hpp"
#include "pdfluids/separating_bc.hpp"

namespace pdfluids {

enum class SceneKind { Circular, Star, Plume, Tornado, Dam, Hydrostatic, ObstacleBox };

std::string to_string(SceneKind kind);
//! Throws InvalidArgument for unknown names.
SceneKind parse_scene_kind(const std::string& name);
bool is_liquid(SceneKind kind);

struct SceneSpec {
  SceneKind kind = SceneKind::Plume;
  GridDims dims{64, 64, 1, 1.0 / 64.0};
  double dt = 0.02;
  std::uint64_t seed = 1;

  // smoke
  double buoyancy = 1.0;         //!< beta in f = beta * density * y
  double angular_speed = 1.0;    //!< target rotation rate, rad/s
  double upward_speed = 0.1;     //!< axial target speed of the tornado, m/s
  double star_amplitude = 0.5;   //!< star target modulation 1 + a cos(k theta)
  int star_lobes = 5;
  double emitter_radius = 0.08;  //!< fraction of the domain width

  // liquid
  double gravity = 9.81;
  double fill_width = 0.3;   //!< dam: fraction of the interior width filled
  double fill_height = 0.5;  //!< dam / hydrostatic: fraction of the interior height
  int particles_per_cell = 0;  //!< 0 selects 4 in 2D, 8 in 3D
  double flip_ratio = 0.95;
  double max_cfl = 5.0;

  void validate() const;
  int particles_per_cell_or_default() const;
  bool operator==(const SceneSpec&) const = default;
};

//! SceneSpec with the stock resolution and parameters of a scene.
SceneSpec preset(SceneKind kind);

struct Particle {
  Vec3 position{};
  Vec3 velocity{};
};

struct SceneState {
  SceneSpec spec;
  CellFlags solids;  //!< static obstacles: SOLID or EMPTY
  CellFlags flags;   //!< current classification
  VelocityField velocity;
  ScalarField density;
  std::vector<Particle> particles;
  std::optional<VelocityField> target;
  BcState bc_state;  //!< last wall classification (liquids)
  int frame = 0;
  double time = 0.0;
};

//! Deterministic initial state for a SceneSpec (flags, particles, guiding target).
SceneState build_scene(const SceneSpec& spec);

//! Circular target u = omega (-(y - cy), x - cx) about the domain center, optionally
//! modulated by 1 + a cos(k theta); faces outside the guiding mask are 0.
VelocityField rotation_target(const CellFlags& flags, double omega, double amplitude = 0.0,
                              int lobes = 0);

//! Cell field taking `left` on the left half of the domain and `right` on the right.
//! With `zero_solid`, SOLID cells get 0.
ScalarField split_field(const CellFlags& flags, double left, double right, bool zero_solid);

//! Guiding weights/radius for the split-domain setups W = (left, right), R = (left, right).
struct GuidingSetup {
  double weight_left = 1.0;
  double weight_right = 1.0;
  double radius_left = 1.0;
  double radius_right = 1.0;

  void validate() const;
  bool operator==(const GuidingSetup&) const = default;
};

GuidingConfig make_guiding_config(const SceneState& state,
                                  const GuidingSetup& setup,
                                  const VelocityField& target,
                                  const VelocityField& current);

struct StepStats {
  ConvergenceLog log;
  int cg_iterations = 0;
  bool converged = true;
  double max_divergence = 0.0;
  double max_velocity = 0.0;  //!< over faces touching FLUID

  //! Result of the secondary solver run on the same pre-solve field.
  std::optional<ConvergenceLog> shadow_log;
  int shadow_cg_iterations = 0;
  double shadow_difference = 0.0;  //!< relative L2 of shadow vs. primary result (liquids: faces touching FLUID)

  std::size_t wetted_wall_faces = 0;
  std::size_t separating_wall_faces = 0;  //!< wall faces left separating after the solve
  bool ceiling_contact = false;
};

struct SmokeStepOptions {
  bool guided = false;
  GuidingSetup guiding;
  GuideOptions guide;
  CgConfig cg;
  std::optional<GuidingMethod> shadow;
};

//! Buoyancy, advection of velocity and density, emitter, then a guided or plain projection.
StepStats smoke_step(SceneState& state, const SmokeStepOptions& options);

enum class BcMode { Regular, SeparatingStandard, SeparatingAccelerated };

std::string to_string(BcMode mode);
BcMode parse_bc_mode(const std::string& name);

struct LiquidStepOptions {
  BcMode mode = BcMode::Regular;
  SeparatingOptions separating;
  std::optional<BcMode> shadow;
};

//! PIC/FLIP step: particle-to-grid, flags, extrapolation, gravity, pressure solve with the
//! chosen wall treatment, grid-to-particle, RK2 particle advection.
StepStats liquid_step(SceneState& state, const LiquidStepOptions& options);

//! Marks cells holding particles FLUID, other non-solid cells EMPTY.
CellFlags flags_from_particles(const CellFlags& solids, const std::vector<Particle>& particles);

//! True when a FLUID cell sits directly below the top SOLID ring.
bool touches_ceiling(const CellFlags& flags);

//! Sum over FLUID cells of (r - c) x u in the xy-plane, cell-centered samples.
double angular_momentum(const VelocityField& vel, const CellFlags& flags);

//! Fills unknown faces from known neighbors of the same component, `layers` rings deep.
void extrapolate_velocity(VelocityField& vel, std::vector<char>& known, int layers);

}  // namespace pdfluids
