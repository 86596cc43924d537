/******************************************************************************
 *
 * pdfluids
 * Copyright 2026 The pdfluids Authors
 *
 * This program is free software, distributed under the terms of the
 * Apache License, Version 2.0
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * File formats
 *
 ******************************************************************************/
#include "pdfluids/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <initializer_list>
#include <iomanip>
#include <sstream>

#include "json.hpp"

namespace pdfluids {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big,
              "mixed-endian platforms are not supported");

template <class T>
void put(std::string& out, T value)
{
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(bytes, bytes + sizeof(T));
  out.append(bytes, sizeof(T));
}

template <class T>
T take(const std::string& in, std::size_t& pos)
{
  if (pos + sizeof(T) > in.size())
    throw ParseError("grid file is truncated");
  char bytes[sizeof(T)];
  std::memcpy(bytes, in.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(bytes, bytes + sizeof(T));
  pos += sizeof(T);
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

std::string encode_header(std::uint8_t kind, const GridDims& d, std::size_t payload_values)
{
  std::string out;
  out.reserve(kGridHeaderBytes + payload_values * sizeof(double));
  out.append("PDFG", 4);
  put<std::uint16_t>(out, kGridFileVersion);
  put<std::uint8_t>(out, kind);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(d.nx));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(d.ny));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(d.nz));
  put<double>(out, d.h);
  return out;
}

}  // namespace

std::string encode_grid(const ScalarField& field)
{
  std::string out = encode_header(0, field.dims, field.values.size());
  for (double v : field.values)
    put<double>(out, v);
  return out;
}

std::string encode_grid(const VelocityField& field)
{
  std::string out = encode_header(1, field.dims, field.data.size());
  for (double v : field.data)
    put<double>(out, v);
  return out;
}

GridData decode_grid(const std::string& bytes)
{
  if (bytes.size() < 4 || bytes.compare(0, 4, "PDFG") != 0)
    throw ParseError("not a grid file (bad magic)");
  std::size_t pos = 4;
  const auto version = take<std::uint16_t>(bytes, pos);
  if (version != kGridFileVersion)
    throw ParseError("unsupported grid file version " + std::to_string(version));
  const auto kind = take<std::uint8_t>(bytes, pos);
  if (kind > 1)
    throw ParseError("unknown grid kind " + std::to_string(kind));
  const auto nx = take<std::uint32_t>(bytes, pos);
  const auto ny = take<std::uint32_t>(bytes, pos);
  const auto nz = take<std::uint32_t>(bytes, pos);
  const double h = take<double>(bytes, pos);
  constexpr std::uint32_t kMaxExtent = 1u << 16;
  if (nx == 0 || ny == 0 || nz == 0 || nx > kMaxExtent || ny > kMaxExtent || nz > kMaxExtent)
    throw ParseError("grid dimensions out of range");
  const std::uint64_t cells = static_cast<std::uint64_t>(nx) * ny * nz;
  if (cells > (std::uint64_t{1} << 32))
    throw ParseError("grid dimensions overflow");
  GridDims d{static_cast<int>(nx), static_cast<int>(ny), static_cast<int>(nz), h};
  try {
    d.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("invalid grid header: ") + e.what());
  }

  auto read_payload = [&](std::vector<double>& values) {
    const std::size_t remaining = bytes.size() - pos;
    if (remaining != values.size() * sizeof(double))
      throw ParseError("grid payload has " + std::to_string(remaining) + " bytes, expected " +
                       std::to_string(values.size() * sizeof(double)));
    for (double& v : values)
      v = take<double>(bytes, pos);
  };
  if (kind == 0) {
    ScalarField f(d);
    read_payload(f.values);
    return f;
  }
  VelocityField f(d);
  read_payload(f.data);
  return f;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes)
{
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw Error("cannot open '" + tmp.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out)
      throw Error("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error("cannot move '" + tmp.string() + "' to '" + path.string() + "'");
  }
}

std::string read_file(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_grid(const std::filesystem::path& path, const ScalarField& field)
{
  write_file_atomic(path, encode_grid(field));
}

void write_grid(const std::filesystem::path& path, const VelocityField& field)
{
  write_file_atomic(path, encode_grid(field));
}

GridData read_grid(const std::filesystem::path& path)
{
  return decode_grid(read_file(path));
}

ScalarField read_scalar_grid(const std::filesystem::path& path)
{
  GridData g = read_grid(path);
  if (auto* s = std::get_if<ScalarField>(&g))
    return std::move(*s);
  throw ParseError("'" + path.string() + "' holds a velocity field, expected a scalar field");
}

VelocityField read_velocity_grid(const std::filesystem::path& path)
{
  GridData g = read_grid(path);
  if (auto* v = std::get_if<VelocityField>(&g))
    return std::move(*v);
  throw ParseError("'" + path.string() + "' holds a scalar field, expected a velocity field");
}

namespace {

template <class Pixel>
std::string encode_p5(const GridDims& d, Pixel&& pixel)
{
  std::string out = "P5\n" + std::to_string(d.nx) + " " + std::to_string(d.ny) + "\n255\n";
  const int k = d.nz / 2;
  for (int j = d.ny - 1; j >= 0; --j)
    for (int i = 0; i < d.nx; ++i)
      out.push_back(static_cast<char>(pixel(i, j, k)));
  return out;
}

}  // namespace

std::string encode_pgm(const ScalarField& field, std::optional<ValueRange> range)
{
  double lo = 0.0;
  double hi = 0.0;
  if (range) {
    lo = range->lo;
    hi = range->hi;
  } else if (!field.values.empty()) {
    const auto [mn, mx] = std::minmax_element(field.values.begin(), field.values.end());
    lo = *mn;
    hi = *mx;
  }
  for (double v : field.values)
    if (!std::isfinite(v))
      throw InvalidArgument("cannot render non-finite values");
  return encode_p5(field.dims, [&](int i, int j, int k) -> unsigned char {
    if (!(hi > lo))
      return 128;
    const double t = std::clamp((field.at(i, j, k) - lo) / (hi - lo), 0.0, 1.0);
    return static_cast<unsigned char>(std::lround(255.0 * t));
  });
}

std::string encode_pgm(const CellFlags& flags)
{
  return encode_p5(flags.dims, [&](int i, int j, int k) -> unsigned char {
    switch (flags.at(i, j, k)) {
      case CellType::Solid:
        return 0;
      case CellType::Fluid:
        return 160;
      case CellType::Empty:
        return 255;
    }
    return 0;
  });
}

void render_pgm(const ScalarField& field, const std::filesystem::path& path, std::optional<ValueRange> range)
{
  write_file_atomic(path, encode_pgm(field, range));
}

void render_pgm(const CellFlags& flags, const std::filesystem::path& path)
{
  write_file_atomic(path, encode_pgm(flags));
}

std::string format_convergence_csv(const ConvergenceLog& log)
{
  if (log.records.empty())
    throw InvalidArgument("convergence log is empty");
  std::ostringstream out;
  out << std::setprecision(17);
  out << "iter,residual,epsilon,eps_cg,cg_iters\n";
  for (const auto& r : log.records)
    out << r.iter << ',' << r.residual << ',' << r.epsilon << ',' << r.eps_cg << ',' << r.cg_iters
        << '\n';
  return out.str();
}

void write_convergence_csv(const ConvergenceLog& log, const std::filesystem::path& path)
{
  write_file_atomic(path, format_convergence_csv(log));
}

namespace {

struct MethodName {
  SolverMethod method;
  const char* name;
};
constexpr MethodName kMethodNames[] = {
    {SolverMethod::Projection, "projection"}, {SolverMethod::Pd, "pd"},
    {SolverMethod::Admm, "admm"},             {SolverMethod::Iop, "iop"},
    {SolverMethod::Direct, "direct"},
};

}  // namespace

std::string to_string(SolverMethod method)
{
  for (const auto& mn : kMethodNames)
    if (mn.method == method)
      return mn.name;
  throw InvalidArgument("unknown solver method");
}

SolverMethod parse_solver_method(const std::string& name)
{
  for (const auto& mn : kMethodNames)
    if (name == mn.name)
      return mn.method;
  throw InvalidArgument("unknown solver method '" + name + "'");
}

void RunConfig::validate() const
{
  scene.validate();
  cg.validate();
  guiding.validate();
  if (!default_params) {
    pd.validate();
    admm.validate();
  } else if (pd.max_iters < 1 || admm.max_iters < 1) {
    throw InvalidArgument("max_iters must be positive");
  }
  if (iop.max_iters < 1)
    throw InvalidArgument("max_iters must be positive");
  if (frames < 0)
    throw InvalidArgument("frame count must be non-negative");
  if (output_every < 1)
    throw InvalidArgument("output_every must be positive");
  if (max_sweeps < 1)
    throw InvalidArgument("max_sweeps must be positive");
  if (output_dir.empty())
    throw InvalidArgument("output_dir must not be empty");
  if (is_liquid(scene.kind) && method != SolverMethod::Projection)
    throw InvalidArgument("liquid scenes use the boundary mode, not a guiding method");
}

GuideOptions RunConfig::guide_options() const
{
  GuideOptions g;
  switch (method) {
    case SolverMethod::Admm:
      g.method = GuidingMethod::Admm;
      break;
    case SolverMethod::Iop:
      g.method = GuidingMethod::Iop;
      break;
    case SolverMethod::Direct:
      g.method = GuidingMethod::Direct;
      break;
    default:
      g.method = GuidingMethod::Pd;
      break;
  }
  g.exact_prox = exact_prox;
  g.use_defaults = default_params;
  g.params.pd = pd;
  g.params.admm = admm;
  g.iop = iop;
  g.cg = cg;
  return g;
}

SeparatingOptions RunConfig::separating_options() const
{
  SeparatingOptions s;
  s.cg = cg;
  s.krylov = krylov;
  s.persist_memory = persist_memory;
  s.max_sweeps = max_sweeps;
  s.pd.max_iters = pd.max_iters;
  s.pd.eps_abs = pd.eps_abs;
  s.pd.eps_rel = pd.eps_rel;
  s.pd.accel = pd.accel;
  return s;
}

namespace {

using nlohmann::json;

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where)
{
  if (!obj.is_object())
    throw ParseError("'" + where + "' must be an object");
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const char* a : allowed)
      ok |= item.key() == a;
    if (!ok)
      throw ParseError("unknown key '" + item.key() + "' in '" + where + "'");
  }
}

template <class T>
void get(const json& obj, const char* key, T& out)
{
  if (!obj.contains(key))
    return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text)
{
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  check_keys(root,
             {"scene", "method", "default_params", "exact_prox", "pd", "admm", "iop", "guiding",
              "cg", "bc", "frames", "output_every", "output_dir"},
             "config");

  RunConfig cfg;
  if (root.contains("scene")) {
    const json& s = root["scene"];
    check_keys(s,
               {"name", "nx", "ny", "nz", "h", "dt", "seed", "buoyancy", "angular_speed",
                "upward_speed", "star_amplitude", "star_lobes", "emitter_radius", "gravity",
                "fill_width", "fill_height", "particles_per_cell", "flip_ratio", "max_cfl"},
               "scene");
    std::string name = to_string(cfg.scene.kind);
    get(s, "name", name);
    cfg.scene = preset(parse_scene_kind(name));
    SceneSpec& sc = cfg.scene;
    get(s, "nx", sc.dims.nx);
    get(s, "ny", sc.dims.ny);
    get(s, "nz", sc.dims.nz);
    if (s.contains("nx") && !s.contains("h") && sc.dims.nx > 0)
      sc.dims.h = 1.0 / sc.dims.nx;
    get(s, "h", sc.dims.h);
    get(s, "dt", sc.dt);
    get(s, "seed", sc.seed);
    get(s, "buoyancy", sc.buoyancy);
    get(s, "angular_speed", sc.angular_speed);
    get(s, "upward_speed", sc.upward_speed);
    get(s, "star_amplitude", sc.star_amplitude);
    get(s, "star_lobes", sc.star_lobes);
    get(s, "emitter_radius", sc.emitter_radius);
    get(s, "gravity", sc.gravity);
    get(s, "fill_width", sc.fill_width);
    get(s, "fill_height", sc.fill_height);
    get(s, "particles_per_cell", sc.particles_per_cell);
    get(s, "flip_ratio", sc.flip_ratio);
    get(s, "max_cfl", sc.max_cfl);
  }
  if (root.contains("method")) {
    std::string m;
    get(root, "method", m);
    cfg.method = parse_solver_method(m);
  }
  get(root, "default_params", cfg.default_params);
  get(root, "exact_prox", cfg.exact_prox);
  if (root.contains("pd")) {
    const json& p = root["pd"];
    check_keys(p, {"tau", "sigma", "theta", "max_iters", "eps_abs", "eps_rel", "adaptive", "gamma",
                   "tau0", "sigma0"},
               "pd");
    get(p, "tau", cfg.pd.tau);
    get(p, "sigma", cfg.pd.sigma);
    get(p, "theta", cfg.pd.theta);
    get(p, "max_iters", cfg.pd.max_iters);
    get(p, "eps_abs", cfg.pd.eps_abs);
    get(p, "eps_rel", cfg.pd.eps_rel);
    get(p, "adaptive", cfg.pd.adaptive);
    get(p, "gamma", cfg.pd.accel.gamma);
    get(p, "tau0", cfg.pd.accel.tau0);
    get(p, "sigma0", cfg.pd.accel.sigma0);
  }
  if (root.contains("admm")) {
    const json& a = root["admm"];
    check_keys(a, {"rho", "max_iters", "eps_abs", "eps_rel"}, "admm");
    get(a, "rho", cfg.admm.rho);
    get(a, "max_iters", cfg.admm.max_iters);
    get(a, "eps_abs", cfg.admm.eps_abs);
    get(a, "eps_rel", cfg.admm.eps_rel);
  }
  if (root.contains("iop")) {
    const json& a = root["iop"];
    check_keys(a, {"max_iters", "eps_abs", "eps_rel", "krylov"}, "iop");
    get(a, "max_iters", cfg.iop.max_iters);
    get(a, "eps_abs", cfg.iop.eps_abs);
    get(a, "eps_rel", cfg.iop.eps_rel);
    get(a, "krylov", cfg.iop.krylov);
  }
  if (root.contains("guiding")) {
    const json& g = root["guiding"];
    check_keys(g, {"w_left", "w_right", "r_left", "r_right"}, "guiding");
    get(g, "w_left", cfg.guiding.weight_left);
    get(g, "w_right", cfg.guiding.weight_right);
    get(g, "r_left", cfg.guiding.radius_left);
    get(g, "r_right", cfg.guiding.radius_right);
  }
  if (root.contains("cg")) {
    const json& c = root["cg"];
    check_keys(c, {"eps_start", "eps_final", "max_cg_iters"}, "cg");
    get(c, "eps_start", cfg.cg.eps_start);
    get(c, "eps_final", cfg.cg.eps_final);
    get(c, "max_cg_iters", cfg.cg.max_cg_iters);
  }
  if (root.contains("bc")) {
    const json& b = root["bc"];
    check_keys(b, {"mode", "krylov", "persist_memory", "max_sweeps"}, "bc");
    if (b.contains("mode")) {
      std::string m;
      get(b, "mode", m);
      cfg.bc_mode = parse_bc_mode(m);
    }
    get(b, "krylov", cfg.krylov);
    get(b, "persist_memory", cfg.persist_memory);
    get(b, "max_sweeps", cfg.max_sweeps);
  }
  get(root, "frames", cfg.frames);
  get(root, "output_every", cfg.output_every);
  get(root, "output_dir", cfg.output_dir);
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path)
{
  return parse_run_config(read_file(path));
}

std::string serialize_run_config(const RunConfig& c)
{
  const SceneSpec& s = c.scene;
  json root;
  root["scene"] = {{"name", to_string(s.kind)},
                   {"nx", s.dims.nx},
                   {"ny", s.dims.ny},
                   {"nz", s.dims.nz},
                   {"h", s.dims.h},
                   {"dt", s.dt},
                   {"seed", s.seed},
                   {"buoyancy", s.buoyancy},
                   {"angular_speed", s.angular_speed},
                   {"upward_speed", s.upward_speed},
                   {"star_amplitude", s.star_amplitude},
                   {"star_lobes", s.star_lobes},
                   {"emitter_radius", s.emitter_radius},
                   {"gravity", s.gravity},
                   {"fill_width", s.fill_width},
                   {"fill_height", s.fill_height},
                   {"particles_per_cell", s.particles_per_cell},
                   {"flip_ratio", s.flip_ratio},
                   {"max_cfl", s.max_cfl}};
  root["method"] = to_string(c.method);
  root["default_params"] = c.default_params;
  root["exact_prox"] = c.exact_prox;
  root["pd"] = {{"tau", c.pd.tau},
                {"sigma", c.pd.sigma},
                {"theta", c.pd.theta},
                {"max_iters", c.pd.max_iters},
                {"eps_abs", c.pd.eps_abs},
                {"eps_rel", c.pd.eps_rel},
                {"adaptive", c.pd.adaptive},
                {"gamma", c.pd.accel.gamma},
                {"tau0", c.pd.accel.tau0},
                {"sigma0", c.pd.accel.sigma0}};
  root["admm"] = {{"rho", c.admm.rho},
                  {"max_iters", c.admm.max_iters},
                  {"eps_abs", c.admm.eps_abs},
                  {"eps_rel", c.admm.eps_rel}};
  root["iop"] = {{"max_iters", c.iop.max_iters},
                 {"eps_abs", c.iop.eps_abs},
                 {"eps_rel", c.iop.eps_rel},
                 {"krylov", c.iop.krylov}};
  root["guiding"] = {{"w_left", c.guiding.weight_left},
                     {"w_right", c.guiding.weight_right},
                     {"r_left", c.guiding.radius_left},
                     {"r_right", c.guiding.radius_right}};
  root["cg"] = {{"eps_start", c.cg.eps_start},
                {"eps_final", c.cg.eps_final},
                {"max_cg_iters", c.cg.max_cg_iters}};
  root["bc"] = {{"mode", to_string(c.bc_mode)},
                {"krylov", c.krylov},
                {"persist_memory", c.persist_memory},
                {"max_sweeps", c.max_sweeps}};
  root["frames"] = c.frames;
  root["output_every"] = c.output_every;
  root["output_dir"] = c.output_dir;
  return root.dump(2) + "\n";
}

}  // namespace pdfluids
