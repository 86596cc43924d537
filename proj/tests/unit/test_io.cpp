/******************************************************************************
 *
 * pdfluids
 * Copyright 2026 The pdfluids Authors
 *
 * This program is free software, distributed under the terms of the
 * Apache License, Version 2.0
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Grid files, PGM rendering, convergence CSV and run configuration documents
 *
 ******************************************************************************/
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <random>
#include <sstream>

#include <pdfluids/io.hpp>

#include "support.hpp"

using namespace pdfluids;
namespace fs = std::filesystem;

namespace {

//! Fresh directory under the system temp path, removed on destruction.
struct TempDir {
  fs::path path;
  TempDir()
  {
    std::random_device rd;
    path = fs::temp_directory_path() / ("pdfluids-io-" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

template <class T>
T read_le(const std::string& bytes, std::size_t at)
{
  T v;
  std::memcpy(&v, bytes.data() + at, sizeof(T));
  return v;
}

}  // namespace

TEST_CASE("grid files")
{
  TempDir tmp;

  SUBCASE("scalar round trip is bit-identical")
  {
    const ScalarField s = test::random_scalar(GridDims{16, 16, 1, 0.0625}, 1);
    write_grid(tmp.path / "s.pdfg", s);
    const ScalarField back = read_scalar_grid(tmp.path / "s.pdfg");
    CHECK(back == s);
    CHECK(std::holds_alternative<ScalarField>(read_grid(tmp.path / "s.pdfg")));
    CHECK_THROWS_AS(read_velocity_grid(tmp.path / "s.pdfg"), ParseError);
  }
  SUBCASE("2D velocity layout carries the z block")
  {
    const GridDims d{5, 4, 1, 0.25};
    const VelocityField v = test::random_field(d, 2);
    const std::string bytes = encode_grid(v);
    CHECK(bytes.substr(0, 4) == "PDFG");
    CHECK(read_le<std::uint16_t>(bytes, 4) == kGridFileVersion);
    CHECK(static_cast<unsigned char>(bytes[6]) == 1);
    CHECK(read_le<std::uint32_t>(bytes, 7) == 5u);
    CHECK(read_le<std::uint32_t>(bytes, 11) == 4u);
    CHECK(read_le<std::uint32_t>(bytes, 15) == 1u);
    CHECK(read_le<double>(bytes, 19) == 0.25);
    const std::size_t values = 6 * 4 * 1 + 5 * 5 * 1 + 5 * 4 * 2;
    CHECK(bytes.size() == kGridHeaderBytes + 8 * values);
    const GridData back = decode_grid(bytes);
    REQUIRE(std::holds_alternative<VelocityField>(back));
    CHECK(std::get<VelocityField>(back) == v);
    write_grid(tmp.path / "v.pdfg", v);
    CHECK(read_velocity_grid(tmp.path / "v.pdfg") == v);
  }
  SUBCASE("corrupted files are rejected")
  {
    const std::string good = encode_grid(test::random_scalar(GridDims{4, 4, 1, 1.0}, 3));
    std::string bad = good;
    bad[0] = 'X';
    CHECK_THROWS_AS(decode_grid(bad), ParseError);
    CHECK_THROWS_AS(decode_grid(good.substr(0, good.size() - 1)), ParseError);
    CHECK_THROWS_AS(decode_grid(good.substr(0, 10)), ParseError);
    bad = good;
    bad[4] = 9;
    CHECK_THROWS_AS(decode_grid(bad), ParseError);
    bad = good;
    bad[6] = 7;
    CHECK_THROWS_AS(decode_grid(bad), ParseError);
    bad = good;
    const std::uint32_t huge = 0xFFFFFFFFu;
    std::memcpy(bad.data() + 7, &huge, 4);
    std::memcpy(bad.data() + 11, &huge, 4);
    CHECK_THROWS_AS(decode_grid(bad), ParseError);
  }
  SUBCASE("missing file")
  {
    CHECK_THROWS_AS(read_grid(tmp.path / "absent.pdfg"), Error);
  }
}

TEST_CASE("PGM rendering")
{
  SUBCASE("constant field is mid-gray")
  {
    const GridDims d{6, 5, 1, 1.0};
    const std::string img = encode_pgm(ScalarField(d, 0.7));
    const std::string header = "P5\n6 5\n255\n";
    REQUIRE(img.substr(0, header.size()) == header);
    CHECK(img.size() == header.size() + 30u);
    for (std::size_t n = header.size(); n < img.size(); ++n)
      CHECK(static_cast<unsigned char>(img[n]) == 128);
  }
  SUBCASE("checkerboard maps to the two extremes, top row first")
  {
    const GridDims d{64, 64, 1, 1.0 / 64.0};
    ScalarField s(d);
    for (int j = 0; j < 64; ++j)
      for (int i = 0; i < 64; ++i)
        s.at(i, j) = (i + j) % 2 ? 3.0 : -1.0;
    const std::string img = encode_pgm(s);
    const std::size_t h = std::string("P5\n64 64\n255\n").size();
    REQUIRE(img.size() == h + 64u * 64u);
    for (int row = 0; row < 64; ++row)
      for (int i = 0; i < 64; ++i) {
        const int j = 63 - row;
        const unsigned char expected = (i + j) % 2 ? 255 : 0;
        CHECK(static_cast<unsigned char>(img[h + 64 * row + i]) == expected);
      }
  }
  SUBCASE("explicit range clamps")
  {
    const GridDims d{4, 4, 1, 1.0};
    ScalarField s(d, 0.5);
    s.at(0, 0) = 5.0;
    const std::string img = encode_pgm(s, ValueRange{0.0, 1.0});
    const std::size_t h = std::string("P5\n4 4\n255\n").size();
    CHECK(static_cast<unsigned char>(img[h + 12]) == 255);  // (0,0) is on the bottom row
    CHECK(static_cast<unsigned char>(img[h]) == 128);
  }
  SUBCASE("flags use three levels")
  {
    const SceneState st = build_scene(preset(SceneKind::Dam));
    const std::string img = encode_pgm(st.flags);
    const std::size_t h = std::string("P5\n100 70\n255\n").size();
    CHECK(static_cast<unsigned char>(img[h]) == 0);              // top-left corner is wall
    CHECK(static_cast<unsigned char>(img[h + 100 * 69 + 5]) == 0);  // bottom wall
    CHECK(static_cast<unsigned char>(img[h + 100 * 68 + 5]) == 160);
    CHECK(static_cast<unsigned char>(img[h + 100 * 68 + 90]) == 255);
  }
  SUBCASE("files and non-finite values")
  {
    TempDir tmp;
    const GridDims d{4, 4, 1, 1.0};
    render_pgm(ScalarField(d, 1.0), tmp.path / "a.pgm");
    CHECK(read_file(tmp.path / "a.pgm") == encode_pgm(ScalarField(d, 1.0)));
    ScalarField bad(d);
    bad.at(1, 1) = std::nan("");
    CHECK_THROWS_AS(encode_pgm(bad), InvalidArgument);
  }
}

TEST_CASE("convergence CSV")
{
  ConvergenceLog log;
  CHECK_THROWS_AS(format_convergence_csv(log), InvalidArgument);
  log.records.push_back({1, 0.1234567890123456789, 1e-3, 1e-2, 17, 0.0});
  const std::string one = format_convergence_csv(log);
  CHECK(one == "iter,residual,epsilon,eps_cg,cg_iters\n1,0.12345678901234568,0.001,0.01,17\n");

  log.records.push_back({2, 0.5, 1e-3, 1e-3, 4, 0.0});
  TempDir tmp;
  write_convergence_csv(log, tmp.path / "log.csv");
  std::istringstream in(read_file(tmp.path / "log.csv"));
  std::string line;
  int lines = 0;
  int cg_total = 0;
  std::getline(in, line);
  while (std::getline(in, line)) {
    ++lines;
    cg_total += std::stoi(line.substr(line.rfind(',') + 1));
  }
  CHECK(lines == 2);
  CHECK(cg_total == log.total_cg_iterations());
}

TEST_CASE("run configuration")
{
  SUBCASE("absent keys take the scene preset")
  {
    const RunConfig c = parse_run_config(R"({"scene": {"name": "dam"}, "bc": {"mode": "separating-accelerated"}})");
    CHECK(c.scene == preset(SceneKind::Dam));
    CHECK(c.bc_mode == BcMode::SeparatingAccelerated);
    CHECK(c.cg == CgConfig{});
  }
  SUBCASE("resolution implies the cell width")
  {
    const RunConfig c = parse_run_config(R"({"scene": {"name": "plume", "nx": 32, "ny": 48}})");
    CHECK(c.scene.dims.nx == 32);
    CHECK(c.scene.dims.ny == 48);
    CHECK(c.scene.dims.h == doctest::Approx(1.0 / 32.0));
  }
  SUBCASE("serialization round trip")
  {
    RunConfig c;
    c.scene = preset(SceneKind::Circular);
    c.method = SolverMethod::Admm;
    c.guiding = GuidingSetup{16.0, 1.0, 2.0, 0.5};
    c.cg.eps_final = 1e-6;
    c.pd.accel.gamma = 50.0;
    c.frames = 7;
    c.output_dir = "runs/a";
    CHECK(parse_run_config(serialize_run_config(c)) == c);
  }
  SUBCASE("errors")
  {
    CHECK_THROWS_AS(parse_run_config("{"), ParseError);
    CHECK_THROWS_AS(parse_run_config(R"({"colour": 1})"), ParseError);
    CHECK_THROWS_AS(parse_run_config(R"({"scene": {"nx": "wide"}})"), ParseError);
    CHECK_THROWS_AS(parse_run_config(R"({"scene": {"name": "waterfall"}})"), InvalidArgument);
    CHECK_THROWS_AS(parse_run_config(R"({"frames": -1})"), InvalidArgument);
    CHECK_THROWS_AS(parse_run_config(R"({"cg": {"eps_start": 1e-6, "eps_final": 1e-3}})"),
                    InvalidArgument);
    CHECK_THROWS_AS(parse_run_config(R"({"scene": {"name": "dam"}, "method": "pd"})"),
                    InvalidArgument);
    CHECK_THROWS_AS(load_run_config("/nonexistent/config.json"), Error);
  }
  SUBCASE("solver options")
  {
    RunConfig c = parse_run_config(R"({"scene": {"name": "circular"}, "method": "iop",
                                      "exact_prox": true, "default_params": false})");
    const GuideOptions g = c.guide_options();
    CHECK(g.method == GuidingMethod::Iop);
    CHECK(g.exact_prox);
    CHECK_FALSE(g.use_defaults);
    c.krylov = false;
    c.max_sweeps = 9;
    const SeparatingOptions s = c.separating_options();
    CHECK_FALSE(s.krylov);
    CHECK(s.max_sweeps == 9);
    CHECK(s.pd.adaptive);
    for (SolverMethod m : {SolverMethod::Projection, SolverMethod::Pd, SolverMethod::Admm,
                           SolverMethod::Iop, SolverMethod::Direct})
      CHECK(parse_solver_method(to_string(m)) == m);
  }
}

TEST_CASE("atomic writes replace the file")
{
  TempDir tmp;
  write_file_atomic(tmp.path / "x.txt", "one");
  write_file_atomic(tmp.path / "x.txt", "two");
  CHECK(read_file(tmp.path / "x.txt") == "two");
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(tmp.path))
    ++entries;
  CHECK(entries == 1u);
}
