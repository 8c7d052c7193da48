#include <catch2/catch_amalgamated.hpp>

#include <confcurv/catalog.hpp>
#include <confcurv/parse.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace confcurv;

namespace {

bool same_spec(const MetricSpec& a, const MetricSpec& b) {
  if (a.name != b.name || a.coords != b.coords || a.params != b.params ||
      a.signature != b.signature)
    return false;
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = 0; j < a.dim(); ++j)
      if (a.g[i][j] != b.g[i][j]) return false;
  if (a.domain.size() != b.domain.size() || a.defaults != b.defaults) return false;
  for (const auto& [k, v] : a.domain) {
    auto it = b.domain.find(k);
    if (it == b.domain.end() || it->second.lo != v.lo || it->second.hi != v.hi)
      return false;
  }
  return true;
}

MetricSpec load_str(const std::string& text) {
  std::stringstream ss(text);
  return load_metric_stream(ss, "<test>");
}

void expect_load_error(const std::string& text, const std::string& needle) {
  try {
    load_str(text);
    FAIL("no error raised for: " << text);
  } catch (const Error& e) {
    INFO("message: " << e.what());
    CHECK(std::string(e.what()).find(needle) != std::string::npos);
  }
}

}  // namespace

TEST_CASE("builtin catalog") {
  CHECK(builtin_names() ==
        std::vector<std::string>{"schwarzschild", "reissner-nordstrom", "godel",
                                 "barriola-vilenkin", "minkowski"});

  CHECK(builtin("schwarzschild").g[2][2] == parse("r^2"));
  CHECK(builtin("schwarzschild").g[0][0] == parse("-(1 - 2*M/r)"));
  // cross term: half of the line-element coefficient, mirrored below the diagonal
  CHECK(builtin("godel").g[0][2] == parse("-sqrt(2)*r^2/(2*a)"));
  CHECK(builtin("godel").g[2][0] == builtin("godel").g[0][2]);
  CHECK(builtin("minkowski").g[0][0] == number(-1));
  CHECK(builtin("reissner-nordstrom").defaults.at("q") == 0.5);
  CHECK(builtin("barriola-vilenkin").defaults.at("k") == 0.5);

  CHECK_THROWS_AS(builtin("nope"), CatalogError);
  try {
    builtin("nope");
  } catch (const CatalogError& e) {
    std::string w = e.what();
    CHECK(w.find("unknown builtin") != std::string::npos);
    CHECK(w.find("schwarzschild") != std::string::npos);  // lists what exists
  }
}

TEST_CASE("save and load are inverse on every builtin") {
  for (const std::string& n : builtin_names()) {
    INFO("metric " << n);
    MetricSpec m = builtin(n);
    std::stringstream ss;
    save_metric_stream(m, ss);
    MetricSpec back = load_metric_stream(ss, n);
    CHECK(same_spec(m, back));
  }
}

TEST_CASE("save and load through real files") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "confcurv_catalog_test";
  fs::create_directories(dir);
  fs::path file = dir / "godel.metric";

  MetricSpec m = builtin("godel");
  save_metric(m, file.string());
  MetricSpec back = load_metric(file.string());
  CHECK(same_spec(m, back));

  CHECK_THROWS_AS(load_metric((dir / "missing.metric").string()), CatalogError);
  fs::remove_all(dir);
}

TEST_CASE("metric files accept the documented shapes") {
  MetricSpec m = load_str(
      "# a comment\n"
      "name = demo\n"
      "coords = t, x\n"
      "params = c\n"
      "signature = -+\n"
      "\n"
      "g[0][0] = -c^2\n"
      "g[1][1] = 1\n"
      "domain t = 0 .. 1\n"
      "domain x = 0.5 .. 2\n"
      "domain c = 1 .. 1\n"
      "default c = 1\n");
  CHECK(m.name == "demo");
  CHECK(m.dim() == 2);
  CHECK(m.g[0][0] == parse("-c^2"));
  CHECK(m.g[0][1].is_zero());  // unassigned components stay zero
  CHECK(m.defaults.at("c") == 1.0);
  CHECK(m.domain.at("x").lo == 0.5);

  // Assigning one triangle fills the mirror entry.
  MetricSpec sym = load_str(
      "coords = u, v\nsignature = ++\ng[0][0] = 2\ng[1][1] = 2\ng[0][1] = 1\n"
      "domain u = 0.1 .. 1\ndomain v = 0.1 .. 1\n");
  CHECK(sym.g[1][0] == one());

  // Three-coordinate files load; the conformal layers reject them later.
  MetricSpec m3 = load_str(
      "coords = t, x, y\nsignature = -++\ng[0][0] = -1\ng[1][1] = 1\ng[2][2] = 1\n");
  CHECK(m3.dim() == 3);
}

TEST_CASE("metric file errors carry line numbers and causes") {
  const std::string base = "coords = t, x\nsignature = -+\n";
  expect_load_error(base + "g[0][1] = x\ng[1][0] = 2*x\n", "already assigned");
  expect_load_error(base + "g[0][0] = -1\ng[0][0] = -1\n", "already assigned");
  expect_load_error(base + "g[0][5] = 1\n", "out of range");
  expect_load_error(base + "g[0][0] = sin(\n", "line 3");
  expect_load_error(base + "domain w = 0 .. 1\n", "unknown symbol");
  expect_load_error(base + "default q = 1\n", "unknown parameter");
  expect_load_error("signature = -+\n", "missing 'coords'");
  expect_load_error(base + "weird line\n", "unrecognized line");
  expect_load_error(
      "coords = t, x\nsignature = ++\ng[0][0] = -1\ng[1][1] = 1\n"
      "domain t = 0 .. 1\ndomain x = 0 .. 1\n",
      "signature");
}
