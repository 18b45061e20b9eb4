#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "spf/problem.hpp"

using namespace spf;

namespace {

// Dense quadrature oracle: every element subdivided 10x10, centroid rule.
std::vector<double> dense_load(const Mesh& mesh, const TerminalConfig& t, const Mollifier& m) {
  std::vector<double> load(mesh.vertex_count(), 0.0);
  std::vector<std::pair<Vec2, double>> terms;
  terms.push_back({t.source, t.source_weight()});
  for (const Vec2& p : t.sinks) terms.push_back({p, -1.0});
  const int n = 10;
  for (int e = 0; e < mesh.triangle_count(); ++e) {
    const auto& tri = mesh.triangles[e];
    const Vec2& a = mesh.vertices[tri[0]];
    const Vec2& b = mesh.vertices[tri[1]];
    const Vec2& c = mesh.vertices[tri[2]];
    const double w = mesh.triangle_area(e) / (n * n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; i + j < n; ++j) {
        for (int up = 0; up < (i + j < n - 1 ? 2 : 1); ++up) {
          const double off = up == 0 ? 1.0 / 3.0 : 2.0 / 3.0;
          const double lu = (i + off) / n;
          const double lv = (j + off) / n;
          const Vec2 x = a + (b - a) * lu + (c - a) * lv;
          double rho = 0.0;
          for (const auto& [p, weight] : terms) rho += weight * m(norm(x - p));
          load[tri[0]] += w * rho * (1.0 - lu - lv);
          load[tri[1]] += w * rho * lu;
          load[tri[2]] += w * rho * lv;
        }
      }
    }
  }
  double sum = 0.0;
  for (double v : load) sum += v;
  for (double& v : load) v -= sum / load.size();
  return load;
}

}  // namespace

TEST_CASE("two-terminal load") {
  Mesh mesh = build_disc_mesh({0, 0}, 1.0, 0.05);
  TerminalConfig t;
  t.source = {-0.35, 0.0};
  t.sinks = {{0.35, 0.0}};
  Mollifier m{0.1};  // h = width/2
  SourceLoad load = build_source_load(mesh, t, m);

  CompatibilityReport rep = check_compatibility(load);
  CHECK(rep.zero_sum);
  CHECK(rep.positive_mass == doctest::Approx(1.0).epsilon(0.02));
  CHECK(rep.negative_mass == doctest::Approx(1.0).epsilon(0.02));

  SUBCASE("agrees with the dense quadrature oracle") {
    const auto dense = dense_load(mesh, t, m);
    double max_diff = 0.0, scale = 0.0;
    for (int i = 0; i < mesh.vertex_count(); ++i) {
      max_diff = std::max(max_diff, std::abs(load.nodal_load[i] - dense[i]));
      scale = std::max(scale, std::abs(dense[i]));
    }
    CHECK(max_diff <= 0.02 * scale);
  }

  SUBCASE("positive bump sits near the source") {
    int argmax = 0;
    for (int i = 0; i < mesh.vertex_count(); ++i) {
      if (load.nodal_load[i] > load.nodal_load[argmax]) argmax = i;
    }
    CHECK(norm(mesh.vertices[argmax] - t.source) <= 2.5 * m.width);
  }
}

TEST_CASE("reflection equivariance on the symmetric mesh") {
  Mesh mesh = build_disc_mesh({0, 0}, 1.0, 0.08);
  // Vertex permutation of the reflection y -> -y.
  std::map<std::pair<long long, long long>, int> index;
  auto key = [](const Vec2& p) {
    return std::make_pair(static_cast<long long>(std::llround(p.x * 1e7)),
                          static_cast<long long>(std::llround(p.y * 1e7)));
  };
  for (int i = 0; i < mesh.vertex_count(); ++i) index[key(mesh.vertices[i])] = i;

  TerminalConfig t;
  t.source = {0.25, 0.2};
  t.sinks = {{-0.3, -0.1}};
  TerminalConfig tr;
  tr.source = {0.25, -0.2};
  tr.sinks = {{-0.3, 0.1}};
  Mollifier m{0.12};

  SourceLoad a = build_source_load(mesh, t, m);
  SourceLoad b = build_source_load(mesh, tr, m);
  double scale = 0.0;
  for (double v : a.nodal_load) scale = std::max(scale, std::abs(v));
  for (int i = 0; i < mesh.vertex_count(); ++i) {
    const Vec2 mirrored{mesh.vertices[i].x, -mesh.vertices[i].y};
    auto it = index.find(key(mirrored));
    REQUIRE(it != index.end());
    CHECK(std::abs(a.nodal_load[i] - b.nodal_load[it->second]) <= 1e-12 * (scale + 1.0));
  }
}

TEST_CASE("narrower kernel concentrates the load") {
  Mesh mesh = build_disc_mesh({0, 0}, 1.0, 0.04);
  TerminalConfig t;
  t.source = {-0.3, 0.0};
  t.sinks = {{0.3, 0.0}};
  auto max_abs = [&](const SourceLoad& l) {
    double m = 0.0;
    for (double v : l.nodal_load) m = std::max(m, std::abs(v));
    return m;
  };
  const double wide = max_abs(build_source_load(mesh, t, Mollifier{0.16}));
  const double narrow = max_abs(build_source_load(mesh, t, Mollifier{0.08}));
  CHECK(narrow > wide);
}

TEST_CASE("translation equivariance on a lattice mesh") {
  Mesh mesh = build_rect_mesh({0, 0}, {1, 1}, 20, 20);
  const double cell = 1.0 / 20;
  TerminalConfig t;
  t.source = {0.30, 0.45};
  t.sinks = {{0.55, 0.60}};
  TerminalConfig shifted;
  shifted.source = {0.30 + cell, 0.45};
  shifted.sinks = {{0.55 + cell, 0.60}};
  Mollifier m{0.1};

  SourceLoad a = build_source_load(mesh, t, m);
  SourceLoad b = build_source_load(mesh, shifted, m);
  auto vid = [&](int i, int j) { return j * 21 + i; };
  double scale = 0.0;
  for (double v : a.nodal_load) scale = std::max(scale, std::abs(v));
  for (int j = 0; j <= 20; ++j) {
    for (int i = 0; i < 20; ++i) {
      CHECK(std::abs(a.nodal_load[vid(i, j)] - b.nodal_load[vid(i + 1, j)]) <=
            1e-12 * (scale + 1.0));
    }
  }
}

TEST_CASE("resolution and placement guards") {
  Mesh mesh = build_disc_mesh({0, 0}, 1.0, 0.2);
  TerminalConfig t;
  t.source = {-0.2, 0.0};
  t.sinks = {{0.2, 0.0}};

  SUBCASE("kernel width below h is rejected") {
    try {
      build_source_load(mesh, t, Mollifier{0.1});
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::invalid_resolution);
    }
  }

  SUBCASE("terminal too close to the boundary is rejected") {
    TerminalConfig bad;
    bad.source = {0.95, 0.0};
    bad.sinks = {{-0.2, 0.0}};
    try {
      build_source_load(mesh, bad, Mollifier{0.25});
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::placement);
    }
  }
}

TEST_CASE("compatibility report") {
  SourceLoad hand;
  hand.nodal_load = {1.0, 0.0, -1.0, 0.0};
  CompatibilityReport rep = check_compatibility(hand);
  CHECK(rep.zero_sum);
  CHECK(rep.positive_mass == doctest::Approx(1.0));
  CHECK(rep.negative_mass == doctest::Approx(1.0));

  SourceLoad off;
  off.nodal_load = {1.0, -1.0, 1e-3};
  CHECK_FALSE(check_compatibility(off).zero_sum);
}
