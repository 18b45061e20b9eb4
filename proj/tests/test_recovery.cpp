#include <doctest.h>

#include <cmath>
#include <random>

#include "spf/recovery.hpp"

using namespace spf;

namespace {

// Exact 1D profile energy of a piecewise-linear path: both terms integrate in
// closed form on each linear piece.
double piecewise_energy(const std::vector<double>& t, const std::vector<double>& z, double eps) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    const double dt = t[i + 1] - t[i];
    const double slope = (z[i + 1] - z[i]) / dt;
    const double w0 = 1.0 - z[i];
    const double w1 = 1.0 - z[i + 1];
    acc += 0.5 * eps * slope * slope * dt;
    acc += dt * (w0 * w0 + w0 * w1 + w1 * w1) / (3.0 * 2.0 * eps);
  }
  return acc;
}

SegmentNetwork unit_segment_net(double theta = 1.0) {
  SegmentNetwork net;
  net.segments = {make_segment({0.0, 0.0}, {1.0, 0.0}, theta)};
  return net;
}

Mesh segment_mesh(double eps, double ratio) {
  const double margin = 3.5 * eps + 0.1;
  return build_disc_mesh({0.5, 0.0}, 0.5 + margin, eps / ratio);
}

}  // namespace

TEST_CASE("transition profile cost: closed form") {
  for (auto [eps, eta] : {std::pair{0.05, 0.0025}, {0.1, 0.03}, {0.02, 0.001}, {0.3, 0.2}}) {
    const double numeric = transition_cost_check(eps, eta);
    const double closed = 0.5 * ((1.0 - eta) * (1.0 - eta) - eps * eps);
    CHECK(std::abs(numeric - closed) <= 1e-10);
    CHECK(numeric <= 0.5 * (1.0 - eta) * (1.0 - eta));
  }
}

TEST_CASE("transition cost approaches one half") {
  const double v = transition_cost_check(1e-4, 1e-5);
  CHECK(v == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("partial transition lower bound on random profiles") {
  // Any continuous path that crosses from 1/2 to 3/4 pays at least 3/2^5.
  const double bound = 3.0 / 32.0;
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    const double eps = 0.01 + 0.49 * ud(rng);
    const double eta = 0.001 + 0.4 * ud(rng);
    const int pieces = 3 + static_cast<int>(ud(rng) * 17);
    const double horizon = 0.5 + 2.5 * ud(rng);
    std::vector<double> t{0.0}, z;
    for (int k = 1; k <= pieces; ++k) t.push_back(horizon * k / pieces);
    z.push_back(eta + (0.5 - eta) * ud(rng));          // start at or below 1/2
    for (int k = 1; k < pieces; ++k) z.push_back(eta + (1.0 - eta) * ud(rng));
    z.push_back(0.75 + 0.25 * ud(rng));                // end at or above 3/4
    CHECK(piecewise_energy(t, z, eps) >= bound * (1.0 - 1e-12));
  }
}

TEST_CASE("builder guards") {
  SegmentNetwork net = unit_segment_net();

  SUBCASE("alpha = 0 is unsupported") {
    Mesh mesh = segment_mesh(0.08, 20.0);
    try {
      build_recovery(net, 0.0, 0.08, mesh);
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::unsupported);
    }
  }

  SUBCASE("coarse mesh is rejected") {
    Mesh mesh = build_disc_mesh({0.5, 0.0}, 1.0, 0.2);
    try {
      build_recovery(net, 0.05, 0.08, mesh);
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::invalid_resolution);
    }
  }

  SUBCASE("tube escaping the domain is rejected") {
    Mesh mesh = build_disc_mesh({0.5, 0.0}, 0.52, 0.004);
    try {
      build_recovery(net, 0.05, 0.08, mesh);
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::geometry);
    }
  }
}

TEST_CASE("single segment construction") {
  const double alpha = 0.05;
  const double eps = 0.08;
  SegmentNetwork net = unit_segment_net();
  Mesh mesh = segment_mesh(eps, 40.0);
  RecoveryPair pair = build_recovery(net, alpha, eps, mesh);
  const double eta = eta_default(alpha, eps);

  SUBCASE("reported tube parameters") {
    CHECK(pair.epsilon == eps);
    CHECK(pair.b_eps == doctest::Approx(eps * std::log((1.0 - eta) / eps)).epsilon(1e-12));
    CHECK(pair.a_eps >= 0.5 * 1.0 * alpha * eps);  // at least the theory value
    CHECK(pair.r_eps >= pair.a_eps);
  }

  SUBCASE("phi hits eta exactly on the core and one away from it") {
    int core_nodes = 0, far_nodes = 0;
    const double reach = pair.b_eps + eps;
    for (int i = 0; i < mesh.vertex_count(); ++i) {
      const Vec2& p = mesh.vertices[i];
      const double dx = std::max({0.0 - p.x, p.x - 1.0, 0.0});
      const double d_seg = std::max(dx, std::abs(p.y));
      if (d_seg <= pair.a_eps) {
        CHECK(pair.phi.values[i] == eta);
        ++core_nodes;
      }
      // Conservative outer bound: beyond every tube piece by a margin.
      if (d_seg > 2.0 * pair.r_eps + reach + 1e-12) {
        CHECK(pair.phi.values[i] == 1.0);
        ++far_nodes;
      }
      CHECK(pair.phi.values[i] >= eta);
      CHECK(pair.phi.values[i] <= 1.0);
    }
    CHECK(core_nodes > 0);
    CHECK(far_nodes > 0);
  }

  SUBCASE("sigma is supported on the effective core") {
    const double max_edge = mesh.max_edge_length();
    for (int t = 0; t < mesh.triangle_count(); ++t) {
      if (norm(pair.sigma.values[t]) == 0.0) continue;
      const Vec2 c = mesh.triangle_centroid(t);
      const double dx = std::max({0.0 - c.x, c.x - 1.0, 0.0});
      const double d_seg = std::max(dx, std::abs(c.y));
      CHECK(d_seg <= 1.5 * pair.r_eps + max_edge);
    }
  }

  SUBCASE("transport mass approximates theta times length") {
    CHECK(transport_mass(pair.sigma) == doctest::Approx(1.0).epsilon(0.1));
  }

  SUBCASE("energy is finite and in the expected range") {
    EnergyBreakdown e = total_energy(pair.sigma, pair.phi, eps);
    CHECK(e.total > 0.9);   // at least the transition cost of the length
    CHECK(e.total < 1.55);  // bounded certificate at this scale
  }
}

TEST_CASE("feasibility: weak divergence matches the mollified pairing") {
  const double alpha = 0.05;
  const double eps = 0.08;
  SegmentNetwork net = unit_segment_net();
  Mesh mesh = segment_mesh(eps, 16.0);
  RecoveryPair pair = build_recovery(net, alpha, eps, mesh);

  const auto got = weak_divergence_pairing(pair.sigma);
  const auto want = mollified_source_pairing(net, eps, mesh);
  double worst = 0.0;
  for (int i = 0; i < mesh.vertex_count(); ++i) {
    worst = std::max(worst, std::abs(got[i] - want[i]));
  }
  CHECK(worst <= 5.0 * mesh.target_edge_length * 1.0);
}

TEST_CASE("energy sweep decreases with epsilon") {
  const double alpha = 0.05;
  SegmentNetwork net = unit_segment_net();
  double prev = 1e300;
  for (double eps : {0.16, 0.08}) {
    Mesh mesh = segment_mesh(eps, 30.0);
    RecoveryPair pair = build_recovery(net, alpha, eps, mesh);
    const double total = total_energy(pair.sigma, pair.phi, eps).total;
    CHECK(total < prev);
    prev = total;
  }
  CHECK(prev < 1.6);
}

TEST_CASE("branching point bookkeeping on a Y network") {
  const double alpha = 0.05;
  const double eps = 0.1;
  const Vec2 hub{0.0, 0.0};
  const Vec2 in_far{-0.8, 0.0};
  const Vec2 out1{0.8 * std::cos(3.14159265358979323846 / 3),
                  0.8 * std::sin(3.14159265358979323846 / 3)};
  const Vec2 out2{out1.x, -out1.y};

  SegmentNetwork y;
  y.segments = {make_segment(in_far, hub, 2.0), make_segment(hub, out1, 1.0),
                make_segment(hub, out2, 1.0)};

  Mesh mesh = build_disc_mesh({0.05, 0.0}, 1.25, eps / 30.0);
  RecoveryPair combined = build_recovery(y, alpha, eps, mesh);
  const double e_combined = total_energy(combined.sigma, combined.phi, eps).total;

  double e_sum = 0.0;
  double c_sum = 0.0;
  for (const Segment& seg : y.segments) {
    SegmentNetwork single;
    single.segments = {seg};
    RecoveryPair pair = build_recovery(single, alpha, eps, mesh);
    e_sum += total_energy(pair.sigma, pair.phi, eps).total;
    const double a_sigma = std::max(0.5 * seg.theta * alpha * eps, mesh.max_edge_length());
    c_sum += corner_energy_constant(seg.theta, a_sigma / eps,
                                    std::max(0.3 * eps, 2.0 * a_sigma) / eps);
  }
  const double eta = eta_default(alpha, eps);
  const double bookkeeping = (3.0 - 1.0) * c_sum * eta * eta / (2.0 * eps);
  CHECK(e_combined <= e_sum + bookkeeping + 0.05);

  SUBCASE("the Y pair is still divergence-feasible") {
    const auto got = weak_divergence_pairing(combined.sigma);
    const auto want = mollified_source_pairing(y, eps, mesh);
    double worst = 0.0;
    for (int i = 0; i < mesh.vertex_count(); ++i) {
      worst = std::max(worst, std::abs(got[i] - want[i]));
    }
    CHECK(worst <= 5.0 * mesh.target_edge_length * 2.0);
  }
}
