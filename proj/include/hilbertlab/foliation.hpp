#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hilbertlab/barycenter.hpp"
#include "hilbertlab/bound.hpp"
#include "hilbertlab/domain.hpp"
#include "hilbertlab/eccentricity.hpp"
#include "hilbertlab/entropy.hpp"
#include "hilbertlab/io/toml_lite.hpp"
#include "hilbertlab/numerics.hpp"

namespace hilbertlab {

inline constexpr const char* kOpenLeavesNote =
    "leaves are open convex domains, not compact quotients; leaf entropy is the volume-growth entropy";
inline constexpr const char* kDimensionNote = "outside the theorem's dimension hypothesis, consistency only";

/// One-parameter family of leaves with a discretized transverse measure.
struct FoliationSpec {
  std::vector<double> samples;       // t_i
  std::vector<double> weights;       // q_i
  std::string topology = "interval";  // or "circle"
  std::optional<double> total_mass;  // declared transverse mass
  std::string family = "ellipse";    // ellipse | pball | perturbed
  std::vector<double> params_at;     // leaf parameter per sample
  std::vector<double> leaf_weights;  // W(t_i), default 1
  int dimension = 2;
  std::uint64_t seed = 0;
  double eccentricity_exponent = 0.0;  // 0 means n
  EllipsoidMethod ellipsoid = EllipsoidMethod::John;
  double rmin = 0.0, rmax = 0.0;      // entropy window, 0 means the default
  int map_atoms = 512;

  double W(std::size_t i) const { return leaf_weights.empty() ? 1.0 : leaf_weights[i]; }
  double exponent() const { return eccentricity_exponent > 0.0 ? eccentricity_exponent : dimension; }

  std::size_t index_of(double t) const {
    for (std::size_t i = 0; i < samples.size(); ++i)
      if (samples[i] == t) return i;
    fail(ErrorKind::InvalidInput, "t is not among the foliation samples");
  }

  /// Domain spec string of the leaf at sample i.
  std::string leaf_domain(std::size_t i) const {
    std::ostringstream os;
    os.precision(17);
    const bool has = !params_at.empty();
    if (family == "ellipse") {
      if (!has) return "ellipse";
      os << "ellipse:";
      for (int k = 0; k + 1 < dimension; ++k) os << "1,";
      os << params_at[i];
      return os.str();
    }
    if (family == "pball") {
      if (!has) fail(ErrorKind::InvalidInput, "pball leaves need params_at exponents");
      os << "pball:" << params_at[i];
      return os.str();
    }
    if (family == "perturbed") {
      if (!has) fail(ErrorKind::InvalidInput, "perturbed leaves need params_at amplitudes");
      os << "perturbed:" << params_at[i] << ",0";
      return os.str();
    }
    fail(ErrorKind::InvalidInput, "unknown leaf family '" + family + "'");
  }

  void validate() const {
    if (dimension != 2 && dimension != 3) fail(ErrorKind::InvalidInput, "target dimension must be 2 or 3");
    if (samples.empty()) fail(ErrorKind::InvalidInput, "foliation needs samples");
    if (weights.size() != samples.size()) fail(ErrorKind::InvalidInput, "weights and samples differ in length");
    if (!params_at.empty() && params_at.size() != samples.size())
      fail(ErrorKind::InvalidInput, "params_at and samples differ in length");
    if (!leaf_weights.empty() && leaf_weights.size() != samples.size())
      fail(ErrorKind::InvalidInput, "leaf weights and samples differ in length");
    if (topology != "circle" && topology != "interval")
      fail(ErrorKind::InvalidInput, "topology must be circle or interval");
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (!std::isfinite(samples[i])) fail(ErrorKind::InvalidInput, "non-finite sample");
      if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) fail(ErrorKind::InvalidInput, "weights must be >= 0");
      if (!(W(i) > 0.0) || !std::isfinite(W(i))) fail(ErrorKind::InvalidInput, "leaf weights must be > 0");
      if (topology == "circle" && !(samples[i] >= 0.0 && samples[i] < 1.0))
        fail(ErrorKind::InvalidInput, "circle samples must lie in [0, 1)");
      for (std::size_t j = 0; j < i; ++j)
        if (samples[j] == samples[i]) fail(ErrorKind::InvalidInput, "duplicate sample");
    }
    if (total_mass) {
      const double m = num::ordered_sum(weights);
      if (std::abs(m - *total_mass) > 1e-12) fail(ErrorKind::InvalidInput, "transverse weights do not sum to the declared mass");
    }
    if (family != "ellipse" && family != "pball" && family != "perturbed")
      fail(ErrorKind::InvalidInput, "unknown leaf family '" + family + "'");
    if (family != "ellipse" && params_at.empty())
      fail(ErrorKind::InvalidInput, family + " leaves need leaf.params_at");
    if (family == "perturbed" && dimension != 2) fail(ErrorKind::InvalidInput, "perturbed leaves are two-dimensional");
    if (map_atoms < 16) fail(ErrorKind::InvalidInput, "map.atoms must be at least 16");
    if (!(rmin == 0.0 && rmax == 0.0) && !(rmax > rmin && rmin >= 1.0))
      fail(ErrorKind::InvalidInput, "entropy window needs rmax > rmin >= 1");
  }
};

/// p(t) = 2 + sin^2(pi t) on m equally spaced samples of [0, 1], uniform weights, W = 1.
inline FoliationSpec pball_sine_family(int m = 9, int dimension = 2) {
  FoliationSpec s;
  s.dimension = dimension;
  s.family = "pball";
  for (int i = 0; i < m; ++i) {
    const double t = static_cast<double>(i) / (m - 1);
    const double sn = std::sin(std::numbers::pi * t);
    s.samples.push_back(t);
    s.weights.push_back(1.0 / m);
    s.params_at.push_back(2.0 + sn * sn);
  }
  return s;
}

inline FoliationSpec constant_ellipse_family(const std::vector<double>& q, const std::vector<double>& W = {},
                                             int dimension = 2) {
  FoliationSpec s;
  s.dimension = dimension;
  s.family = "ellipse";
  s.topology = "circle";
  for (std::size_t i = 0; i < q.size(); ++i) s.samples.push_back(static_cast<double>(i) / q.size());
  s.weights = q;
  s.leaf_weights = W;
  return s;
}

inline FoliationSpec foliation_from_toml(const toml::Table& t) {
  using namespace toml;
  static const char* known[] = {"transverse.samples", "transverse.weights", "transverse.topology",
                                "transverse.mass", "leaf.family", "leaf.params_at", "leaf.weight.values",
                                "target.dimension", "eccentricity.exponent", "eccentricity.ellipsoid",
                                "entropy.rmin", "entropy.rmax", "map.atoms", "seed"};
  for (const auto& kv : t) {
    bool ok = false;
    for (const char* k : known) ok = ok || kv.first == k;
    if (!ok) fail(ErrorKind::InvalidInput, "unknown config key '" + kv.first + "'");
  }
  FoliationSpec s;
  auto need = [&](const char* key) {
    const auto* v = get<std::vector<double>>(t, key);
    if (!v) fail(ErrorKind::InvalidInput, std::string("config needs ") + key);
    return *v;
  };
  s.samples = need("transverse.samples");
  s.weights = need("transverse.weights");
  if (const auto* v = get<std::string>(t, "transverse.topology")) s.topology = *v;
  if (const auto* v = get<double>(t, "transverse.mass")) s.total_mass = *v;
  if (const auto* v = get<std::string>(t, "leaf.family")) s.family = *v;
  if (const auto* v = get<std::vector<double>>(t, "leaf.params_at")) s.params_at = *v;
  if (const auto* v = get<std::vector<double>>(t, "leaf.weight.values")) s.leaf_weights = *v;
  if (const auto* v = get<double>(t, "target.dimension")) {
    if (*v != std::floor(*v)) fail(ErrorKind::InvalidInput, "dimension must be an integer");
    s.dimension = static_cast<int>(*v);
  }
  if (const auto* v = get<double>(t, "eccentricity.exponent")) s.eccentricity_exponent = *v;
  if (const auto* v = get<std::string>(t, "eccentricity.ellipsoid")) s.ellipsoid = parse_ellipsoid_method(*v);
  if (const auto* v = get<double>(t, "entropy.rmin")) s.rmin = *v;
  if (const auto* v = get<double>(t, "entropy.rmax")) s.rmax = *v;
  if (const auto* v = get<double>(t, "map.atoms")) s.map_atoms = static_cast<int>(*v);
  if (const auto* v = get<double>(t, "seed")) {
    if (!(*v >= 0.0) || *v != std::floor(*v)) fail(ErrorKind::InvalidInput, "seed must be a non-negative integer");
    s.seed = static_cast<std::uint64_t>(*v);
  }
  s.validate();
  return s;
}

inline FoliationSpec load_foliation(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::InvalidInput, "cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return foliation_from_toml(toml::parse(ss.str()));
}

template <int N>
struct LeafProfile {
  double t = 0.0;
  double q = 0.0;
  double W = 1.0;
  std::string domain;
  EntropyEstimate h;
  double e = 1.0;            // eccentricity, (sup c)^exponent
  double sup_c = 1.0;
  std::vector<BoundPoint<N>> jac;
  double bound = 0.0;
  double min_margin = 0.0;   // over the jac samples
  bool homothety = false;    // every jac sample homothetic
  double lhs = 0.0, rhs = 0.0;  // this leaf's terms q W (n-1)^n and q W h^n e
};

namespace detail {

template <int N>
struct LeafCore {
  EntropyEstimate h;
  double e = 1.0, sup_c = 1.0, bound = 0.0, min_margin = 0.0;
  std::vector<BoundPoint<N>> jac;
  bool homothety = false;
};

template <int N>
LeafCore<N> leaf_core(const FoliationSpec& spec, const std::string& domain_spec) {
  const auto omega = parse_domain<N>(domain_spec);
  convexity_audit(*omega, 100, spec.seed);
  LeafCore<N> core;
  auto window = default_entropy_window<N>();
  if (spec.rmax > 0.0) window = {spec.rmin, spec.rmax};
  BallVolumeOptions vopt;
  vopt.density.seed = spec.seed;
  core.h = volume_entropy_estimate(*omega, Vec<N>::Zero(), window.first, window.second, vopt);

  EccentricityGrid<N> grid;
  grid.exponent = spec.exponent();
  EccentricityOptions eopt;
  eopt.method = spec.ellipsoid;
  const auto ecc = eccentricity_global(*omega, grid, eopt);
  core.e = ecc.value;
  core.sup_c = ecc.sup_c;

  auto target = std::make_shared<const Ellipsoid<N>>(Ellipsoid<N>::unit_ball());
  const auto Phi = make_natural_map<N>(omega, target, core.h.value, spec.map_atoms);
  BoundConfig cfg;
  cfg.entropy = core.h.value;
  cfg.eccentricity = core.e;
  cfg.local = eopt;
  const auto rep = bound_check(Phi, default_bound_points(*omega), cfg);
  core.jac = rep.points;
  core.bound = rep.bound;
  core.min_margin = rep.min_margin;
  core.homothety = true;
  for (const auto& p : rep.points) core.homothety = core.homothety && p.homothety;
  return core;
}

template <int N>
LeafProfile<N> assemble(const FoliationSpec& spec, std::size_t i, const std::string& dom, const LeafCore<N>& c) {
  LeafProfile<N> lp;
  lp.t = spec.samples[i];
  lp.q = spec.weights[i];
  lp.W = spec.W(i);
  lp.domain = dom;
  lp.h = c.h;
  lp.e = c.e;
  lp.sup_c = c.sup_c;
  lp.jac = c.jac;
  lp.bound = c.bound;
  lp.min_margin = c.min_margin;
  lp.homothety = c.homothety;
  lp.lhs = lp.q * lp.W * std::pow(N - 1.0, N);
  lp.rhs = lp.q * lp.W * std::pow(lp.h.value, N) * lp.e;
  return lp;
}

}  // namespace detail

/// Entropy, eccentricity and leafwise natural-map Jacobians of the leaf at t.
template <int N>
LeafProfile<N> leaf_profile(const FoliationSpec& spec, double t) {
  spec.validate();
  if (spec.dimension != N) fail(ErrorKind::InvalidInput, "spec dimension does not match");
  const std::size_t i = spec.index_of(t);
  const std::string dom = spec.leaf_domain(i);
  return detail::assemble<N>(spec, i, dom, detail::leaf_core<N>(spec, dom));
}

template <int N>
struct FoliationReport {
  int dimension = N;
  std::vector<LeafProfile<N>> leaves;
  double lhs = 0.0, rhs = 0.0, gap = 0.0;  // gap = rhs - lhs
  double transverse_mass = 0.0;
  std::string topology;
  std::string eccentricity_definition;
  std::string note = kOpenLeavesNote;
  std::string dimension_note;
};

/// int_M h(L_M)^n dmu_M against int_N h(L_N)^n e(L_N) dmu_N with hyperbolic target leaves.
template <int N>
FoliationReport<N> foliated_inequality(const FoliationSpec& spec) {
  spec.validate();
  if (spec.dimension != N) fail(ErrorKind::InvalidInput, "spec dimension does not match");
  const std::size_t m = spec.samples.size();
  std::vector<std::string> doms(m);
  std::vector<std::string> unique;
  std::map<std::string, std::size_t> slot;
  for (std::size_t i = 0; i < m; ++i) {
    doms[i] = spec.leaf_domain(i);
    if (!slot.count(doms[i])) {
      slot[doms[i]] = unique.size();
      unique.push_back(doms[i]);
    }
  }
  // identical leaves share one profile
  std::vector<detail::LeafCore<N>> cores(unique.size());
  num::parallel_for(unique.size(), [&](std::size_t k) { cores[k] = detail::leaf_core<N>(spec, unique[k]); });

  FoliationReport<N> rep;
  rep.topology = spec.topology;
  rep.eccentricity_definition =
      "(sup_p c(p))^" + std::to_string(spec.exponent()).substr(0, 4) + ", " + to_string(spec.ellipsoid);
  if (N == 2) rep.dimension_note = kDimensionNote;
  std::vector<double> l, r;
  for (std::size_t i = 0; i < m; ++i) {
    rep.leaves.push_back(detail::assemble<N>(spec, i, doms[i], cores[slot[doms[i]]]));
    l.push_back(rep.leaves.back().lhs);
    r.push_back(rep.leaves.back().rhs);
  }
  rep.lhs = num::ordered_sum(l);
  rep.rhs = num::ordered_sum(r);
  rep.gap = rep.rhs - rep.lhs;
  rep.transverse_mass = num::ordered_sum(spec.weights);
  return rep;
}

struct RigidityVerdict {
  bool equality = false;
  std::string verdict;                // "equality/homothetic" or "strict"
  std::size_t max_margin_leaf = 0;    // leaf with the largest rhs - lhs term
  std::vector<std::size_t> offending; // leaves that are not homothetic
};

template <int N>
RigidityVerdict rigidity_diagnosis(const FoliationReport<N>& rep) {
  RigidityVerdict v;
  bool all_hom = true;
  double best = -INFINITY;
  for (std::size_t i = 0; i < rep.leaves.size(); ++i) {
    const auto& lp = rep.leaves[i];
    if (!lp.homothety) {
      all_hom = false;
      v.offending.push_back(i);
    }
    if (lp.rhs - lp.lhs > best) {
      best = lp.rhs - lp.lhs;
      v.max_margin_leaf = i;
    }
  }
  v.equality = rep.gap <= 1e-4 * (1.0 + rep.lhs) && all_hom;
  v.verdict = v.equality ? "equality/homothetic" : "strict";
  return v;
}

}  // namespace hilbertlab
