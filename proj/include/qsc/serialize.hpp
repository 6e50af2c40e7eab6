#pragma once

// JSON forms used by the CLI fixtures and the code-book interchange files:
//   pure state     {dim, re[], im[]}
//   density matrix {dim, re[][], im[][]}
//   code book      {dim, radius, meta{...}, elements[{label, re[], im[]}]}
//   encoding       {distribution{label: prob}, achieved_distance, duality_gap, iterations, converged}

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "qsc/ball_geometry.hpp"
#include "qsc/covering.hpp"
#include "qsc/encoding.hpp"
#include "qsc/state.hpp"

namespace qsc {

using json = nlohmann::json;

namespace detail {

inline json amplitudes_to_json(const CVector& v) {
  std::vector<double> re(static_cast<std::size_t>(v.size()));
  std::vector<double> im(re.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    re[static_cast<std::size_t>(i)] = v(i).real();
    im[static_cast<std::size_t>(i)] = v(i).imag();
  }
  return json{{"re", re}, {"im", im}};
}

inline CVector amplitudes_from_json(const json& j, std::size_t dim) {
  const auto re = j.at("re").get<std::vector<double>>();
  const auto im = j.at("im").get<std::vector<double>>();
  if (re.size() != dim || im.size() != dim) throw std::invalid_argument("state JSON: re/im length differs from dim");
  CVector v(static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < dim; ++i) v(static_cast<Eigen::Index>(i)) = cplx(re[i], im[i]);
  return v;
}

}  // namespace detail

inline json to_json(const PureState& s) {
  json j = detail::amplitudes_to_json(s.amplitudes());
  j["dim"] = s.dim();
  return j;
}

inline PureState pure_state_from_json(const json& j, const Tolerances& tol = {}) {
  const auto dim = j.at("dim").get<std::size_t>();
  return PureState::from_amplitudes(detail::amplitudes_from_json(j, dim), tol);
}

inline json to_json(const DensityMatrix& rho) {
  const auto n = static_cast<std::size_t>(rho.dim());
  std::vector<std::vector<double>> re(n, std::vector<double>(n));
  auto im = re;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const cplx z = rho.matrix()(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      re[r][c] = z.real();
      im[r][c] = z.imag();
    }
  }
  return json{{"dim", n}, {"re", re}, {"im", im}};
}

inline DensityMatrix density_from_json(const json& j, const Tolerances& tol = {}) {
  const auto dim = j.at("dim").get<std::size_t>();
  const auto re = j.at("re").get<std::vector<std::vector<double>>>();
  const auto im = j.at("im").get<std::vector<std::vector<double>>>();
  if (re.size() != dim || im.size() != dim) throw std::invalid_argument("density JSON: row count differs from dim");
  CMatrix m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::size_t r = 0; r < dim; ++r) {
    if (re[r].size() != dim || im[r].size() != dim) throw std::invalid_argument("density JSON: ragged row");
    for (std::size_t c = 0; c < dim; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = cplx(re[r][c], im[r][c]);
    }
  }
  return DensityMatrix::from_matrix(std::move(m), tol);
}

inline json to_json(const ConstructionMeta& m) {
  return json{{"method", m.method},         {"J_R", m.j_r},   {"J_P", m.j_p},
              {"epsilon_R", m.epsilon_r},   {"epsilon_P", m.epsilon_p},
              {"x", m.x},                   {"seed", m.seed}, {"fail_streak_limit", m.fail_streak_limit}};
}

inline ConstructionMeta meta_from_json(const json& j) {
  ConstructionMeta m;
  m.method = j.value("method", std::string("explicit"));
  m.j_r = j.at("J_R").get<std::size_t>();
  m.j_p = j.at("J_P").get<std::size_t>();
  m.epsilon_r = j.at("epsilon_R").get<double>();
  m.epsilon_p = j.at("epsilon_P").get<double>();
  m.x = j.at("x").get<double>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.fail_streak_limit = j.at("fail_streak_limit").get<std::size_t>();
  return m;
}

inline json to_json(const Covering& c) {
  json els = json::array();
  for (std::size_t i = 0; i < c.size(); ++i) {
    json e = detail::amplitudes_to_json(c.element(i).amplitudes());
    e["label"] = i;
    els.push_back(std::move(e));
  }
  return json{{"dim", c.dim()}, {"radius", c.radius()}, {"meta", to_json(c.meta())}, {"elements", std::move(els)}};
}

/// Elements may appear in any order but their labels must be exactly 0..n-1.
inline Covering covering_from_json(const json& j) {
  const auto dim = j.at("dim").get<std::size_t>();
  const auto& arr = j.at("elements");
  std::vector<std::optional<PureState>> slots(arr.size());
  for (const auto& e : arr) {
    const auto label = e.at("label").get<std::size_t>();
    if (label >= slots.size() || slots[label]) throw std::invalid_argument("code book JSON: labels must be 0..n-1");
    slots[label] = PureState::from_amplitudes(detail::amplitudes_from_json(e, dim));
  }
  std::vector<PureState> els;
  els.reserve(slots.size());
  for (auto& s : slots) els.push_back(std::move(*s));
  return Covering(dim, j.at("radius").get<double>(), std::move(els), meta_from_json(j.at("meta")));
}

inline json to_json(const LabelDistribution& d) {
  json j = json::object();
  for (std::size_t x = 0; x < d.size(); ++x) {
    if (d[x] > 0.0) j[std::to_string(x)] = d[x];
  }
  return j;
}

inline json to_json(const EncodingResult& r) {
  return json{{"distribution", to_json(r.distribution)},
              {"achieved_distance", r.achieved_distance},
              {"duality_gap", r.duality_gap},
              {"iterations", r.iterations},
              {"converged", r.converged}};
}

inline json to_json(const VolumeEstimate& v) {
  return json{{"dim", v.dim},
              {"epsilon", v.epsilon},
              {"estimate", v.point_estimate},
              {"std_error", v.std_error},
              {"num_samples", v.num_samples}};
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  return json::parse(in);
}

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write " + path);
  out << j.dump(2) << '\n';
}

}  // namespace qsc
