#pragma once

#include "biped/common.hpp"
#include "biped/nn.hpp"

#include <json.hpp>

namespace biped {

using Json = nlohmann::json;

inline Json json_from_vec(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline Vec vec_from_json(const Json& a) {
  Vec v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  return v;
}

// row-major nested arrays
inline Json json_from_mat(const Mat& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Mat mat_from_json(const Json& rows) {
  const auto nr = static_cast<Eigen::Index>(rows.size());
  if (nr == 0) return Mat(0, 0);
  const auto nc = static_cast<Eigen::Index>(rows[0].size());
  Mat m(nr, nc);
  for (Eigen::Index r = 0; r < nr; ++r) {
    const auto& row = rows[static_cast<std::size_t>(r)];
    if (static_cast<Eigen::Index>(row.size()) != nc)
      throw InvalidData("matrix json: ragged rows");
    for (Eigen::Index c = 0; c < nc; ++c)
      m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

inline Json json_from_mlp(const nn::Mlp& net) {
  Json j;
  j["sizes"] = net.sizes;
  j["activation"] = nn::act_name(net.act);
  Json layers = Json::array();
  for (std::size_t l = 0; l < net.w.size(); ++l) {
    Json layer;
    layer["w"] = json_from_mat(net.w[l]);
    layer["b"] = json_from_vec(net.b[l]);
    layers.push_back(std::move(layer));
  }
  j["layers"] = std::move(layers);
  return j;
}

inline nn::Mlp mlp_from_json(const Json& j) {
  const auto sizes = j.at("sizes").get<std::vector<int>>();
  nn::Mlp net = nn::Mlp::zeros(sizes, nn::parse_act(j.at("activation")));
  const auto& layers = j.at("layers");
  if (layers.size() != net.w.size())
    throw InvalidData("mlp json: layer count mismatch");
  for (std::size_t l = 0; l < net.w.size(); ++l) {
    const Mat w = mat_from_json(layers[l].at("w"));
    const Vec b = vec_from_json(layers[l].at("b"));
    if (w.rows() != net.w[l].rows() || w.cols() != net.w[l].cols() ||
        b.size() != net.b[l].size())
      throw InvalidData("mlp json: layer shape mismatch");
    net.w[l] = w;
    net.b[l] = b;
  }
  return net;
}

}  // namespace biped
