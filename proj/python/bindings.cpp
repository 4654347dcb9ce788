#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <array>
#include <cstring>
#include <string>
#include <vector>

#include "cyldepth/attention.hpp"
#include "cyldepth/cylinder.hpp"
#include "cyldepth/io.hpp"
#include "cyldepth/metrics.hpp"
#include "cyldepth/photometry.hpp"
#include "cyldepth/synthworld.hpp"

namespace py = pybind11;
using namespace cyldepth;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Depth crosses the boundary as an HxW array; zero, negative and non-finite
// entries are invalid.
DepthMap depth_from(const Array& a) {
  if (a.ndim() != 2) throw DimensionError("depth must be a 2-D array");
  Grid<double> g(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  std::memcpy(g.data().data(), a.data(), g.size() * sizeof(double));
  return DepthMap::from_values(std::move(g));
}

Array depth_to(const DepthMap& d) {
  Array out({d.height(), d.width()});
  double* p = out.mutable_data();
  for (std::size_t i = 0; i < d.values.size(); ++i) p[i] = d.valid[i] ? d.values[i] : 0.0;
  return out;
}

Raster raster_from(const Array& a) {
  if (a.ndim() != 2 && a.ndim() != 3) throw DimensionError("raster must be HxW or HxWxC");
  const int c = a.ndim() == 3 ? static_cast<int>(a.shape(2)) : 1;
  Raster r(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)), c);
  std::memcpy(r.data().data(), a.data(), r.data().size() * sizeof(double));
  return r;
}

Array raster_to(const Raster& r) {
  Array out({r.height(), r.width(), r.channels()});
  std::memcpy(out.mutable_data(), r.data().data(), r.data().size() * sizeof(double));
  return out;
}

std::vector<DepthMap> depths_from(const std::vector<Array>& list) {
  std::vector<DepthMap> out;
  for (const auto& a : list) out.push_back(depth_from(a));
  return out;
}

std::vector<Raster> rasters_from(const std::vector<Array>& list) {
  std::vector<Raster> out;
  for (const auto& a : list) out.push_back(raster_from(a));
  return out;
}

Weighting weighting_from(const std::string& name) {
  if (name == "full") return Weighting::full;
  if (name == "geometric") return Weighting::geometric;
  if (name == "identity") return Weighting::identity;
  throw ParameterError("unknown weighting '" + name + "'");
}

py::tuple to_cylinder(const Array& points, const std::array<double, 3>& center) {
  if (points.ndim() != 2 || points.shape(1) != 3) throw DimensionError("points must be Nx3");
  Cylinder cyl;
  cyl.center = Eigen::Vector3d(center[0], center[1], center[2]);
  const auto n = points.shape(0);
  Array theta(n);
  Array h(n);
  Array surface({n, py::ssize_t{3}});
  for (py::ssize_t i = 0; i < n; ++i) {
    const double* p = points.data() + 3 * i;
    const auto proj = project_point(Eigen::Vector3d(p[0], p[1], p[2]), cyl);
    theta.mutable_data()[i] = proj.coord.theta;
    h.mutable_data()[i] = proj.coord.h;
    for (int k = 0; k < 3; ++k) surface.mutable_data()[3 * i + k] = proj.surface_point[k];
  }
  return py::make_tuple(theta, h, surface);
}

// Positions arrive as one HxWx2 array of (theta, h) per view plus a matching
// HxW validity array.
py::dict sparse_attention(const std::vector<Array>& positions, const std::vector<py::array_t<bool>>& valid,
                          const std::vector<Array>& features, const Array& sigma, double tau,
                          const std::string& weighting, bool clamp_similarity) {
  if (positions.size() != valid.size()) throw DimensionError("positions and valid differ in length");
  std::vector<PositionMap> maps;
  for (std::size_t v = 0; v < positions.size(); ++v) {
    const auto& p = positions[v];
    const auto& m = valid[v];
    if (p.ndim() != 3 || p.shape(2) != 2) throw DimensionError("positions must be HxWx2");
    if (m.ndim() != 2 || m.shape(0) != p.shape(0) || m.shape(1) != p.shape(1))
      throw DimensionError("valid must be HxW matching positions");
    const int w = static_cast<int>(p.shape(1));
    const int h = static_cast<int>(p.shape(0));
    PositionMap pm{Grid<CylCoord>(w, h), Mask(w, h, 0)};
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        pm.coords(x, y) = {*p.data(y, x, 0), *p.data(y, x, 1)};
        pm.valid(x, y) = *m.data(y, x) ? 1 : 0;
      }
    }
    maps.push_back(std::move(pm));
  }
  if (sigma.ndim() != 2 || sigma.shape(0) != 2 || sigma.shape(1) != 2) throw DimensionError("sigma must be 2x2");
  AttentionParams params;
  params.sigma << *sigma.data(0, 0), *sigma.data(0, 1), *sigma.data(1, 0), *sigma.data(1, 1);
  params.tau = tau;
  params.weighting = weighting_from(weighting);
  params.clamp_similarity = clamp_similarity;

  const auto feats = rasters_from(features);
  SparseAttention attn;
  {
    py::gil_scoped_release release;
    attn = build_sparse_attention(maps, feats, params);
  }
  const auto n = static_cast<py::ssize_t>(attn.tokens.size());
  py::array_t<std::int64_t> tokens({n, py::ssize_t{3}});
  for (py::ssize_t t = 0; t < n; ++t) {
    const auto& tok = attn.tokens[static_cast<std::size_t>(t)];
    tokens.mutable_data()[3 * t] = tok.view;
    tokens.mutable_data()[3 * t + 1] = tok.y;
    tokens.mutable_data()[3 * t + 2] = tok.x;
  }
  const auto nnz = static_cast<py::ssize_t>(attn.entries.size());
  py::array_t<std::int64_t> offsets(static_cast<py::ssize_t>(attn.offsets.size()));
  std::copy(attn.offsets.begin(), attn.offsets.end(), offsets.mutable_data());
  py::array_t<std::int64_t> keys(nnz);
  Array spatial(nnz);
  Array weight(nnz);
  for (py::ssize_t e = 0; e < nnz; ++e) {
    const auto& entry = attn.entries[static_cast<std::size_t>(e)];
    keys.mutable_data()[e] = entry.key;
    spatial.mutable_data()[e] = entry.spatial;
    weight.mutable_data()[e] = entry.weight;
  }
  py::dict out;
  out["tokens"] = tokens;
  out["offsets"] = offsets;
  out["keys"] = keys;
  out["spatial"] = spatial;
  out["weight"] = weight;
  return out;
}

std::vector<Array> cylindrical_aggregate(const CameraRig& rig, const std::vector<Array>& depths,
                                         const std::vector<Array>& features, int stride, const std::string& weighting,
                                         bool normalize) {
  const auto ds = depths_from(depths);
  const auto fs = rasters_from(features);
  if (ds.size() != rig.size() || fs.size() != rig.size()) throw DimensionError("one depth and feature map per camera");
  std::vector<Raster> result;
  {
    py::gil_scoped_release release;
    std::vector<PointMap> points;
    for (std::size_t v = 0; v < rig.size(); ++v)
      points.push_back(backproject(ds[v], rig.cameras[v].intrinsics, rig.cameras[v].cam_to_ref, stride));
    Cylinder cyl;
    cyl.center = rig.cylinder_center;
    AttentionParams p;
    p.weighting = weighting_from(weighting);
    p.normalize = normalize;
    result = aggregate(fs, build_sparse_attention(build_position_maps(points, cyl), fs, p), normalize);
  }
  std::vector<Array> out;
  for (const auto& r : result) out.push_back(raster_to(r));
  return out;
}

py::dict evaluate_depths(const CameraRig& rig, const std::vector<Array>& pred, const std::vector<Array>& gt,
                         double min_depth, double max_depth) {
  const auto p = depths_from(pred);
  const auto g = depths_from(gt);
  MetricReport report;
  {
    py::gil_scoped_release release;
    report = evaluate(p, g, rig, DepthRange{min_depth, max_depth});
  }
  py::dict out;
  for (const auto& [k, v] : parse_report(format_report(report))) out[py::str(k)] = v;
  return out;
}

py::list render_scene(const std::string& preset, const CameraRig& rig, std::uint64_t seed) {
  const auto scene = make_preset(preset, rig, seed);
  RenderBundle bundle;
  {
    py::gil_scoped_release release;
    bundle = render(scene);
  }
  py::list views;
  for (std::size_t v = 0; v < bundle.views.size(); ++v) {
    py::dict d;
    d["name"] = rig.cameras[v].name;
    d["depth"] = depth_to(bundle.views[v].depth);
    d["image"] = raster_to(bundle.views[v].image);
    views.append(d);
  }
  return views;
}

std::vector<std::pair<double, double>> probe(const std::string& preset, const CameraRig& rig,
                                             const std::vector<double>& scales) {
  const auto scene = make_preset(preset, rig);
  std::vector<ScaleLoss> losses;
  {
    py::gil_scoped_release release;
    losses = probe_depth_scale(scene, rig, scales);
  }
  std::vector<std::pair<double, double>> out;
  for (const auto& s : losses) out.emplace_back(s.scale, s.loss);
  return out;
}

}  // namespace

PYBIND11_MODULE(_cyldepth, m) {
  m.doc() = "Cylindrical surround-view depth geometry";

  auto base = py::register_exception<Error>(m, "Error", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", base);
  py::register_exception<ParameterError>(m, "ParameterError", base);
  py::register_exception<OnAxisError>(m, "OnAxisError", base);
  py::register_exception<NoOverlapError>(m, "NoOverlapError", base);
  py::register_exception<EmptyEvaluationError>(m, "EmptyEvaluationError", base);
  py::register_exception<ConsistencyError>(m, "ConsistencyError", base);
  py::register_exception<SchemaError>(m, "SchemaError", base);
  py::register_exception<FormatError>(m, "FormatError", base);
  py::register_exception<IoError>(m, "IoError", base);

  py::class_<CameraRig>(m, "Rig")
      .def_static("ring", [](int cameras, double fov_deg, double radius, double height, int width, int image_height) {
        return make_ring_rig({cameras, fov_deg, radius, height, width, image_height});
      }, py::arg("cameras") = 6, py::arg("fov_deg") = 90.0, py::arg("radius") = 1.0, py::arg("height") = 1.5,
         py::arg("width") = 640, py::arg("image_height") = 384)
      .def_static("from_json", &io::decode_rig, py::arg("text"))
      .def("to_json", &io::encode_rig)
      .def("__len__", &CameraRig::size)
      .def_property_readonly("names", [](const CameraRig& r) {
        std::vector<std::string> names;
        for (const auto& c : r.cameras) names.push_back(c.name);
        return names;
      })
      .def_readonly("front", &CameraRig::front)
      .def_readonly("warnings", &CameraRig::warnings)
      .def("pose", [](const CameraRig& r, std::size_t k) {
        if (k >= r.size()) throw py::index_error("camera index out of range");
        const Eigen::Matrix4d mat = r.cameras[k].cam_to_ref.matrix();
        Array out({4, 4});
        for (int i = 0; i < 4; ++i)
          for (int j = 0; j < 4; ++j) out.mutable_data()[4 * i + j] = mat(i, j);
        return out;
      }, py::arg("k"));

  m.def("to_cylinder", &to_cylinder, py::arg("points"), py::arg("center") = std::array<double, 3>{0.0, 0.0, 0.0},
        "Radially project Nx3 points onto the unit cylinder; returns (theta, h, surface).");
  m.def("geodesic_delta", [](double t0, double h0, double t1, double h1) {
    const auto d = geodesic_delta({t0, h0}, {t1, h1});
    return std::make_pair(d.x(), d.y());
  });
  m.def("spatial_weight", [](double dtheta, double dh, const Array& sigma, double tau) {
    if (sigma.size() != 4) throw DimensionError("sigma must be 2x2");
    Eigen::Matrix2d s;
    s << sigma.data()[0], sigma.data()[1], sigma.data()[2], sigma.data()[3];
    return spatial_weight(mahalanobis_sq({dtheta, dh}, s), tau);
  }, py::arg("dtheta"), py::arg("dh"), py::arg("sigma"), py::arg("tau") = 1.2);
  m.def("feature_similarity", [](const Array& a, const Array& b, bool clamp) {
    return feature_similarity({a.data(), static_cast<std::size_t>(a.size())},
                              {b.data(), static_cast<std::size_t>(b.size())}, clamp);
  }, py::arg("a"), py::arg("b"), py::arg("clamp") = true);
  m.def("sparse_attention", &sparse_attention, py::arg("positions"), py::arg("valid"), py::arg("features"),
        py::arg("sigma"), py::arg("tau") = 1.2, py::arg("weighting") = "full", py::arg("clamp_similarity") = true);
  m.def("aggregate", &cylindrical_aggregate, py::arg("rig"), py::arg("depths"), py::arg("features"),
        py::arg("stride"), py::arg("weighting") = "full", py::arg("normalize") = false);
  m.def("evaluate", &evaluate_depths, py::arg("rig"), py::arg("pred"), py::arg("gt"), py::arg("min_depth") = 0.1,
        py::arg("max_depth") = 200.0);
  m.def("render", &render_scene, py::arg("preset"), py::arg("rig"), py::arg("seed") = 7);
  m.def("presets", &preset_names);
  m.def("probe", &probe, py::arg("preset"), py::arg("rig"), py::arg("scales"));
  m.def("encode_pfm", [](const Array& a) { return py::bytes(io::encode_pfm(raster_from(a))); });
  m.def("decode_pfm", [](const py::bytes& b) { return raster_to(io::decode_pfm(std::string(b))); });
}
