#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "gam/attention.hpp"
#include "gam/bench.hpp"
#include "gam/core.hpp"
#include "gam/demo.hpp"
#include "gam/geometry.hpp"
#include "gam/io.hpp"
#include "gam/sampling.hpp"

namespace py = pybind11;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

gam::Matrix to_matrix(const DoubleArray& a) {
  if (a.ndim() != 2) throw gam::Error(gam::Errc::kShapeMismatch, "expected a 2-D array");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  return gam::Matrix(rows, cols, std::vector<double>(a.data(), a.data() + rows * cols));
}

py::array_t<double> to_numpy(const gam::Matrix& m) {
  py::array_t<double> out({m.rows(), m.cols()});
  std::copy(m.data(), m.data() + m.size(), out.mutable_data());
  return out;
}

py::array_t<double> to_numpy(const std::vector<double>& v, std::size_t rows, std::size_t cols) {
  py::array_t<double> out({rows, cols});
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::array_t<bool> mask_to_numpy(const std::vector<bool>& v, std::size_t rows, std::size_t cols) {
  py::array_t<bool> out({rows, cols});
  for (std::size_t i = 0; i < v.size(); ++i) out.mutable_data()[i] = v[i];
  return out;
}

py::array_t<std::int64_t> ids_to_numpy(const std::vector<std::size_t>& v, std::size_t rows, std::size_t cols) {
  py::array_t<std::int64_t> out({rows, cols});
  for (std::size_t i = 0; i < v.size(); ++i) out.mutable_data()[i] = static_cast<std::int64_t>(v[i]);
  return out;
}

py::dict bench_report_dict(const gam::bench::BenchReport& r) {
  py::dict d;
  d["method"] = r.method;
  d["reps"] = r.reps;
  d["times_ms"] = r.times_ms;
  d["mean_ms"] = r.mean_ms;
  d["median_ms"] = r.median_ms;
  d["stddev_ms"] = r.stddev_ms;
  d["speedup"] = r.speedup;
  d["median_speedup"] = r.median_speedup;
  return d;
}

#define GAM_MATRIX_PROPERTY(cls, field)                                          \
  def_property(                                                                  \
      #field, [](const cls& self) { return to_numpy(self.field); },              \
      [](cls& self, const DoubleArray& a) { self.field = to_matrix(a); })

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Gradient attention module for point-cloud local feature aggregation";

  static py::exception<gam::Error> gam_error(m, "GamError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const gam::Error& e) {
      py::set_error(gam_error, e.what());
    }
  });

  py::class_<gam::GamConfig>(m, "GamConfig")
      .def(py::init<>())
      .def_readwrite("lambda_", &gam::GamConfig::lambda)
      .def_readwrite("radius", &gam::GamConfig::radius)
      .def_readwrite("n_centers", &gam::GamConfig::n_centers)
      .def_readwrite("k_neighbors", &gam::GamConfig::k_neighbors)
      .def_readwrite("epsilon", &gam::GamConfig::epsilon)
      .def_readwrite("use_distance", &gam::GamConfig::use_distance)
      .def_readwrite("use_gradient", &gam::GamConfig::use_gradient)
      .def_readwrite("mlp_hidden", &gam::GamConfig::mlp_hidden)
      .def_readwrite("seed", &gam::GamConfig::seed)
      .def_readwrite("normalize_distance", &gam::GamConfig::normalize_distance);

  py::class_<gam::GamParams>(m, "GamParams")
      .GAM_MATRIX_PROPERTY(gam::GamParams, attn_w1)
      .GAM_MATRIX_PROPERTY(gam::GamParams, attn_b1)
      .GAM_MATRIX_PROPERTY(gam::GamParams, attn_w2)
      .GAM_MATRIX_PROPERTY(gam::GamParams, attn_b2)
      .GAM_MATRIX_PROPERTY(gam::GamParams, phi_w)
      .GAM_MATRIX_PROPERTY(gam::GamParams, phi_w_diff)
      .GAM_MATRIX_PROPERTY(gam::GamParams, phi_b)
      .GAM_MATRIX_PROPERTY(gam::GamParams, out_w)
      .GAM_MATRIX_PROPERTY(gam::GamParams, out_b);

  py::class_<gam::PointCloud>(m, "PointCloud")
      .def_property_readonly("coords", [](const gam::PointCloud& c) { return to_numpy(c.coords()); })
      .def_property_readonly("features",
                             [](const gam::PointCloud& c) -> py::object {
                               if (!c.has_features()) return py::none();
                               return to_numpy(*c.features());
                             })
      .def("__len__", &gam::PointCloud::size);

  py::class_<gam::NeighborhoodIndex>(m, "NeighborhoodIndex")
      .def_readonly("center_ids", &gam::NeighborhoodIndex::center_ids)
      .def_readonly("k", &gam::NeighborhoodIndex::k)
      .def_property_readonly("neighbor_ids", [](const gam::NeighborhoodIndex& n) {
        return ids_to_numpy(n.neighbor_ids, n.n_centers(), n.k);
      });

  py::class_<gam::EdgeGeometry>(m, "EdgeGeometry")
      .def_readonly("n_centers", &gam::EdgeGeometry::n_centers)
      .def_readonly("k", &gam::EdgeGeometry::k)
      .def_property_readonly("rel", [](const gam::EdgeGeometry& e) { return to_numpy(e.rel); })
      .def_property_readonly("dist", [](const gam::EdgeGeometry& e) { return to_numpy(e.dist, e.n_centers, e.k); })
      .def_property_readonly("grad", [](const gam::EdgeGeometry& e) { return to_numpy(e.grad, e.n_centers, e.k); });

  m.def(
      "validate_cloud",
      [](const DoubleArray& coords, std::optional<DoubleArray> features) {
        std::optional<gam::Matrix> f;
        if (features) f = to_matrix(*features);
        return gam::validate_cloud(to_matrix(coords), std::move(f));
      },
      py::arg("coords"), py::arg("features") = py::none());

  m.def("init_params", &gam::init_params, py::arg("config"), py::arg("in_channels"), py::arg("out_channels"),
        py::arg("seed") = 0);

  m.def("farthest_point_sample", &gam::farthest_point_sample, py::arg("cloud"), py::arg("n_centers"),
        py::arg("seed") = 0);
  m.def(
      "ball_query",
      [](const gam::PointCloud& cloud, const std::vector<std::size_t>& centers, double radius, std::size_t k,
         bool grid) {
        return gam::ball_query(cloud, centers, radius, k,
                               grid ? gam::SearchBackend::kGrid : gam::SearchBackend::kBruteForce);
      },
      py::arg("cloud"), py::arg("centers"), py::arg("radius"), py::arg("k"), py::arg("grid") = false);
  m.def(
      "knn", [](const gam::PointCloud& cloud, const std::vector<std::size_t>& centers,
                std::size_t k) { return gam::knn(cloud, centers, k); },
      py::arg("cloud"), py::arg("centers"), py::arg("k"));

  m.def(
      "edge_geometry",
      [](const gam::PointCloud& cloud, const gam::NeighborhoodIndex& nbrs, double eps) {
        return gam::edge_geometry(cloud, nbrs, eps);
      },
      py::arg("cloud"), py::arg("nbrs"), py::arg("eps") = gam::kDefaultEpsilon);
  m.def(
      "gradient_vectors",
      [](const DoubleArray& rel, std::size_t k, double eps) {
        const auto g = gam::gradient_vectors(to_matrix(rel), k, eps);
        return py::make_tuple(to_numpy(g.g), mask_to_numpy(g.defined, g.n_centers, g.k));
      },
      py::arg("rel"), py::arg("k"), py::arg("eps") = gam::kDefaultEpsilon);
  m.def(
      "depth_gradients",
      [](const DoubleArray& rel, std::size_t k, double eps) {
        const auto d = gam::depth_gradients(to_matrix(rel), k, eps);
        return py::make_tuple(to_numpy(d.dzdx, d.n_centers, d.k), to_numpy(d.dzdy, d.n_centers, d.k),
                              mask_to_numpy(d.defined, d.n_centers, d.k));
      },
      py::arg("rel"), py::arg("k"), py::arg("eps") = gam::kDefaultEpsilon);
  m.def(
      "pca_normals",
      [](const gam::PointCloud& cloud, const gam::NeighborhoodIndex& nbrs) {
        const auto n = gam::pca_normals(cloud, nbrs);
        return py::make_tuple(to_numpy(n.normal), mask_to_numpy(n.defined, n.n_centers, n.k));
      },
      py::arg("cloud"), py::arg("nbrs"));

  m.def(
      "attention_weights",
      [](const gam::EdgeGeometry& edges, const gam::GamParams& params, const gam::GamConfig& config) {
        return to_numpy(gam::attention_weights(edges, params, config).a);
      },
      py::arg("edges"), py::arg("params"), py::arg("config"));
  m.def(
      "gam_forward",
      [](const gam::PointCloud& cloud, const gam::GamConfig& config, const gam::GamParams& params) {
        const auto out = gam::gam_forward(cloud, config, params);
        return py::make_tuple(to_numpy(out.f_out), to_numpy(out.pooled));
      },
      py::arg("cloud"), py::arg("config"), py::arg("params"));

  m.def("read_cloud", &gam::io::read_cloud, py::arg("path"));
  m.def(
      "write_cloud",
      [](const gam::PointCloud& cloud, const std::filesystem::path& path, const std::string& format) {
        if (format != "xyz" && format != "pcf") {
          throw gam::Error(gam::Errc::kInvalidInput, "format must be 'xyz' or 'pcf'");
        }
        gam::io::write_cloud(cloud, path,
                             format == "pcf" ? gam::io::CloudFormat::kPcfBinary : gam::io::CloudFormat::kXyzAscii);
      },
      py::arg("cloud"), py::arg("path"), py::arg("format") = "xyz");

  m.def(
      "bench_gradient_methods",
      [](const gam::PointCloud& cloud, const gam::GamConfig& config, std::size_t reps) {
        const auto pair = gam::bench::bench_gradient_methods(cloud, config, reps);
        py::dict d;
        d["zenith_azimuth"] = bench_report_dict(pair.zenith_azimuth);
        d["normal"] = bench_report_dict(pair.normal);
        return d;
      },
      py::arg("cloud"), py::arg("config"), py::arg("reps") = 50);
  m.def("synthetic_cloud", &gam::bench::synthetic_cloud, py::arg("n_points"), py::arg("seed") = 0);

  m.def(
      "generate_shapes",
      [](std::size_t n_per_class, double noise_sigma, std::uint64_t seed, std::size_t points) {
        py::list out;
        for (auto& s : gam::demo::generate_shapes(n_per_class, noise_sigma, seed, points)) {
          out.append(py::make_tuple(s.cloud, gam::demo::to_string(s.label)));
        }
        return out;
      },
      py::arg("n_per_class"), py::arg("noise_sigma"), py::arg("seed") = 0,
      py::arg("points") = gam::demo::kDefaultPointsPerShape);
  m.def(
      "_train_classifier_json",
      [](std::size_t n_per_class, double noise_sigma, const gam::GamConfig& config, std::size_t epochs, double lr,
         bool gam_enabled, std::size_t batch_size) {
        const auto data = gam::demo::generate_shapes(n_per_class, noise_sigma, config.seed);
        gam::demo::TrainOptions options;
        options.epochs = epochs;
        options.learning_rate = lr;
        options.gam_enabled = gam_enabled;
        options.batch_size = batch_size;
        py::gil_scoped_release release;
        return gam::demo::to_json(gam::demo::train_classifier(data, config, options));
      },
      py::arg("n_per_class"), py::arg("noise_sigma"), py::arg("config"), py::arg("epochs"), py::arg("lr"),
      py::arg("gam_enabled") = true, py::arg("batch_size") = gam::demo::TrainOptions{}.batch_size);
  m.def(
      "gradcheck",
      [](const gam::GamConfig& config, std::uint64_t seed, double h) {
        const auto report =
            gam::demo::classifier_gradcheck(gam::demo::gradcheck_cloud(), config, 0, seed, h);
        py::dict d;
        d["max_abs_error"] = report.max_abs_error;
        d["max_rel_error"] = report.max_rel_error;
        d["n_scalars"] = report.n_scalars;
        return d;
      },
      py::arg("config"), py::arg("seed") = 0, py::arg("h") = 1e-5);

#ifdef VERSION_INFO
  m.attr("__version__") = VERSION_INFO;
#else
  m.attr("__version__") = "dev";
#endif
}
