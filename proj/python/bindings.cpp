#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "bcdrive/autopilot.hpp"
#include "bcdrive/errors.hpp"
#include "bcdrive/trainer.hpp"

namespace py = pybind11;
using namespace bcdrive;

namespace {

py::array_t<double> to_array(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.dims().begin(), t.dims().end());
  py::array_t<double> out(shape);
  std::copy(t.values().begin(), t.values().end(), out.mutable_data());
  return out;
}

Tensor from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  std::vector<std::size_t> dims(a.shape(), a.shape() + a.ndim());
  if (dims.size() == 2) dims.insert(dims.begin(), 1);
  return Tensor(dims, std::vector<double>(a.data(), a.data() + a.size()));
}

py::dict report_dict(const TrainReport& r) {
  py::dict d;
  d["epoch_loss"] = r.epoch_loss;
  d["train_accuracy"] = r.train_accuracy;
  d["test_accuracy"] = r.test_accuracy;
  d["class_counts"] = r.class_counts;
  d["train_size"] = r.train_size;
  d["test_size"] = r.test_size;
  return d;
}

py::dict drive_dict(const DriveReport& r) {
  py::dict d;
  d["steps"] = r.steps;
  d["laps_completed"] = r.laps_completed;
  d["max_abs_offset"] = r.max_abs_offset;
  d["off_track_steps"] = r.off_track_steps;
  d["latency_mean"] = r.latency_mean;
  d["latency_p99"] = r.latency_p99;
  d["interventions"] = r.interventions;
  d["command_histogram"] = r.command_histogram;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Behavioral-cloning driving pipeline";

  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::class_<CameraSpec>(m, "CameraSpec")
      .def(py::init([](int resolution, double near_offset, double window_side) {
             CameraSpec c{resolution, near_offset, window_side};
             c.validate();
             return c;
           }),
           py::arg("resolution") = CameraSpec{}.resolution,
           py::arg("near_offset") = CameraSpec{}.near_offset,
           py::arg("window_side") = CameraSpec{}.window_side)
      .def_readwrite("resolution", &CameraSpec::resolution)
      .def_readwrite("near_offset", &CameraSpec::near_offset)
      .def_readwrite("window_side", &CameraSpec::window_side);

  py::class_<CarState>(m, "CarState")
      .def(py::init<double, double, double, double>(), py::arg("x") = 0.0, py::arg("y") = 0.0,
           py::arg("heading") = 0.0, py::arg("speed") = 1.0)
      .def_readwrite("x", &CarState::x)
      .def_readwrite("y", &CarState::y)
      .def_readwrite("heading", &CarState::heading)
      .def_readwrite("speed", &CarState::speed)
      .def("__repr__", [](const CarState& s) {
        return "CarState(x=" + std::to_string(s.x) + ", y=" + std::to_string(s.y) +
               ", heading=" + std::to_string(s.heading) + ")";
      });

  py::class_<Track>(m, "Track")
      .def_static("named", &track_from_name, py::arg("name"), "'default' or 'random:<seed>'")
      .def_property_readonly("width", &Track::width)
      .def_property_readonly("total_length", &Track::total_length)
      .def_property_readonly("centerline", [](const Track& t) {
        std::vector<std::pair<double, double>> pts;
        for (const Vec2& p : t.centerline()) pts.emplace_back(p.x, p.y);
        return pts;
      })
      .def("start", &start_state, py::arg("lateral_offset") = 0.0, py::arg("speed") = 1.0)
      .def("cross_track_error",
           [](const Track& t, double x, double y) { return track_frame(t, {x, y}).cross_track_error; });

  m.def("render", [](const Track& t, const CarState& s, const CameraSpec& c) {
    return to_array(render_camera(t, s, c));
  }, py::arg("track"), py::arg("state"), py::arg("camera") = CameraSpec{});
  m.def("car_step", [](const CarState& s, int cmd, double dt) {
    return car_step(s, steer_from_int(cmd), dt);
  }, py::arg("state"), py::arg("cmd"), py::arg("dt") = kDefaultDt);
  m.def("expert_command", [](const Track& t, const CarState& s) {
    return to_int(expert_policy(t, s, ExpertGains{}));
  }, py::arg("track"), py::arg("state"));

  m.def("collect", [](const Track& t, const std::filesystem::path& out, std::size_t steps,
                      std::size_t stride, double start_offset, const CameraSpec& camera) {
    CollectOptions o;
    o.steps = steps;
    o.stride = stride;
    o.start_offset = start_offset;
    o.camera = camera;
    return collect_expert(t, o, out).samples.size();
  }, py::arg("track"), py::arg("out_dir"), py::arg("steps") = 250, py::arg("stride") = 3,
     py::arg("start_offset") = 0.0, py::arg("camera") = CameraSpec{},
     "Record an expert run; returns the number of frames written.");

  m.def("read_frame", [](const std::filesystem::path& p) { return to_array(read_frame(p)); });
  m.def("write_frame", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
                          const std::filesystem::path& p) { write_frame(from_array(a), p); });
  m.def("read_manifest", [](const std::filesystem::path& p) {
    std::vector<std::pair<std::string, int>> rows;
    for (const Sample& s : read_manifest(p).samples) rows.emplace_back(s.image_path, to_int(s.label));
    return rows;
  });

  py::class_<NetworkParams>(m, "Model")
      .def_static("load", &load_checkpoint, py::arg("path"))
      .def_static("init", [](int resolution, std::uint64_t seed) {
        ArchitectureConfig a;
        a.input_height = a.input_width = static_cast<std::size_t>(resolution);
        return init_params(a, seed);
      }, py::arg("resolution") = 64, py::arg("seed") = 1)
      .def("save", [](const NetworkParams& p, const std::filesystem::path& path) { save_checkpoint(p, path); })
      .def("predict_probs", [](const NetworkParams& p, const py::array_t<double, py::array::c_style | py::array::forcecast>& f) {
        return to_array(predict_probs(p, from_array(f)));
      })
      .def("predict", [](const NetworkParams& p, const py::array_t<double, py::array::c_style | py::array::forcecast>& f) {
        return to_int(predict_class(p, from_array(f)));
      })
      .def_property_readonly("architecture", [](const NetworkParams& p) { return p.arch.to_text(); })
      .def_property_readonly("parameter_count", [](const NetworkParams& p) { return p.weights.parameter_count(); });

  m.def("train", [](const std::filesystem::path& data_dir, std::uint64_t seed, std::size_t epochs,
                    std::size_t batch_size, bool augment) {
    const Manifest data = read_manifest(data_dir / kManifestName);
    if (data.samples.empty()) throw ContractError("dataset " + data_dir.string() + " is empty");
    const Frame first = read_frame(data.resolve(data.samples.front()));
    ArchitectureConfig arch;
    arch.input_height = first.dim(1);
    arch.input_width = first.dim(2);
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.batch_size = batch_size;
    cfg.augment = augment;
    cfg.split.shuffle_seed = seed;
    TrainResult r = train(data, arch, cfg, seed);
    return py::make_tuple(std::move(r.params), report_dict(r.report));
  }, py::arg("data_dir"), py::arg("seed") = 1, py::arg("epochs") = 20, py::arg("batch_size") = 8,
     py::arg("augment") = false, "Train on a dataset directory; returns (model, report).");

  m.def("evaluate", [](const NetworkParams& p, const std::filesystem::path& data_dir) {
    const Evaluation e = evaluate(p, read_manifest(data_dir / kManifestName));
    py::dict d;
    d["accuracy"] = e.accuracy;
    d["total"] = e.total;
    std::vector<std::vector<std::size_t>> conf;
    for (const auto& row : e.confusion) conf.emplace_back(row.begin(), row.end());
    d["confusion"] = conf;
    return d;
  });

  m.def("drive", [](const NetworkParams& p, const Track& t, std::size_t steps, double start_offset,
                    const CameraSpec& camera, bool fallback) {
    DriveOptions o;
    o.steps = steps;
    o.expert_fallback = fallback;
    const DriveResult r = run_closed_loop(p, t, camera, start_state(t, start_offset), o);
    py::dict d = drive_dict(r.report);
    d["trajectory_csv"] = format_trajectory_csv(r.trajectory);
    return d;
  }, py::arg("model"), py::arg("track"), py::arg("steps") = 2000, py::arg("start_offset") = 0.0,
     py::arg("camera") = CameraSpec{}, py::arg("fallback") = false);

  m.def("measure_latency", [](const NetworkParams& p, const CameraSpec& camera, std::size_t trials) {
    const LatencyStats s = measure_latency(p, camera, trials);
    py::dict d;
    d["mean_ms"] = s.mean_ms;
    d["p99_ms"] = s.p99_ms;
    d["samples_ms"] = s.samples_ms;
    return d;
  }, py::arg("model"), py::arg("camera") = CameraSpec{}, py::arg("trials") = 100);
}
