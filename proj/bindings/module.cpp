#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qsi/io.hpp"
#include "qsi/pipeline.hpp"
#include "qsi/reconstruct.hpp"
#include "qsi/tomography.hpp"

namespace py = pybind11;
using namespace qsi;

namespace {

py::array_t<double> image_to_array(const Interferogram& img) {
  py::array_t<double> arr({img.n_slices, img.width});
  std::copy(img.pixels.begin(), img.pixels.end(), arr.mutable_data());
  return arr;
}

Interferogram array_to_image(const py::array_t<double, py::array::c_style>& arr) {
  if (arr.ndim() != 2) throw std::invalid_argument("expected a 2-d array");
  Interferogram img;
  img.n_slices = static_cast<int>(arr.shape(0));
  img.width = static_cast<int>(arr.shape(1));
  img.pixels.assign(arr.data(), arr.data() + arr.size());
  return img;
}

}  // namespace

PYBIND11_MODULE(_qsi, m) {
  m.doc() = "Interferogram synthesis, fringe fitting and quantum state estimation";

  py::class_<QubitState>(m, "QubitState")
      .def(py::init<double, double, double>(), py::arg("theta"), py::arg("phi"),
           py::arg("mu") = 1.0)
      .def_readonly("theta", &QubitState::theta)
      .def_readonly("phi", &QubitState::phi)
      .def_readonly("mu", &QubitState::mu)
      .def("bloch_length", &QubitState::bloch_length)
      .def("__repr__", [](const QubitState& s) {
        return "QubitState(theta=" + std::to_string(s.theta) +
               ", phi=" + std::to_string(s.phi) + ", mu=" + std::to_string(s.mu) + ")";
      });

  py::class_<QuditPureState>(m, "QuditPureState")
      .def(py::init<int, std::vector<double>, std::vector<double>>(), py::arg("dim"),
           py::arg("thetas"), py::arg("phis"))
      .def_readonly("dim", &QuditPureState::dim)
      .def_readonly("thetas", &QuditPureState::thetas)
      .def_readonly("phis", &QuditPureState::phis);

  py::class_<InterferometerConfig>(m, "InterferometerConfig")
      .def(py::init<>())
      .def_readwrite("fringe_wavenumber", &InterferometerConfig::fringe_wavenumber)
      .def_readwrite("envelope_center", &InterferometerConfig::envelope_center)
      .def_readwrite("envelope_sigma", &InterferometerConfig::envelope_sigma)
      .def_readwrite("image_width", &InterferometerConfig::image_width)
      .def_readwrite("n_slices", &InterferometerConfig::n_slices)
      .def_readwrite("n_images", &InterferometerConfig::n_images)
      .def_readwrite("peak_counts", &InterferometerConfig::peak_counts)
      .def_readwrite("background", &InterferometerConfig::background)
      .def_readwrite("read_noise_sigma", &InterferometerConfig::read_noise_sigma)
      .def_readwrite("bs_imbalance", &InterferometerConfig::bs_imbalance)
      .def_readwrite("shot_noise", &InterferometerConfig::shot_noise)
      .def_readwrite("rng_seed", &InterferometerConfig::rng_seed);

  py::class_<FringeEstimate>(m, "FringeEstimate")
      .def(py::init<>())
      .def_readwrite("phase_shift", &FringeEstimate::phase_shift)
      .def_readwrite("phase_std", &FringeEstimate::phase_std)
      .def_readwrite("visibility", &FringeEstimate::visibility)
      .def_readwrite("visibility_std", &FringeEstimate::visibility_std)
      .def_readwrite("avg_intensity", &FringeEstimate::avg_intensity)
      .def_readwrite("avg_intensity_std", &FringeEstimate::avg_intensity_std)
      .def_readwrite("n_slices_used", &FringeEstimate::n_slices_used)
      .def_property_readonly("flags",
                             [](const FringeEstimate& e) { return flag_names(e.flags); });

  py::class_<ReconstructionResult>(m, "ReconstructionResult")
      .def_property_readonly("kind",
                             [](const ReconstructionResult& r) {
                               return r.kind == ReconstructionResult::Kind::Qubit
                                          ? "qubit"
                                          : "qudit";
                             })
      .def_readonly("qubit", &ReconstructionResult::qubit)
      .def_readonly("qudit", &ReconstructionResult::qudit)
      .def_readonly("rho", &ReconstructionResult::rho)
      .def_readonly("sigmas", &ReconstructionResult::sigmas)
      .def_property_readonly("flags", [](const ReconstructionResult& r) {
        return reconstruction_flag_names(r.flags);
      });

  m.def("density_matrix",
        [](const QubitState& s) { return density_matrix(s).entries(); }, py::arg("state"),
        "2x2 density matrix of a Bloch-parameterized qubit");
  m.def("qudit_amplitudes", &qudit_amplitudes, py::arg("state"));
  m.def("prepare_qubit",
        [](double alpha, double beta, bool qwp_present) {
          return prepare_qubit(PreparationSetting(alpha, beta, qwp_present));
        },
        py::arg("alpha"), py::arg("beta") = 0.0, py::arg("qwp_present") = true,
        "State prepared by HWP(alpha) then optional QWP(beta) on vertical input");
  m.def("intensity_curve", &intensity_curve, py::arg("state"), py::arg("phase"));
  m.def("qudit_intensity_curve", &qudit_intensity_curve, py::arg("state"), py::arg("k"),
        py::arg("phase"));
  m.def("average_intensity", &average_intensity, py::arg("state"));
  m.def("visibility", &visibility, py::arg("state"));
  m.def("fidelity",
        [](const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
          return fidelity(DensityMatrix(a), DensityMatrix(b));
        },
        py::arg("rho"), py::arg("target"), "Uhlmann fidelity of two density matrices");
  m.def("state_fidelity",
        [](const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) { return fidelity(a, b); },
        py::arg("ket_a"), py::arg("ket_b"));
  m.def("entanglement_entropy", &entanglement_entropy, py::arg("reduced"));

  m.def("synthesize",
        [](const QubitState& s, const InterferometerConfig& cfg) {
          return image_to_array(synthesize(s, cfg));
        },
        py::arg("state"), py::arg("config"), "One synthetic interferogram image");
  m.def("synthesize_qudit",
        [](const QuditPureState& s, int k, const InterferometerConfig& cfg) {
          return image_to_array(synthesize(s, k, cfg));
        },
        py::arg("state"), py::arg("k"), py::arg("config"));

  m.def("fit_image",
        [](const py::array_t<double, py::array::c_style>& arr,
           std::optional<double> norm_reference) {
          const Interferogram img = array_to_image(arr);
          const auto fits = fit_image(img);
          return norm_reference ? aggregate(fits, *norm_reference)
                                : aggregate_unnormalized(fits);
        },
        py::arg("image"), py::arg("norm_reference") = std::nullopt,
        "Per-slice fringe fits aggregated into one estimate");

  m.def("invert_qubit", &invert_qubit, py::arg("estimate"));
  m.def("reconstruct_pure_assumed", &reconstruct_pure_assumed, py::arg("estimate"));
  m.def("invert_qudit", &invert_qudit, py::arg("estimates"));
  m.def("entanglement_from_marginal", &entanglement_from_marginal, py::arg("estimate"));

  m.def("simulate_qst",
        [](const QubitState& s, long shots, std::uint64_t seed) {
          const QstResult r = simulate_qst(s, ShotBudget(shots, 3), seed);
          return py::make_tuple(r.rho.entries(), r.rescaled);
        },
        py::arg("state"), py::arg("shots"), py::arg("seed"),
        "Three-setting tomography baseline; returns (rho, rescaled)");
  m.def("settings_row",
        [](int dim) {
          const SettingsRow r = settings_row(dim);
          py::dict d;
          d["dim"] = r.dim;
          d["qsi"] = r.qsi_settings;
          d["qst"] = r.qst_settings;
          d["qst_pure"] = r.qst_pure_settings;
          return d;
        },
        py::arg("dim"));

  m.attr("__version__") = QSI_VERSION;
}
