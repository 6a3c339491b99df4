#include "qsi/io.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>

#include "qsi/errors.hpp"

namespace qsi::io {

namespace {

double json_number(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_null()) return std::numeric_limits<double>::infinity();
  return v.get<double>();
}

json finite_or_null(double x) {
  if (std::isfinite(x)) return x;
  return nullptr;
}

int parse_pnm_int(std::istream& in) {
  // skips whitespace and '#' comment lines
  for (;;) {
    const int c = in.peek();
    if (c == std::char_traits<char>::eof()) throw FormatError("pgm: truncated header");
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  int value = 0;
  if (!(in >> value)) throw FormatError("pgm: malformed header integer");
  return value;
}

}  // namespace

void write_pgm(const std::filesystem::path& path, const Interferogram& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("pgm: cannot open for writing: " + path.string());
  out << "P5\n" << image.width << " " << image.n_slices << "\n65535\n";
  std::vector<unsigned char> buf(static_cast<size_t>(image.width) * image.n_slices * 2);
  size_t o = 0;
  for (double v : image.pixels) {
    const double r = std::clamp(std::round(v), 0.0, 65535.0);
    const auto u = static_cast<std::uint16_t>(r);
    buf[o++] = static_cast<unsigned char>(u >> 8);
    buf[o++] = static_cast<unsigned char>(u & 0xff);
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw FormatError("pgm: write failed: " + path.string());
}

Interferogram read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("pgm: cannot open: " + path.string());
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (magic[0] != 'P' || magic[1] != '5')
    throw FormatError("pgm: bad magic (expected P5): " + path.string());
  const int width = parse_pnm_int(in);
  const int height = parse_pnm_int(in);
  const int maxval = parse_pnm_int(in);
  if (width < 1 || height < 1) throw FormatError("pgm: bad dimensions: " + path.string());
  if (maxval != 65535 && maxval != 255)
    throw FormatError("pgm: unsupported maxval " + std::to_string(maxval));
  in.get();  // single whitespace after maxval

  Interferogram img;
  img.width = width;
  img.n_slices = height;
  img.pixels.resize(static_cast<size_t>(width) * height);
  const size_t bytes_per = maxval == 65535 ? 2 : 1;
  std::vector<unsigned char> buf(img.pixels.size() * bytes_per);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (static_cast<size_t>(in.gcount()) != buf.size())
    throw FormatError("pgm: truncated pixel data: " + path.string());
  for (size_t i = 0; i < img.pixels.size(); ++i) {
    img.pixels[i] = bytes_per == 2
                        ? static_cast<double>((buf[2 * i] << 8) | buf[2 * i + 1])
                        : static_cast<double>(buf[i]);
  }
  return img;
}

void write_csv_image(const std::filesystem::path& path, const Interferogram& image) {
  std::ofstream out(path);
  if (!out) throw FormatError("csv: cannot open for writing: " + path.string());
  out.precision(17);
  for (int s = 0; s < image.n_slices; ++s) {
    const double* row = image.slice(s);
    for (int x = 0; x < image.width; ++x) {
      if (x) out << ',';
      out << row[x];
    }
    out << '\n';
  }
}

Interferogram read_csv_image(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("csv: cannot open: " + path.string());
  Interferogram img;
  std::string line;
  int width = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    int count = 0;
    while (std::getline(ss, cell, ',')) {
      try {
        img.pixels.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw FormatError("csv: non-numeric cell in " + path.string());
      }
      ++count;
    }
    if (width == -1) width = count;
    if (count != width) throw FormatError("csv: ragged rows in " + path.string());
    ++img.n_slices;
  }
  if (width < 1 || img.n_slices < 1) throw FormatError("csv: empty image: " + path.string());
  img.width = width;
  return img;
}

Interferogram read_image(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".pgm") return read_pgm(path);
  if (ext == ".csv") return read_csv_image(path);
  throw FormatError("unsupported image extension: " + path.string());
}

json config_to_json(const InterferometerConfig& cfg) {
  return json{{"fringe_wavenumber", cfg.fringe_wavenumber},
              {"envelope_center", cfg.envelope_center},
              {"envelope_sigma", cfg.envelope_sigma},
              {"image_width", cfg.image_width},
              {"n_slices", cfg.n_slices},
              {"n_images", cfg.n_images},
              {"peak_counts", cfg.peak_counts},
              {"background", cfg.background},
              {"read_noise_sigma", cfg.read_noise_sigma},
              {"bs_imbalance", cfg.bs_imbalance},
              {"shot_noise", cfg.shot_noise},
              {"rng_seed", cfg.rng_seed}};
}

InterferometerConfig config_from_json(const json& j) {
  InterferometerConfig cfg;
  if (j.contains("fringe_wavenumber")) cfg.fringe_wavenumber = j["fringe_wavenumber"].get<double>();
  if (j.contains("envelope_center")) cfg.envelope_center = j["envelope_center"].get<double>();
  if (j.contains("envelope_sigma")) cfg.envelope_sigma = j["envelope_sigma"].get<double>();
  if (j.contains("image_width")) cfg.image_width = j["image_width"].get<int>();
  if (j.contains("n_slices")) cfg.n_slices = j["n_slices"].get<int>();
  if (j.contains("n_images")) cfg.n_images = j["n_images"].get<int>();
  if (j.contains("peak_counts")) cfg.peak_counts = j["peak_counts"].get<double>();
  if (j.contains("background")) cfg.background = j["background"].get<double>();
  if (j.contains("read_noise_sigma")) cfg.read_noise_sigma = j["read_noise_sigma"].get<double>();
  if (j.contains("bs_imbalance")) cfg.bs_imbalance = j["bs_imbalance"].get<double>();
  if (j.contains("shot_noise")) cfg.shot_noise = j["shot_noise"].get<bool>();
  if (j.contains("rng_seed")) cfg.rng_seed = j["rng_seed"].get<std::uint64_t>();
  cfg.validate();
  return cfg;
}

InterferometerConfig load_config(const std::filesystem::path& path) {
  return config_from_json(load_json(path));
}

json qubit_to_json(const QubitState& state) {
  return json{{"kind", "qubit"}, {"theta", state.theta}, {"phi", state.phi}, {"mu", state.mu}};
}

QubitState qubit_from_json(const json& j) {
  return QubitState(j.at("theta").get<double>(), j.at("phi").get<double>(),
                    j.at("mu").get<double>());
}

json qudit_to_json(const QuditPureState& state) {
  return json{{"dim", state.dim}, {"thetas", state.thetas}, {"phis", state.phis}};
}

QuditPureState qudit_from_json(const json& j) {
  return QuditPureState(j.at("dim").get<int>(), j.at("thetas").get<std::vector<double>>(),
                        j.at("phis").get<std::vector<double>>());
}

QuditPureState load_qudit(const std::filesystem::path& path) {
  try {
    return qudit_from_json(load_json(path));
  } catch (const json::exception& e) {
    throw FormatError("qudit file " + path.string() + ": " + e.what());
  }
}

json source_to_json(const SourceTag& tag) {
  switch (tag.kind) {
    case SourceTag::Kind::Qubit:
      return qubit_to_json(tag.qubit);
    case SourceTag::Kind::QuditSubspace: {
      json j = qudit_to_json(tag.qudit);
      j["kind"] = "qudit";
      j["subspace"] = tag.subspace;
      return j;
    }
    case SourceTag::Kind::Preparation:
      return json{{"kind", "preparation"},
                  {"alpha", tag.preparation.alpha},
                  {"beta", tag.preparation.beta},
                  {"qwp_present", tag.preparation.qwp_present}};
  }
  throw std::logic_error("source_to_json: bad kind");
}

SourceTag source_from_json(const json& j) {
  SourceTag tag;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "qubit") {
    tag.kind = SourceTag::Kind::Qubit;
    tag.qubit = qubit_from_json(j);
  } else if (kind == "qudit") {
    tag.kind = SourceTag::Kind::QuditSubspace;
    tag.qudit = qudit_from_json(j);
    tag.subspace = j.at("subspace").get<int>();
  } else if (kind == "preparation") {
    tag.kind = SourceTag::Kind::Preparation;
    tag.preparation = PreparationSetting(j.at("alpha").get<double>(), j.at("beta").get<double>(),
                                         j.at("qwp_present").get<bool>());
  } else {
    throw FormatError("unknown source kind: " + kind);
  }
  return tag;
}

void write_sidecar(const std::filesystem::path& path, const Interferogram& image) {
  json j{{"config", config_to_json(image.config)}, {"seed", image.seed}};
  j["state"] = image.source ? source_to_json(*image.source) : json(nullptr);
  write_json(path, j);
}

json density_to_json(const Eigen::MatrixXcd& rho) {
  const int d = static_cast<int>(rho.rows());
  json re = json::array(), im = json::array();
  for (int r = 0; r < d; ++r) {
    json re_row = json::array(), im_row = json::array();
    for (int c = 0; c < d; ++c) {
      re_row.push_back(rho(r, c).real());
      im_row.push_back(rho(r, c).imag());
    }
    re.push_back(std::move(re_row));
    im.push_back(std::move(im_row));
  }
  return json{{"dim", d}, {"re", std::move(re)}, {"im", std::move(im)}};
}

Eigen::MatrixXcd density_from_json(const json& j) {
  const int d = j.at("dim").get<int>();
  if (d < 1) throw FormatError("density matrix: bad dim");
  Eigen::MatrixXcd rho(d, d);
  const auto& re = j.at("re");
  const auto& im = j.at("im");
  if (static_cast<int>(re.size()) != d || static_cast<int>(im.size()) != d)
    throw FormatError("density matrix: row count mismatch");
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c)
      rho(r, c) = Complex(re[r][c].get<double>(), im[r][c].get<double>());
  return rho;
}

json estimate_to_json(const FringeEstimate& est) {
  return json{{"phase_shift", est.phase_shift},
              {"phase_std", finite_or_null(est.phase_std)},
              {"visibility", est.visibility},
              {"visibility_std", est.visibility_std},
              {"avg_intensity", est.avg_intensity},
              {"avg_intensity_std", est.avg_intensity_std},
              {"n_slices_used", est.n_slices_used},
              {"flags", flag_names(est.flags)}};
}

FringeEstimate estimate_from_json(const json& j) {
  FringeEstimate est;
  est.phase_shift = json_number(j, "phase_shift");
  est.phase_std = json_number(j, "phase_std");
  est.visibility = json_number(j, "visibility");
  est.visibility_std = json_number(j, "visibility_std");
  est.avg_intensity = json_number(j, "avg_intensity");
  est.avg_intensity_std = json_number(j, "avg_intensity_std");
  est.n_slices_used = j.at("n_slices_used").get<int>();
  est.flags = flags_from_names(j.at("flags").get<std::vector<std::string>>());
  return est;
}

FringeEstimate load_estimate(const std::filesystem::path& path) {
  try {
    return estimate_from_json(load_json(path));
  } catch (const json::exception& e) {
    throw FormatError("estimate file " + path.string() + ": " + e.what());
  }
}

void write_estimate(const std::filesystem::path& path, const FringeEstimate& est) {
  write_json(path, estimate_to_json(est));
}

json reconstruction_to_json(const ReconstructionResult& res) {
  json j;
  if (res.kind == ReconstructionResult::Kind::Qubit) {
    j["kind"] = "qubit";
    j["theta"] = res.qubit.theta;
    j["phi"] = res.qubit.phi;
    j["mu"] = res.qubit.mu;
  } else {
    j["kind"] = "qudit";
    j["thetas"] = res.qudit.thetas;
    j["phis"] = res.qudit.phis;
  }
  j["rho"] = density_to_json(res.rho);
  j["flags"] = reconstruction_flag_names(res.flags);
  json sig;
  for (const auto& [k, v] : res.sigmas) sig[k] = finite_or_null(v);
  j["sigmas"] = std::move(sig);
  return j;
}

void write_slice_table(const std::filesystem::path& path, const std::vector<SliceFit>& fits) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open for writing: " + path.string());
  out.precision(17);
  out << "slice,background,amplitude,curvature,center,contrast,wavenumber,phase,"
         "residual,converged\n";
  for (size_t i = 0; i < fits.size(); ++i) {
    const auto& f = fits[i];
    out << i << ',' << f.params.background << ',' << f.params.amplitude << ','
        << f.params.curvature << ',' << f.params.center << ',' << f.params.contrast << ','
        << f.params.wavenumber << ',' << f.params.phase << ',' << f.residual_norm << ','
        << (f.converged ? 1 : 0) << '\n';
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open for writing: " + path.string());
  out << text;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_json(const std::filesystem::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

json load_json(const std::filesystem::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw FormatError("json parse error in " + path.string() + ": " + e.what());
  }
}

}  // namespace qsi::io
