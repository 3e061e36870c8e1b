#include "analogy/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace analogy {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kParamMagic[8] = {'A', 'N', 'L', 'G', 'P', 'R', 'M', '1'};
constexpr char kImageMagic[8] = {'A', 'N', 'L', 'G', 'I', 'M', 'G', '1'};
constexpr int kFormatVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T take(std::istream& in, const fs::path& file) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw std::runtime_error("truncated file " + file.string());
  return v;
}

void put_doubles(std::ostream& out, std::span<const double> v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> take_doubles(std::istream& in, std::size_t n, const fs::path& file) {
  std::vector<double> v(n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw std::runtime_error("truncated file " + file.string());
  return v;
}

void check_magic(std::istream& in, const char (&magic)[8], const fs::path& file) {
  char buf[8];
  in.read(buf, 8);
  if (!in || std::memcmp(buf, magic, 8) != 0) {
    throw std::runtime_error(file.string() + " is not a valid checkpoint file");
  }
}

std::ofstream open_out(const fs::path& file, std::ios::openmode mode = std::ios::binary) {
  std::ofstream out(file, mode | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  return out;
}

std::ifstream open_in(const fs::path& file, std::ios::openmode mode = std::ios::binary) {
  std::ifstream in(file, mode);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  return in;
}

json size_json(Size s) { return json::array({s.height, s.width}); }
Size size_from(const json& j) { return {j.at(0).get<int>(), j.at(1).get<int>()}; }

std::string net_file(const std::string& net, int scale) {
  return net + "_" + std::to_string(scale) + ".bin";
}

json manifest_of(const TrainResult& run) {
  const ModelBundle& m = run.bundle;
  json sizes = json::array();
  for (Size s : m.sched.sizes) sizes.push_back(size_json(s));
  json nets = json::array();
  for (const auto& s : m.nets) {
    json names = json::array();
    for (const auto& [name, net] : s.named()) names.push_back(name);
    nets.push_back({{"scale", s.scale}, {"networks", names}, {"fingerprint", s.fingerprint()}});
  }
  return {
      {"format_version", kFormatVersion},
      {"schedule", {{"r", m.sched.r}, {"N", m.sched.N}, {"K", m.sched.K}, {"sizes", sizes}}},
      {"config", to_json(m.config)},
      {"refinement", m.refinement},
      {"trained_up_to", m.trained_up_to},
      {"plan", {{"seed", m.plan.seed}, {"sigma_a", m.plan.sigma_a}, {"sigma_b", m.plan.sigma_b}}},
      {"scales", nets},
      {"frames_a", run.data.frames_a.size()},
      {"has_b", !run.data.b.empty()},
  };
}

ModelBundle bundle_from(const json& man, const fs::path& dir) {
  if (man.at("format_version").get<int>() != kFormatVersion) {
    throw std::runtime_error("unsupported checkpoint format version in " + dir.string());
  }
  ModelBundle m;
  m.config = train_config_from_json(man.at("config"));
  m.refinement = man.at("refinement").get<bool>();
  m.trained_up_to = man.at("trained_up_to").get<int>();

  const json& s = man.at("schedule");
  m.sched.r = s.at("r").get<double>();
  m.sched.N = s.at("N").get<int>();
  m.sched.K = s.at("K").get<int>();
  for (const auto& e : s.at("sizes")) m.sched.sizes.push_back(size_from(e));
  const ScheduleConfig& sc = m.config.schedule;
  const ScaleSchedule expected =
      build_schedule(m.sched.finest(), sc.r, sc.min_size, sc.max_size, sc.k_offset);
  if (!(expected == m.sched)) {
    throw std::runtime_error("checkpoint schedule in " + dir.string() +
                             " does not match its configuration");
  }

  const json& p = man.at("plan");
  m.plan.seed = p.at("seed").get<std::uint64_t>();
  m.plan.sigma_a = p.at("sigma_a").get<std::vector<double>>();
  m.plan.sigma_b = p.at("sigma_b").get<std::vector<double>>();
  m.plan.z_star_a = read_image_raw(dir / "z_star_a.bin");
  m.plan.z_star_b = read_image_raw(dir / "z_star_b.bin");
  if (m.plan.z_star_a.size() != m.sched.at(0) || m.plan.z_star_b.size() != m.sched.at(0)) {
    throw std::runtime_error("fixed noise maps do not match the coarsest scale");
  }

  const NetSpec gspec = NetSpec::generator(m.config.base_channels);
  for (const auto& e : man.at("scales")) {
    ScaleNets nets;
    nets.scale = e.at("scale").get<int>();
    nets.layout = m.layout();
    for (auto& [name, net] : nets.named()) {
      const NetSpec spec = name[0] == 'D' ? gspec.as_discriminator() : gspec;
      *net = Network(spec, read_parameters(dir / net_file(name, nets.scale)));
    }
    if (nets.fingerprint() != e.at("fingerprint").get<std::uint64_t>()) {
      throw std::runtime_error("parameters of scale " + std::to_string(nets.scale) + " in " +
                               dir.string() + " do not match the manifest fingerprint");
    }
    m.nets.push_back(std::move(nets));
  }
  if (static_cast<int>(m.nets.size()) != m.trained_up_to + 1) {
    throw std::runtime_error("checkpoint lists " + std::to_string(m.nets.size()) +
                             " scales but claims " + std::to_string(m.trained_up_to + 1));
  }
  return m;
}

json read_manifest(const fs::path& dir) {
  auto in = open_in(dir / "manifest.json", std::ios::in);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed manifest in " + dir.string() + ": " + e.what());
  }
}

}  // namespace

void write_parameters(const fs::path& file, const ad::ParameterSet& params) {
  auto out = open_out(file);
  out.write(kParamMagic, 8);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& e : params.entries()) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(e.value.rank()));
    for (int d : e.value.shape()) put<std::int32_t>(out, d);
    put_doubles(out, e.value.values());
  }
  if (!out) throw std::runtime_error("failed writing " + file.string());
}

ad::ParameterSet read_parameters(const fs::path& file) {
  auto in = open_in(file);
  check_magic(in, kParamMagic, file);
  ad::ParameterSet p;
  const auto count = take<std::uint32_t>(in, file);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name(take<std::uint32_t>(in, file), '\0');
    in.read(name.data(), static_cast<std::streamsize>(name.size()));
    ad::Shape shape(take<std::uint32_t>(in, file));
    for (int& d : shape) d = take<std::int32_t>(in, file);
    p.add(name, ad::Tensor::from_values(shape, take_doubles(in, ad::numel(shape), file)));
  }
  return p;
}

void write_image_raw(const fs::path& file, const Image& img) {
  auto out = open_out(file);
  out.write(kImageMagic, 8);
  put<std::int32_t>(out, img.height());
  put<std::int32_t>(out, img.width());
  put_doubles(out, img.data());
  if (!out) throw std::runtime_error("failed writing " + file.string());
}

Image read_image_raw(const fs::path& file) {
  auto in = open_in(file);
  check_magic(in, kImageMagic, file);
  const int h = take<std::int32_t>(in, file);
  const int w = take<std::int32_t>(in, file);
  if (h <= 0 || w <= 0) throw std::runtime_error("bad image size in " + file.string());
  const Size s{h, w};
  return Image(s, take_doubles(in, static_cast<std::size_t>(Image::kChannels) * h * w, file));
}

void checkpoint_save(const fs::path& dir, const TrainResult& run) {
  fs::create_directories(dir);
  const ModelBundle& m = run.bundle;
  for (const auto& s : m.nets) {
    for (const auto& [name, net] : s.named()) {
      write_parameters(dir / net_file(name, s.scale), net->params());
    }
  }
  write_image_raw(dir / "z_star_a.bin", m.plan.z_star_a);
  write_image_raw(dir / "z_star_b.bin", m.plan.z_star_b);
  for (std::size_t i = 0; i < run.data.frames_a.size(); ++i) {
    write_image_raw(dir / ("source_a_" + std::to_string(i) + ".bin"), run.data.frames_a[i]);
  }
  if (!run.data.b.empty()) write_image_raw(dir / "source_b.bin", run.data.b);
  {
    auto out = open_out(dir / "losses.csv", std::ios::out);
    out << loss_csv_header() << '\n';
    for (const auto& r : run.losses) out << to_csv_row(r) << '\n';
  }
  // The manifest goes last so a directory with a manifest is always complete.
  const fs::path tmp = dir / "manifest.json.tmp";
  {
    auto out = open_out(tmp, std::ios::out);
    out << manifest_of(run).dump(2) << '\n';
  }
  fs::rename(tmp, dir / "manifest.json");
}

TrainResult checkpoint_load(const fs::path& dir) {
  const json man = read_manifest(dir);
  TrainResult run;
  run.bundle = bundle_from(man, dir);
  const auto frames = man.at("frames_a").get<std::size_t>();
  for (std::size_t i = 0; i < frames; ++i) {
    run.data.frames_a.push_back(read_image_raw(dir / ("source_a_" + std::to_string(i) + ".bin")));
  }
  if (man.at("has_b").get<bool>()) run.data.b = read_image_raw(dir / "source_b.bin");
  for (const auto& f : run.data.frames_a) {
    if (f.size() != run.bundle.sched.finest()) {
      throw std::runtime_error("training image does not match the finest scale of the schedule");
    }
  }
  auto in = open_in(dir / "losses.csv", std::ios::in);
  std::string line;
  std::getline(in, line);
  if (line != loss_csv_header()) throw std::runtime_error("unexpected loss log header");
  while (std::getline(in, line)) {
    if (!line.empty()) run.losses.push_back(parse_csv_row(line));
  }
  return run;
}

ModelBundle load_bundle(const fs::path& dir) { return bundle_from(read_manifest(dir), dir); }

}  // namespace analogy
