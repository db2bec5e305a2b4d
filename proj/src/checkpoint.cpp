#include "rismimo/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

namespace rismimo {

namespace {

using Code = CheckpointError::Code;
constexpr std::array<char, 8> kMagic = {'R', 'I', 'S', 'M', 'I', 'M', 'O', '\0'};

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Writer {
 public:
  void raw(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  [[nodiscard]] const std::string& bytes() const noexcept { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(const std::string& b, std::size_t end) : buf_(b), end_(end) {}
  void need(std::size_t n) const {
    if (pos_ + n > end_) throw CheckpointError(Code::corrupted, "checkpoint truncated");
  }
  void raw(void* p, std::size_t n) {
    need(n);
    std::memcpy(p, buf_.data() + pos_, n);
    pos_ += n;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{static_cast<unsigned char>(buf_[pos_ + i])} << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{static_cast<unsigned char>(buf_[pos_ + i])} << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(buf_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  [[nodiscard]] bool done() const noexcept { return pos_ == end_; }

 private:
  const std::string& buf_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

struct NamedArray {
  std::string name;
  Eigen::Index rows;
  Eigen::Index cols;
  double* data;
};

template <typename M>
NamedArray named(std::string name, M& m) {
  return {std::move(name), m.rows(), m.cols(), m.data()};
}

// Every stored array of a model, in file order.  Pointers refer into `model`.
std::vector<NamedArray> arrays_of(AutoencoderModel& model) {
  std::vector<NamedArray> out;
  const std::pair<const char*, nn::Mlp*> nets[] = {
      {"encoder", &model.encoder}, {"ris_net", &model.ris_net}, {"decoder", &model.decoder}};
  for (const auto& [net_name, net] : nets) {
    auto& layers = net->layers();
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const std::string prefix = std::string(net_name) + "." + std::to_string(i) + ".";
      if (auto* d = std::get_if<nn::DenseLayer>(&layers[i])) {
        out.push_back(named(prefix + "weight", d->weights()));
        out.push_back(named(prefix + "bias", d->bias()));
      } else if (auto* b = std::get_if<nn::BatchNormLayer>(&layers[i])) {
        out.push_back(named(prefix + "gamma", b->gamma()));
        out.push_back(named(prefix + "beta", b->beta()));
        out.push_back(named(prefix + "running_mean", b->running_mean()));
        out.push_back(named(prefix + "running_var", b->running_var()));
      }
    }
  }
  return out;
}

std::string dims_text(const AeDims& d) {
  std::ostringstream s;
  s << "M=" << d.order << " N_s=" << d.streams << " N_t=" << d.n_tx << " N_r=" << d.n_rx
    << " K=" << d.elements;
  return s.str();
}

}  // namespace

std::filesystem::path manifest_path(const std::filesystem::path& checkpoint) {
  std::filesystem::path p = checkpoint;
  p += ".manifest.txt";
  return p;
}

void save_checkpoint(const AutoencoderModel& model_in, const std::filesystem::path& path) {
  AutoencoderModel model = model_in;  // arrays_of walks mutable layers
  const std::vector<NamedArray> arrays = arrays_of(model);
  Writer w;
  w.raw(kMagic.data(), kMagic.size());
  w.u32(kCheckpointVersion);
  const AeDims& d = model.dims;
  for (std::size_t v : {d.order, d.streams, d.n_tx, d.n_rx, d.elements}) w.u64(v);
  w.f64(model.power);
  w.u32(model.normalization == nn::PowerNormalization::paper ? 0U : 1U);
  w.u64(arrays.size());
  for (const auto& a : arrays) {
    w.str(a.name);
    w.u64(static_cast<std::uint64_t>(a.rows));
    w.u64(static_cast<std::uint64_t>(a.cols));
    for (Eigen::Index i = 0; i < a.rows * a.cols; ++i) w.f64(a.data[i]);
  }
  const std::uint64_t sum = fnv1a(w.bytes());
  w.u64(sum);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError(Code::io, "cannot open " + path.string() + " for writing");
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw CheckpointError(Code::io, "write failed: " + path.string());

  std::ofstream man(manifest_path(path));
  if (!man) throw CheckpointError(Code::io, "cannot write manifest for " + path.string());
  man << "format_version " << kCheckpointVersion << "\n"
      << "dims " << dims_text(d) << "\n"
      << "power " << std::setprecision(17) << model.power << "\n"
      << "normalization " << (model.normalization == nn::PowerNormalization::paper ? "paper" : "sqrt") << "\n"
      << "parameters " << (model.encoder.parameter_count() + model.ris_net.parameter_count() +
                           model.decoder.parameter_count())
      << "\n"
      << "checksum_fnv1a64 " << std::hex << std::setw(16) << std::setfill('0') << sum << std::dec << "\n";
  for (const auto& a : arrays) man << "array " << a.name << " " << a.rows << "x" << a.cols << "\n";
}

AutoencoderModel load_checkpoint(const std::filesystem::path& path, const std::optional<AeDims>& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(Code::io, "cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < kMagic.size() + 4 + 8) throw CheckpointError(Code::corrupted, "checkpoint too short");

  Reader r(bytes, bytes.size() - 8);
  std::array<char, 8> magic{};
  r.raw(magic.data(), magic.size());
  if (magic != kMagic) throw CheckpointError(Code::corrupted, "not a checkpoint file (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError(Code::version_mismatch, "checkpoint format version " + std::to_string(version) +
                                                      ", expected " + std::to_string(kCheckpointVersion));
  }
  Reader tail(bytes, bytes.size());
  {
    std::string dummy(bytes.size() - 8, '\0');
    tail.raw(dummy.data(), dummy.size());
  }
  const std::uint64_t stored = tail.u64();
  if (stored != fnv1a(bytes.substr(0, bytes.size() - 8))) {
    throw CheckpointError(Code::corrupted, "checkpoint checksum mismatch");
  }

  AeDims d;
  d.order = r.u64();
  d.streams = r.u64();
  d.n_tx = r.u64();
  d.n_rx = r.u64();
  d.elements = r.u64();
  if (expected && !(*expected == d)) {
    throw CheckpointError(Code::dimension_mismatch,
                          "checkpoint has " + dims_text(d) + ", expected " + dims_text(*expected));
  }
  const double power = r.f64();
  const std::uint32_t mode = r.u32();
  if (mode > 1) throw CheckpointError(Code::corrupted, "unknown normalization mode");

  Rng scratch(0);
  AutoencoderModel model;
  try {
    model = AutoencoderModel::build(d, power, mode == 0 ? nn::PowerNormalization::paper : nn::PowerNormalization::sqrt,
                                    scratch);
  } catch (const std::exception& e) {
    throw CheckpointError(Code::corrupted, std::string("invalid stored configuration: ") + e.what());
  }
  const std::vector<NamedArray> arrays = arrays_of(model);
  if (r.u64() != arrays.size()) throw CheckpointError(Code::dimension_mismatch, "array count mismatch");
  for (const auto& a : arrays) {
    const std::string name = r.str();
    const auto rows = static_cast<Eigen::Index>(r.u64());
    const auto cols = static_cast<Eigen::Index>(r.u64());
    if (name != a.name || rows != a.rows || cols != a.cols) {
      throw CheckpointError(Code::dimension_mismatch, "array " + name + " does not match " + a.name);
    }
    for (Eigen::Index i = 0; i < rows * cols; ++i) a.data[i] = r.f64();
  }
  if (!r.done()) throw CheckpointError(Code::corrupted, "trailing bytes in checkpoint");
  model.set_mode(nn::Mode::inference);
  return model;
}

}  // namespace rismimo
