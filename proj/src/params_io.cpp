#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <string>

#include "cardio/kernels.hpp"

namespace cardio::kernels {

namespace {

constexpr std::uint8_t kVersion = 1;
const char kMagic[4] = {'C', 'R', 'D', 'P'};

enum Dtype : std::uint8_t { kF64 = 0, kC128 = 1 };

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> buf) : buf_(buf) {}

  std::uint8_t u8() { return take(1)[0]; }
  std::uint16_t u16() {
    const auto* p = take(2);
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
  }
  std::uint32_t u32() {
    const auto* p = take(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
    return v;
  }
  std::uint64_t u64() {
    const auto* p = take(8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
  }
  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string str(std::size_t n) {
    const auto* p = take(n);
    return std::string(reinterpret_cast<const char*>(p), n);
  }
  bool done() const { return pos_ == buf_.size(); }

 private:
  const std::uint8_t* take(std::size_t n) {
    if (pos_ + n > buf_.size()) throw std::invalid_argument("params blob truncated");
    const std::uint8_t* p = buf_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::span<const std::uint8_t> buf_;
  std::size_t pos_ = 0;
};

struct NamedTensor {
  Dtype dtype = kF64;
  std::vector<std::size_t> dims;
  std::vector<double> f64;
  std::vector<cplx> c128;

  std::size_t count() const {
    std::size_t n = 1;
    for (std::size_t d : dims) n *= d;
    return n;
  }
};

void write_tensor(std::vector<std::uint8_t>& out, const std::string& name, const NamedTensor& t) {
  put_u16(out, static_cast<std::uint16_t>(name.size()));
  out.insert(out.end(), name.begin(), name.end());
  out.push_back(static_cast<std::uint8_t>(t.dtype));
  out.push_back(static_cast<std::uint8_t>(t.dims.size()));
  for (std::size_t d : t.dims) put_u64(out, d);
  if (t.dtype == kF64) {
    for (double v : t.f64) put_f64(out, v);
  } else {
    for (const cplx& v : t.c128) {
      put_f64(out, v.real());
      put_f64(out, v.imag());
    }
  }
}

NamedTensor from_tensor(const TensorNd& t) {
  NamedTensor n;
  n.dims = t.shape();
  n.f64.assign(t.data(), t.data() + t.size());
  return n;
}

NamedTensor scalar(double v) {
  NamedTensor n;
  n.dims = {1};
  n.f64 = {v};
  return n;
}

TensorNd to_tensor(const NamedTensor& n) {
  TensorNd t(n.dims);
  if (n.f64.size() != t.size()) throw std::invalid_argument("params tensor element mismatch");
  std::copy(n.f64.begin(), n.f64.end(), t.data());
  return t;
}

class Assembler {
 public:
  explicit Assembler(std::map<std::string, NamedTensor> tensors) : tensors_(std::move(tensors)) {}

  const NamedTensor& get(const std::string& name) {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw std::invalid_argument("params blob missing tensor: " + name);
    used_.insert(name);
    return it->second;
  }
  TensorNd tensor(const std::string& name) { return to_tensor(get(name)); }
  double number(const std::string& name) {
    const auto& t = get(name);
    if (t.f64.size() != 1) throw std::invalid_argument("params scalar malformed: " + name);
    return t.f64[0];
  }
  void check_all_used() const {
    for (const auto& [name, t] : tensors_) {
      if (!used_.count(name)) throw std::invalid_argument("params blob has unknown tensor: " + name);
    }
  }

 private:
  std::map<std::string, NamedTensor> tensors_;
  std::set<std::string> used_;
};

std::size_t as_count(double v, const char* what) {
  if (!(v >= 0.0) || v != std::floor(v))
    throw std::invalid_argument(std::string("params: bad count for ") + what);
  return static_cast<std::size_t>(v);
}

}  // namespace

std::vector<std::uint8_t> serialize_params(const KernelParams& p) {
  validate(p);
  std::map<std::string, NamedTensor> tensors;

  {
    NamedTensor meta;
    meta.f64 = {static_cast<double>(p.grid_k),
                p.f_m,
                static_cast<double>(p.time_dims),
                static_cast<double>(p.freq_bins),
                static_cast<double>(p.freq_channels),
                p.sample_rate,
                static_cast<double>(p.sinc_len),
                static_cast<double>(p.video_static.size()),
                static_cast<double>(p.audio_stages.size()),
                p.fusion.head_b};
    meta.dims = {meta.f64.size()};
    tensors["meta"] = std::move(meta);
  }

  auto add_video = [&tensors](const char* prefix, const std::vector<ConvStage>& stages) {
    for (std::size_t i = 0; i < stages.size(); ++i) {
      const std::string base = std::string(prefix) + std::to_string(i);
      tensors[base + ".weight"] = from_tensor(stages[i].weight);
      tensors[base + ".bias"] = from_tensor(stages[i].bias);
      NamedTensor st;
      st.dims = {3};
      st.f64 = {static_cast<double>(stages[i].stride_t), static_cast<double>(stages[i].stride_h),
                static_cast<double>(stages[i].stride_w)};
      tensors[base + ".stride"] = std::move(st);
    }
  };
  add_video("video_static.", p.video_static);
  add_video("video_dynamic.", p.video_dynamic);

  {
    NamedTensor f;
    f.dtype = kC128;
    f.dims = {p.freq_channels, p.freq_bins};
    f.c128 = p.freq_filter;
    tensors["freq.filter"] = std::move(f);
  }
  {
    NamedTensor b;
    b.dims = {p.sinc_bands.size(), 2};
    for (const auto& [f1, f2] : p.sinc_bands) {
      b.f64.push_back(f1);
      b.f64.push_back(f2);
    }
    tensors["sinc.bands"] = std::move(b);
  }
  for (std::size_t i = 0; i < p.audio_stages.size(); ++i) {
    const std::string base = "audio." + std::to_string(i);
    tensors[base + ".weight"] = from_tensor(p.audio_stages[i].weight);
    tensors[base + ".bias"] = from_tensor(p.audio_stages[i].bias);
    tensors[base + ".stride"] = scalar(static_cast<double>(p.audio_stages[i].stride));
  }
  tensors["fusion.wq"] = from_tensor(p.fusion.wq);
  tensors["fusion.wk"] = from_tensor(p.fusion.wk);
  tensors["fusion.wv"] = from_tensor(p.fusion.wv);
  tensors["fusion.head_w"] = from_tensor(p.fusion.head_w);

  std::vector<std::uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  out.push_back(kVersion);
  put_u64(out, p.seed);
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) write_tensor(out, name, t);
  return out;
}

KernelParams deserialize_params(std::span<const std::uint8_t> blob) {
  Reader r(blob);
  if (r.str(4) != std::string(kMagic, 4))
    throw std::invalid_argument("params blob: missing CRDP magic");
  const std::uint8_t version = r.u8();
  if (version != kVersion) throw std::invalid_argument("params blob: unsupported version");
  KernelParams p;
  p.seed = r.u64();
  const std::uint32_t count = r.u32();

  std::map<std::string, NamedTensor> tensors;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint16_t name_len = r.u16();
    const std::string name = r.str(name_len);
    NamedTensor t;
    const std::uint8_t dt = r.u8();
    if (dt > 1) throw std::invalid_argument("params blob: unknown dtype");
    t.dtype = static_cast<Dtype>(dt);
    const std::uint8_t ndim = r.u8();
    for (std::uint8_t d = 0; d < ndim; ++d) t.dims.push_back(r.u64());
    const std::size_t n = t.count();
    if (t.dtype == kF64) {
      t.f64.resize(n);
      for (auto& v : t.f64) v = r.f64();
    } else {
      t.c128.resize(n);
      for (auto& v : t.c128) {
        const double re = r.f64();
        const double im = r.f64();
        v = cplx(re, im);
      }
    }
    if (!tensors.emplace(name, std::move(t)).second)
      throw std::invalid_argument("params blob: duplicate tensor " + name);
  }
  if (!r.done()) throw std::invalid_argument("params blob: trailing bytes");

  Assembler a(std::move(tensors));
  const NamedTensor& meta = a.get("meta");
  if (meta.f64.size() != 10) throw std::invalid_argument("params blob: meta malformed");
  p.grid_k = as_count(meta.f64[0], "grid_k");
  p.f_m = meta.f64[1];
  p.time_dims = as_count(meta.f64[2], "time_dims");
  p.freq_bins = as_count(meta.f64[3], "freq_bins");
  p.freq_channels = as_count(meta.f64[4], "freq_channels");
  p.sample_rate = meta.f64[5];
  p.sinc_len = as_count(meta.f64[6], "sinc_len");
  const std::size_t n_video = as_count(meta.f64[7], "video stages");
  const std::size_t n_audio = as_count(meta.f64[8], "audio stages");
  p.fusion.head_b = meta.f64[9];

  auto read_video = [&a](const char* prefix, std::size_t n) {
    std::vector<ConvStage> stages;
    for (std::size_t i = 0; i < n; ++i) {
      const std::string base = std::string(prefix) + std::to_string(i);
      ConvStage s;
      s.weight = a.tensor(base + ".weight");
      s.bias = a.tensor(base + ".bias");
      const TensorNd st = a.tensor(base + ".stride");
      if (st.size() != 3) throw std::invalid_argument("params blob: stride malformed");
      s.stride_t = as_count(st[0], "stride_t");
      s.stride_h = as_count(st[1], "stride_h");
      s.stride_w = as_count(st[2], "stride_w");
      stages.push_back(std::move(s));
    }
    return stages;
  };
  p.video_static = read_video("video_static.", n_video);
  p.video_dynamic = read_video("video_dynamic.", n_video);

  {
    const NamedTensor& f = a.get("freq.filter");
    if (f.dtype != kC128 || f.dims != std::vector<std::size_t>{p.freq_channels, p.freq_bins})
      throw std::invalid_argument("params blob: freq filter malformed");
    p.freq_filter = f.c128;
  }
  {
    const TensorNd b = a.tensor("sinc.bands");
    if (b.rank() != 2 || b.extent(1) != 2)
      throw std::invalid_argument("params blob: sinc bands malformed");
    for (std::size_t i = 0; i < b.extent(0); ++i)
      p.sinc_bands.emplace_back(b.at(i, 0), b.at(i, 1));
  }
  for (std::size_t i = 0; i < n_audio; ++i) {
    const std::string base = "audio." + std::to_string(i);
    Conv1dStage s;
    s.weight = a.tensor(base + ".weight");
    s.bias = a.tensor(base + ".bias");
    s.stride = as_count(a.number(base + ".stride"), "audio stride");
    p.audio_stages.push_back(std::move(s));
  }
  p.fusion.wq = a.tensor("fusion.wq");
  p.fusion.wk = a.tensor("fusion.wk");
  p.fusion.wv = a.tensor("fusion.wv");
  p.fusion.head_w = a.tensor("fusion.head_w");

  a.check_all_used();
  validate(p);
  return p;
}

void save_params(const KernelParams& p, const std::filesystem::path& path) {
  const auto blob = serialize_params(p);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("save_params: cannot open " + path.string());
  f.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
  if (!f) throw std::runtime_error("save_params: write failed for " + path.string());
}

KernelParams load_params(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_params: cannot open " + path.string());
  std::vector<std::uint8_t> blob((std::istreambuf_iterator<char>(f)),
                                 std::istreambuf_iterator<char>());
  return deserialize_params(blob);
}

}  // namespace cardio::kernels
