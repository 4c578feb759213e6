#include "sphereflow/checkpoint.hpp"

#include <fstream>
#include <iterator>

#include "binary_io.hpp"
#include "sphereflow/error.hpp"

namespace sphereflow {

namespace detail {

std::vector<char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path + "' for reading");
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorKind::IoError, "read failed for '" + path + "'");
  return bytes;
}

void write_file(const std::string& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::IoError, "write failed for '" + path + "'");
}

}  // namespace detail

namespace {

constexpr std::string_view kMagic = "SFCK";

void write_params(detail::ByteWriter& w, const MlpParams& p) {
  for (const auto& l : p.layers) {
    for (Eigen::Index i = 0; i < l.weight.rows(); ++i)
      for (Eigen::Index j = 0; j < l.weight.cols(); ++j) w.f64(l.weight(i, j));
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) w.f64(l.bias[i]);
  }
}

MlpParams read_params(detail::ByteReader& r, const std::vector<Eigen::Index>& widths, int embed) {
  MlpParams p;
  p.time_embed_dim = embed;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    DenseLayer layer{Eigen::MatrixXd(widths[l + 1], widths[l]), Vec(widths[l + 1])};
    for (Eigen::Index i = 0; i < layer.weight.rows(); ++i)
      for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) layer.weight(i, j) = r.f64();
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = r.f64();
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) {
      throw Error(ErrorKind::BadCheckpoint, "non-finite parameter");
    }
    p.layers.push_back(std::move(layer));
  }
  return p;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  detail::ByteWriter w;
  w.magic(kMagic);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(ck.variant.method()));
  w.u8(ck.variant.source_projection() ? 1 : 0);
  w.u8(ck.variant.target_projection() ? 1 : 0);
  w.u16(0);
  w.f64(ck.variant.radius());
  w.f64(ck.final_norm.value_or(0.0));
  w.u64(ck.seed);
  w.u32(static_cast<std::uint32_t>(ck.params.time_embed_dim));
  const auto widths = ck.params.widths();
  w.u32(static_cast<std::uint32_t>(ck.params.layers.size()));
  for (auto width : widths) w.u32(static_cast<std::uint32_t>(width));
  w.u32(ck.ema ? 1 : 0);
  write_params(w, ck.params);
  if (ck.ema) write_params(w, *ck.ema);
  detail::write_file(path, w.bytes());
}

Checkpoint load_checkpoint(const std::string& path) {
  const std::vector<char> bytes = detail::read_file(path);
  detail::ByteReader r(bytes, ErrorKind::BadCheckpoint);
  if (!r.magic(kMagic)) throw Error(ErrorKind::BadCheckpoint, "'" + path + "' is not an SFCK file");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw Error(ErrorKind::BadCheckpoint, "unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint32_t method = r.u32();
  if (method > static_cast<std::uint32_t>(FlowMethod::SFM)) {
    throw Error(ErrorKind::BadCheckpoint, "unknown flow method " + std::to_string(method));
  }
  const bool src_proj = r.u8() != 0;
  const bool tgt_proj = r.u8() != 0;
  r.u16();
  const double radius = r.f64();
  const double final_norm = r.f64();
  const std::uint64_t seed = r.u64();
  const auto embed = static_cast<int>(r.u32());
  const std::uint32_t n_layers = r.u32();
  if (n_layers == 0 || n_layers > 64) throw Error(ErrorKind::BadCheckpoint, "bad layer count");
  std::vector<Eigen::Index> widths;
  for (std::uint32_t k = 0; k <= n_layers; ++k) {
    const std::uint32_t width = r.u32();
    if (width == 0 || width > (1u << 20)) throw Error(ErrorKind::BadCheckpoint, "bad layer width");
    widths.push_back(width);
  }
  if (embed < 2 || embed % 2 != 0 || widths.front() != widths.back() + embed) {
    throw Error(ErrorKind::BadCheckpoint, "layer widths inconsistent with time embedding");
  }
  const bool has_ema = r.u32() != 0;

  std::size_t count = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    count += static_cast<std::size_t>(widths[l] * widths[l + 1] + widths[l + 1]);
  }
  const std::size_t payload = count * 8 * (has_ema ? 2 : 1);
  if (r.remaining() != payload) {
    throw Error(ErrorKind::BadCheckpoint, "payload is " + std::to_string(r.remaining()) +
                                              " bytes, header implies " + std::to_string(payload));
  }

  Checkpoint ck;
  try {
    ck.variant = FlowVariant(static_cast<FlowMethod>(method), src_proj, tgt_proj, radius);
  } catch (const Error& e) {
    throw Error(ErrorKind::BadCheckpoint, e.what());
  }
  if (final_norm > 0.0) ck.final_norm = final_norm;
  ck.seed = seed;
  ck.params = read_params(r, widths, embed);
  if (has_ema) ck.ema = read_params(r, widths, embed);
  return ck;
}

}  // namespace sphereflow
