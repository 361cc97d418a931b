#include "evdec/feature_io.hpp"

#include "byte_io.hpp"
#include "evdec/error.hpp"

namespace evdec {

namespace {
constexpr std::string_view kMagic = "NFEA";
constexpr std::uint16_t kVersion = 1;
}  // namespace

void write_features(const FeatureFrame& frame, const std::filesystem::path& path,
                    std::uint64_t config_hash) {
  detail::ByteWriter out;
  out.put_bytes(kMagic);
  out.put<std::uint16_t>(kVersion);
  out.put<std::uint8_t>(static_cast<std::uint8_t>(frame.mode));
  out.put<std::uint16_t>(static_cast<std::uint16_t>(frame.n_channels));
  out.put<std::uint16_t>(static_cast<std::uint16_t>(frame.n_segments));
  out.put<std::uint32_t>(frame.t_bin_ms);
  out.put<std::uint32_t>(frame.t_s_ms);
  out.put<std::uint64_t>(frame.size());
  out.put<std::uint64_t>(config_hash);
  for (float v : frame.x) out.put_f32(v);
  for (float v : frame.y) out.put_f32(v);
  for (auto r : frame.reach_ids) out.put<std::uint32_t>(r);
  detail::write_file(path, out.bytes());
}

FeatureFile read_features(const std::filesystem::path& path) {
  const std::string data = detail::read_file(path);
  detail::ByteReader in(data);
  if (in.get_bytes(4, "magic") != kMagic) throw ParseError("bad magic, expected NFEA", 0);
  if (const auto v = in.get<std::uint16_t>("version"); v != kVersion) {
    throw ParseError("unsupported feature file version " + std::to_string(v), 4);
  }
  FeatureFile file;
  FeatureFrame& f = file.frame;
  const auto mode = in.get<std::uint8_t>("mode");
  if (mode > 2) throw ParseError("invalid feature mode " + std::to_string(mode), 6);
  f.mode = static_cast<FeatureMode>(mode);
  f.n_channels = in.get<std::uint16_t>("n_channels");
  f.n_segments = in.get<std::uint16_t>("n_segments");
  f.t_bin_ms = in.get<std::uint32_t>("t_bin_ms");
  f.t_s_ms = in.get<std::uint32_t>("t_s_ms");
  const auto n = in.get<std::uint64_t>("n_samples");
  file.config_hash = in.get<std::uint64_t>("config_hash");
  f.config().validate();
  f.width = f.config().width(f.n_channels);
  in.require(n * (f.width * 4 + 12), "feature payload");
  f.x.resize(n * f.width);
  for (auto& v : f.x) v = in.get_f32("x");
  f.y.resize(n * 2);
  for (auto& v : f.y) v = in.get_f32("y");
  f.reach_ids.resize(n);
  for (auto& r : f.reach_ids) r = in.get<std::uint32_t>("reach_id");
  if (in.remaining() != 0) throw ParseError("trailing bytes in feature file", in.offset());
  const std::uint64_t step = std::uint64_t{f.t_s_ms} * 1000;
  const std::uint64_t window = std::uint64_t{f.t_bin_ms} * 1000;
  std::uint64_t t = (window + step - 1) / step * step;
  if (t == 0) t = step;
  f.sample_times_us.resize(n);
  for (auto& s : f.sample_times_us) {
    s = t;
    t += step;
  }
  return file;
}

}  // namespace evdec
