#include "evdec/model_io.hpp"

#include <nlohmann/json.hpp>

#include "byte_io.hpp"
#include "evdec/error.hpp"

namespace evdec {

namespace {

constexpr char kMagic[4] = {'N', 'D', 'E', 'C'};
constexpr std::uint16_t kVersion = 1;

}  // namespace

std::string serialize_model(const DecoderModel& model, std::uint64_t config_hash) {
  detail::ByteWriter w;
  w.put_bytes(std::string_view(kMagic, 4));
  w.put(kVersion);
  w.put(static_cast<std::uint8_t>(model.kind()));
  w.put(config_hash);
  const auto tensors = model.tensors();
  w.put(static_cast<std::uint32_t>(tensors.size()));
  for (const auto* t : tensors) {
    w.put(static_cast<std::uint16_t>(t->name.size()));
    w.put_bytes(t->name);
    w.put(static_cast<std::uint32_t>(t->rows));
    w.put(static_cast<std::uint32_t>(t->cols));
  }
  for (const auto* t : tensors) {
    for (float v : t->value) w.put_f32(v);
  }
  nlohmann::ordered_json meta;
  meta["spec"] = nlohmann::ordered_json::parse(model.spec().to_json());
  meta["seed"] = model.seed();
  meta["training"] = nlohmann::ordered_json::parse(model.training_json);
  const std::string blob = meta.dump();
  w.put(static_cast<std::uint32_t>(blob.size()));
  w.put_bytes(blob);
  return w.bytes();
}

ModelFile deserialize_model(std::string_view bytes) {
  detail::ByteReader r(bytes);
  if (r.get_bytes(4, "magic") != std::string_view(kMagic, 4)) {
    throw ParseError("not a model file (bad magic)", 0);
  }
  const auto version_at = r.offset();
  if (r.get<std::uint16_t>("version") != kVersion) {
    throw ParseError("unsupported model file version", version_at);
  }
  const auto kind_at = r.offset();
  const auto kind_tag = r.get<std::uint8_t>("kind");
  if (kind_tag > static_cast<std::uint8_t>(DecoderKind::Linear)) {
    throw ParseError("unknown decoder kind tag " + std::to_string(kind_tag), kind_at);
  }
  ModelFile file;
  file.config_hash = r.get<std::uint64_t>("config hash");
  const auto n = r.get<std::uint32_t>("tensor count");
  struct Entry {
    std::string name;
    std::uint32_t rows, cols;
  };
  std::vector<Entry> table;
  for (std::uint32_t i = 0; i < n; ++i) {
    Entry e;
    const auto len = r.get<std::uint16_t>("tensor name length");
    e.name = std::string(r.get_bytes(len, "tensor name"));
    e.rows = r.get<std::uint32_t>("tensor rows");
    e.cols = r.get<std::uint32_t>("tensor cols");
    table.push_back(std::move(e));
  }
  std::vector<std::vector<float>> values(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint64_t count = std::uint64_t{table[i].rows} * table[i].cols;
    if (count > r.remaining() / 4) throw ParseError("truncated input reading tensor values", r.offset());
    values[i].resize(count);
    for (auto& v : values[i]) v = r.get_f32("tensor value");
  }
  const auto json_len = r.get<std::uint32_t>("metadata length");
  const auto json_at = r.offset();
  const std::string blob(r.get_bytes(json_len, "metadata"));

  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(blob);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad model metadata: ") + e.what(), json_at);
  }
  const ModelSpec spec = ModelSpec::from_json(meta.at("spec").dump());
  if (static_cast<std::uint8_t>(spec.kind) != kind_tag) {
    throw ParseError("kind tag disagrees with metadata", kind_at);
  }
  file.model = DecoderModel(spec, meta.value("seed", std::uint64_t{0}));
  file.model.training_json = meta.contains("training") ? meta["training"].dump() : "{}";

  auto tensors = file.model.tensors();
  if (tensors.size() != n) {
    throw ParseError("tensor table has " + std::to_string(n) + " entries, architecture needs " +
                         std::to_string(tensors.size()),
                     json_at);
  }
  for (std::uint32_t i = 0; i < n; ++i) {
    auto* t = tensors[i];
    if (t->name != table[i].name || t->rows != table[i].rows || t->cols != table[i].cols) {
      throw ParseError("tensor '" + table[i].name + "' does not match the architecture", json_at);
    }
    t->value = std::move(values[i]);
  }
  return file;
}

void write_model(const DecoderModel& model, const std::filesystem::path& path,
                 std::uint64_t config_hash) {
  detail::write_file(path, serialize_model(model, config_hash));
}

ModelFile read_model(const std::filesystem::path& path) {
  return deserialize_model(detail::read_file(path));
}

}  // namespace evdec
