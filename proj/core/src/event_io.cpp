#include "evdec/event_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>
#include <string>
#include <string_view>

#include "byte_io.hpp"
#include "evdec/error.hpp"

namespace evdec {

namespace {

constexpr std::string_view kMagic = "NEVT";
constexpr std::string_view kCsvHeader = "channel,timestamp_us,polarity";

EventStream finish(std::size_t n_channels, std::uint64_t duration_us,
                   std::vector<Event> events, bool& resorted) {
  return EventStream::from_unordered(n_channels, duration_us, std::move(events),
                                     &resorted);
}

ReadEventsResult read_binary(const std::string& data) {
  detail::ByteReader in(data);
  if (in.get_bytes(4, "magic") != kMagic) throw ParseError("bad magic, expected NEVT", 0);
  const auto version = in.get<std::uint16_t>("version");
  if (version != kEventFormatVersion) {
    throw ParseError("unsupported version " + std::to_string(version), 4);
  }
  const auto n_channels = in.get<std::uint16_t>("n_channels");
  const auto duration_us = in.get<std::uint64_t>("duration_us");
  const auto count = in.get<std::uint64_t>("event_count");
  if (in.remaining() / kEventRecordBytes < count) {
    throw ParseError("file holds fewer records than event_count " + std::to_string(count),
                     in.offset() + (in.remaining() / kEventRecordBytes) * kEventRecordBytes);
  }
  std::vector<Event> events;
  events.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    Event e;
    e.channel = in.get<std::uint16_t>("channel");
    e.timestamp_us = in.get<std::uint64_t>("timestamp_us");
    const std::size_t pol_offset = in.offset();
    const auto pol = in.get<std::int8_t>("polarity");
    if (pol != 1 && pol != -1) {
      throw ParseError("invalid polarity byte " + std::to_string(static_cast<int>(pol)),
                       pol_offset);
    }
    if (e.channel >= n_channels) {
      throw DomainError("record " + std::to_string(i) + ": channel " +
                        std::to_string(e.channel) + " >= n_channels " +
                        std::to_string(n_channels));
    }
    e.polarity = static_cast<Polarity>(pol);
    events.push_back(e);
  }
  if (in.remaining() != 0) {
    throw ParseError("trailing bytes after last record", in.offset());
  }
  ReadEventsResult result;
  result.stream = finish(n_channels, duration_us, std::move(events), result.resorted);
  return result;
}

template <typename T>
T parse_number(std::string_view field, std::size_t line, const char* what) {
  T value{};
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError(std::string("bad ") + what + " field '" + std::string(field) + "'", line);
  }
  return value;
}

ReadEventsResult read_csv(const std::string& data, std::optional<std::size_t> hint) {
  std::optional<std::size_t> n_channels = hint;
  std::optional<std::uint64_t> duration;
  std::vector<Event> events;
  std::istringstream in(data);
  std::string line;
  std::size_t line_no = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::istringstream meta(line.substr(1));
      std::string kv;
      while (meta >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        const std::string_view key(kv.data(), eq);
        const std::string_view val(kv.data() + eq + 1, kv.size() - eq - 1);
        if (key == "n_channels") n_channels = parse_number<std::size_t>(val, line_no, "n_channels");
        if (key == "duration_us") duration = parse_number<std::uint64_t>(val, line_no, "duration_us");
      }
      continue;
    }
    if (!saw_header) {
      if (line != kCsvHeader) {
        throw ParseError("expected header '" + std::string(kCsvHeader) + "'", line_no);
      }
      saw_header = true;
      continue;
    }
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string::npos || line.find(',', c2 + 1) != std::string::npos) {
      throw ParseError("expected 3 fields", line_no);
    }
    const std::string_view sv(line);
    const auto ch = parse_number<std::uint32_t>(sv.substr(0, c1), line_no, "channel");
    const auto ts = parse_number<std::uint64_t>(sv.substr(c1 + 1, c2 - c1 - 1), line_no, "timestamp_us");
    const auto pol = parse_number<int>(sv.substr(c2 + 1), line_no, "polarity");
    if (pol != 1 && pol != -1) throw ParseError("invalid polarity " + std::to_string(pol), line_no);
    if (ch > 0xFFFF) throw DomainError("line " + std::to_string(line_no) + ": channel out of range");
    if (n_channels && ch >= *n_channels) {
      throw DomainError("line " + std::to_string(line_no) + ": channel " + std::to_string(ch) +
                        " >= n_channels " + std::to_string(*n_channels));
    }
    events.push_back({ts, static_cast<std::uint16_t>(ch), static_cast<Polarity>(pol)});
  }
  if (!saw_header) throw ParseError("missing header line", line_no);
  if (!n_channels) {
    std::size_t max_ch = 0;
    for (const auto& e : events) max_ch = std::max<std::size_t>(max_ch, e.channel);
    n_channels = max_ch + 1;
  }
  if (!duration) {
    std::uint64_t max_t = 0;
    for (const auto& e : events) max_t = std::max(max_t, e.timestamp_us);
    duration = max_t;
  }
  ReadEventsResult result;
  result.stream = finish(*n_channels, *duration, std::move(events), result.resorted);
  return result;
}

}  // namespace

EventFormat format_for_path(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".csv" ? EventFormat::Csv : EventFormat::Binary;
}

ReadEventsResult read_events(const std::filesystem::path& path, EventFormat format,
                             std::optional<std::size_t> n_channels_hint) {
  const std::string data = detail::read_file(path);
  return format == EventFormat::Binary ? read_binary(data) : read_csv(data, n_channels_hint);
}

void write_events(const EventStream& stream, const std::filesystem::path& path,
                  EventFormat format) {
  if (format == EventFormat::Binary) {
    detail::ByteWriter out;
    out.put_bytes(kMagic);
    out.put<std::uint16_t>(kEventFormatVersion);
    out.put<std::uint16_t>(static_cast<std::uint16_t>(stream.n_channels()));
    out.put<std::uint64_t>(stream.duration_us());
    out.put<std::uint64_t>(stream.size());
    for (const Event& e : stream.events()) {
      out.put<std::uint16_t>(e.channel);
      out.put<std::uint64_t>(e.timestamp_us);
      out.put<std::int8_t>(static_cast<std::int8_t>(e.polarity));
    }
    detail::write_file(path, out.bytes());
    return;
  }
  std::string text;
  text.reserve(32 + stream.size() * 16);
  text += "# n_channels=" + std::to_string(stream.n_channels()) +
          " duration_us=" + std::to_string(stream.duration_us()) + "\n";
  text += kCsvHeader;
  text += '\n';
  for (const Event& e : stream.events()) {
    text += std::to_string(e.channel);
    text += ',';
    text += std::to_string(e.timestamp_us);
    text += e.polarity == Polarity::On ? ",1\n" : ",-1\n";
  }
  detail::write_file(path, text);
}

}  // namespace evdec
