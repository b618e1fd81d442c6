#include "inline_snspd/tags.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "inline_snspd/error.hpp"

namespace inline_snspd {

bool TagStream::is_sorted() const
{
    return std::is_sorted(tags.begin(), tags.end(), tag_before);
}

void TagStream::check_invariants() const
{
    if (!is_sorted()) {
        throw PreconditionError("tag stream is not sorted by time");
    }
    for (const auto& tag : tags) {
        if (tag.channel >= channel_count) {
            throw PreconditionError("tag channel " + std::to_string(tag.channel) + " >= channel count " +
                                    std::to_string(channel_count));
        }
        if (tag.t < 0 || tag.t > duration) {
            throw PreconditionError("tag time " + std::to_string(tag.t) + " ps outside [0, duration]");
        }
    }
}

void TagStream::sort() { std::sort(tags.begin(), tags.end(), tag_before); }

std::vector<Picoseconds> TagStream::times(Channel channel) const
{
    std::vector<Picoseconds> out;
    for (const auto& tag : tags) {
        if (tag.channel == channel) {
            out.push_back(tag.t);
        }
    }
    return out;
}

std::vector<std::uint64_t> TagStream::counts_per_channel() const
{
    std::vector<std::uint64_t> counts(channel_count, 0);
    for (const auto& tag : tags) {
        if (tag.channel < channel_count) {
            ++counts[tag.channel];
        }
    }
    return counts;
}

TagFormat tag_format_from_string(std::string_view name)
{
    if (name == "csv") {
        return TagFormat::csv;
    }
    if (name == "binary" || name == "bin") {
        return TagFormat::binary;
    }
    throw ConfigError("unknown tag format '" + std::string(name) + "' (expected csv or binary)");
}

TagFormat tag_format_for_path(const std::filesystem::path& path)
{
    return path.extension() == ".csv" ? TagFormat::csv : TagFormat::binary;
}

namespace tag_io {

namespace {

template <class T>
void put_le(std::vector<std::uint8_t>& out, T value)
{
    auto u = static_cast<std::make_unsigned_t<T>>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.push_back(static_cast<std::uint8_t>(u & 0xFFu));
        u = static_cast<decltype(u)>(u >> 8);
    }
}

template <class T>
T get_le(const std::uint8_t* p)
{
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = sizeof(T); i-- > 0;) {
        u = static_cast<decltype(u)>((u << 8) | p[i]);
    }
    return static_cast<T>(u);
}

constexpr std::string_view csv_header = "channel,t_ps";
constexpr std::string_view csv_meta_prefix = "# ilqt";

template <class T>
T parse_field(std::string_view text, std::size_t line_no)
{
    T value{};
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end) {
        throw FormatError("CSV line " + std::to_string(line_no) + ": cannot parse '" + std::string(text) + "'");
    }
    return value;
}

void check_decoded(const TagStream& stream)
{
    try {
        stream.check_invariants();
    } catch (const PreconditionError& e) {
        throw FormatError(std::string("tag file: ") + e.what());
    }
}

}  // namespace

std::vector<std::uint8_t> encode_binary(const TagStream& stream)
{
    std::vector<std::uint8_t> out;
    out.reserve(header_size + record_size * stream.tags.size());
    out.insert(out.end(), std::begin(magic), std::end(magic));
    out.push_back(version);
    put_le<std::uint16_t>(out, stream.channel_count);
    put_le<std::int64_t>(out, stream.duration);
    for (const auto& tag : stream.tags) {
        put_le<std::uint16_t>(out, tag.channel);
        put_le<std::int64_t>(out, tag.t);
    }
    return out;
}

TagStream decode_binary(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < header_size || std::memcmp(bytes.data(), magic, sizeof(magic)) != 0) {
        throw FormatError("tag file: bad magic, not an ILQT stream");
    }
    if (bytes[4] != version) {
        throw FormatError("tag file: unsupported version " + std::to_string(bytes[4]));
    }
    if ((bytes.size() - header_size) % record_size != 0) {
        throw FormatError("tag file: truncated record");
    }
    TagStream stream;
    stream.channel_count = get_le<std::uint16_t>(bytes.data() + 5);
    stream.duration = get_le<std::int64_t>(bytes.data() + 7);
    const std::size_t n = (bytes.size() - header_size) / record_size;
    stream.tags.resize(n);
    const std::uint8_t* p = bytes.data() + header_size;
    for (std::size_t i = 0; i < n; ++i, p += record_size) {
        stream.tags[i] = {get_le<std::uint16_t>(p), get_le<std::int64_t>(p + 2)};
    }
    check_decoded(stream);
    return stream;
}

void write(const TagStream& stream, const std::filesystem::path& path, TagFormat format)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    }
    if (format == TagFormat::binary) {
        const auto bytes = encode_binary(stream);
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    } else {
        out << csv_meta_prefix << " channels=" << stream.channel_count << " duration_ps=" << stream.duration << '\n';
        out << csv_header << '\n';
        std::string line;
        for (const auto& tag : stream.tags) {
            line.clear();
            line += std::to_string(tag.channel);
            line += ',';
            line += std::to_string(tag.t);
            line += '\n';
            out << line;
        }
    }
    if (!out.flush()) {
        throw std::runtime_error("write to '" + path.string() + "' failed");
    }
}

TagStream read(const std::filesystem::path& path, TagFormat format)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open '" + path.string() + "' for reading");
    }
    if (format == TagFormat::binary) {
        const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        return decode_binary(bytes);
    }

    TagStream stream;
    std::optional<Channel> declared_channels;
    std::optional<Picoseconds> declared_duration;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        if (line.rfind(csv_meta_prefix, 0) == 0) {
            std::istringstream meta(line.substr(csv_meta_prefix.size()));
            std::string kv;
            while (meta >> kv) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) {
                    continue;
                }
                const auto key = kv.substr(0, eq);
                const auto value = std::string_view(kv).substr(eq + 1);
                if (key == "channels") {
                    declared_channels = parse_field<Channel>(value, line_no);
                } else if (key == "duration_ps") {
                    declared_duration = parse_field<Picoseconds>(value, line_no);
                }
            }
            continue;
        }
        if (!header_seen) {
            if (line != csv_header) {
                throw FormatError("CSV tag file: expected header '" + std::string(csv_header) + "'");
            }
            header_seen = true;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw FormatError("CSV line " + std::to_string(line_no) + ": expected channel,t_ps");
        }
        const std::string_view view(line);
        stream.tags.push_back(
            {parse_field<Channel>(view.substr(0, comma), line_no), parse_field<Picoseconds>(view.substr(comma + 1), line_no)});
    }
    if (!header_seen) {
        throw FormatError("CSV tag file: missing header");
    }
    Channel max_channel = 0;
    Picoseconds max_t = 0;
    for (const auto& tag : stream.tags) {
        max_channel = std::max<Channel>(max_channel, static_cast<Channel>(tag.channel + 1));
        max_t = std::max(max_t, tag.t);
    }
    stream.channel_count = declared_channels.value_or(max_channel);
    stream.duration = declared_duration.value_or(max_t);
    check_decoded(stream);
    return stream;
}

}  // namespace tag_io

}  // namespace inline_snspd
