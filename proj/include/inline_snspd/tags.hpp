#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "inline_snspd/units.hpp"

namespace inline_snspd {

using Channel = std::uint16_t;

struct TimeTag {
    Channel channel = 0;
    Picoseconds t = 0;

    friend bool operator==(const TimeTag&, const TimeTag&) = default;
};

// Stream order: time, then channel.
inline bool tag_before(const TimeTag& a, const TimeTag& b)
{
    return a.t < b.t || (a.t == b.t && a.channel < b.channel);
}

struct TagStream {
    Channel channel_count = 0;
    Picoseconds duration = 0;
    std::vector<TimeTag> tags;
    // In-memory provenance only; tag files do not carry it.
    std::optional<std::uint64_t> seed;

    bool is_sorted() const;
    // Throws PreconditionError when tags are out of order or out of range.
    void check_invariants() const;
    void sort();

    std::vector<Picoseconds> times(Channel channel) const;
    std::vector<std::uint64_t> counts_per_channel() const;

    friend bool operator==(const TagStream& a, const TagStream& b)
    {
        return a.channel_count == b.channel_count && a.duration == b.duration && a.tags == b.tags;
    }
};

enum class TagFormat { csv, binary };

TagFormat tag_format_from_string(std::string_view name);
// Picks the format from the extension: .csv is CSV, anything else binary.
TagFormat tag_format_for_path(const std::filesystem::path& path);

namespace tag_io {

// Binary layout, little-endian:
//   "ILQT" | version 0x01 | u16 channel_count | i64 duration_ps
//   then records of u16 channel | i64 t_ps, time-ascending.
inline constexpr char magic[4] = {'I', 'L', 'Q', 'T'};
inline constexpr std::uint8_t version = 0x01;
inline constexpr std::size_t header_size = 15;
inline constexpr std::size_t record_size = 10;

std::vector<std::uint8_t> encode_binary(const TagStream& stream);
TagStream decode_binary(std::span<const std::uint8_t> bytes);

void write(const TagStream& stream, const std::filesystem::path& path, TagFormat format);
TagStream read(const std::filesystem::path& path, TagFormat format);

}  // namespace tag_io

}  // namespace inline_snspd
