#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "inline_snspd/error.hpp"
#include "inline_snspd/tags.hpp"

using namespace inline_snspd;

namespace {

TagStream random_stream(std::size_t n, Channel channels, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    TagStream s;
    s.channel_count = channels;
    s.duration = 1'000'000'000'000;
    std::uniform_int_distribution<Picoseconds> t(0, s.duration);
    std::uniform_int_distribution<int> ch(0, channels - 1);
    for (std::size_t i = 0; i < n; ++i) {
        s.tags.push_back({static_cast<Channel>(ch(rng)), t(rng)});
    }
    s.sort();
    return s;
}

std::filesystem::path scratch(const std::string& name)
{
    return std::filesystem::temp_directory_path() / ("inline_snspd_tags_" + name);
}

}  // namespace

TEST_CASE("binary round trip of 1e6 tags")
{
    const auto s = random_stream(1'000'000, 5, 1);
    const auto bytes = tag_io::encode_binary(s);
    CHECK(bytes.size() == tag_io::header_size + 1'000'000 * tag_io::record_size);
    CHECK(tag_io::decode_binary(bytes) == s);

    const auto path = scratch("round.bin");
    tag_io::write(s, path, TagFormat::binary);
    CHECK(tag_io::read(path, TagFormat::binary) == s);
    std::filesystem::remove(path);
}

TEST_CASE("CSV round trip")
{
    const auto s = random_stream(5000, 3, 2);
    const auto path = scratch("round.csv");
    tag_io::write(s, path, TagFormat::csv);
    CHECK(tag_io::read(path, TagFormat::csv) == s);

    TagStream empty;
    empty.channel_count = 4;
    tag_io::write(empty, path, TagFormat::csv);
    CHECK(tag_io::read(path, TagFormat::csv) == empty);
    std::filesystem::remove(path);
}

TEST_CASE("CSV without the metadata line infers channels and duration")
{
    const auto path = scratch("plain.csv");
    {
        std::ofstream out(path);
        out << "channel,t_ps\n0,10\n2,30\n";
    }
    const auto s = tag_io::read(path, TagFormat::csv);
    CHECK(s.channel_count == 3);
    CHECK(s.duration == 30);
    CHECK(s.tags.size() == 2);
    std::filesystem::remove(path);
}

TEST_CASE("malformed input is a format error")
{
    auto bytes = tag_io::encode_binary(random_stream(10, 2, 3));
    SUBCASE("wrong magic")
    {
        bytes[0] = 'X';
        CHECK_THROWS_AS(tag_io::decode_binary(bytes), FormatError);
    }
    SUBCASE("wrong version")
    {
        bytes[4] = 9;
        CHECK_THROWS_AS(tag_io::decode_binary(bytes), FormatError);
    }
    SUBCASE("truncated record")
    {
        bytes.pop_back();
        CHECK_THROWS_AS(tag_io::decode_binary(bytes), FormatError);
    }
    SUBCASE("out-of-order records")
    {
        TagStream s;
        s.channel_count = 1;
        s.duration = 100;
        s.tags = {{0, 50}, {0, 10}};
        CHECK_THROWS_AS(tag_io::decode_binary(tag_io::encode_binary(s)), FormatError);
    }
    SUBCASE("bad CSV")
    {
        const auto path = scratch("bad.csv");
        {
            std::ofstream out(path);
            out << "channel,t_ps\n0,abc\n";
        }
        CHECK_THROWS_AS(tag_io::read(path, TagFormat::csv), FormatError);
        {
            std::ofstream out(path);
            out << "ch,time\n0,1\n";
        }
        CHECK_THROWS_AS(tag_io::read(path, TagFormat::csv), FormatError);
        std::filesystem::remove(path);
    }
}

TEST_CASE("stream helpers")
{
    TagStream s;
    s.channel_count = 3;
    s.duration = 100;
    s.tags = {{2, 5}, {0, 5}, {1, 1}};
    CHECK_FALSE(s.is_sorted());
    CHECK_THROWS_AS(s.check_invariants(), PreconditionError);
    s.sort();
    CHECK(s.tags == std::vector<TimeTag>{{1, 1}, {0, 5}, {2, 5}});
    CHECK_NOTHROW(s.check_invariants());
    CHECK(s.times(0) == std::vector<Picoseconds>{5});
    CHECK(s.counts_per_channel() == std::vector<std::uint64_t>{1, 1, 1});
    s.tags.push_back({5, 50});
    CHECK_THROWS_AS(s.check_invariants(), PreconditionError);

    CHECK(tag_format_for_path("x.csv") == TagFormat::csv);
    CHECK(tag_format_for_path("x.bin") == TagFormat::binary);
    CHECK(tag_format_from_string("binary") == TagFormat::binary);
    CHECK_THROWS_AS(tag_format_from_string("hdf5"), ConfigError);
}
