#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "evtrack/errors.hpp"

// Event records and the shared binary event-file format used both by the
// simulator output and by ingested real recordings.

namespace evtrack {

struct Event {
    std::uint64_t t = 0;  // microseconds
    std::uint16_t x = 0;
    std::uint16_t y = 0;
    std::int8_t p = 1;  // +1 brighter, -1 darker
};

struct EventStream {
    std::vector<Event> events;
    int width = 0, height = 0;

    std::size_t size() const { return events.size(); }
    bool empty() const { return events.empty(); }

    void sort_by_time() {
        std::stable_sort(events.begin(), events.end(),
                         [](const Event& a, const Event& b) { return a.t < b.t; });
    }

    bool is_time_sorted() const {
        return std::is_sorted(events.begin(), events.end(),
                              [](const Event& a, const Event& b) { return a.t < b.t; });
    }
};

// Binary layout: 16-byte header {magic "EVT1", version u32, width u32,
// height u32}, then packed little-endian records (t u64, x u16, y u16, p i8),
// 13 bytes each.
namespace evt1 {

inline constexpr std::uint32_t kVersion = 1;

namespace detail {
template <class T>
void put_le(std::string& out, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(char((std::uint64_t(v) >> (8 * i)) & 0xff));
}
template <class T>
T get_le(const char* p) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= std::uint64_t(std::uint8_t(p[i])) << (8 * i);
    return T(v);
}
}  // namespace detail

inline std::string serialize(const EventStream& s) {
    std::string out;
    out.reserve(16 + 13 * s.events.size());
    out += "EVT1";
    detail::put_le<std::uint32_t>(out, kVersion);
    detail::put_le<std::uint32_t>(out, std::uint32_t(s.width));
    detail::put_le<std::uint32_t>(out, std::uint32_t(s.height));
    for (const auto& e : s.events) {
        detail::put_le<std::uint64_t>(out, e.t);
        detail::put_le<std::uint16_t>(out, e.x);
        detail::put_le<std::uint16_t>(out, e.y);
        out.push_back(char(e.p));
    }
    return out;
}

inline EventStream deserialize(const std::string& bytes, const std::string& source = "<memory>") {
    if (bytes.size() < 16 || bytes.compare(0, 4, "EVT1") != 0)
        throw IoError("not an EVT1 event file: " + source);
    const std::uint32_t version = detail::get_le<std::uint32_t>(bytes.data() + 4);
    if (version != kVersion)
        throw IoError("unsupported EVT1 version " + std::to_string(version) + ": " + source);
    EventStream s;
    s.width = int(detail::get_le<std::uint32_t>(bytes.data() + 8));
    s.height = int(detail::get_le<std::uint32_t>(bytes.data() + 12));
    if ((bytes.size() - 16) % 13 != 0) throw IoError("truncated EVT1 record: " + source);
    const std::size_t n = (bytes.size() - 16) / 13;
    s.events.resize(n);
    const char* p = bytes.data() + 16;
    for (std::size_t i = 0; i < n; ++i, p += 13) {
        s.events[i].t = detail::get_le<std::uint64_t>(p);
        s.events[i].x = detail::get_le<std::uint16_t>(p + 8);
        s.events[i].y = detail::get_le<std::uint16_t>(p + 10);
        s.events[i].p = std::int8_t(p[12]);
    }
    return s;
}

inline void save(const std::string& path, const EventStream& s) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open event file for writing: " + path);
    const std::string bytes = serialize(s);
    out.write(bytes.data(), std::streamsize(bytes.size()));
    if (!out) throw IoError("failed writing event file: " + path);
}

inline EventStream load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open event file: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize(bytes, path);
}

}  // namespace evt1

// Events with t in [start, end), in stream order.
inline EventStream slice_window(const EventStream& s, std::uint64_t start_us, std::uint64_t end_us) {
    EventStream out;
    out.width = s.width;
    out.height = s.height;
    for (const auto& e : s.events)
        if (e.t >= start_us && e.t < end_us) out.events.push_back(e);
    return out;
}

}  // namespace evtrack
