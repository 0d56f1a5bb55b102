#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"

namespace stochsrc {

/// Grid file layout, all little-endian:
///   char[4] "HSGF" | u32 version | u32 d | u32 n[d] | f64 L | f64 origin[d] | u32 kind
///   followed by n^d values in row-major order (kind 0: f64, kind 1: f64 re, f64 im).
inline constexpr std::uint32_t grid_format_version = 1;
enum class ValueKind : std::uint32_t { Real = 0, Complex = 1 };

namespace detail {

template <class T>
T to_little(T v) {
    if constexpr (std::endian::native == std::endian::little) {
        return v;
    } else {
        unsigned char b[sizeof(T)];
        std::memcpy(b, &v, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
        std::memcpy(&v, b, sizeof(T));
        return v;
    }
}

template <class T>
void put(std::ostream& os, T v) {
    v = to_little(v);
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw IoError("grid file truncated");
    return to_little(v);
}

inline void write_header(std::ostream& os, const GridSpec& g, ValueKind kind) {
    os.write("HSGF", 4);
    put<std::uint32_t>(os, grid_format_version);
    put<std::uint32_t>(os, std::uint32_t(g.d));
    for (int a = 0; a < g.d; ++a) put<std::uint32_t>(os, std::uint32_t(g.n));
    put<double>(os, g.L);
    for (int a = 0; a < g.d; ++a) put<double>(os, g.origin[a]);
    put<std::uint32_t>(os, std::uint32_t(kind));
}

inline GridSpec read_header(std::istream& is, ValueKind& kind) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "HSGF", 4) != 0) throw IoError("not a grid file (bad magic)");
    const auto version = get<std::uint32_t>(is);
    if (version != grid_format_version) throw IoError("unsupported grid file version");
    GridSpec g;
    g.d = int(get<std::uint32_t>(is));
    if (g.d != 2 && g.d != 3) throw IoError("grid file has invalid dimension");
    g.n = get<std::uint32_t>(is);
    for (int a = 1; a < g.d; ++a)
        if (get<std::uint32_t>(is) != g.n) throw IoError("grid file has anisotropic point counts");
    g.L = get<double>(is);
    for (int a = 0; a < g.d; ++a) g.origin[a] = get<double>(is);
    kind = ValueKind(get<std::uint32_t>(is));
    if (kind != ValueKind::Real && kind != ValueKind::Complex) throw IoError("grid file has invalid value kind");
    return g;
}

} // namespace detail

inline void write_grid(const std::string& path, const FieldSample& f) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path + " for writing");
    detail::write_header(os, f.grid, ValueKind::Real);
    for (double v : f.values) detail::put<double>(os, v);
    if (!os) throw IoError("write failed: " + path);
}

inline void write_grid(const std::string& path, const ComplexField& f) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path + " for writing");
    detail::write_header(os, f.grid, ValueKind::Complex);
    for (auto v : f.values) {
        detail::put<double>(os, v.real());
        detail::put<double>(os, v.imag());
    }
    if (!os) throw IoError("write failed: " + path);
}

inline FieldSample read_grid(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    ValueKind kind;
    const GridSpec g = detail::read_header(is, kind);
    if (kind != ValueKind::Real) throw IoError(path + ": expected a real-valued grid");
    FieldSample f(g);
    for (auto& v : f.values) v = detail::get<double>(is);
    return f;
}

inline ComplexField read_complex_grid(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    ValueKind kind;
    const GridSpec g = detail::read_header(is, kind);
    ComplexField f(g);
    for (auto& v : f.values) {
        const double re = detail::get<double>(is);
        const double im = kind == ValueKind::Complex ? detail::get<double>(is) : 0.0;
        v = {re, im};
    }
    return f;
}

/// Shortest round-trippable decimal form.
inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Ordered key-value file: "key = value" per line, '#' starts a comment.
using KeyValues = std::map<std::string, std::string>;

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline KeyValues parse_key_values(std::istream& is, const std::string& source = "<input>") {
    KeyValues kv;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ValidationError(source + ":" + std::to_string(lineno) + ": empty key");
        kv[key] = trim(line.substr(eq + 1));
    }
    return kv;
}

inline KeyValues read_key_values(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open " + path);
    return parse_key_values(is, path);
}

inline std::string serialize_key_values(const KeyValues& kv) {
    std::string out;
    for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
    return out;
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path + " for writing");
    os << text;
    if (!os) throw IoError("write failed: " + path);
}

inline std::string read_text(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

} // namespace stochsrc
