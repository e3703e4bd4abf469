#ifndef RESISTNET_JSON_WRITER_HPP
#define RESISTNET_JSON_WRITER_HPP

#include <cmath>
#include <cstdio>
#include <string>

#include <json.hpp>

namespace resistnet
{

using json = nlohmann::ordered_json;

/// "%.17g" formatting used for every real written by the library.
inline std::string format_real(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace detail
{

inline void dump_json(const json& j, std::string& out, int indent, int depth)
{
    const auto newline = [&](int level) {
        if (indent < 0)
            return;
        out += '\n';
        out.append(static_cast<std::size_t>(indent * level), ' ');
    };
    switch (j.type()) {
    case json::value_t::object: {
        if (j.empty()) {
            out += "{}";
            return;
        }
        out += '{';
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!first)
                out += ',';
            first = false;
            newline(depth + 1);
            out += json(it.key()).dump();
            out += indent < 0 ? ":" : ": ";
            dump_json(it.value(), out, indent, depth + 1);
        }
        newline(depth);
        out += '}';
        return;
    }
    case json::value_t::array: {
        if (j.empty()) {
            out += "[]";
            return;
        }
        out += '[';
        bool first = true;
        for (const auto& v : j) {
            if (!first)
                out += ',';
            first = false;
            newline(depth + 1);
            dump_json(v, out, indent, depth + 1);
        }
        newline(depth);
        out += ']';
        return;
    }
    case json::value_t::number_float: {
        const double x = j.get<double>();
        out += std::isfinite(x) ? format_real(x) : "null";
        return;
    }
    default:
        out += j.dump();
    }
}

} // namespace detail

/// Serializes with reals at 17 significant digits (nlohmann's own dump uses
/// shortest round-trip form, which is not fixed-width).
inline std::string dump_json(const json& j, int indent = 2)
{
    std::string out;
    detail::dump_json(j, out, indent, 0);
    return out;
}

} // namespace resistnet

#endif // RESISTNET_JSON_WRITER_HPP
