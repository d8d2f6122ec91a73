#pragma once

// Real-data pipeline: tick CSV loading, last-price granulation onto a fixed
// grid, differencing and alignment of two series onto common timestamps.

#include "shifthsic/error.hpp"
#include "shifthsic/io.hpp"
#include "shifthsic/statistic.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace shifthsic {

/// Irregular price observations; timestamps are epoch milliseconds.
struct TickSeries {
    std::string name;
    std::vector<std::int64_t> timestamps;
    std::vector<double> prices;

    [[nodiscard]] std::size_t size() const noexcept { return timestamps.size(); }
};

enum class GapPolicy { carry_forward, drop };

inline std::string to_string(GapPolicy p) { return p == GapPolicy::carry_forward ? "carry_forward" : "drop"; }

/// Values on the grid start + k * interval. Slots with present[k] == 0 were
/// empty windows under GapPolicy::drop and are skipped by align().
struct RegularSeries {
    std::string name;
    std::int64_t start = 0;
    std::int64_t interval = 1;
    std::vector<double> values;
    std::vector<char> present;
    GapPolicy policy = GapPolicy::carry_forward;

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
    [[nodiscard]] std::int64_t timestamp(std::size_t k) const noexcept {
        return start + static_cast<std::int64_t>(k) * interval;
    }
};

/// Pair on common timestamps, ready for testing.
struct AlignedPair {
    SeriesPair pair;
    std::vector<std::int64_t> timestamps;
};

namespace detail {

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (true) {
        const auto comma = line.find(',', pos);
        fields.push_back(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return fields;
}

/// Reads a numeric CSV, skipping blank lines and an optional non-numeric
/// header on the first line. Calls row(line_number, fields) per data row.
template <typename RowFn>
void read_csv(const std::filesystem::path& path, std::size_t columns, RowFn&& row) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    std::string line;
    std::size_t line_no = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        double probe = 0.0;
        if (first && (fields.empty() || !parse_number(fields[0], probe))) {
            first = false;
            continue;  // header
        }
        first = false;
        if (fields.size() != columns) {
            throw Error(ErrorKind::ParseError, path.string() + ":" + std::to_string(line_no) + ": expected " +
                                                   std::to_string(columns) + " columns");
        }
        row(line_no, fields);
    }
}

}  // namespace detail

/// Loads `timestamp_ms,price` rows. Timestamps must be strictly increasing.
inline TickSeries load_csv(const std::filesystem::path& path) {
    TickSeries ticks;
    ticks.name = path.stem().string();
    detail::read_csv(path, 2, [&](std::size_t line_no, const auto& fields) {
        std::int64_t ts = 0;
        double price = 0.0;
        if (!parse_number(fields[0], ts) || !parse_number(fields[1], price) || !std::isfinite(price)) {
            throw Error(ErrorKind::ParseError,
                        path.string() + ":" + std::to_string(line_no) + ": unparsable row");
        }
        if (!ticks.timestamps.empty() && ts <= ticks.timestamps.back()) {
            throw Error(ErrorKind::OrderError, path.string() + ":" + std::to_string(line_no) +
                                                   ": timestamps must be strictly increasing");
        }
        ticks.timestamps.push_back(ts);
        ticks.prices.push_back(price);
    });
    return ticks;
}

/// Loads `timestamp_ms,x,y` rows as written by write_pair_csv.
inline AlignedPair load_pair_csv(const std::filesystem::path& path) {
    AlignedPair out;
    detail::read_csv(path, 3, [&](std::size_t line_no, const auto& fields) {
        std::int64_t ts = 0;
        double x = 0.0;
        double y = 0.0;
        if (!parse_number(fields[0], ts) || !parse_number(fields[1], x) || !parse_number(fields[2], y)) {
            throw Error(ErrorKind::ParseError,
                        path.string() + ":" + std::to_string(line_no) + ": unparsable row");
        }
        out.timestamps.push_back(ts);
        out.pair.x.push_back(x);
        out.pair.y.push_back(y);
    });
    out.pair.x_label = "x";
    out.pair.y_label = "y";
    return out;
}

/// Window [start + k*interval, start + (k+1)*interval) takes the last tick
/// price inside it; start is the first tick's timestamp rounded down to a
/// multiple of interval, so different series share one grid.
inline RegularSeries granulate(const TickSeries& ticks, std::int64_t interval,
                               GapPolicy policy = GapPolicy::carry_forward) {
    if (interval <= 0) throw Error(ErrorKind::InvalidInput, "interval must be positive");
    if (ticks.timestamps.empty()) throw Error(ErrorKind::EmptyInput, "no ticks in " + ticks.name);

    RegularSeries out;
    out.name = ticks.name;
    out.interval = interval;
    out.policy = policy;
    out.start = detail::floor_div(ticks.timestamps.front(), interval) * interval;
    const auto slots =
        static_cast<std::size_t>(detail::floor_div(ticks.timestamps.back() - out.start, interval) + 1);
    out.values.assign(slots, std::numeric_limits<double>::quiet_NaN());
    out.present.assign(slots, 0);
    for (std::size_t i = 0; i < ticks.size(); ++i) {
        const auto k = static_cast<std::size_t>(detail::floor_div(ticks.timestamps[i] - out.start, interval));
        out.values[k] = ticks.prices[i];
        out.present[k] = 1;
    }
    if (policy == GapPolicy::carry_forward) {
        for (std::size_t k = 1; k < slots; ++k) {
            if (!out.present[k]) {
                out.values[k] = out.values[k - 1];
                out.present[k] = 1;
            }
        }
    }
    return out;
}

/// Present slots of a regular series as ticks at their window starts.
inline TickSeries to_ticks(const RegularSeries& series) {
    TickSeries ticks;
    ticks.name = series.name;
    for (std::size_t k = 0; k < series.size(); ++k) {
        if (!series.present[k]) continue;
        ticks.timestamps.push_back(series.timestamp(k));
        ticks.prices.push_back(series.values[k]);
    }
    return ticks;
}

/// values'[t] = values[t+1] - values[t], stamped at the later slot.
inline RegularSeries difference(const RegularSeries& series) {
    if (series.size() < 2) throw Error(ErrorKind::TooShort, "difference needs at least 2 values");
    RegularSeries out;
    out.name = series.name;
    out.interval = series.interval;
    out.policy = series.policy;
    out.start = series.start + series.interval;
    out.values.resize(series.size() - 1);
    out.present.resize(series.size() - 1);
    for (std::size_t t = 0; t + 1 < series.size(); ++t) {
        out.present[t] = static_cast<char>(series.present[t] && series.present[t + 1]);
        out.values[t] = out.present[t] ? series.values[t + 1] - series.values[t]
                                       : std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

namespace detail {

struct Overlap {
    std::int64_t start;
    std::size_t count;
    std::size_t offset_a;
    std::size_t offset_b;
};

inline Overlap overlap(const RegularSeries& a, const RegularSeries& b) {
    if (a.interval != b.interval) throw Error(ErrorKind::InvalidInput, "series have different intervals");
    if ((a.start - b.start) % a.interval != 0) {
        throw Error(ErrorKind::InvalidInput, "series grids are not aligned");
    }
    const std::int64_t start = std::max(a.start, b.start);
    const std::int64_t end = std::min(a.timestamp(a.size()), b.timestamp(b.size()));
    if (a.size() == 0 || b.size() == 0 || start >= end) {
        throw Error(ErrorKind::NoOverlap, a.name + " and " + b.name + " do not overlap");
    }
    return {start, static_cast<std::size_t>((end - start) / a.interval),
            static_cast<std::size_t>((start - a.start) / a.interval),
            static_cast<std::size_t>((start - b.start) / a.interval)};
}

}  // namespace detail

/// Intersects the two grids and drops slots missing on either side.
inline AlignedPair align(const RegularSeries& a, const RegularSeries& b) {
    const auto ov = detail::overlap(a, b);
    AlignedPair out;
    for (std::size_t k = 0; k < ov.count; ++k) {
        const std::size_t ia = ov.offset_a + k;
        const std::size_t ib = ov.offset_b + k;
        if (!a.present[ia] || !b.present[ib]) continue;
        out.timestamps.push_back(a.timestamp(ia));
        out.pair.x.push_back(a.values[ia]);
        out.pair.y.push_back(b.values[ib]);
    }
    if (out.timestamps.empty()) throw Error(ErrorKind::NoOverlap, "no slot present in both series");
    out.pair.x_label = a.name;
    out.pair.y_label = b.name;
    return out;
}

/// Pointwise product on the common grid (e.g. AUD/CAD x CAD/JPY).
inline RegularSeries product(const RegularSeries& a, const RegularSeries& b) {
    const auto ov = detail::overlap(a, b);
    RegularSeries out;
    out.name = a.name + "*" + b.name;
    out.start = ov.start;
    out.interval = a.interval;
    out.policy = a.policy;
    out.values.resize(ov.count);
    out.present.resize(ov.count);
    for (std::size_t k = 0; k < ov.count; ++k) {
        const std::size_t ia = ov.offset_a + k;
        const std::size_t ib = ov.offset_b + k;
        out.present[k] = static_cast<char>(a.present[ia] && b.present[ib]);
        out.values[k] = a.values[ia] * b.values[ib];
    }
    return out;
}

/// Pairs ticks with identical timestamps.
inline AlignedPair inner_join(const TickSeries& a, const TickSeries& b) {
    AlignedPair out;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < a.size() && j < b.size()) {
        if (a.timestamps[i] < b.timestamps[j]) {
            ++i;
        } else if (b.timestamps[j] < a.timestamps[i]) {
            ++j;
        } else {
            out.timestamps.push_back(a.timestamps[i]);
            out.pair.x.push_back(a.prices[i++]);
            out.pair.y.push_back(b.prices[j++]);
        }
    }
    if (out.timestamps.empty()) throw Error(ErrorKind::NoOverlap, a.name + " and " + b.name + " share no timestamps");
    out.pair.x_label = a.name;
    out.pair.y_label = b.name;
    return out;
}

inline void write_pair_csv(std::ostream& out, const AlignedPair& aligned) {
    out << "timestamp_ms,x,y\n";
    for (std::size_t t = 0; t < aligned.timestamps.size(); ++t) {
        out << aligned.timestamps[t] << ',' << format_double(aligned.pair.x[t]) << ','
            << format_double(aligned.pair.y[t]) << '\n';
    }
}

/// Single series as `timestamp_ms,price`, present slots only.
inline void write_series_csv(std::ostream& out, const RegularSeries& series) {
    out << "timestamp_ms,price\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        if (!series.present[k]) continue;
        out << series.timestamp(k) << ',' << format_double(series.values[k]) << '\n';
    }
}

}  // namespace shifthsic
