// Dataset files.
//
// CSV: one header row, then one datapoint per line. If the last header
// column is named "weight", that column holds per-row weights.
//
// Binary (little-endian):
//   "SGMM" | version u16 = 1 | flags u16 (bit 0: weights) | N u64 | D u32 |
//   N*D f64 row-major values | [N f64 weights]
#pragma once

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "errors.hpp"
#include "matrix.hpp"

namespace sgmm {

inline constexpr std::array<char, 4> kBinaryMagic{'S', 'G', 'M', 'M'};
inline constexpr std::uint16_t kBinaryVersion = 1;
inline constexpr std::uint16_t kBinaryHasWeights = 0x1;

// Shortest representation that parses back to the same double.
inline std::string format_double(double value) {
    std::array<char, 64> buf{};
    const auto result = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), result.ptr);
}

inline double parse_double(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) {
        text.remove_prefix(1);
    }
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
        text.remove_suffix(1);
    }
    if (!text.empty() && text.front() == '+') {
        text.remove_prefix(1);
    }
    double value = 0.0;
    const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
    if (result.ec != std::errc{} || result.ptr != text.data() + text.size()) {
        throw io_error("not a number: '" + std::string(text) + "'");
    }
    return value;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

inline DataMatrix<double> read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw io_error("CSV input is empty");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    const auto header = split_csv_line(line);
    std::string last(header.back());
    while (!last.empty() && last.back() == ' ') {
        last.pop_back();
    }
    const bool has_weights = last == "weight";
    const std::size_t columns = header.size();
    const std::size_t dim = has_weights ? columns - 1 : columns;
    if (dim == 0) {
        throw io_error("CSV header has no data columns");
    }
    std::vector<double> values;
    std::vector<double> weights;
    std::size_t rows = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const auto fields = split_csv_line(line);
        if (fields.size() != columns) {
            throw io_error("CSV line " + std::to_string(line_no) + ": expected " + std::to_string(columns) +
                           " fields, got " + std::to_string(fields.size()));
        }
        try {
            for (std::size_t j = 0; j < dim; ++j) {
                values.push_back(parse_double(fields[j]));
            }
            if (has_weights) {
                weights.push_back(parse_double(fields[dim]));
            }
        } catch (const io_error& e) {
            throw io_error("CSV line " + std::to_string(line_no) + ": " + e.what());
        }
        ++rows;
    }
    if (rows == 0) {
        throw io_error("CSV input has a header but no rows");
    }
    try {
        return DataMatrix<double>(Matrix<double>(rows, dim, std::move(values)), std::move(weights));
    } catch (const usage_error& e) {
        throw io_error(std::string("invalid CSV data: ") + e.what());
    }
}

// Header x0,x1,... (plus "weight" for weighted data).
inline void write_csv(std::ostream& out, const Matrix<double>& values, std::span<const double> weights = {}) {
    for (std::size_t j = 0; j < values.cols(); ++j) {
        out << (j == 0 ? "" : ",") << 'x' << j;
    }
    if (!weights.empty()) {
        out << ",weight";
    }
    out << '\n';
    for (std::size_t n = 0; n < values.rows(); ++n) {
        const auto row = values.row(n);
        for (std::size_t j = 0; j < row.size(); ++j) {
            out << (j == 0 ? "" : ",") << format_double(row[j]);
        }
        if (!weights.empty()) {
            out << ',' << format_double(weights[n]);
        }
        out << '\n';
    }
}

inline void write_csv(std::ostream& out, const DataMatrix<double>& data) {
    write_csv(out, data.values(), data.weights());
}

namespace detail {

template <class U>
void put_le(std::ostream& out, U value) {
    static_assert(std::is_trivially_copyable_v<U>);
    std::array<char, sizeof(U)> bytes;
    std::memcpy(bytes.data(), &value, sizeof(U));
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(bytes.begin(), bytes.end());
    }
    out.write(bytes.data(), sizeof(U));
}

template <class U>
U get_le(std::istream& in) {
    std::array<char, sizeof(U)> bytes;
    if (!in.read(bytes.data(), sizeof(U))) {
        throw io_error("binary input is truncated");
    }
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(bytes.begin(), bytes.end());
    }
    U value;
    std::memcpy(&value, bytes.data(), sizeof(U));
    return value;
}

} // namespace detail

inline void write_binary(std::ostream& out, const Matrix<double>& values, std::span<const double> weights = {}) {
    out.write(kBinaryMagic.data(), kBinaryMagic.size());
    detail::put_le<std::uint16_t>(out, kBinaryVersion);
    detail::put_le<std::uint16_t>(out, weights.empty() ? 0 : kBinaryHasWeights);
    detail::put_le<std::uint64_t>(out, values.rows());
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(values.cols()));
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(values.values().data()),
                  static_cast<std::streamsize>(values.values().size() * sizeof(double)));
        out.write(reinterpret_cast<const char*>(weights.data()),
                  static_cast<std::streamsize>(weights.size() * sizeof(double)));
    } else {
        for (double v : values.values()) {
            detail::put_le(out, v);
        }
        for (double w : weights) {
            detail::put_le(out, w);
        }
    }
}

inline void write_binary(std::ostream& out, const DataMatrix<double>& data) {
    write_binary(out, data.values(), data.weights());
}

inline DataMatrix<double> read_binary(std::istream& in) {
    std::array<char, 4> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kBinaryMagic) {
        throw io_error("binary input does not start with SGMM");
    }
    const auto version = detail::get_le<std::uint16_t>(in);
    if (version != kBinaryVersion) {
        throw io_error("unsupported binary format version " + std::to_string(version));
    }
    const auto flags = detail::get_le<std::uint16_t>(in);
    if ((flags & ~kBinaryHasWeights) != 0) {
        throw io_error("unknown flags in binary header");
    }
    const auto rows = detail::get_le<std::uint64_t>(in);
    const auto cols = detail::get_le<std::uint32_t>(in);
    if (rows == 0 || cols == 0) {
        throw io_error("binary input has an empty shape");
    }
    if (rows > (std::uint64_t{1} << 40) / cols) {
        throw io_error("binary input shape is implausibly large");
    }
    std::vector<double> values(rows * cols);
    for (auto& v : values) {
        v = detail::get_le<double>(in);
    }
    std::vector<double> weights;
    if (flags & kBinaryHasWeights) {
        weights.resize(rows);
        for (auto& w : weights) {
            w = detail::get_le<double>(in);
        }
    }
    try {
        return DataMatrix<double>(Matrix<double>(rows, cols, std::move(values)), std::move(weights));
    } catch (const usage_error& e) {
        throw io_error(std::string("invalid binary data: ") + e.what());
    }
}

enum class FileFormat { csv, binary };

// Binary when the file starts with the magic bytes, CSV otherwise.
inline DataMatrix<double> load_data(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw io_error("cannot open '" + path + "'");
    }
    std::array<char, 4> head{};
    in.read(head.data(), head.size());
    const bool binary = in.gcount() == 4 && head == kBinaryMagic;
    in.clear();
    in.seekg(0);
    try {
        return binary ? read_binary(in) : read_csv(in);
    } catch (const io_error& e) {
        throw io_error(path + ": " + e.what());
    }
}

inline FileFormat format_for_path(const std::string& path) {
    const auto dot = path.rfind('.');
    if (dot != std::string::npos) {
        const std::string ext = path.substr(dot + 1);
        if (ext == "bin" || ext == "sgmm") {
            return FileFormat::binary;
        }
    }
    return FileFormat::csv;
}

inline void save_data(const std::string& path, const Matrix<double>& values, std::span<const double> weights = {}) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw io_error("cannot open '" + path + "' for writing");
    }
    if (format_for_path(path) == FileFormat::binary) {
        write_binary(out, values, weights);
    } else {
        write_csv(out, values, weights);
    }
    if (!out) {
        throw io_error("failed writing '" + path + "'");
    }
}

inline void save_data(const std::string& path, const DataMatrix<double>& data) {
    save_data(path, data.values(), data.weights());
}

// Centers are stored like unweighted data.
inline Matrix<double> load_matrix(const std::string& path) {
    auto data = load_data(path);
    if (data.weighted()) {
        throw io_error(path + ": expected an unweighted matrix");
    }
    return data.values();
}

} // namespace sgmm
