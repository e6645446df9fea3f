#pragma once

// Matrix Market "array" format, real and complex general. Entries are stored
// column-major, one per line (complex: "re im").

#include "dlyap/error.hpp"
#include "dlyap/linalg.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace dlyap::mm {

enum class Field { real, complex };

namespace detail {

inline std::string lower(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

struct Header
{
    Field field = Field::real;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
};

inline Header read_header(std::istream& in, const std::string& name)
{
    std::string line;
    if (!std::getline(in, line)) throw Error("mm-parse", name + ": empty file");
    std::istringstream banner(line);
    std::string tag, object, format, field, symmetry;
    banner >> tag >> object >> format >> field >> symmetry;
    if (tag != "%%MatrixMarket") throw Error("mm-parse", name + ": missing %%MatrixMarket banner");
    object = lower(object);
    format = lower(format);
    field = lower(field);
    symmetry = lower(symmetry);
    if (object != "matrix" || format != "array")
        throw Error("mm-parse", name + ": only 'matrix array' is supported, got '" + object + " " + format + "'");
    if (symmetry != "general") throw Error("mm-parse", name + ": only 'general' symmetry is supported");

    Header h;
    if (field == "real" || field == "double")
        h.field = Field::real;
    else if (field == "complex")
        h.field = Field::complex;
    else
        throw Error("mm-parse", name + ": unsupported field '" + field + "'");

    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '%') continue;
        std::istringstream dims(line);
        long long r = -1, c = -1;
        if (!(dims >> r >> c) || r < 0 || c < 0) throw Error("mm-parse", name + ": bad size line '" + line + "'");
        h.rows = static_cast<Eigen::Index>(r);
        h.cols = static_cast<Eigen::Index>(c);
        return h;
    }
    throw Error("mm-parse", name + ": missing size line");
}

inline double next_value(std::istream& in, const std::string& name)
{
    std::string tok;
    while (in >> tok) {
        if (tok[0] == '%') {
            std::string rest;
            std::getline(in, rest);
            continue;
        }
        try {
            std::size_t used = 0;
            const double v = std::stod(tok, &used);
            if (used != tok.size()) throw Error("mm-parse", name + ": bad number '" + tok + "'");
            return v;
        } catch (const std::logic_error&) {
            throw Error("mm-parse", name + ": bad number '" + tok + "'");
        }
    }
    throw Error("mm-parse", name + ": too few entries");
}

inline std::ifstream open_in(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw Error("io", "cannot open '" + path + "' for reading");
    return in;
}

inline std::ofstream open_out(const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw Error("io", "cannot open '" + path + "' for writing");
    out << std::setprecision(17);
    return out;
}

} // namespace detail

inline Matrix read_real(std::istream& in, const std::string& name = "<stream>")
{
    const auto h = detail::read_header(in, name);
    if (h.field != Field::real) throw Error("mm-parse", name + ": expected a real matrix");
    Matrix a(h.rows, h.cols);
    for (Eigen::Index j = 0; j < h.cols; ++j)
        for (Eigen::Index i = 0; i < h.rows; ++i) a(i, j) = detail::next_value(in, name);
    require_finite(a, name.c_str());
    return a;
}

inline CMatrix read_complex(std::istream& in, const std::string& name = "<stream>")
{
    const auto h = detail::read_header(in, name);
    CMatrix a(h.rows, h.cols);
    for (Eigen::Index j = 0; j < h.cols; ++j)
        for (Eigen::Index i = 0; i < h.rows; ++i) {
            const double re = detail::next_value(in, name);
            const double im = h.field == Field::complex ? detail::next_value(in, name) : 0.0;
            a(i, j) = Complex(re, im);
        }
    if (!a.allFinite()) throw Error("non-finite", name + " contains NaN or Inf");
    return a;
}

inline void write(std::ostream& out, const Eigen::Ref<const Matrix>& a, const std::string& comment = {})
{
    out << "%%MatrixMarket matrix array real general\n";
    if (!comment.empty()) out << "% " << comment << '\n';
    out << a.rows() << ' ' << a.cols() << '\n';
    char buf[40];
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", a(i, j));
            out << buf << '\n';
        }
}

inline void write(std::ostream& out, const Eigen::Ref<const CMatrix>& a, const std::string& comment = {})
{
    out << "%%MatrixMarket matrix array complex general\n";
    if (!comment.empty()) out << "% " << comment << '\n';
    out << a.rows() << ' ' << a.cols() << '\n';
    char buf[80];
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g %.17g", a(i, j).real(), a(i, j).imag());
            out << buf << '\n';
        }
}

inline Matrix read_real_file(const std::string& path)
{
    auto in = detail::open_in(path);
    return read_real(in, path);
}

inline CMatrix read_complex_file(const std::string& path)
{
    auto in = detail::open_in(path);
    return read_complex(in, path);
}

inline void write_file(const std::string& path, const Eigen::Ref<const Matrix>& a, const std::string& comment = {})
{
    auto out = detail::open_out(path);
    write(out, a, comment);
    if (!out) throw Error("io", "write failed for '" + path + "'");
}

inline void write_file(const std::string& path, const Eigen::Ref<const CMatrix>& a, const std::string& comment = {})
{
    auto out = detail::open_out(path);
    write(out, a, comment);
    if (!out) throw Error("io", "write failed for '" + path + "'");
}

} // namespace dlyap::mm
