#include "fracrte/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "fracrte/error.hpp"

namespace fracrte::io {

static_assert(std::endian::native == std::endian::little, "binary snapshots assume a little-endian host");

namespace {

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, mode);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    return out;
}

}  // namespace

std::string format_double(double x) {
    if (x == 0.0) return "0";
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, x);
        if (std::strtod(buf, nullptr) == x) break;
    }
    return buf;
}

std::string format_from_log(double log_value) {
    if (std::isnan(log_value)) return "nan";
    if (log_value == -INFINITY) return "0";
    if (log_value == INFINITY) return "inf";
    const double l10 = log_value / std::log(10.0);
    double e = std::floor(l10);
    double m = std::pow(10.0, l10 - e);
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.9f", m);
    if (std::strtod(buf, nullptr) >= 10.0) {
        m /= 10.0;
        e += 1.0;
        std::snprintf(buf, sizeof buf, "%.9f", m);
    }
    std::string out = buf;
    out += "e";
    out += std::to_string(static_cast<long long>(e));
    return out;
}

void write_field_csv(const std::filesystem::path& path, const PhaseSpaceGrid& g, const Field& u) {
    require(u.nx() == g.nx() && u.nv() == g.nv() && u.nt_nodes() == g.nt_nodes(),
            "field does not match the grid");
    auto out = open_out(path);
    out << "x,v,t,value\n";
    for (std::size_t ix = 0; ix < u.nx(); ++ix)
        for (std::size_t iv = 0; iv < u.nv(); ++iv)
            for (std::size_t k = 0; k < u.nt_nodes(); ++k)
                out << format_double(g.x.nodes[ix]) << ',' << format_double(g.v.nodes[iv]) << ','
                    << format_double(g.t.time(k)) << ',' << format_double(u(ix, iv, k)) << '\n';
}

void write_field_binary(const std::filesystem::path& path, const Field& u) {
    auto out = open_out(path, std::ios::out | std::ios::binary);
    out.write("FRTE1", 5);
    const std::uint64_t dims[3] = {u.nx(), u.nv(), u.nt_nodes()};
    out.write(reinterpret_cast<const char*>(dims), sizeof dims);
    const auto v = u.values();
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
}

Field read_field_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    char magic[5];
    in.read(magic, 5);
    if (!in || std::memcmp(magic, "FRTE1", 5) != 0) throw Error(path.string() + ": bad magic");
    std::uint64_t dims[3];
    in.read(reinterpret_cast<char*>(dims), sizeof dims);
    if (!in) throw Error(path.string() + ": truncated header");
    Field u(dims[0], dims[1], dims[2]);
    auto v = u.values();
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
    if (!in) throw Error(path.string() + ": truncated data");
    return u;
}

void write_reconstruction_csv(const std::filesystem::path& path, const PhaseSpaceGrid& g,
                              const CoefficientPerturbation& rec,
                              const CoefficientPerturbation& truth) {
    auto out = open_out(path);
    out << "x,v,r_t,r_s,r_t_true,r_s_true\n";
    for (std::size_t ix = 0; ix < g.nx(); ++ix)
        for (std::size_t iv = 0; iv < g.nv(); ++iv)
            out << format_double(g.x.nodes[ix]) << ',' << format_double(g.v.nodes[iv]) << ','
                << format_double(rec.r_t(ix, iv)) << ',' << format_double(rec.r_s(ix, iv)) << ','
                << format_double(truth.r_t(ix, iv)) << ',' << format_double(truth.r_s(ix, iv))
                << '\n';
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<CarlemanReport>& rows) {
    auto out = open_out(path);
    out << "lambda,s,lhs,rhs_interior,rhs_boundary,rhs_trace0,c_emp\n";
    for (const auto& r : rows)
        out << format_double(r.lambda) << ',' << format_double(r.s) << ','
            << format_from_log(r.log_lhs) << ',' << format_from_log(r.log_rhs_interior) << ','
            << format_from_log(r.log_rhs_boundary) << ',' << format_from_log(r.log_rhs_trace0)
            << ',' << format_double(r.c_emp) << '\n';
}

void write_table_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<std::string>>& rows) {
    auto out = open_out(path);
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << '\n';
    for (const auto& row : rows) {
        require(row.size() == header.size(), "row width does not match the header");
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
        out << '\n';
    }
}

void append_run_log(const std::filesystem::path& path, const std::vector<std::string>& header,
                    const std::vector<std::string>& row) {
    const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
    auto out = open_out(path, std::ios::out | std::ios::app);
    if (fresh) {
        for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
        out << '\n';
    }
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace fracrte::io
