#include "bpsv/io.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace bpsv {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, mode | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
    return out;
}

void check_written(std::ofstream& out, const fs::path& path) {
    out.flush();
    if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

fs::path with_suffix(fs::path stem, const char* ext) { return stem += ext; }

std::uint64_t swap64(std::uint64_t v) {
    v = ((v & 0x00ff00ff00ff00ffULL) << 8) | ((v >> 8) & 0x00ff00ff00ff00ffULL);
    v = ((v & 0x0000ffff0000ffffULL) << 16) | ((v >> 16) & 0x0000ffff0000ffffULL);
    return (v << 32) | (v >> 32);
}

std::uint64_t to_le(double x) {
    auto bits = std::bit_cast<std::uint64_t>(x);
    if constexpr (std::endian::native == std::endian::big) bits = swap64(bits);
    return bits;
}

}  // namespace

std::string format_double(double x) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, end);
}

void write_field(const fs::path& stem, const ScalarField2D& field, const std::string& name, int component,
                 double edge_value) {
    const Grid& g = field.grid();
    const bool pad = g.boundary == Boundary::Dirichlet;
    const int nx = pad ? g.nx + 2 : g.nx;
    const int ny = pad ? g.ny + 2 : g.ny;

    std::vector<std::uint64_t> raw;
    raw.reserve(static_cast<std::size_t>(nx) * ny);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            double v;
            if (!pad)
                v = field.at(i, j);
            else if (i == 0 || j == 0 || i == nx - 1 || j == ny - 1)
                v = edge_value;
            else
                v = field.at(i - 1, j - 1);
            raw.push_back(to_le(v));
        }
    const auto bin = with_suffix(stem, ".bin");
    auto out = open_out(bin, std::ios::binary);
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size() * sizeof(double)));
    check_written(out, bin);

    write_json(with_suffix(stem, ".json"),
               {{"nx", nx}, {"ny", ny}, {"Lx", g.Lx}, {"Ly", g.Ly}, {"name", name}, {"component", component}});
}

FieldDump read_field(const fs::path& stem) {
    FieldDump dump;
    dump.meta = read_json(with_suffix(stem, ".json"));
    const auto n = dump.meta.at("nx").get<std::size_t>() * dump.meta.at("ny").get<std::size_t>();
    const auto bin = with_suffix(stem, ".bin");
    std::ifstream in(bin, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + bin.string());
    std::vector<std::uint64_t> raw(n);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(n * sizeof(double)))
        throw Error(ErrorCode::Io, bin.string() + " is shorter than its sidecar says");
    dump.values.reserve(n);
    for (auto bits : raw) {
        if constexpr (std::endian::native == std::endian::big) bits = swap64(bits);
        dump.values.push_back(std::bit_cast<double>(bits));
    }
    return dump;
}

void write_history_csv(const fs::path& path, const std::vector<IterationRecord>& history) {
    auto out = open_out(path);
    out << "iter,energy,grad_norm,step\n";
    for (const auto& r : history)
        out << r.iter << ',' << format_double(r.energy) << ',' << format_double(r.grad_norm) << ','
            << format_double(r.step) << '\n';
    check_written(out, path);
}

void write_decay_csv(const fs::path& path, const DecayFit& fit) {
    auto out = open_out(path);
    out << "r,log_usq,log_gradsq\n";
    for (const auto& s : fit.samples)
        out << format_double(s.r) << ',' << format_double(s.log_usq) << ',' << format_double(s.log_gradsq) << '\n';
    check_written(out, path);
}

void write_json(const fs::path& path, const nlohmann::json& value) {
    auto out = open_out(path);
    out << value.dump(2) << '\n';
    check_written(out, path);
}

nlohmann::json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Parse, path.string() + ": " + e.what());
    }
}

}  // namespace bpsv
