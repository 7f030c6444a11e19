#include "crt/path_grid.hpp"

#include "crt/errors.hpp"
#include "byte_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace crt {

namespace {

using detail::put_le;

void check_invariants(PathKind kind, double step, const Eigen::VectorXd& v) {
    if (!(step > 0.0)) throw InvalidArgument("PathGrid: step must be positive");
    if (v.size() < 1) throw InvalidArgument("PathGrid: empty value list");
    if ((v.array() < 0.0).any() || !v.allFinite())
        throw InvalidArgument("PathGrid: values must be finite and nonnegative");
    if (v[0] != 0.0) throw InvalidArgument("PathGrid: path must start at 0");
    if (kind == PathKind::bes3_pair_half) return;
    if (v.size() < 2 || v[v.size() - 1] != 0.0)
        throw InvalidArgument("PathGrid: excursion must end at 0");
    if (v.size() > 2 && (v.segment(1, v.size() - 2).array() <= 0.0).any())
        throw InvalidArgument("PathGrid: excursion interior must be positive");
}

template <typename T>
T get_le(std::istream& in) {
    std::array<unsigned char, sizeof(T)> bytes;
    if (!in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T)))
        throw InvalidArgument("PathGrid: truncated stream");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    T value;
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
}

}  // namespace

PathGrid::PathGrid(PathKind kind, double origin_time, double step, Eigen::VectorXd values)
    : kind_(kind), origin_time_(origin_time), step_(step), values_(std::move(values)) {
    check_invariants(kind_, step_, values_);
}

double PathGrid::max_increment() const {
    if (values_.size() < 2) return 0.0;
    const auto n = values_.size() - 1;
    return (values_.tail(n) - values_.head(n)).cwiseAbs().maxCoeff();
}

bool operator==(const PathGrid& a, const PathGrid& b) {
    return a.kind_ == b.kind_ && a.origin_time_ == b.origin_time_ && a.step_ == b.step_ &&
           a.values_.size() == b.values_.size() && a.values_ == b.values_;
}

void write_path_grid(std::ostream& out, const PathGrid& path) {
    out.write("CRTC", 4);
    put_le<std::uint32_t>(out, kPathGridVersion);
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(path.kind()));
    put_le<double>(out, path.origin_time());
    put_le<double>(out, path.step());
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(path.size()));
    for (Eigen::Index i = 0; i < path.size(); ++i) put_le<double>(out, path[i]);
}

PathGrid read_path_grid(std::istream& in) {
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "CRTC", 4) != 0)
        throw InvalidArgument("PathGrid: bad magic");
    if (get_le<std::uint32_t>(in) != kPathGridVersion)
        throw InvalidArgument("PathGrid: unsupported version");
    const auto kind = get_le<std::uint8_t>(in);
    if (kind > 2) throw InvalidArgument("PathGrid: unknown kind");
    const double origin = get_le<double>(in);
    const double step = get_le<double>(in);
    const auto count = get_le<std::uint64_t>(in);
    Eigen::VectorXd values(static_cast<Eigen::Index>(count));
    for (Eigen::Index i = 0; i < values.size(); ++i) values[i] = get_le<double>(in);
    return PathGrid(static_cast<PathKind>(kind), origin, step, std::move(values));
}

void save_path_grid(const std::string& file, const PathGrid& path) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw InvalidArgument("cannot open " + file);
    write_path_grid(out, path);
}

PathGrid load_path_grid(const std::string& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open " + file);
    return read_path_grid(in);
}

}  // namespace crt
