#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <string>

namespace crt {

enum class PathKind : std::uint8_t { excursion = 0, bes3_pair_half = 1, spine_forest = 2 };

/// A nonnegative contour sampled on a uniform time grid.
///
/// Construction checks the kind-specific boundary invariants:
/// excursion and spine_forest paths start and end at exactly 0 with a
/// strictly positive interior, bes3_pair_half paths start at 0.
class PathGrid {
public:
    PathGrid(PathKind kind, double origin_time, double step, Eigen::VectorXd values);

    PathKind kind() const { return kind_; }
    double origin_time() const { return origin_time_; }
    double step() const { return step_; }
    const Eigen::VectorXd& values() const { return values_; }
    Eigen::Index size() const { return values_.size(); }
    double operator[](Eigen::Index i) const { return values_[i]; }
    double horizon() const { return step_ * static_cast<double>(values_.size() - 1); }

    /// Largest |X_{i+1} - X_i| over the grid.
    double max_increment() const;

    friend bool operator==(const PathGrid& a, const PathGrid& b);

private:
    PathKind kind_;
    double origin_time_;
    double step_;
    Eigen::VectorXd values_;
};

// Binary container: "CRTC", u32 version, u8 kind, f64 origin_time, f64 step,
// u64 count, then count f64 values. All little-endian.
inline constexpr std::uint32_t kPathGridVersion = 1;

void write_path_grid(std::ostream& out, const PathGrid& path);
PathGrid read_path_grid(std::istream& in);
void save_path_grid(const std::string& file, const PathGrid& path);
PathGrid load_path_grid(const std::string& file);

}  // namespace crt
