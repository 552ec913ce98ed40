#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fracrte/error.hpp"

namespace fracrte {

/// Scalar function on the x-v grid, stored row-major as (ix, iv).
class Slice {
public:
    Slice() = default;
    Slice(std::size_t nx, std::size_t nv, double fill = 0.0)
        : nx_(nx), nv_(nv), data_(nx * nv, fill) {}

    std::size_t nx() const { return nx_; }
    std::size_t nv() const { return nv_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t ix, std::size_t iv) { return data_[ix * nv_ + iv]; }
    double operator()(std::size_t ix, std::size_t iv) const { return data_[ix * nv_ + iv]; }

    std::span<double> row(std::size_t ix) { return {data_.data() + ix * nv_, nv_}; }
    std::span<const double> row(std::size_t ix) const { return {data_.data() + ix * nv_, nv_}; }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }

    bool same_shape(const Slice& o) const { return nx_ == o.nx_ && nv_ == o.nv_; }

    Slice& operator+=(const Slice& o);
    Slice& operator-=(const Slice& o);
    Slice& operator*=(double c);

private:
    std::size_t nx_ = 0;
    std::size_t nv_ = 0;
    std::vector<double> data_;
};

Slice operator+(Slice a, const Slice& b);
Slice operator-(Slice a, const Slice& b);
Slice operator*(double c, Slice a);

/// Scalar function on the x-v-t grid. Layout is row-major (ix, iv, it), so
/// the time series of one (x, v) lane is contiguous.
class Field {
public:
    Field() = default;
    Field(std::size_t nx, std::size_t nv, std::size_t nt_nodes, double fill = 0.0)
        : nx_(nx), nv_(nv), nt_(nt_nodes), data_(nx * nv * nt_nodes, fill) {}

    std::size_t nx() const { return nx_; }
    std::size_t nv() const { return nv_; }
    /// Number of time nodes (nt + 1 for a grid with nt steps).
    std::size_t nt_nodes() const { return nt_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t ix, std::size_t iv, std::size_t it) {
        return data_[(ix * nv_ + iv) * nt_ + it];
    }
    double operator()(std::size_t ix, std::size_t iv, std::size_t it) const {
        return data_[(ix * nv_ + iv) * nt_ + it];
    }

    std::span<double> lane(std::size_t ix, std::size_t iv) {
        return {data_.data() + (ix * nv_ + iv) * nt_, nt_};
    }
    std::span<const double> lane(std::size_t ix, std::size_t iv) const {
        return {data_.data() + (ix * nv_ + iv) * nt_, nt_};
    }

    Slice slice(std::size_t it) const;
    void set_slice(std::size_t it, const Slice& s);

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }

    bool same_shape(const Field& o) const {
        return nx_ == o.nx_ && nv_ == o.nv_ && nt_ == o.nt_;
    }

    Field& operator+=(const Field& o);
    Field& operator-=(const Field& o);
    Field& operator*=(double c);

private:
    std::size_t nx_ = 0;
    std::size_t nv_ = 0;
    std::size_t nt_ = 0;
    std::vector<double> data_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double c, Field a);

/// Function on the x-v-v' grid (phase function, scattering kernels), layout (ix, iv, iv').
class Kernel {
public:
    Kernel() = default;
    Kernel(std::size_t nx, std::size_t nv, double fill = 0.0)
        : nx_(nx), nv_(nv), data_(nx * nv * nv, fill) {}

    std::size_t nx() const { return nx_; }
    std::size_t nv() const { return nv_; }

    double& operator()(std::size_t ix, std::size_t iv, std::size_t jv) {
        return data_[(ix * nv_ + iv) * nv_ + jv];
    }
    double operator()(std::size_t ix, std::size_t iv, std::size_t jv) const {
        return data_[(ix * nv_ + iv) * nv_ + jv];
    }
    std::span<const double> row(std::size_t ix, std::size_t iv) const {
        return {data_.data() + (ix * nv_ + iv) * nv_, nv_};
    }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }

private:
    std::size_t nx_ = 0;
    std::size_t nv_ = 0;
    std::vector<double> data_;
};

double max_abs(std::span<const double> v);

}  // namespace fracrte
