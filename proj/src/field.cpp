#include "fracrte/field.hpp"

#include <algorithm>
#include <cmath>

namespace fracrte {

Slice& Slice::operator+=(const Slice& o) {
    require(same_shape(o), "Slice shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
}

Slice& Slice::operator-=(const Slice& o) {
    require(same_shape(o), "Slice shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
}

Slice& Slice::operator*=(double c) {
    for (auto& x : data_) x *= c;
    return *this;
}

Slice operator+(Slice a, const Slice& b) { return a += b; }
Slice operator-(Slice a, const Slice& b) { return a -= b; }
Slice operator*(double c, Slice a) { return a *= c; }

Slice Field::slice(std::size_t it) const {
    require(it < nt_, "time index out of range");
    Slice s(nx_, nv_);
    for (std::size_t ix = 0; ix < nx_; ++ix)
        for (std::size_t iv = 0; iv < nv_; ++iv) s(ix, iv) = (*this)(ix, iv, it);
    return s;
}

void Field::set_slice(std::size_t it, const Slice& s) {
    require(it < nt_, "time index out of range");
    require(s.nx() == nx_ && s.nv() == nv_, "Slice does not match field shape");
    for (std::size_t ix = 0; ix < nx_; ++ix)
        for (std::size_t iv = 0; iv < nv_; ++iv) (*this)(ix, iv, it) = s(ix, iv);
}

Field& Field::operator+=(const Field& o) {
    require(same_shape(o), "Field shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
}

Field& Field::operator-=(const Field& o) {
    require(same_shape(o), "Field shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
}

Field& Field::operator*=(double c) {
    for (auto& x : data_) x *= c;
    return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double c, Field a) { return a *= c; }

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace fracrte
