#pragma once

// Small dense linear algebra: matrices up to a few dozen rows, the matrix
// exponential, real-matrix eigenvalues and the spectral norm.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "stoch_euler/errors.hpp"

namespace stoch_euler {

using Complex = std::complex<double>;
using Vector = std::vector<double>;

/// Largest dimension the dense routines are meant for.
inline constexpr std::size_t kMaxDenseDim = 64;

/// Row-major dense real matrix.
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
        : rows_(rows), cols_(cols), data_(std::move(entries)) {
        if (data_.size() != rows_ * cols_) {
            throw DimensionError("Matrix: entries length " + std::to_string(data_.size()) + " != " +
                                 std::to_string(rows_) + "x" + std::to_string(cols_));
        }
        for (double x : data_) {
            if (!std::isfinite(x)) throw ParameterError("Matrix: non-finite entry");
        }
    }

    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
        const std::size_t r = rows.size();
        const std::size_t c = r == 0 ? 0 : rows.begin()->size();
        std::vector<double> entries;
        entries.reserve(r * c);
        for (const auto& row : rows) {
            if (row.size() != c) throw DimensionError("Matrix::from_rows: ragged rows");
            entries.insert(entries.end(), row.begin(), row.end());
        }
        return Matrix(r, c, std::move(entries));
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static Matrix diagonal(std::span<const double> d) {
        Matrix m(d.size(), d.size());
        for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
        return m;
    }

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] bool square() const noexcept { return rows_ == cols_; }
    [[nodiscard]] std::span<const double> entries() const noexcept { return data_; }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    [[nodiscard]] Matrix transpose() const {
        Matrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    Matrix& operator+=(const Matrix& o) {
        check_same(o, "+=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }

    Matrix& operator-=(const Matrix& o) {
        check_same(o, "-=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }

    Matrix& operator*=(double s) noexcept {
        for (double& x : data_) x *= s;
        return *this;
    }

    friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
    friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
    friend Matrix operator*(Matrix a, double s) { return a *= s; }
    friend Matrix operator*(double s, Matrix a) { return a *= s; }

    friend Matrix operator*(const Matrix& a, const Matrix& b) {
        if (a.cols_ != b.rows_) throw DimensionError("Matrix product: inner dimensions differ");
        Matrix c(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i) {
            for (std::size_t k = 0; k < a.cols_; ++k) {
                const double aik = a(i, k);
                if (aik == 0.0) continue;
                for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
            }
        }
        return c;
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    void check_same(const Matrix& o, const char* op) const {
        if (rows_ != o.rows_ || cols_ != o.cols_) throw DimensionError(std::string("Matrix ") + op + ": shape mismatch");
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// y = A x, written into `out` (sizes must match; no aliasing between x and out).
inline void multiply_into(const Matrix& a, std::span<const double> x, std::span<double> out) noexcept {
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
        out[i] = s;
    }
}

inline Vector operator*(const Matrix& a, std::span<const double> x) {
    if (a.cols() != x.size()) throw DimensionError("Matrix-vector product: size mismatch");
    Vector y(a.rows());
    multiply_into(a, x, y);
    return y;
}

inline Vector operator*(const Matrix& a, const Vector& x) { return a * std::span<const double>(x); }

/// Maximum absolute column sum.
inline double norm_one(const Matrix& a) noexcept {
    double best = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.rows(); ++i) s += std::abs(a(i, j));
        best = std::max(best, s);
    }
    return best;
}

inline double norm_frobenius(const Matrix& a) noexcept {
    double s = 0.0;
    for (double x : a.entries()) s += x * x;
    return std::sqrt(s);
}

inline double trace(const Matrix& a) {
    if (!a.square()) throw DimensionError("trace: matrix not square");
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) s += a(i, i);
    return s;
}

namespace detail {

inline void require_square(const Matrix& a, const char* who) {
    if (!a.square()) {
        throw DimensionError(std::string(who) + ": matrix is " + std::to_string(a.rows()) + "x" +
                             std::to_string(a.cols()) + ", expected square");
    }
    if (a.rows() > kMaxDenseDim) {
        throw DimensionError(std::string(who) + ": dimension exceeds " + std::to_string(kMaxDenseDim));
    }
}

}  // namespace detail

/// exp(tA) by scaling and squaring.
///
/// tA is scaled by 2^-s until its 1-norm is below 0.5, the degree-13 Taylor
/// polynomial is evaluated, and the result squared s times.
inline Matrix mat_exp(const Matrix& a, double t) {
    detail::require_square(a, "mat_exp");
    if (!std::isfinite(t)) throw ParameterError("mat_exp: t must be finite");
    const std::size_t n = a.rows();
    if (n == 0) return Matrix{};

    Matrix x = a * t;
    const double nrm = norm_one(x);
    int squarings = 0;
    if (nrm >= 0.5) {
        squarings = static_cast<int>(std::ceil(std::log2(nrm / 0.5)));
        if (std::ldexp(0.5, squarings) <= nrm) ++squarings;
        x *= std::ldexp(1.0, -squarings);
    }

    constexpr int kDegree = 13;
    Matrix result = Matrix::identity(n);
    Matrix term = Matrix::identity(n);
    for (int k = 1; k <= kDegree; ++k) {
        term = term * x;
        term *= 1.0 / k;
        result += term;
    }
    for (int i = 0; i < squarings; ++i) result = result * result;
    return result;
}

namespace detail {

// Parlett-Reinsch balancing; leaves eigenvalues unchanged.
inline void balance(Matrix& a) {
    constexpr double radix = 2.0;
    const std::size_t n = a.rows();
    bool done = false;
    while (!done) {
        done = true;
        for (std::size_t i = 0; i < n; ++i) {
            double r = 0.0;
            double c = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                c += std::abs(a(j, i));
                r += std::abs(a(i, j));
            }
            if (c == 0.0 || r == 0.0) continue;
            double g = r / radix;
            double f = 1.0;
            const double s = c + r;
            while (c < g) {
                f *= radix;
                c *= radix * radix;
            }
            g = r * radix;
            while (c > g) {
                f /= radix;
                c /= radix * radix;
            }
            if ((c + r) / f < 0.95 * s) {
                done = false;
                g = 1.0 / f;
                for (std::size_t j = 0; j < n; ++j) a(i, j) *= g;
                for (std::size_t j = 0; j < n; ++j) a(j, i) *= f;
            }
        }
    }
}

// Householder reduction to upper Hessenberg form (similarity transform).
inline void to_hessenberg(Matrix& a) {
    const std::size_t n = a.rows();
    if (n < 3) return;
    std::vector<double> v(n);
    for (std::size_t k = 0; k + 2 < n; ++k) {
        double alpha = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) alpha += a(i, k) * a(i, k);
        alpha = std::sqrt(alpha);
        if (alpha == 0.0) continue;
        if (a(k + 1, k) > 0.0) alpha = -alpha;
        double vnorm2 = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) {
            v[i] = a(i, k);
            if (i == k + 1) v[i] -= alpha;
            vnorm2 += v[i] * v[i];
        }
        if (vnorm2 == 0.0) continue;
        const double beta = 2.0 / vnorm2;
        // A <- (I - beta v v^T) A
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = k + 1; i < n; ++i) s += v[i] * a(i, j);
            s *= beta;
            for (std::size_t i = k + 1; i < n; ++i) a(i, j) -= s * v[i];
        }
        // A <- A (I - beta v v^T)
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = k + 1; j < n; ++j) s += a(i, j) * v[j];
            s *= beta;
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= s * v[j];
        }
        for (std::size_t i = k + 2; i < n; ++i) a(i, k) = 0.0;
    }
}

inline void sort_eigenvalues(std::vector<Complex>& eigs) {
    std::sort(eigs.begin(), eigs.end(), [](const Complex& x, const Complex& y) {
        if (x.real() != y.real()) return x.real() < y.real();
        return x.imag() < y.imag();
    });
}

}  // namespace detail

/// Eigenvalues of a real square matrix, with multiplicity, sorted by real then imaginary part.
///
/// Balancing, Householder reduction to Hessenberg form, then Francis
/// double-shift QR. A subdiagonal entry is deflated once it falls below
/// 1e-14 * (|h_ii| + |h_{i+1,i+1}|); trailing 2x2 blocks are solved in closed
/// form. Throws ConvergenceError (with the eigenvalues found so far) after
/// 100 * d QR sweeps.
inline std::vector<Complex> eigenvalues(const Matrix& input) {
    detail::require_square(input, "eigenvalues");
    const int n = static_cast<int>(input.rows());
    std::vector<Complex> out(static_cast<std::size_t>(n));
    if (n == 0) return out;

    Matrix a = input;
    detail::balance(a);
    detail::to_hessenberg(a);

    constexpr double kDeflate = 1e-14;
    double anorm = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = std::max(i - 1, 0); j < n; ++j) anorm += std::abs(a(i, j));

    const int max_sweeps = 100 * n;
    int sweeps = 0;
    int nn = n - 1;
    int its = 0;
    double shift = 0.0;
    std::vector<bool> found(static_cast<std::size_t>(n), false);

    auto fail = [&]() {
        std::vector<Complex> partial;
        for (int i = 0; i < n; ++i)
            if (found[static_cast<std::size_t>(i)]) partial.push_back(out[static_cast<std::size_t>(i)]);
        detail::sort_eigenvalues(partial);
        throw ConvergenceError("eigenvalues: QR iteration did not converge within " + std::to_string(max_sweeps) +
                                   " sweeps",
                               std::move(partial));
    };

    while (nn >= 0) {
        int l = nn;
        for (; l > 0; --l) {
            double s = std::abs(a(l - 1, l - 1)) + std::abs(a(l, l));
            if (s == 0.0) s = anorm;
            if (std::abs(a(l, l - 1)) <= kDeflate * s) {
                a(l, l - 1) = 0.0;
                break;
            }
        }
        double x = a(nn, nn);
        if (l == nn) {
            out[static_cast<std::size_t>(nn)] = Complex(x + shift, 0.0);
            found[static_cast<std::size_t>(nn)] = true;
            --nn;
            its = 0;
            continue;
        }
        double y = a(nn - 1, nn - 1);
        double w = a(nn, nn - 1) * a(nn - 1, nn);
        if (l == nn - 1) {
            const double p = 0.5 * (y - x);
            const double q = p * p + w;
            double z = std::sqrt(std::abs(q));
            x += shift;
            if (q >= 0.0) {
                z = p + std::copysign(z, p);
                out[static_cast<std::size_t>(nn - 1)] = out[static_cast<std::size_t>(nn)] = Complex(x + z, 0.0);
                if (z != 0.0) out[static_cast<std::size_t>(nn)] = Complex(x - w / z, 0.0);
            } else {
                out[static_cast<std::size_t>(nn)] = Complex(x + p, -z);
                out[static_cast<std::size_t>(nn - 1)] = Complex(x + p, z);
            }
            found[static_cast<std::size_t>(nn)] = found[static_cast<std::size_t>(nn - 1)] = true;
            nn -= 2;
            its = 0;
            continue;
        }

        if (sweeps >= max_sweeps) fail();
        if (its == 10 || its == 20) {
            // Exceptional shift.
            shift += x;
            for (int i = 0; i <= nn; ++i) a(i, i) -= x;
            const double s = std::abs(a(nn, nn - 1)) + std::abs(a(nn - 1, nn - 2));
            y = x = 0.75 * s;
            w = -0.4375 * s * s;
        }
        ++its;
        ++sweeps;

        int m = nn - 2;
        double p = 0.0, q = 0.0, r = 0.0, z = 0.0;
        for (; m >= l; --m) {
            z = a(m, m);
            r = x - z;
            double s = y - z;
            p = (r * s - w) / a(m + 1, m) + a(m, m + 1);
            q = a(m + 1, m + 1) - z - r - s;
            r = a(m + 2, m + 1);
            s = std::abs(p) + std::abs(q) + std::abs(r);
            p /= s;
            q /= s;
            r /= s;
            if (m == l) break;
            const double u = std::abs(a(m, m - 1)) * (std::abs(q) + std::abs(r));
            const double v = std::abs(p) * (std::abs(a(m - 1, m - 1)) + std::abs(z) + std::abs(a(m + 1, m + 1)));
            if (u <= std::numeric_limits<double>::epsilon() * v) break;
        }
        for (int i = m; i < nn - 1; ++i) {
            a(i + 2, i) = 0.0;
            if (i != m) a(i + 2, i - 1) = 0.0;
        }
        for (int k = m; k < nn; ++k) {
            if (k != m) {
                p = a(k, k - 1);
                q = a(k + 1, k - 1);
                r = (k + 1 != nn) ? a(k + 2, k - 1) : 0.0;
                x = std::abs(p) + std::abs(q) + std::abs(r);
                if (x != 0.0) {
                    p /= x;
                    q /= x;
                    r /= x;
                }
            }
            const double s = std::copysign(std::sqrt(p * p + q * q + r * r), p);
            if (s == 0.0) continue;
            if (k == m) {
                if (l != m) a(k, k - 1) = -a(k, k - 1);
            } else {
                a(k, k - 1) = -s * x;
            }
            p += s;
            x = p / s;
            y = q / s;
            z = r / s;
            q /= p;
            r /= p;
            for (int j = k; j <= nn; ++j) {
                p = a(k, j) + q * a(k + 1, j);
                if (k + 1 != nn) {
                    p += r * a(k + 2, j);
                    a(k + 2, j) -= p * z;
                }
                a(k + 1, j) -= p * y;
                a(k, j) -= p * x;
            }
            const int mmin = nn < k + 3 ? nn : k + 3;
            for (int i = l; i <= mmin; ++i) {
                p = x * a(i, k) + y * a(i, k + 1);
                if (k + 1 != nn) {
                    p += z * a(i, k + 2);
                    a(i, k + 2) -= p * r;
                }
                a(i, k + 1) -= p * q;
                a(i, k) -= p;
            }
        }
    }

    detail::sort_eigenvalues(out);
    return out;
}

/// Largest singular value by power iteration on A^T A (relative tolerance 1e-10, at most 1e4 iterations).
inline double spectral_norm(const Matrix& a) {
    if (a.rows() == 0 || a.cols() == 0) return 0.0;
    const Matrix ata = a.transpose() * a;
    const std::size_t n = ata.rows();
    Vector v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 0.5 / static_cast<double>(i + 1);
    Vector w(n);

    auto normalise = [](Vector& x) {
        double s = 0.0;
        for (double e : x) s += e * e;
        s = std::sqrt(s);
        if (s > 0.0)
            for (double& e : x) e /= s;
        return s;
    };
    normalise(v);

    double lambda = 0.0;
    constexpr int kMaxIter = 10000;
    for (int it = 0; it < kMaxIter; ++it) {
        multiply_into(ata, v, w);
        double next = 0.0;
        for (std::size_t i = 0; i < n; ++i) next += v[i] * w[i];
        const double len = normalise(w);
        if (len == 0.0) return 0.0;
        std::swap(v, w);
        if (it > 0 && std::abs(next - lambda) <= 1e-10 * std::abs(next)) return std::sqrt(std::max(next, 0.0));
        lambda = next;
    }
    throw ConvergenceError("spectral_norm: power iteration did not converge");
}

/// The 2d x 2d matrix of the deterministic Euler dynamics, [[0, A], [I/h, -I/h]].
inline Matrix build_B(const Matrix& a, double h) {
    detail::require_square(a, "build_B");
    if (!(h > 0.0) || !std::isfinite(h)) throw ParameterError("build_B: h must be positive, got " + std::to_string(h));
    const std::size_t d = a.rows();
    Matrix b(2 * d, 2 * d);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) b(i, d + j) = a(i, j);
        b(d + i, i) = 1.0 / h;
        b(d + i, d + i) = -1.0 / h;
    }
    return b;
}

}  // namespace stoch_euler
