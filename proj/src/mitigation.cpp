#include "qzeno/mitigation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

#include "qzeno/error.hpp"
#include "qzeno/io.hpp"

namespace qzeno {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kColumnTol = 1e-9;
constexpr unsigned kMaxFistaIterations = 50000;

MatrixXd to_eigen(const CalibrationMatrix& a) {
    const auto n = static_cast<Eigen::Index>(a.dim());
    MatrixXd m(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c) m(r, c) = a(r, c);
    return m;
}

VectorXd to_vector(std::span<const double> p, std::size_t dim) {
    if (p.size() != dim) throw InvalidArgument("distribution length does not match the calibration matrix");
    VectorXd v(static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < dim; ++i) v[static_cast<Eigen::Index>(i)] = p[i];
    return v;
}

std::vector<double> to_std(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

// Equality-constrained least squares on `support`; empty result if the KKT
// system is singular.
std::vector<double> solve_on_support(const MatrixXd& a, const VectorXd& p, const std::vector<Eigen::Index>& support) {
    const auto k = static_cast<Eigen::Index>(support.size());
    MatrixXd as(a.rows(), k);
    for (Eigen::Index j = 0; j < k; ++j) as.col(j) = a.col(support[j]);
    MatrixXd kkt = MatrixXd::Zero(k + 1, k + 1);
    kkt.topLeftCorner(k, k) = as.transpose() * as;
    kkt.block(0, k, k, 1).setOnes();
    kkt.block(k, 0, 1, k).setOnes();
    VectorXd rhs(k + 1);
    rhs.head(k) = as.transpose() * p;
    rhs[k] = 1.0;
    Eigen::FullPivLU<MatrixXd> lu(kkt);
    if (!lu.isInvertible()) return {};
    const VectorXd sol = lu.solve(rhs);
    std::vector<double> q(static_cast<std::size_t>(a.cols()), 0.0);
    for (Eigen::Index j = 0; j < k; ++j) q[static_cast<std::size_t>(support[j])] = sol[j];
    return q;
}

double objective(const MatrixXd& a, const VectorXd& p, std::span<const double> q) {
    return (a * to_vector(q, q.size()) - p).squaredNorm();
}

}  // namespace

CalibrationMatrix::CalibrationMatrix(unsigned n_qubits, std::vector<double> row_major, std::uint64_t shots)
    : m_(n_qubits), a_(std::move(row_major)), shots_(shots) {
    if (m_ == 0) throw InvalidArgument("calibration matrix needs at least one qubit");
    if (m_ > kMaxCalibrationQubits) {
        throw SizeLimitError("calibration over " + std::to_string(m_) + " qubits exceeds limit of " +
                             std::to_string(kMaxCalibrationQubits));
    }
    const std::size_t d = dim();
    if (a_.size() != d * d) throw InvalidArgument("calibration matrix must have 2^M x 2^M entries");
    for (std::size_t c = 0; c < d; ++c) {
        double sum = 0.0;
        for (std::size_t r = 0; r < d; ++r) {
            const double v = a_[r * d + c];
            if (!(v >= 0.0) || !std::isfinite(v)) {
                throw InvalidArgument("calibration column " + std::to_string(c) + " has a negative entry");
            }
            sum += v;
        }
        if (std::abs(sum - 1.0) > kColumnTol) {
            throw InvalidArgument("calibration column " + std::to_string(c) + " sums to " + format_real(sum));
        }
    }
}

std::vector<Circuit> build_calibration_circuits(unsigned m) {
    if (m > kMaxCalibrationQubits) {
        throw SizeLimitError("calibration over " + std::to_string(m) + " qubits exceeds limit of " +
                             std::to_string(kMaxCalibrationQubits));
    }
    std::vector<unsigned> qubits(m);
    std::iota(qubits.begin(), qubits.end(), 0u);
    return build_calibration_circuits(qubits, m);
}

std::vector<Circuit> build_calibration_circuits(std::span<const unsigned> qubits, unsigned n_device_qubits) {
    const auto m = static_cast<unsigned>(qubits.size());
    if (m == 0) throw InvalidArgument("calibration needs at least one qubit");
    if (m > kMaxCalibrationQubits) {
        throw SizeLimitError("calibration over " + std::to_string(m) + " qubits exceeds limit of " +
                             std::to_string(kMaxCalibrationQubits));
    }
    std::vector<Circuit> out;
    out.reserve(std::size_t{1} << m);
    for (std::size_t j = 0; j < (std::size_t{1} << m); ++j) {
        Circuit c(n_device_qubits, m);
        for (unsigned k = 0; k < m; ++k) {
            if ((j >> k) & 1u) c.append(Instruction::x(qubits[k]));
        }
        for (unsigned k = 0; k < m; ++k) c.append(Instruction::measure(qubits[k], k));
        out.push_back(std::move(c));
    }
    return out;
}

CalibrationMatrix assemble_matrix(std::span<const CountsHistogram> histograms) {
    const std::size_t d = histograms.size();
    if (d < 2 || (d & (d - 1)) != 0) throw InvalidArgument("assemble_matrix: need 2^M histograms");
    const auto m = static_cast<unsigned>(std::bit_width(d) - 1);
    const std::uint64_t shots = histograms[0].shots;
    std::vector<double> a(d * d, 0.0);
    for (std::size_t c = 0; c < d; ++c) {
        const CountsHistogram& h = histograms[c];
        if (h.n_bits != m) throw InvalidArgument("assemble_matrix: histogram " + std::to_string(c) + " has wrong width");
        if (h.shots != shots) throw InvalidArgument("assemble_matrix: inconsistent shot counts");
        const auto f = h.frequencies();
        for (std::size_t r = 0; r < d; ++r) a[r * d + c] = f[r];
    }
    return CalibrationMatrix(m, std::move(a), shots);
}

double condition_number(const CalibrationMatrix& a) {
    Eigen::JacobiSVD<MatrixXd> svd(to_eigen(a));
    const auto& s = svd.singularValues();
    const double smin = s[s.size() - 1];
    return smin > 0.0 ? s[0] / smin : std::numeric_limits<double>::infinity();
}

InverseMitigation mitigate_inverse(const CalibrationMatrix& a, std::span<const double> p_meas) {
    const MatrixXd m = to_eigen(a);
    const VectorXd p = to_vector(p_meas, a.dim());
    const double cond = condition_number(a);
    if (!(cond < 1e12)) throw DomainError("calibration matrix is singular (condition number " + format_real(cond) + ")");
    const VectorXd q = m.partialPivLu().solve(p);
    return {to_std(q), cond};
}

std::vector<double> project_to_simplex(std::span<const double> v) {
    if (v.empty()) throw InvalidArgument("project_to_simplex: empty vector");
    std::vector<double> u(v.begin(), v.end());
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumsum = 0.0, theta = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        cumsum += u[j];
        const double t = (cumsum - 1.0) / static_cast<double>(j + 1);
        if (u[j] - t > 0.0) theta = t;
    }
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(v[i] - theta, 0.0);
    return out;
}

ProbabilityDistribution mitigate_constrained(const CalibrationMatrix& a, std::span<const double> p_meas) {
    const MatrixXd m = to_eigen(a);
    const VectorXd p = to_vector(p_meas, a.dim());
    try {
        auto inv = mitigate_inverse(a, p_meas);
        if (*std::min_element(inv.quasi.begin(), inv.quasi.end()) >= 0.0) return inv.quasi;
    } catch (const DomainError&) {
        // Singular A: the projected solver below still applies.
    }

    const MatrixXd gram = m.transpose() * m;
    const VectorXd atp = m.transpose() * p;
    const double lipschitz = Eigen::JacobiSVD<MatrixXd>(m).singularValues()[0];
    const double step = 1.0 / (lipschitz * lipschitz);

    const std::size_t d = a.dim();
    std::vector<double> x = project_to_simplex(p_meas);
    std::vector<double> y = x;
    double t = 1.0;
    bool settled = false;
    for (unsigned it = 0; it < kMaxFistaIterations; ++it) {
        const VectorXd yv = to_vector(y, d);
        const VectorXd g = gram * yv - atp;
        std::vector<double> z(d);
        for (std::size_t i = 0; i < d; ++i) z[i] = y[i] - step * g[static_cast<Eigen::Index>(i)];
        std::vector<double> x_next = project_to_simplex(z);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        double delta = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            y[i] = x_next[i] + ((t - 1.0) / t_next) * (x_next[i] - x[i]);
            delta = std::max(delta, std::abs(x_next[i] - x[i]));
        }
        x = std::move(x_next);
        t = t_next;
        if (delta < 1e-15) {
            settled = true;
            break;
        }
    }

    // Active-set polish: solve exactly on the support, growing it while the
    // KKT sign condition fails off-support.
    std::vector<Eigen::Index> support;
    for (std::size_t i = 0; i < d; ++i) {
        if (x[i] > 1e-10) support.push_back(static_cast<Eigen::Index>(i));
    }
    for (std::size_t round = 0; round < d && !support.empty(); ++round) {
        std::vector<double> q = solve_on_support(m, p, support);
        if (q.empty() || *std::min_element(q.begin(), q.end()) < 0.0) break;
        const VectorXd g = gram * to_vector(q, d) - atp;
        const double level = g[support.front()];
        Eigen::Index worst = -1;
        double worst_gap = -1e-12;
        for (std::size_t i = 0; i < d; ++i) {
            if (q[i] > 0.0 || std::find(support.begin(), support.end(), static_cast<Eigen::Index>(i)) != support.end()) {
                continue;
            }
            const double gap = g[static_cast<Eigen::Index>(i)] - level;
            if (gap < worst_gap) {
                worst_gap = gap;
                worst = static_cast<Eigen::Index>(i);
            }
        }
        if (worst < 0) {
            if (objective(m, p, q) <= objective(m, p, x) + 1e-15) return q;
            break;
        }
        support.push_back(worst);
        std::sort(support.begin(), support.end());
    }
    if (!settled) throw ConvergenceError("mitigate_constrained: projected gradient did not settle");
    return x;
}

FidelityResult fidelity(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw InvalidArgument("fidelity: length mismatch");
    if (p.empty()) throw InvalidArgument("fidelity: empty distributions");
    FidelityResult out;
    auto clean = [&](std::span<const double> v) {
        std::vector<double> c(v.begin(), v.end());
        double sum = 0.0;
        for (double& x : c) {
            if (!std::isfinite(x)) throw InvalidArgument("fidelity: non-finite entry");
            if (x < 0.0) {
                x = 0.0;
                out.clipped = true;
            }
            sum += x;
        }
        if (!(sum > 0.0)) throw InvalidArgument("fidelity: distribution has no positive mass");
        if (out.clipped) {
            for (double& x : c) x /= sum;
        }
        return c;
    };
    const auto pc = clean(p);
    const auto qc = clean(q);
    double bc = 0.0;
    for (std::size_t i = 0; i < pc.size(); ++i) bc += std::sqrt(pc[i] * qc[i]);
    out.value = std::clamp(bc * bc, 0.0, 1.0);
    return out;
}

std::string calibration_csv(const CalibrationMatrix& a) {
    std::ostringstream out;
    out << "# qzeno.calibration/1 M=" << a.n_qubits() << " shots=" << a.shots() << '\n';
    for (std::size_t r = 0; r < a.dim(); ++r) {
        for (std::size_t c = 0; c < a.dim(); ++c) out << (c ? "," : "") << format_real(a(r, c));
        out << '\n';
    }
    return out.str();
}

CalibrationMatrix calibration_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("", "empty calibration file");
    unsigned m = 0;
    unsigned long long shots = 0;
    if (std::sscanf(line.c_str(), "# qzeno.calibration/1 M=%u shots=%llu", &m, &shots) != 2) {
        throw ValidationError("header", "expected '# qzeno.calibration/1 M=<m> shots=<n>'");
    }
    if (m == 0 || m > kMaxCalibrationQubits) throw ValidationError("header", "M out of range");
    const std::size_t d = std::size_t{1} << m;
    std::vector<double> a;
    a.reserve(d * d);
    for (std::size_t r = 0; r < d; ++r) {
        if (!std::getline(in, line)) throw ValidationError("row " + std::to_string(r), "missing row");
        std::istringstream row(line);
        std::string cell;
        std::size_t cols = 0;
        while (std::getline(row, cell, ',')) {
            try {
                a.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ValidationError("row " + std::to_string(r), "bad number '" + cell + "'");
            }
            ++cols;
        }
        if (cols != d) throw ValidationError("row " + std::to_string(r), "expected " + std::to_string(d) + " columns");
    }
    try {
        return CalibrationMatrix(m, std::move(a), shots);
    } catch (const InvalidArgument& e) {
        throw ValidationError("matrix", e.what());
    }
}

}  // namespace qzeno
