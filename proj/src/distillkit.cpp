#include "orbench/distillkit.hpp"

#include "orbench/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

namespace orbench::distill {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill) : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows * cols) {
        throw UsageError(fmt::format("matrix {}x{} needs {} values, got {}", rows, cols, rows * cols, values_.size()));
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

void validate_logits(const Matrix& z, const char* name) {
    if (z.cols() < 2) throw UsageError(fmt::format("{}: logits need at least 2 columns", name));
    for (double v : z.values()) {
        if (!std::isfinite(v)) throw UsageError(fmt::format("{}: logits must be finite", name));
    }
}

namespace {

void check_temperature(double t) {
    if (!(t > 0.0) || !std::isfinite(t)) throw UsageError(fmt::format("temperature must be positive and finite, got {}", t));
}

void check_pair(const Matrix& zt, const Matrix& zs, double t) {
    check_temperature(t);
    if (zt.rows() != zs.rows() || zt.cols() != zs.cols()) {
        throw UsageError(fmt::format("logit shapes differ: {}x{} vs {}x{}", zt.rows(), zt.cols(), zs.rows(), zs.cols()));
    }
    if (zt.rows() == 0) throw UsageError("logit matrices have no rows");
    validate_logits(zt, "teacher");
    validate_logits(zs, "student");
}

} // namespace

std::vector<double> log_softmax_t(std::span<const double> z, double temperature) {
    check_temperature(temperature);
    if (z.empty()) return {};
    const double top = *std::max_element(z.begin(), z.end()) / temperature;
    double sum = 0.0;
    for (double v : z) sum += std::exp(v / temperature - top);
    const double log_norm = top + std::log(sum);
    std::vector<double> out(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] / temperature - log_norm;
    return out;
}

std::vector<double> softmax_t(std::span<const double> z, double temperature) {
    check_temperature(temperature);
    if (z.empty()) return {};
    const double top = *std::max_element(z.begin(), z.end()) / temperature;
    std::vector<double> out(z.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        out[i] = std::exp(z[i] / temperature - top);
        sum += out[i];
    }
    for (auto& v : out) v /= sum;
    return out;
}

double kl_div(std::span<const double> p, std::span<const double> q, double floor) {
    if (p.size() != q.size()) throw UsageError("kl_div: distributions differ in length");
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        const double qi = floor > 0.0 ? std::max(q[i], floor) : q[i];
        if (qi <= 0.0) return std::numeric_limits<double>::infinity();
        total += p[i] * std::log(p[i] / qi);
    }
    return std::max(0.0, total);
}

double distill_loss(const Matrix& zt, const Matrix& zs, double temperature) {
    check_pair(zt, zs, temperature);
    double total = 0.0;
    for (std::size_t r = 0; r < zt.rows(); ++r) {
        const auto lp = log_softmax_t(zt.row(r), temperature);
        const auto lq = log_softmax_t(zs.row(r), temperature);
        double kl = 0.0;
        for (std::size_t i = 0; i < lp.size(); ++i) kl += std::exp(lp[i]) * (lp[i] - lq[i]);
        total += std::max(0.0, kl);
    }
    return total / static_cast<double>(zt.rows()) * temperature * temperature;
}

Matrix distill_loss_grad(const Matrix& zt, const Matrix& zs, double temperature) {
    check_pair(zt, zs, temperature);
    Matrix g(zt.rows(), zt.cols());
    const double scale = temperature / static_cast<double>(zt.rows());
    for (std::size_t r = 0; r < zt.rows(); ++r) {
        const auto p = softmax_t(zt.row(r), temperature);
        const auto q = softmax_t(zs.row(r), temperature);
        for (std::size_t i = 0; i < p.size(); ++i) g(r, i) = scale * (q[i] - p[i]);
    }
    return g;
}

Matrix crop_weights(const Matrix& w, std::size_t rows, std::size_t cols) {
    if (rows == 0 || cols == 0 || rows > w.rows() || cols > w.cols()) {
        throw UsageError(fmt::format("cannot crop {}x{} to {}x{}", w.rows(), w.cols(), rows, cols));
    }
    Matrix out(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        std::copy_n(w.row(r).begin(), cols, out.row(r).begin());
    }
    return out;
}

ShrinkSchedule shrink_plan(Stage teacher, std::span<const Stage> targets) {
    if (teacher.layers == 0 || teacher.hidden == 0) throw UsageError("teacher dimensions must be positive");
    ShrinkSchedule s;
    s.stages.push_back(teacher);
    for (const auto& t : targets) {
        const auto& prev = s.stages.back();
        if (t.layers == 0 || t.hidden == 0) throw UsageError("stage dimensions must be positive");
        if (t.layers > prev.layers || t.hidden > prev.hidden) {
            throw UsageError(fmt::format("stage ({},{}) grows past its predecessor ({},{})", t.layers, t.hidden,
                                         prev.layers, prev.hidden));
        }
        s.stages.push_back(t);
    }
    return s;
}

std::vector<Matrix> apply_schedule(const Matrix& teacher_weights, const ShrinkSchedule& schedule) {
    if (schedule.stages.empty()) throw UsageError("empty schedule");
    std::vector<Matrix> out;
    const Matrix* prev = &teacher_weights;
    for (const auto& st : schedule.stages) {
        out.push_back(crop_weights(*prev, std::min(st.hidden, prev->rows()), std::min(st.hidden, prev->cols())));
        prev = &out.back();
    }
    return out;
}

void write_matrix(std::ostream& out, const Matrix& m) {
    out << m.rows() << ' ' << m.cols() << '\n';
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            if (c) out << ' ';
            out << fmt::format("{:.17g}", m(r, c));
        }
        out << '\n';
    }
}

Matrix read_matrix(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    auto next_line = [&]() -> bool {
        while (std::getline(in, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
        }
        return false;
    };
    if (!next_line()) throw ParseError(1, "missing matrix header");
    std::istringstream header(line);
    long long rows = -1, cols = -1;
    std::string extra;
    if (!(header >> rows >> cols) || rows < 0 || cols < 0 || (header >> extra)) {
        throw ParseError(line_no, "header must be 'rows cols'");
    }
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(rows * cols));
    for (long long r = 0; r < rows; ++r) {
        if (!next_line()) throw ParseError(line_no + 1, fmt::format("expected {} rows, got {}", rows, r));
        std::istringstream row(line);
        std::string tok;
        long long n = 0;
        while (row >> tok) {
            char* end = nullptr;
            const double v = std::strtod(tok.c_str(), &end);
            if (end == tok.c_str() || *end != '\0') throw ParseError(line_no, "not a number: '" + tok + "'");
            values.push_back(v);
            ++n;
        }
        if (n != cols) throw ParseError(line_no, fmt::format("expected {} values, got {}", cols, n));
    }
    return Matrix(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols), std::move(values));
}

void save_matrix(const std::filesystem::path& path, const Matrix& m) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write matrix file '" + path.string() + "'");
    write_matrix(out, m);
    out.close();
    if (out.fail()) throw IoError("write failed for '" + path.string() + "'");
}

Matrix load_matrix(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open matrix file '" + path.string() + "'");
    return read_matrix(in);
}

} // namespace orbench::distill
