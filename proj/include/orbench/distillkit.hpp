#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

namespace orbench::distill {

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
    std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }
    const std::vector<double>& values() const { return values_; }

    static Matrix identity(std::size_t n);
    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

/// Logit matrices need finite entries and at least two columns.
void validate_logits(const Matrix& z, const char* name);

/// softmax(z / T) with max subtraction. Throws UsageError when T <= 0 or not finite.
std::vector<double> softmax_t(std::span<const double> z, double temperature);
std::vector<double> log_softmax_t(std::span<const double> z, double temperature);

/// KL(p || q) in nats. Terms with p(i) = 0 contribute 0; p(i) > 0 with
/// q(i) <= floor gives +infinity unless floor > 0, in which case q is clamped
/// up to floor.
double kl_div(std::span<const double> p, std::span<const double> q, double floor = 0.0);

/// Mean over rows of KL(softmax(z_t/T) || softmax(z_s/T)) * T^2.
double distill_loss(const Matrix& z_teacher, const Matrix& z_student, double temperature);

/// d distill_loss / d z_student = T * (softmax(z_s/T) - softmax(z_t/T)) / rows.
Matrix distill_loss_grad(const Matrix& z_teacher, const Matrix& z_student, double temperature);

/// Top-left rows x cols block of w. Throws UsageError when out of range or zero.
Matrix crop_weights(const Matrix& w, std::size_t rows, std::size_t cols);

struct Stage {
    std::size_t layers = 0;
    std::size_t hidden = 0;
    friend bool operator==(const Stage&, const Stage&) = default;
};

/// Teacher first, each later stage no larger than its predecessor in either
/// field. Layer counts are recorded only; which layers survive is not modelled.
struct ShrinkSchedule {
    std::vector<Stage> stages;
};

ShrinkSchedule shrink_plan(Stage teacher, std::span<const Stage> targets);

/// Hidden x hidden weights for every stage, each cropped from the previous stage.
std::vector<Matrix> apply_schedule(const Matrix& teacher_weights, const ShrinkSchedule& schedule);

// Text form: "rows cols" header line, then one whitespace-separated row per line.
void write_matrix(std::ostream& out, const Matrix& m);
Matrix read_matrix(std::istream& in);
void save_matrix(const std::filesystem::path& path, const Matrix& m);
Matrix load_matrix(const std::filesystem::path& path);

} // namespace orbench::distill
