#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "regime/csv.hpp"
#include "regime/date.hpp"
#include "regime/error.hpp"

namespace regime {

/// Date-indexed T x S matrix of fractional day-on-day changes. Missing cells
/// are stored as quiet NaN until imputation removes them.
class Panel {
public:
    Panel() = default;

    Panel(std::vector<Date> dates, Eigen::MatrixXd values, std::vector<std::string> names)
        : dates_(std::move(dates)), values_(std::move(values)), names_(std::move(names)) {
        if (static_cast<Eigen::Index>(dates_.size()) != values_.rows()) {
            throw data_error("ShapeMismatch", "date count does not match row count");
        }
        if (static_cast<Eigen::Index>(names_.size()) != values_.cols()) {
            throw data_error("ShapeMismatch", "name count does not match column count");
        }
        for (std::size_t i = 1; i < dates_.size(); ++i) {
            if (dates_[i] == dates_[i - 1]) throw data_error("DuplicateDate", dates_[i].to_string());
            if (dates_[i] < dates_[i - 1]) throw data_error("UnsortedDates", dates_[i].to_string());
        }
        std::set<std::string> seen;
        for (const auto& n : names_) {
            if (!seen.insert(n).second) throw data_error("DuplicateColumn", n);
        }
    }

    const std::vector<Date>& dates() const { return dates_; }
    const Eigen::MatrixXd& values() const { return values_; }
    const std::vector<std::string>& names() const { return names_; }
    Eigen::Index rows() const { return values_.rows(); }
    Eigen::Index cols() const { return values_.cols(); }

    std::size_t missing_count() const {
        return static_cast<std::size_t>(values_.array().isNaN().count());
    }

    static constexpr double missing() { return std::numeric_limits<double>::quiet_NaN(); }

    friend bool operator==(const Panel& a, const Panel& b) {
        if (a.dates_ != b.dates_ || a.names_ != b.names_) return false;
        if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            for (Eigen::Index j = 0; j < a.cols(); ++j) {
                double x = a.values_(i, j);
                double y = b.values_(i, j);
                if (!(x == y || (std::isnan(x) && std::isnan(y)))) return false;
            }
        }
        return true;
    }

private:
    std::vector<Date> dates_;
    Eigen::MatrixXd values_;
    std::vector<std::string> names_;
};

struct SplitPanel {
    Panel train;
    Panel test;
    Date split_date;
};

struct Standardizer {
    std::vector<std::string> names;
    Eigen::VectorXd means;
    Eigen::VectorXd stds;
};

enum class LeadingMissingPolicy { Error, FillZero };

/// Reads a panel CSV. Rows come back sorted by date; empty cells become missing.
inline Panel load_panel(const std::filesystem::path& path, const std::string& date_column = "date") {
    auto rows = csv::read_file(path);
    if (rows.empty()) throw data_error("EmptyFile", path.string());
    const auto& header = rows.front();
    auto date_it = std::find(header.begin(), header.end(), date_column);
    if (date_it == header.end()) {
        throw data_error("MissingDateColumn", "no column '" + date_column + "' in " + path.string());
    }
    const auto date_idx = static_cast<std::size_t>(date_it - header.begin());

    std::vector<std::string> names;
    std::set<std::string> seen;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (j == date_idx) continue;
        if (!seen.insert(header[j]).second) throw data_error("DuplicateColumn", header[j]);
        names.push_back(header[j]);
    }

    const std::size_t n = rows.size() - 1;
    std::vector<Date> dates(n);
    Eigen::MatrixXd raw(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(names.size()));
    for (std::size_t i = 0; i < n; ++i) {
        const auto& r = rows[i + 1];
        if (r.size() != header.size()) {
            throw data_error("RaggedRow", "line " + std::to_string(i + 2) + " has " + std::to_string(r.size()) +
                                              " fields, expected " + std::to_string(header.size()));
        }
        dates[i] = Date::parse(r[date_idx]);
        Eigen::Index col = 0;
        for (std::size_t j = 0; j < r.size(); ++j) {
            if (j == date_idx) continue;
            raw(static_cast<Eigen::Index>(i), col++) =
                r[j].empty() ? Panel::missing() : csv::parse_double(r[j], "line " + std::to_string(i + 2));
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return dates[a] < dates[b]; });
    std::vector<Date> sorted_dates(n);
    Eigen::MatrixXd values(raw.rows(), raw.cols());
    for (std::size_t i = 0; i < n; ++i) {
        sorted_dates[i] = dates[order[i]];
        values.row(static_cast<Eigen::Index>(i)) = raw.row(static_cast<Eigen::Index>(order[i]));
        if (i > 0 && sorted_dates[i] == sorted_dates[i - 1]) {
            throw data_error("DuplicateDate", sorted_dates[i].to_string());
        }
    }
    return Panel(std::move(sorted_dates), std::move(values), std::move(names));
}

inline void write_panel(const Panel& panel, const std::filesystem::path& path, const std::string& date_column = "date") {
    csv::Writer w(path);
    csv::Row header{date_column};
    header.insert(header.end(), panel.names().begin(), panel.names().end());
    w.row(header);
    for (Eigen::Index i = 0; i < panel.rows(); ++i) {
        csv::Row r{panel.dates()[static_cast<std::size_t>(i)].to_string()};
        for (Eigen::Index j = 0; j < panel.cols(); ++j) {
            double v = panel.values()(i, j);
            r.push_back(std::isnan(v) ? std::string() : csv::format_double(v));
        }
        w.row(r);
    }
}

/// Replaces each missing cell with the latest observed value in its column.
inline Panel impute_forward(const Panel& panel, LeadingMissingPolicy policy = LeadingMissingPolicy::Error) {
    Eigen::MatrixXd v = panel.values();
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
        if (v.col(j).array().isNaN().all()) throw data_error("ColumnAllMissing", panel.names()[static_cast<std::size_t>(j)]);
        bool observed = false;
        double last = 0.0;
        for (Eigen::Index i = 0; i < v.rows(); ++i) {
            double& cell = v(i, j);
            if (!std::isnan(cell)) {
                observed = true;
                last = cell;
            } else if (observed) {
                cell = last;
            } else if (policy == LeadingMissingPolicy::FillZero) {
                cell = 0.0;
            } else {
                throw data_error("LeadingMissing", "column '" + panel.names()[static_cast<std::size_t>(j)] +
                                                       "' is missing on " + panel.dates()[static_cast<std::size_t>(i)].to_string() +
                                                       " before its first observation");
            }
        }
    }
    return Panel(panel.dates(), std::move(v), panel.names());
}

inline Panel slice_rows(const Panel& panel, Eigen::Index begin, Eigen::Index end) {
    std::vector<Date> dates(panel.dates().begin() + begin, panel.dates().begin() + end);
    Eigen::MatrixXd v = panel.values().middleRows(begin, end - begin);
    return Panel(std::move(dates), std::move(v), panel.names());
}

/// Train holds rows dated on or before `split_date`; test holds the rest.
inline SplitPanel split_at(const Panel& panel, Date split_date) {
    const auto& d = panel.dates();
    auto cut = static_cast<Eigen::Index>(std::upper_bound(d.begin(), d.end(), split_date) - d.begin());
    if (cut == 0 || cut == panel.rows()) {
        throw data_error("EmptySide", "split at " + split_date.to_string() + " leaves " +
                                          (cut == 0 ? "train" : "test") + " empty");
    }
    return {slice_rows(panel, 0, cut), slice_rows(panel, cut, panel.rows()), split_date};
}

/// Stacks panels with identical columns whose dates do not overlap.
inline Panel concat_rows(const Panel& first, const Panel& second) {
    if (first.names() != second.names()) throw data_error("ColumnMismatch", "cannot concatenate panels");
    std::vector<Date> dates = first.dates();
    dates.insert(dates.end(), second.dates().begin(), second.dates().end());
    Eigen::MatrixXd v(first.rows() + second.rows(), first.cols());
    v << first.values(), second.values();
    return Panel(std::move(dates), std::move(v), first.names());
}

/// Per-column mean and sample (n-1) standard deviation.
inline Standardizer fit_standardizer(const Panel& panel) {
    if (panel.missing_count() > 0) throw data_error("MissingValues", "standardizer requires an imputed panel");
    if (panel.rows() < 2) throw data_error("TooFewRows", "standardizer needs at least two rows");
    Standardizer s{panel.names(), panel.values().colwise().mean().transpose(), Eigen::VectorXd(panel.cols())};
    const double denom = static_cast<double>(panel.rows() - 1);
    for (Eigen::Index j = 0; j < panel.cols(); ++j) {
        double ss = (panel.values().col(j).array() - s.means(j)).square().sum();
        s.stds(j) = std::sqrt(ss / denom);
        if (!(s.stds(j) > 0.0)) throw data_error("ZeroVariance", "column '" + panel.names()[static_cast<std::size_t>(j)] + "'");
    }
    return s;
}

inline void check_columns(const std::vector<std::string>& expected, const std::vector<std::string>& got) {
    if (expected != got) {
        throw data_error("ColumnMismatch", "expected " + std::to_string(expected.size()) + " columns in fit order, got " +
                                               std::to_string(got.size()));
    }
}

inline Panel apply_standardizer(const Standardizer& s, const Panel& panel) {
    check_columns(s.names, panel.names());
    Eigen::MatrixXd v = (panel.values().rowwise() - s.means.transpose()).array().rowwise() / s.stds.transpose().array();
    return Panel(panel.dates(), std::move(v), panel.names());
}

inline Panel invert_standardizer(const Standardizer& s, const Panel& panel) {
    check_columns(s.names, panel.names());
    Eigen::MatrixXd v = (panel.values().array().rowwise() * s.stds.transpose().array()).matrix().rowwise() + s.means.transpose();
    return Panel(panel.dates(), std::move(v), panel.names());
}

}  // namespace regime
