#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ramses {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// A named real-valued series of T timesteps x d features, with optional
// binary per-timestep labels (1 = anomalous). Row order is time order.
struct TimeSeries {
    std::string name;
    Matrix values;            // T x d
    std::vector<int> labels;  // empty = unlabeled, else length T with 0/1

    Eigen::Index length() const { return values.rows(); }
    Eigen::Index dim() const { return values.cols(); }
    bool labeled() const { return !labels.empty(); }

    void validate() const {
        if (values.rows() < 1 || values.cols() < 1)
            throw std::invalid_argument("TimeSeries: need T >= 1 and d >= 1");
        if (!values.allFinite())
            throw std::invalid_argument("TimeSeries: non-finite value");
        if (!labels.empty()) {
            if (static_cast<Eigen::Index>(labels.size()) != values.rows())
                throw std::invalid_argument("TimeSeries: label length != T");
            for (int l : labels)
                if (l != 0 && l != 1)
                    throw std::invalid_argument("TimeSeries: label outside {0,1}");
        }
    }
};

struct WindowSpec {
    std::size_t width = 1;
    std::size_t stride = 1;

    void validate() const {
        if (width < 1 || stride < 1)
            throw std::invalid_argument("WindowSpec: width and stride must be >= 1");
    }
};

struct SplitSpec {
    double offline_fraction = 0.8;

    void validate() const {
        if (!(offline_fraction > 0.0 && offline_fraction < 1.0))
            throw std::invalid_argument("SplitSpec: offline_fraction must be in (0,1)");
    }
};

// A window is a view onto [start, start + width) rows of a series.
struct Window {
    std::size_t start = 0;
    std::size_t width = 0;

    Eigen::Block<const Matrix> rows(const Matrix& values) const {
        return values.block(static_cast<Eigen::Index>(start), 0,
                            static_cast<Eigen::Index>(width), values.cols());
    }
};

// An ordered list of detector ids, best first, with optional per-id scores.
struct Ranking {
    std::vector<std::string> ids;
    std::vector<double> scores;  // empty or parallel to ids

    void validate() const {
        if (!scores.empty() && scores.size() != ids.size())
            throw std::invalid_argument("Ranking: scores not parallel to ids");
        for (std::size_t i = 0; i < ids.size(); ++i)
            for (std::size_t j = i + 1; j < ids.size(); ++j)
                if (ids[i] == ids[j])
                    throw std::invalid_argument("Ranking: duplicate id " + ids[i]);
    }
};

}  // namespace ramses
