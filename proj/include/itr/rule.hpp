#pragma once

#include "itr/data_model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace itr {

using Assignment = std::vector<std::uint8_t>;

// Linear individualized treatment rule: treat iff eta . [x, 1] > 0.
// eta holds the p covariate coefficients followed by the intercept.
class LinearItr {
public:
    LinearItr(Eigen::VectorXd eta, std::vector<std::string> covariate_names);

    static LinearItr treat_all(std::vector<std::string> covariate_names);
    static LinearItr treat_none(std::vector<std::string> covariate_names);

    const Eigen::VectorXd& eta() const { return eta_; }
    const std::vector<std::string>& covariate_names() const { return names_; }
    std::size_t p() const { return names_.size(); }
    Eigen::VectorXd coefficients() const { return eta_.head(eta_.size() - 1); }
    double intercept() const { return eta_(eta_.size() - 1); }

    // Scaled to max-norm one; equal canonical forms induce equal assignments.
    LinearItr canonical() const;
    LinearItr scaled(double c) const;

    Eigen::VectorXd scores(const Eigen::MatrixXd& X) const;

private:
    Eigen::VectorXd eta_;
    std::vector<std::string> names_;
};

// Boundary scores (exactly zero) are assigned to control.
Assignment apply_itr(const LinearItr& rule, const Eigen::MatrixXd& X);
// Checks covariate names against the dataset's column order first.
Assignment apply_itr(const LinearItr& rule, const Dataset& ds, PopulationFilter filter = PopulationFilter::All);

// "0 < -0.3933*Glucose + 0.6507*BloodUreaNitrogen + ... + 0.1634"
std::string inequality_string(const LinearItr& rule, int precision = 4);

struct ImportanceEntry {
    std::string name;
    double coefficient = 0.0;
    double sd = 0.0;
    double adjusted = 0.0;  // coefficient * sd
};

// Ranked by |coefficient * sd| descending; ties keep covariate order.
std::vector<ImportanceEntry> covariate_importance(const LinearItr& rule, const CovariateSummary& summary);

} // namespace itr
