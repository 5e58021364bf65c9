#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace itr {

enum class Population { Source, Target };

enum class PopulationFilter { Source, Target, All };

std::string_view to_string(Population pop);
std::string_view to_string(PopulationFilter filter);
Population parse_population(std::string_view text);
PopulationFilter parse_population_filter(std::string_view text);

struct PatientRecord {
    std::string id;
    Eigen::VectorXd covariates;
    std::optional<int> treatment;   // 1 = treated, 0 = control
    std::optional<double> outcome;  // larger is better
    Population population = Population::Source;
};

// Immutable collection of records sharing one covariate layout.
class Dataset {
public:
    Dataset() = default;
    Dataset(std::vector<std::string> covariate_names, std::vector<PatientRecord> records);

    const std::vector<PatientRecord>& records() const { return records_; }
    const std::vector<std::string>& covariate_names() const { return covariate_names_; }
    std::size_t p() const { return covariate_names_.size(); }
    std::size_t size() const { return records_.size(); }
    std::size_t n_source() const { return n_source_; }
    std::size_t n_target() const { return n_target_; }
    bool empty() const { return records_.empty(); }

    // Number of rows discarded by drop-incomplete ingestion.
    std::size_t dropped_rows() const { return dropped_rows_; }
    void set_dropped_rows(std::size_t n) { dropped_rows_ = n; }

    Dataset subset(PopulationFilter filter) const;
    Eigen::MatrixXd covariate_matrix(PopulationFilter filter = PopulationFilter::All) const;
    std::vector<std::string> ids(PopulationFilter filter = PopulationFilter::All) const;

    // Concatenates records; covariate names must agree.
    static Dataset merge(const Dataset& a, const Dataset& b);

private:
    std::vector<std::string> covariate_names_;
    std::vector<PatientRecord> records_;
    std::size_t n_source_ = 0;
    std::size_t n_target_ = 0;
    std::size_t dropped_rows_ = 0;
};

// Dense arrays for the source units used in estimation.
struct SourceArrays {
    std::vector<std::string> ids;
    std::vector<std::string> covariate_names;
    Eigen::MatrixXd X;
    Eigen::VectorXd A;
    Eigen::VectorXd Y;

    std::size_t n() const { return static_cast<std::size_t>(X.rows()); }
};

// Extracts source rows; every one must carry treatment and outcome.
SourceArrays source_arrays(const Dataset& ds);

struct CsvSchema {
    std::string id_column = "id";
    std::string treatment_column = "treatment";
    std::string outcome_column = "outcome";
    std::string population_column = "population";
    // Empty means every non-reserved column is a covariate.
    std::vector<std::string> covariates;
    // Role of rows when the population column is absent.
    Population default_population = Population::Source;
    bool require_treatment = false;
    bool require_outcome = false;
    bool drop_incomplete = false;
};

Dataset load_dataset(const std::filesystem::path& path, const CsvSchema& schema = {});
Dataset parse_dataset(std::string_view csv_text, const CsvSchema& schema = {},
                      std::string_view source_name = "<memory>");

// Writes id, covariates, treatment, outcome, population with round-trip precision.
void write_dataset(const Dataset& ds, const std::filesystem::path& path);
std::string format_dataset(const Dataset& ds);

// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

struct ValidationReport {
    std::size_t n_source = 0;
    std::size_t n_target = 0;
    std::size_t n_source_treated = 0;
    std::size_t n_source_control = 0;
    std::size_t missing_treatment = 0;  // source rows only
    std::size_t missing_outcome = 0;    // source rows only
    std::vector<std::string> constant_columns;
    std::vector<std::string> issues;

    bool ok() const { return issues.empty(); }
};

ValidationReport validate(const Dataset& ds);

struct CovariateSummary {
    std::vector<std::string> names;
    Eigen::VectorXd mean;
    Eigen::VectorXd sd;  // divisor n - 1
    std::size_t n = 0;

    std::optional<std::size_t> index_of(std::string_view name) const;
};

CovariateSummary covariate_summary(const Dataset& ds, PopulationFilter filter);
CovariateSummary covariate_summary(const Eigen::MatrixXd& X, std::vector<std::string> names);

} // namespace itr
