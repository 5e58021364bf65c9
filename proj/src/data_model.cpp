#include "itr/data_model.hpp"
#include "itr/error.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <unordered_map>

namespace itr {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

bool is_missing(std::string_view cell) {
    static constexpr std::array<std::string_view, 6> tokens = {"", "NA", "na", "NaN", "nan", "null"};
    return std::find(tokens.begin(), tokens.end(), cell) != tokens.end();
}

// Splits one CSV line; double quotes may wrap a field and "" escapes a quote.
std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back(trim(field));
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    fields.emplace_back(trim(field));
    return fields;
}

std::optional<double> parse_number(std::string_view cell) {
    if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(value)) {
        return std::nullopt;
    }
    return value;
}

std::string cell_error(std::string_view source, std::size_t line, std::string_view column,
                       std::string_view what) {
    std::ostringstream os;
    os << source << ": row " << line << ", column '" << column << "': " << what;
    return os.str();
}

} // namespace

std::string_view to_string(Population pop) {
    return pop == Population::Source ? "source" : "target";
}

std::string_view to_string(PopulationFilter filter) {
    switch (filter) {
    case PopulationFilter::Source: return "source";
    case PopulationFilter::Target: return "target";
    case PopulationFilter::All: return "all";
    }
    return "all";
}

Population parse_population(std::string_view text) {
    auto s = lower(trim(text));
    if (s == "source") return Population::Source;
    if (s == "target") return Population::Target;
    throw InputError("population must be 'source' or 'target', got '" + std::string(text) + "'");
}

PopulationFilter parse_population_filter(std::string_view text) {
    auto s = lower(trim(text));
    if (s == "all") return PopulationFilter::All;
    return parse_population(s) == Population::Source ? PopulationFilter::Source
                                                     : PopulationFilter::Target;
}

static bool matches(const PatientRecord& r, PopulationFilter filter) {
    switch (filter) {
    case PopulationFilter::Source: return r.population == Population::Source;
    case PopulationFilter::Target: return r.population == Population::Target;
    case PopulationFilter::All: return true;
    }
    return true;
}

Dataset::Dataset(std::vector<std::string> covariate_names, std::vector<PatientRecord> records)
    : covariate_names_(std::move(covariate_names)), records_(std::move(records)) {
    std::set<std::string> seen;
    for (const auto& name : covariate_names_) {
        if (!seen.insert(name).second) {
            throw InputError("duplicate covariate name '" + name + "'");
        }
    }
    const auto p = static_cast<Eigen::Index>(covariate_names_.size());
    for (const auto& r : records_) {
        if (r.covariates.size() != p) {
            throw InputError("record '" + r.id + "' has " + std::to_string(r.covariates.size()) +
                             " covariates, expected " + std::to_string(p));
        }
        if (r.treatment && *r.treatment != 0 && *r.treatment != 1) {
            throw InputError("record '" + r.id + "' has treatment outside {0,1}");
        }
        (r.population == Population::Source ? n_source_ : n_target_)++;
    }
}

Dataset Dataset::subset(PopulationFilter filter) const {
    std::vector<PatientRecord> kept;
    for (const auto& r : records_) {
        if (matches(r, filter)) kept.push_back(r);
    }
    return Dataset(covariate_names_, std::move(kept));
}

Eigen::MatrixXd Dataset::covariate_matrix(PopulationFilter filter) const {
    std::size_t n = 0;
    for (const auto& r : records_) n += matches(r, filter) ? 1 : 0;
    Eigen::MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p()));
    Eigen::Index row = 0;
    for (const auto& r : records_) {
        if (matches(r, filter)) X.row(row++) = r.covariates.transpose();
    }
    return X;
}

std::vector<std::string> Dataset::ids(PopulationFilter filter) const {
    std::vector<std::string> out;
    for (const auto& r : records_) {
        if (matches(r, filter)) out.push_back(r.id);
    }
    return out;
}

Dataset Dataset::merge(const Dataset& a, const Dataset& b) {
    if (a.covariate_names() != b.covariate_names()) {
        throw InputError("cannot merge datasets with different covariate columns");
    }
    auto records = a.records();
    records.insert(records.end(), b.records().begin(), b.records().end());
    Dataset out(a.covariate_names(), std::move(records));
    out.set_dropped_rows(a.dropped_rows() + b.dropped_rows());
    return out;
}

SourceArrays source_arrays(const Dataset& ds) {
    SourceArrays out;
    out.covariate_names = ds.covariate_names();
    const auto n = static_cast<Eigen::Index>(ds.n_source());
    out.X.resize(n, static_cast<Eigen::Index>(ds.p()));
    out.A.resize(n);
    out.Y.resize(n);
    Eigen::Index i = 0;
    for (const auto& r : ds.records()) {
        if (r.population != Population::Source) continue;
        if (!r.treatment) throw InputError("source record '" + r.id + "' has no treatment value");
        if (!r.outcome) throw InputError("source record '" + r.id + "' has no outcome value");
        out.ids.push_back(r.id);
        out.X.row(i) = r.covariates.transpose();
        out.A(i) = *r.treatment;
        out.Y(i) = *r.outcome;
        ++i;
    }
    return out;
}

Dataset parse_dataset(std::string_view text, const CsvSchema& schema, std::string_view source_name) {
    std::vector<std::string_view> lines;
    while (!text.empty()) {
        auto pos = text.find('\n');
        auto line = text.substr(0, pos);
        if (!trim(line).empty()) lines.push_back(line);
        if (pos == std::string_view::npos) break;
        text.remove_prefix(pos + 1);
    }
    if (lines.empty()) throw InputError(std::string(source_name) + ": empty file (no header)");

    // Strip a UTF-8 byte order mark.
    if (lines.front().substr(0, 3) == "\xEF\xBB\xBF") lines.front().remove_prefix(3);
    const auto header = split_csv_line(lines.front());

    std::unordered_map<std::string, std::size_t> column_index;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (!column_index.emplace(header[j], j).second) {
            throw InputError(std::string(source_name) + ": duplicate column '" + header[j] + "'");
        }
    }
    auto find_column = [&](const std::string& name) -> std::optional<std::size_t> {
        if (name.empty()) return std::nullopt;
        auto it = column_index.find(name);
        if (it == column_index.end()) return std::nullopt;
        return it->second;
    };

    const auto id_col = find_column(schema.id_column);
    const auto trt_col = find_column(schema.treatment_column);
    const auto out_col = find_column(schema.outcome_column);
    const auto pop_col = find_column(schema.population_column);
    if (schema.require_treatment && !trt_col) {
        throw InputError(std::string(source_name) + ": missing treatment column '" +
                         schema.treatment_column + "'");
    }
    if (schema.require_outcome && !out_col) {
        throw InputError(std::string(source_name) + ": missing outcome column '" +
                         schema.outcome_column + "'");
    }

    std::vector<std::string> names;
    std::vector<std::size_t> cov_cols;
    if (schema.covariates.empty()) {
        for (std::size_t j = 0; j < header.size(); ++j) {
            if (j == id_col || j == trt_col || j == out_col || j == pop_col) continue;
            names.push_back(header[j]);
            cov_cols.push_back(j);
        }
    } else {
        std::set<std::string> seen;
        for (const auto& name : schema.covariates) {
            if (!seen.insert(name).second) {
                throw InputError(std::string(source_name) + ": duplicate covariate name '" + name + "'");
            }
            auto col = find_column(name);
            if (!col) {
                throw InputError(std::string(source_name) + ": covariate column '" + name + "' not found");
            }
            names.push_back(name);
            cov_cols.push_back(*col);
        }
    }

    std::vector<PatientRecord> records;
    std::size_t dropped = 0;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const std::size_t row = li;  // 1-based data row number
        auto cells = split_csv_line(lines[li]);
        if (cells.size() != header.size()) {
            throw InputError(std::string(source_name) + ": row " + std::to_string(row) + " has " +
                             std::to_string(cells.size()) + " fields, header has " +
                             std::to_string(header.size()));
        }
        PatientRecord rec;
        rec.id = id_col ? cells[*id_col] : std::to_string(row);
        rec.population = pop_col && !is_missing(cells[*pop_col])
                             ? parse_population(cells[*pop_col])
                             : schema.default_population;
        rec.covariates.resize(static_cast<Eigen::Index>(cov_cols.size()));
        bool incomplete = false;
        for (std::size_t k = 0; k < cov_cols.size(); ++k) {
            const auto& cell = cells[cov_cols[k]];
            if (is_missing(cell)) {
                if (!schema.drop_incomplete) {
                    throw InputError(cell_error(source_name, row, names[k],
                                                "missing covariate value (use --drop-incomplete to skip)"));
                }
                incomplete = true;
                break;
            }
            auto v = parse_number(cell);
            if (!v) throw InputError(cell_error(source_name, row, names[k], "cannot parse '" + cell + "'"));
            rec.covariates(static_cast<Eigen::Index>(k)) = *v;
        }
        if (incomplete) {
            ++dropped;
            continue;
        }
        if (trt_col && !is_missing(cells[*trt_col])) {
            auto v = parse_number(cells[*trt_col]);
            if (!v) {
                throw InputError(cell_error(source_name, row, schema.treatment_column,
                                            "cannot parse '" + cells[*trt_col] + "'"));
            }
            if (*v != 0.0 && *v != 1.0) {
                throw InputError(cell_error(source_name, row, schema.treatment_column,
                                            "treatment must be 0 or 1, got '" + cells[*trt_col] + "'"));
            }
            rec.treatment = static_cast<int>(*v);
        }
        if (out_col && !is_missing(cells[*out_col])) {
            auto v = parse_number(cells[*out_col]);
            if (!v) {
                throw InputError(cell_error(source_name, row, schema.outcome_column,
                                            "cannot parse '" + cells[*out_col] + "'"));
            }
            rec.outcome = *v;
        }
        records.push_back(std::move(rec));
    }
    if (dropped > 0) {
        std::cerr << source_name << ": dropped " << dropped << " incomplete row(s)\n";
    }
    if (records.empty()) throw InputError(std::string(source_name) + ": no data rows");

    Dataset ds(std::move(names), std::move(records));
    ds.set_dropped_rows(dropped);
    return ds;
}

Dataset load_dataset(const std::filesystem::path& path, const CsvSchema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_dataset(buf.str(), schema, path.string());
}

std::string format_double(double value) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), ptr);
}

std::string format_dataset(const Dataset& ds) {
    std::ostringstream os;
    os << "id";
    for (const auto& name : ds.covariate_names()) os << ',' << name;
    os << ",treatment,outcome,population\n";
    for (const auto& r : ds.records()) {
        os << r.id;
        for (Eigen::Index j = 0; j < r.covariates.size(); ++j) os << ',' << format_double(r.covariates(j));
        os << ',';
        if (r.treatment) os << *r.treatment;
        os << ',';
        if (r.outcome) os << format_double(*r.outcome);
        os << ',' << to_string(r.population) << '\n';
    }
    return os.str();
}

void write_dataset(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path.string() + "'");
    out << format_dataset(ds);
}

ValidationReport validate(const Dataset& ds) {
    ValidationReport rep;
    rep.n_source = ds.n_source();
    rep.n_target = ds.n_target();
    for (const auto& r : ds.records()) {
        if (r.population != Population::Source) continue;
        if (!r.treatment) {
            ++rep.missing_treatment;
        } else if (*r.treatment == 1) {
            ++rep.n_source_treated;
        } else {
            ++rep.n_source_control;
        }
        if (!r.outcome) ++rep.missing_outcome;
    }

    const auto source_X = ds.covariate_matrix(PopulationFilter::Source);
    const auto all_X = ds.covariate_matrix(PopulationFilter::All);
    for (std::size_t j = 0; j < ds.p(); ++j) {
        const auto col = static_cast<Eigen::Index>(j);
        const auto& X = source_X.rows() > 0 ? source_X : all_X;
        if (X.rows() > 0 && X.col(col).maxCoeff() == X.col(col).minCoeff()) {
            rep.constant_columns.push_back(ds.covariate_names()[j]);
        }
    }

    if (rep.n_source == 0) rep.issues.emplace_back("no source rows");
    if (rep.n_target == 0) rep.issues.emplace_back("no target rows");
    if (rep.n_source > 0 && rep.n_source_treated == 0) rep.issues.emplace_back("empty treatment arm");
    if (rep.n_source > 0 && rep.n_source_control == 0) rep.issues.emplace_back("empty control arm");
    if (rep.missing_treatment > 0) {
        rep.issues.push_back(std::to_string(rep.missing_treatment) + " source row(s) missing treatment");
    }
    if (rep.missing_outcome > 0) {
        rep.issues.push_back(std::to_string(rep.missing_outcome) + " source row(s) missing outcome");
    }
    for (const auto& name : rep.constant_columns) {
        rep.issues.push_back("constant covariate '" + name + "'");
    }
    return rep;
}

std::optional<std::size_t> CovariateSummary::index_of(std::string_view name) const {
    for (std::size_t j = 0; j < names.size(); ++j) {
        if (names[j] == name) return j;
    }
    return std::nullopt;
}

CovariateSummary covariate_summary(const Eigen::MatrixXd& X, std::vector<std::string> names) {
    if (X.rows() == 0) throw InputError("covariate summary over an empty selection");
    CovariateSummary s;
    s.names = std::move(names);
    s.n = static_cast<std::size_t>(X.rows());
    s.mean = X.colwise().mean().transpose();
    s.sd = Eigen::VectorXd::Zero(X.cols());
    if (X.rows() > 1) {
        for (Eigen::Index j = 0; j < X.cols(); ++j) {
            const double ss = (X.col(j).array() - s.mean(j)).square().sum();
            s.sd(j) = std::sqrt(ss / static_cast<double>(X.rows() - 1));
        }
    }
    return s;
}

CovariateSummary covariate_summary(const Dataset& ds, PopulationFilter filter) {
    auto X = ds.covariate_matrix(filter);
    if (X.rows() == 0) {
        throw InputError("covariate summary: no rows in population '" + std::string(to_string(filter)) + "'");
    }
    return covariate_summary(X, ds.covariate_names());
}

} // namespace itr
