#pragma once

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <climits>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tvff/adf.hpp"
#include "tvff/bootstrap.hpp"
#include "tvff/dataset.hpp"
#include "tvff/error.hpp"
#include "tvff/factor_model.hpp"
#include "tvff/io.hpp"
#include "tvff/lambda_select.hpp"
#include "tvff/panel.hpp"
#include "tvff/tv_estimator.hpp"

namespace tvff {

inline constexpr const char* kVersion = "0.1.0";

enum class PriorPolicy { StaticOls, Zero };
enum class ResidualSource { Static, TimeVarying };

inline std::string to_string(PriorPolicy p) { return p == PriorPolicy::StaticOls ? "ols" : "zero"; }
inline std::string to_string(ResidualSource r) { return r == ResidualSource::Static ? "static" : "tv"; }

struct RunConfig {
    FactorModel model = FactorModel::FF3;
    Region region = Region::US;
    std::optional<MonthStamp> start;
    std::optional<MonthStamp> end;
    std::optional<double> lambda;  // unset: select_lambda over lambda_grid
    std::vector<double> lambda_grid = default_lambda_grid();
    std::size_t n_boot = 500;
    double level = 0.95;
    std::uint64_t seed = 0;
    std::filesystem::path cache_dir = "tvfactor-cache";
    std::filesystem::path out_dir = ".";
    bool offline = false;
    std::optional<std::string> vintage;                  // applies to every dataset
    std::map<std::string, std::string> pinned_vintages;  // slug -> vintage, from a manifest
    std::map<std::string, std::string> pinned_sha256;    // slug -> digest, from a manifest
    std::string base_url = kFrenchLibraryUrl;
    PriorPolicy gamma0 = PriorPolicy::StaticOls;
    ResidualSource residuals = ResidualSource::Static;
    bool joint_resampling = true;
    bool rescale = false;
    bool json = false;
    unsigned threads = 0;

    void validate() const {
        if (start && end && *end < *start) throw Error(ErrorCode::ConfigError, "--start is after --end");
        if (lambda && (!(*lambda > 0) || !std::isfinite(*lambda))) throw Error(ErrorCode::ConfigError, "--lambda must be positive");
        if (n_boot < 2) throw Error(ErrorCode::ConfigError, "--n-boot must be at least 2");
        if (!(level > 0 && level < 1)) throw Error(ErrorCode::ConfigError, "--level must lie in (0, 1)");
        if (!lambda) {
            if (lambda_grid.empty()) throw Error(ErrorCode::ConfigError, "lambda grid is empty");
            for (double g : lambda_grid)
                if (!(g > 0) || !std::isfinite(g)) throw Error(ErrorCode::ConfigError, "lambda grid values must be positive");
        }
    }
};

/// First month with every series of (model, region) available.
inline MonthStamp availability_start(FactorModel model, Region region) {
    if (region == Region::US) return model == FactorModel::FF3 ? MonthStamp{1926, 7} : MonthStamp{1963, 7};
    return model == FactorModel::FF6 ? MonthStamp{1990, 11} : MonthStamp{1990, 7};
}

inline std::vector<DatasetId> datasets_for(FactorModel model, Region region) {
    switch (model) {
        case FactorModel::FF3: return {{region, DatasetKind::Factors3}, {region, DatasetKind::Portfolios25}};
        case FactorModel::FF5: return {{region, DatasetKind::Factors5}, {region, DatasetKind::Portfolios25}};
        case FactorModel::FF6:
            return {{region, DatasetKind::Factors5}, {region, DatasetKind::Momentum}, {region, DatasetKind::Portfolios25}};
    }
    return {};
}

struct SourceFile {
    std::string dataset;
    std::string vintage;
    std::string file;
    std::string sha256;
};

struct LoadedData {
    ModelSpec spec;
    ReturnPanel factors;  // factor columns only, in spec order
    ReturnPanel excess;   // portfolio returns minus RF
    std::vector<SourceFile> sources;
};

inline FetchOptions fetch_options_for(const RunConfig& c, const DatasetId& id) {
    FetchOptions o;
    o.offline = c.offline;
    o.base_url = c.base_url;
    o.vintage = c.vintage;
    if (auto it = c.pinned_vintages.find(id.slug()); it != c.pinned_vintages.end()) o.vintage = it->second;
    return o;
}

/// Fetches (or reads from cache) every file of the configuration, clamps to
/// the availability window and the requested range, and aligns everything.
inline LoadedData load_data(const RunConfig& c) {
    c.validate();
    LoadedData out;
    out.spec = ModelSpec::make(c.model);
    const MonthStamp avail = availability_start(c.model, c.region);
    const MonthStamp lo = std::max(avail, c.start.value_or(avail));
    const MonthStamp hi = c.end.value_or(MonthStamp::from_index(INT_MAX / 2));
    if (hi < lo) throw Error(ErrorCode::NoOverlap, "requested range ends before " + avail.str() + ", the first month with " + to_string(c.model) + " data for " + to_string(c.region));

    std::vector<ReturnPanel> panels;
    std::vector<std::string> portfolio_names;
    for (const auto& id : datasets_for(c.model, c.region)) {
        const auto file = fetch_file(id, c.cache_dir, fetch_options_for(c, id));
        const std::string digest = sha256_hex(read_file(file.path));
        if (auto it = c.pinned_sha256.find(id.slug()); it != c.pinned_sha256.end() && it->second != digest)
            throw Error(ErrorCode::CorruptDataset, id.slug() + " vintage " + file.vintage + " does not match the recorded checksum");
        out.sources.push_back({id.slug(), file.vintage, id.remote_name(), digest});

        ReturnPanel panel = load_panel(file);
        if (id.kind == DatasetKind::Momentum) {
            if (!panel.find("WML") && panel.find("Mom")) panel = panel.renamed("Mom", "WML");
            panel = panel.select({"WML"});
        } else if (id.is_factor_file()) {
            std::vector<std::string> keep;
            for (const auto& f : out.spec.factor_labels)
                if (f != "WML") keep.push_back(f);
            keep.emplace_back("RF");
            panel = panel.select(keep);
        } else {
            portfolio_names = panel.names();
        }
        panel = panel.slice(lo, hi);
        if (panel.empty())
            throw Error(ErrorCode::NoOverlap, id.slug() + " has no data between " + lo.str() + " and " +
                                                  (c.end ? c.end->str() : std::string("the end")));
        panels.push_back(std::move(panel));
    }
    const ReturnPanel all = align(panels);
    out.factors = all.select(out.spec.factor_labels);
    auto with_rf = portfolio_names;
    with_rf.emplace_back("RF");
    out.excess = excess_returns(all.select(with_rf), "RF");
    return out;
}

// ---------------------------------------------------------------- formatting

inline std::string fmt(double v) {
    if (std::isnan(v)) return "NA";
    if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

inline std::string fmt_fixed(double v, int digits) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, digits);
    std::string s(buf, p);
    if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
    return s;
}

/// RFC 4180 field quoting.
inline std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

inline std::string csv_row(std::initializer_list<std::string_view> cells) {
    std::string out;
    bool first = true;
    for (auto c : cells) {
        if (!first) out += ',';
        out += csv_field(c);
        first = false;
    }
    return out + "\n";
}

/// Splits RFC 4180 text into records (quoted fields may hold commas and newlines).
inline std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char ch = text[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += ch;
            }
            continue;
        }
        if (ch == '"') {
            quoted = true;
            any = true;
        } else if (ch == ',') {
            row.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (ch == '\n' || ch == '\r') {
            if (ch == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            if (any || !field.empty()) {
                row.push_back(std::move(field));
                rows.push_back(std::move(row));
            }
            row.clear();
            field.clear();
            any = false;
        } else {
            field += ch;
            any = true;
        }
    }
    if (quoted) throw Error(ErrorCode::CorruptDataset, "unterminated quoted CSV field");
    if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

// ------------------------------------------------------------------ describe

struct DescribeRow {
    std::string factor;
    SummaryStats stats;
    AdfResult adf;
    MonthStamp first;
    MonthStamp last;
};

inline std::vector<DescribeRow> describe_factors(const LoadedData& data, const LagSelection& lags = {}) {
    std::vector<DescribeRow> rows;
    for (const auto& f : data.spec.factor_labels) {
        const Vector x = data.factors.column(f);
        rows.push_back({f, describe(x), adf_test(x, lags), data.factors.first(), data.factors.last()});
    }
    return rows;
}

inline std::string describe_csv(const RunConfig& c, const std::vector<DescribeRow>& rows) {
    std::string out = csv_row({"model", "region", "factor", "mean", "sd", "min", "max", "adf", "lags", "n", "adf_cv_1pct",
                               "reject_1pct", "start", "end"});
    for (const auto& r : rows)
        out += csv_row({to_string(c.model), to_string(c.region), r.factor, fmt(r.stats.mean), fmt(r.stats.sd), fmt(r.stats.min),
                        fmt(r.stats.max), fmt(r.adf.statistic), std::to_string(r.adf.lag), std::to_string(r.stats.n),
                        fmt(r.adf.critical_1pct), r.adf.reject_1pct ? "true" : "false", r.first.str(), r.last.str()});
    return out;
}

inline std::string describe_text(const RunConfig& c, const std::vector<DescribeRow>& rows) {
    std::ostringstream os;
    os << to_string(c.model) << " factors, " << to_string(c.region);
    if (!rows.empty()) os << ", " << rows.front().first.str() << " to " << rows.front().last.str();
    os << "\n";
    char line[160];
    std::snprintf(line, sizeof line, "%-8s %9s %9s %9s %9s %11s %5s %6s\n", "factor", "mean", "sd", "min", "max", "ADF", "lags", "N");
    os << line;
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%-8s %9s %9s %9s %9s %11s %5zu %6zu%s\n", r.factor.c_str(), fmt_fixed(r.stats.mean, 4).c_str(),
                      fmt_fixed(r.stats.sd, 4).c_str(), fmt_fixed(r.stats.min, 4).c_str(), fmt_fixed(r.stats.max, 4).c_str(),
                      fmt_fixed(r.adf.statistic, 4).c_str(), r.adf.lag, r.stats.n, r.adf.reject_1pct ? " *" : "");
        os << line;
    }
    os << "* rejects a unit root at 1%\n";
    return os.str();
}

// ------------------------------------------------------------------ estimate

struct EstimateResult {
    StaticFit fit;
    Vector gamma0;
    Vector weights;
    std::optional<LambdaSelection> selection;
    double lambda = 0;
    TvSolution solution;
    BandSet bands;
};

inline EstimateResult run_estimate(const RunConfig& c, const LoadedData& data) {
    c.validate();
    EstimateResult r;
    const Matrix X = design_matrix(data.spec, data.factors);
    const Matrix& Y = data.excess.values();
    r.fit = static_ols(data.spec, data.excess, data.factors);

    const auto k = Y.cols();
    r.weights = Vector::Ones(k);
    if (c.rescale) {
        const Vector var = r.fit.rss / static_cast<double>(X.rows() - X.cols());
        r.weights = var.mean() * var.cwiseInverse();
    }
    r.gamma0 = c.gamma0 == PriorPolicy::StaticOls ? flatten_coefficients(r.fit.coef) : Vector(Vector::Zero(k * X.cols()));

    if (c.lambda) {
        r.lambda = *c.lambda;
    } else {
        r.selection = select_lambda(X, Y, r.gamma0, c.lambda_grid, r.weights);
        r.lambda = r.selection->lambda;
    }
    r.solution = solve_tv(make_problem(X, Y, r.gamma0, r.lambda, r.weights));

    BootstrapConfig bc;
    bc.n_reps = c.n_boot;
    bc.level = c.level;
    bc.seed = c.seed;
    bc.lambda = r.lambda;
    bc.joint_resampling = c.joint_resampling;
    bc.ols_prior = c.gamma0 == PriorPolicy::StaticOls;
    bc.threads = c.threads;
    bc.weights = r.weights;
    const Matrix& resid = c.residuals == ResidualSource::Static ? r.fit.residuals : r.solution.obs_resid;
    r.bands = bootstrap_bands(X, resid, bc);
    r.bands.significant = flag_significance(r.solution, r.bands);
    return r;
}

inline std::string estimates_csv(const RunConfig& c, const LoadedData& data, const EstimateResult& r) {
    const auto names = data.spec.coefficient_names();
    const auto m = static_cast<Eigen::Index>(data.spec.m());
    std::string out = csv_row({"model", "region", "portfolio", "date", "coefficient", "estimate", "lower", "upper", "significant"});
    const std::string model = to_string(c.model);
    const std::string region = to_string(c.region);
    for (std::size_t i = 0; i < data.excess.cols(); ++i)
        for (std::size_t t = 0; t < data.excess.rows(); ++t) {
            const std::string date = data.excess.date(t).str();
            for (Eigen::Index j = 0; j < m; ++j) {
                const auto ti = static_cast<Eigen::Index>(t);
                const auto col = static_cast<Eigen::Index>(i) * m + j;
                out += csv_row({model, region, data.excess.names()[i], date, names[static_cast<std::size_t>(j)],
                                fmt(r.solution.gamma(ti, col)), fmt(r.bands.lower(ti, col)), fmt(r.bands.upper(ti, col)),
                                r.bands.significant(ti, col) ? "true" : "false"});
            }
        }
    return out;
}

inline std::string bands_csv(const RunConfig& c, const LoadedData& data, const EstimateResult& r) {
    const auto names = data.spec.coefficient_names();
    const auto m = static_cast<Eigen::Index>(data.spec.m());
    std::string out = csv_row({"model", "region", "portfolio", "date", "coefficient", "lower", "upper", "level", "n_boot"});
    const std::string level = fmt(r.bands.level);
    const std::string n = std::to_string(r.bands.n_reps);
    for (std::size_t i = 0; i < data.excess.cols(); ++i)
        for (std::size_t t = 0; t < data.excess.rows(); ++t)
            for (Eigen::Index j = 0; j < m; ++j) {
                const auto ti = static_cast<Eigen::Index>(t);
                const auto col = static_cast<Eigen::Index>(i) * m + j;
                out += csv_row({to_string(c.model), to_string(c.region), data.excess.names()[i], data.excess.date(t).str(),
                                names[static_cast<std::size_t>(j)], fmt(r.bands.lower(ti, col)), fmt(r.bands.upper(ti, col)), level, n});
            }
    return out;
}

inline nlohmann::ordered_json estimates_json(const RunConfig& c, const LoadedData& data, const EstimateResult& r) {
    const auto names = data.spec.coefficient_names();
    const auto m = static_cast<Eigen::Index>(data.spec.m());
    nlohmann::ordered_json records = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < data.excess.cols(); ++i)
        for (std::size_t t = 0; t < data.excess.rows(); ++t)
            for (Eigen::Index j = 0; j < m; ++j) {
                const auto ti = static_cast<Eigen::Index>(t);
                const auto col = static_cast<Eigen::Index>(i) * m + j;
                records.push_back({{"model", to_string(c.model)},
                                   {"region", to_string(c.region)},
                                   {"portfolio", data.excess.names()[i]},
                                   {"date", data.excess.date(t).str()},
                                   {"coefficient", names[static_cast<std::size_t>(j)]},
                                   {"estimate", r.solution.gamma(ti, col)},
                                   {"lower", r.bands.lower(ti, col)},
                                   {"upper", r.bands.upper(ti, col)},
                                   {"significant", static_cast<bool>(r.bands.significant(ti, col))}});
            }
    return records;
}

/// Everything needed to repeat the run; no timestamps and no local paths.
inline nlohmann::ordered_json manifest_json(const RunConfig& c, const LoadedData& data, const EstimateResult& r,
                                            const std::map<std::string, std::string>& output_digests) {
    nlohmann::ordered_json j;
    j["tool"] = "tvfactor";
    j["version"] = kVersion;
    j["command"] = "estimate";
    j["model"] = to_string(c.model);
    j["region"] = to_string(c.region);
    j["requested_start"] = c.start ? nlohmann::ordered_json(c.start->str()) : nlohmann::ordered_json(nullptr);
    j["requested_end"] = c.end ? nlohmann::ordered_json(c.end->str()) : nlohmann::ordered_json(nullptr);
    j["start"] = data.excess.first().str();
    j["end"] = data.excess.last().str();
    j["n_dates"] = data.excess.rows();
    j["portfolios"] = data.excess.names();
    j["coefficients"] = data.spec.coefficient_names();

    nlohmann::ordered_json src = nlohmann::ordered_json::array();
    for (const auto& s : data.sources)
        src.push_back({{"dataset", s.dataset}, {"vintage", s.vintage}, {"file", s.file}, {"sha256", s.sha256}});
    j["sources"] = src;

    nlohmann::ordered_json lam;
    lam["value"] = r.lambda;
    lam["selected"] = r.selection.has_value();
    if (r.selection) {
        lam["criterion"] = "profile likelihood, Kalman filter";
        lam["grid"] = r.selection->grid;
        nlohmann::ordered_json prof = nlohmann::ordered_json::array();
        for (double v : r.selection->profile) prof.push_back(std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr));
        lam["profile"] = prof;
    }
    j["lambda"] = lam;
    j["gamma0"] = to_string(c.gamma0);
    j["rescale"] = c.rescale;
    j["loglik"] = r.solution.loglik;
    j["profile_loglik"] = r.solution.profile_loglik;
    j["sigma2"] = r.solution.sigma2;

    nlohmann::ordered_json boot;
    boot["n_reps"] = c.n_boot;
    boot["level"] = c.level;
    boot["seed"] = c.seed;
    boot["rng"] = "philox4x32-10";
    boot["joint_resampling"] = c.joint_resampling;
    boot["residuals"] = to_string(c.residuals);
    boot["replicate_prior"] = to_string(c.gamma0);
    boot["quantile"] = "order statistic ceil(q N)";
    j["bootstrap"] = boot;
    j["json_mirror"] = c.json;
    j["outputs"] = output_digests;
    return j;
}

/// Restores the run settings recorded by manifest_json. Paths, offline mode
/// and thread count are left to the caller.
inline void apply_manifest(RunConfig& c, const nlohmann::json& j) {
    try {
        if (j.at("tool") != "tvfactor" || j.at("command") != "estimate")
            throw Error(ErrorCode::ConfigError, "not an estimate manifest");
        c.model = parse_model(j.at("model").get<std::string>());
        c.region = parse_region(j.at("region").get<std::string>());
        c.start = j.at("requested_start").is_null() ? std::nullopt
                                                    : std::optional(MonthStamp::parse(j.at("requested_start").get<std::string>()));
        c.end = j.at("requested_end").is_null() ? std::nullopt
                                                : std::optional(MonthStamp::parse(j.at("requested_end").get<std::string>()));
        for (const auto& s : j.at("sources")) {
            c.pinned_vintages[s.at("dataset").get<std::string>()] = s.at("vintage").get<std::string>();
            c.pinned_sha256[s.at("dataset").get<std::string>()] = s.at("sha256").get<std::string>();
        }
        const auto& lam = j.at("lambda");
        if (lam.at("selected").get<bool>()) {
            c.lambda.reset();
            c.lambda_grid = lam.at("grid").get<std::vector<double>>();
        } else {
            c.lambda = lam.at("value").get<double>();
        }
        c.gamma0 = j.at("gamma0") == "zero" ? PriorPolicy::Zero : PriorPolicy::StaticOls;
        c.rescale = j.at("rescale").get<bool>();
        const auto& b = j.at("bootstrap");
        c.n_boot = b.at("n_reps").get<std::size_t>();
        c.level = b.at("level").get<double>();
        c.seed = b.at("seed").get<std::uint64_t>();
        c.joint_resampling = b.at("joint_resampling").get<bool>();
        c.residuals = b.at("residuals") == "tv" ? ResidualSource::TimeVarying : ResidualSource::Static;
        c.json = j.at("json_mirror").get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ConfigError, std::string("malformed manifest: ") + e.what());
    }
}

struct EstimateFiles {
    std::filesystem::path estimates;
    std::filesystem::path bands;
    std::filesystem::path manifest;
    std::optional<std::filesystem::path> json;
};

inline EstimateFiles write_estimate_outputs(const RunConfig& c, const LoadedData& data, const EstimateResult& r) {
    EstimateFiles files{c.out_dir / "estimates.csv", c.out_dir / "bands.csv", c.out_dir / "manifest.json", std::nullopt};
    std::map<std::string, std::string> digests;
    const std::string est = estimates_csv(c, data, r);
    const std::string bands = bands_csv(c, data, r);
    digests["estimates.csv"] = sha256_hex(est);
    digests["bands.csv"] = sha256_hex(bands);
    write_file_atomic(files.estimates, est);
    write_file_atomic(files.bands, bands);
    if (c.json) {
        const std::string js = estimates_json(c, data, r).dump(1) + "\n";
        digests["estimates.json"] = sha256_hex(js);
        files.json = c.out_dir / "estimates.json";
        write_file_atomic(*files.json, js);
    }
    write_file_atomic(files.manifest, manifest_json(c, data, r, digests).dump(2) + "\n");
    return files;
}

// ------------------------------------------------------------------ plotdata

struct PlotRequest {
    std::vector<std::string> portfolios;    // empty: all
    std::vector<std::string> coefficients;  // empty: all
};

inline std::string plot_file_name(const RunConfig& c, const std::string& portfolio, const std::string& coefficient) {
    std::string p = portfolio;
    for (auto& ch : p)
        if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-') ch = '_';
    return to_string(c.model) + "_" + to_string(c.region) + "_" + p + "_" + coefficient + ".csv";
}

/// Splits `<out>/estimates.csv` into one date/estimate/lower/upper file per
/// requested (portfolio, coefficient) under `<out>/plot/`.
inline std::vector<std::filesystem::path> write_plot_data(const RunConfig& c, const PlotRequest& req) {
    const auto src = c.out_dir / "estimates.csv";
    if (!std::filesystem::exists(src))
        throw Error(ErrorCode::MissingSeries, src.string() + " not found; run estimate first");
    const auto rows = parse_csv(read_file(src));
    if (rows.empty() || rows.front().size() != 9 || rows.front()[0] != "model")
        throw Error(ErrorCode::CorruptDataset, src.string() + " is not an estimates file");

    const std::string model = to_string(c.model);
    const std::string region = to_string(c.region);
    std::vector<std::string> portfolios, coefficients;
    std::map<std::pair<std::string, std::string>, std::string> bodies;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != 9) throw Error(ErrorCode::CorruptDataset, src.string() + ": malformed record " + std::to_string(r));
        if (row[0] != model || row[1] != region) continue;
        if (std::find(portfolios.begin(), portfolios.end(), row[2]) == portfolios.end()) portfolios.push_back(row[2]);
        if (std::find(coefficients.begin(), coefficients.end(), row[4]) == coefficients.end()) coefficients.push_back(row[4]);
        bodies[{row[2], row[4]}] += csv_row({row[3], row[5], row[6], row[7], row[8]});
    }
    if (portfolios.empty())
        throw Error(ErrorCode::MissingSeries, "no " + model + "/" + region + " records in " + src.string());
    for (const auto& p : req.portfolios)
        if (std::find(portfolios.begin(), portfolios.end(), p) == portfolios.end())
            throw Error(ErrorCode::MissingSeries, "unknown portfolio '" + p + "'");
    for (const auto& q : req.coefficients)
        if (std::find(coefficients.begin(), coefficients.end(), q) == coefficients.end())
            throw Error(ErrorCode::MissingSeries, "unknown coefficient '" + q + "'");

    std::vector<std::filesystem::path> written;
    for (const auto& p : req.portfolios.empty() ? portfolios : req.portfolios)
        for (const auto& q : req.coefficients.empty() ? coefficients : req.coefficients) {
            const auto path = c.out_dir / "plot" / plot_file_name(c, p, q);
            write_file_atomic(path, csv_row({"date", "estimate", "lower", "upper", "significant"}) + bodies[{p, q}]);
            written.push_back(path);
        }
    return written;
}

}  // namespace tvff
