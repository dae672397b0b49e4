// tvfactor: time-varying Fama-French coefficients from the French data library.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "tvff/pipeline.hpp"

namespace {

using namespace tvff;

struct Options {
    std::string model = "ff3";
    std::string region = "us";
    std::string start;
    std::string end;
    std::optional<double> lambda;
    std::size_t n_boot = 500;
    double level = 0.95;
    std::uint64_t seed = 0;
    std::string cache_dir;
    std::string out_dir = ".";
    bool offline = false;
    std::string vintage;
    std::string base_url = kFrenchLibraryUrl;
    std::string gamma0 = "ols";
    std::string residuals = "static";
    bool independent = false;
    bool rescale = false;
    bool json = false;
    unsigned threads = 0;
    std::string manifest;
    std::vector<std::string> datasets;
    std::string from;
    std::vector<std::string> portfolios;
    std::vector<std::string> coefficients;
};

std::string default_cache_dir() {
    if (const char* env = std::getenv("TVFACTOR_CACHE")) return env;
    if (const char* home = std::getenv("HOME")) return std::string(home) + "/.cache/tvfactor";
    return "tvfactor-cache";
}

bool valid_vintage(const std::string& v) {
    return v.size() == 8 && std::all_of(v.begin(), v.end(), [](char c) { return c >= '0' && c <= '9'; });
}

RunConfig to_config(const Options& o) {
    RunConfig c;
    c.model = parse_model(o.model);
    c.region = parse_region(o.region);
    if (!o.start.empty()) c.start = MonthStamp::parse(o.start);
    if (!o.end.empty()) c.end = MonthStamp::parse(o.end);
    c.lambda = o.lambda;
    c.n_boot = o.n_boot;
    c.level = o.level;
    c.seed = o.seed;
    c.cache_dir = o.cache_dir.empty() ? default_cache_dir() : o.cache_dir;
    c.out_dir = o.out_dir;
    c.offline = o.offline;
    if (!o.vintage.empty()) {
        if (!valid_vintage(o.vintage)) throw Error(ErrorCode::ConfigError, "--vintage must be YYYYMMDD");
        c.vintage = o.vintage;
    }
    c.base_url = o.base_url;
    if (o.gamma0 == "ols") c.gamma0 = PriorPolicy::StaticOls;
    else if (o.gamma0 == "zero") c.gamma0 = PriorPolicy::Zero;
    else throw Error(ErrorCode::ConfigError, "--gamma0 must be ols or zero");
    if (o.residuals == "static") c.residuals = ResidualSource::Static;
    else if (o.residuals == "tv") c.residuals = ResidualSource::TimeVarying;
    else throw Error(ErrorCode::ConfigError, "--residuals must be static or tv");
    c.joint_resampling = !o.independent;
    c.rescale = o.rescale;
    c.json = o.json;
    c.threads = o.threads;
    if (!o.manifest.empty()) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_file(o.manifest, ErrorCode::ConfigError));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::ConfigError, std::string("cannot parse manifest: ") + e.what());
        }
        apply_manifest(c, j);
    }
    c.validate();
    return c;
}

void add_common(CLI::App* cmd, Options& o) {
    cmd->add_option("--model", o.model, "ff3, ff5 or ff6")->check(CLI::IsMember({"ff3", "ff5", "ff6"}));
    cmd->add_option("--region", o.region, "us, japan or europe")->check(CLI::IsMember({"us", "japan", "europe"}));
    cmd->add_option("--cache-dir", o.cache_dir, "dataset cache (default $TVFACTOR_CACHE or ~/.cache/tvfactor)");
    cmd->add_flag("--offline", o.offline, "use cached files only");
    cmd->add_option("--vintage", o.vintage, "cache vintage YYYYMMDD (offline: pin; online: tag)");
    cmd->add_option("--base-url", o.base_url, "data library location");
}

void add_range(CLI::App* cmd, Options& o) {
    cmd->add_option("--start", o.start, "first month YYYY-MM");
    cmd->add_option("--end", o.end, "last month YYYY-MM");
    cmd->add_option("--out", o.out_dir, "output directory");
    cmd->add_flag("--json", o.json, "also write JSON");
}

int cmd_fetch(const Options& o) {
    const RunConfig c = to_config(o);
    std::vector<DatasetId> ids;
    for (const auto& d : o.datasets) ids.push_back(DatasetId::parse(d));
    if (ids.empty()) ids = datasets_for(c.model, c.region);
    if (!o.from.empty()) {
        if (ids.size() != 1 || o.datasets.size() != 1) throw Error(ErrorCode::ConfigError, "--from needs exactly one --dataset");
        const auto file = import_file(ids.front(), c.cache_dir, o.from, c.vintage.value_or(today_vintage()));
        std::cout << file.id.slug() << "\t" << file.vintage << "\t" << sha256_hex(read_file(file.path)) << "\t"
                  << file.path.string() << "\n";
        return 0;
    }
    for (const auto& id : ids) {
        const auto file = fetch_file(id, c.cache_dir, fetch_options_for(c, id));
        (void)load_panel(file);
        std::cout << id.slug() << "\t" << file.vintage << "\t" << sha256_hex(read_file(file.path)) << "\t" << file.path.string()
                  << "\n";
        if (c.offline) {
            const auto all = DatasetCache(c.cache_dir).vintages(id);
            std::cout << "  cached vintages:";
            for (const auto& v : all) std::cout << " " << v;
            std::cout << "\n";
        }
    }
    return 0;
}

int cmd_describe(const Options& o) {
    const RunConfig c = to_config(o);
    const auto data = load_data(c);
    const auto rows = describe_factors(data);
    std::cout << describe_text(c, rows);
    if (o.out_dir != ".") {
        write_file_atomic(c.out_dir / "describe.csv", describe_csv(c, rows));
        if (c.json) {
            nlohmann::ordered_json j = nlohmann::ordered_json::array();
            for (const auto& r : rows)
                j.push_back({{"factor", r.factor}, {"mean", r.stats.mean}, {"sd", r.stats.sd}, {"min", r.stats.min},
                             {"max", r.stats.max}, {"adf", r.adf.statistic}, {"lags", r.adf.lag}, {"n", r.stats.n},
                             {"reject_1pct", r.adf.reject_1pct}});
            write_file_atomic(c.out_dir / "describe.json", j.dump(2) + "\n");
        }
    }
    return 0;
}

int cmd_estimate(const Options& o) {
    const RunConfig c = to_config(o);
    const auto data = load_data(c);
    const auto result = run_estimate(c, data);
    const auto files = write_estimate_outputs(c, data, result);
    std::cerr << to_string(c.model) << "/" << to_string(c.region) << ": " << data.excess.cols() << " portfolios, "
              << data.excess.rows() << " months " << data.excess.first().str() << " to " << data.excess.last().str()
              << ", lambda " << fmt(result.lambda) << (result.selection ? " (selected)" : "") << "\n";
    std::cout << files.estimates.string() << "\n" << files.bands.string() << "\n" << files.manifest.string() << "\n";
    if (files.json) std::cout << files.json->string() << "\n";
    return 0;
}

int cmd_plotdata(const Options& o) {
    const RunConfig c = to_config(o);
    PlotRequest req{o.portfolios, o.coefficients};
    for (const auto& p : write_plot_data(c, req)) std::cout << p.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Time-varying Fama-French factor loadings"};
    app.require_subcommand(1);
    app.set_version_flag("--version", tvff::kVersion);
    Options o;

    auto* fetch = app.add_subcommand("fetch", "download data files into the cache");
    add_common(fetch, o);
    fetch->add_option("--dataset", o.datasets, "dataset id such as us-factors3 (repeatable)");
    fetch->add_option("--from", o.from, "import a local file for --dataset instead of downloading");

    auto* describe = app.add_subcommand("describe", "descriptive statistics and ADF tests of the factors");
    add_common(describe, o);
    add_range(describe, o);

    auto* estimate = app.add_subcommand("estimate", "time-varying coefficients with bootstrap bands");
    add_common(estimate, o);
    add_range(estimate, o);
    estimate->add_option("--lambda", o.lambda, "smoothness ratio (default: maximum likelihood over a grid)");
    estimate->add_option("--n-boot", o.n_boot, "bootstrap replicates");
    estimate->add_option("--level", o.level, "band coverage level");
    estimate->add_option("--seed", o.seed, "bootstrap seed");
    estimate->add_option("--gamma0", o.gamma0, "prior: ols or zero");
    estimate->add_option("--residuals", o.residuals, "bootstrap residual source: static or tv");
    estimate->add_flag("--independent-resampling", o.independent, "resample each portfolio separately");
    estimate->add_flag("--rescale", o.rescale, "weight portfolios by inverse residual variance");
    estimate->add_option("--threads", o.threads, "worker threads (0: all cores)");
    estimate->add_option("--manifest", o.manifest, "repeat the run recorded in a manifest");

    auto* plot = app.add_subcommand("plotdata", "per-series files from estimates.csv");
    add_common(plot, o);
    plot->add_option("--out", o.out_dir, "directory holding estimates.csv");
    plot->add_option("--portfolio", o.portfolios, "portfolio label (repeatable; default all)");
    plot->add_option("--coefficient", o.coefficients, "coefficient name (repeatable; default all)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (fetch->parsed()) return cmd_fetch(o);
        if (describe->parsed()) return cmd_describe(o);
        if (estimate->parsed()) return cmd_estimate(o);
        if (plot->parsed()) return cmd_plotdata(o);
    } catch (const tvff::Error& e) {
        std::cerr << "tvfactor: " << e.what() << "\n";
        return e.is_config_error() ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "tvfactor: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
