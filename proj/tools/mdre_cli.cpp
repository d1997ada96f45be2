#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>

#include "mdre/harness.hpp"

namespace {

using namespace mdre;

struct CommonOptions {
    std::string config_path;
    std::string preset;
    std::optional<std::uint64_t> seed;
    std::optional<Index> runs;
    Index jobs = 1;
    std::string out_path;
    std::string format = "csv";
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_runs) {
    cmd->add_option("--config", o.config_path, "experiment config (JSON)");
    cmd->add_option("--preset", o.preset, "start from a named preset");
    cmd->add_option("--seed", o.seed, "base seed");
    cmd->add_option("--jobs", o.jobs, "concurrent runs")->check(CLI::PositiveNumber);
    cmd->add_option("--out", o.out_path, "output file (default stdout)");
    cmd->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    if (with_runs) cmd->add_option("--runs", o.runs, "number of seeds (base, base+1, ...)")->check(CLI::PositiveNumber);
}

ExperimentConfig load_config(const CommonOptions& o) {
    ExperimentConfig c;
    if (!o.config_path.empty()) {
        Json j = read_json_file(o.config_path);
        if (!o.preset.empty()) j["preset"] = o.preset;
        c = config_from_json(j);
    } else if (!o.preset.empty()) {
        auto p = find_preset(o.preset);
        if (!p) throw InvalidArgument("unknown preset '" + o.preset + "'");
        c = *p;
    } else {
        throw InvalidArgument("either --config or --preset is required");
    }
    if (o.seed) c.seed = *o.seed;
    if (o.runs) c.runs = *o.runs;
    c.validate();
    return c;
}

/// Owns the output stream: a file when --out is given, otherwise stdout.
class Output {
public:
    explicit Output(const std::string& path) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path);
            if (!*file_) throw Error("cannot open '" + path + "' for writing");
        }
    }
    std::ostream& stream() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

void write_table(std::ostream& out, OutputFormat fmt, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
    if (fmt == OutputFormat::csv) {
        for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
        out << '\n';
        for (const auto& r : rows) {
            for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << csv_field(r[i]);
            out << '\n';
        }
        return;
    }
    Json arr = Json::array();
    for (const auto& r : rows) {
        Json o = Json::object();
        for (std::size_t i = 0; i < header.size(); ++i) {
            char* end = nullptr;
            const double v = std::strtod(r[i].c_str(), &end);
            if (!r[i].empty() && end && *end == '\0')
                o[header[i]] = v;
            else
                o[header[i]] = r[i];
        }
        arr.push_back(o);
    }
    out << arr.dump(2) << '\n';
}

int report_failures(const std::vector<RunFailure>& failures) {
    for (const auto& f : failures) std::cerr << "error: " << f.name << " run " << f.run_index << ": " << f.message << '\n';
    return failures.empty() ? 0 : 1;
}

int cmd_runs(const CommonOptions& o, std::optional<TaskKind> expected) {
    const auto c = load_config(o);
    if (expected && c.task != *expected && !(*expected == TaskKind::kl_1d && c.task == TaskKind::robustness))
        std::cerr << "warning: config task is " << to_string(c.task) << '\n';
    Output out(o.out_path);
    OrderedAppender app(out.stream(), parse_format(o.format));
    std::vector<RunFailure> failures;
    run_all({c}, o.jobs, &app, &failures);
    app.finish();
    return report_failures(failures);
}

int cmd_bench(const CommonOptions& o, const std::string& target, bool extended) {
    std::vector<ExperimentConfig> configs;
    if (!o.config_path.empty()) {
        require(target.empty(), "give either a bench target or --config, not both");
        configs.push_back(load_config(o));
    } else if (target.empty()) {
        throw InvalidArgument("bench needs a preset name, 'all', or --config");
    } else if (target == "all") {
        configs = bench_presets(extended);
    } else {
        auto p = find_preset(target);
        if (!p) throw InvalidArgument("unknown preset '" + target + "'");
        configs.push_back(*p);
    }
    for (auto& c : configs) {
        if (o.seed) c.seed = *o.seed;
        if (o.runs) c.runs = *o.runs;
    }
    Output out(o.out_path);
    OrderedAppender app(out.stream(), parse_format(o.format));
    std::vector<RunFailure> failures;
    const auto records = run_all(configs, o.jobs, &app, &failures);
    app.finish();
    const int failed = report_failures(failures);

    bool violation = false;
    for (const auto& b : check_bounds(configs, records)) {
        std::cerr << b.name << ": mean " << format_number(b.mean_estimate) << ", truth " << format_number(b.true_value)
                  << ", bounds " << b.bound_text << (b.within ? "" : "  VIOLATION") << '\n';
        violation = violation || !b.within;
    }
    if (failed) return 1;
    return violation ? 2 : 0;
}

int cmd_sample(const CommonOptions& o, const std::string& which, std::optional<Index> n) {
    auto c = load_config(o);
    if (n) c.samples_per_class = *n;
    const auto data = prepare_data(c, c.seed);
    const Matrix* x = nullptr;
    if (which == "p") {
        x = &data.p;
    } else if (which == "q") {
        x = &data.q;
    } else if (which.size() > 1 && which[0] == 'm') {
        const auto k = static_cast<std::size_t>(std::stoul(which.substr(1)));
        require(k >= 1 && k <= data.auxiliary.size(), "auxiliary index out of range: " + which);
        x = &data.auxiliary[k - 1];
    } else {
        throw InvalidArgument("--from must be p, q or m1..mK");
    }
    std::vector<std::string> header;
    for (Index j = 0; j < x->cols(); ++j) header.push_back("x" + std::to_string(j));
    std::vector<std::vector<std::string>> rows;
    for (Index i = 0; i < x->rows(); ++i) {
        std::vector<std::string> r;
        for (Index j = 0; j < x->cols(); ++j) r.push_back(format_number((*x)(i, j)));
        rows.push_back(std::move(r));
    }
    Output out(o.out_path);
    write_table(out.stream(), parse_format(o.format), header, rows);
    return 0;
}

int cmd_fit(const CommonOptions& o) {
    const auto c = load_config(o);
    const auto data = prepare_data(c, c.seed);
    const auto fit = fit_experiment(c, data, c.seed);
    Output out(o.out_path);
    out.stream() << to_json(fit, config_hash_hex(c)).dump(2) << '\n';
    for (std::size_t k = 0; k < fit.info.size(); ++k)
        std::cerr << "model " << k << ": loss " << format_number(fit.info[k].final_loss) << " (best epoch "
                  << fit.info[k].best_epoch << " of " << fit.info[k].epochs_run << ")\n";
    return 0;
}

int cmd_shift(const CommonOptions& o, const std::string& summary_path) {
    const auto c = load_config(o);
    const auto report = shift_diagnostic(c);
    std::vector<std::vector<std::string>> rows;
    for (const auto& p : report.points)
        rows.push_back({p.estimator, p.readout, p.sampled_from, format_number(p.x), format_number(p.estimated),
                        format_number(p.truth)});
    Output out(o.out_path);
    write_table(out.stream(), parse_format(o.format), {"estimator", "readout", "sampled_from", "x", "estimated", "truth"},
                rows);
    std::vector<std::vector<std::string>> summary;
    for (const auto& s : report.summary)
        summary.push_back({s.estimator, s.readout, s.sampled_from, format_number(s.mean_abs_error), std::to_string(s.n)});
    const std::vector<std::string> header{"estimator", "readout", "sampled_from", "mean_abs_error", "n"};
    if (summary_path.empty()) {
        write_table(std::cerr, OutputFormat::csv, header, summary);
    } else {
        Output s(summary_path);
        write_table(s.stream(), parse_format(o.format), header, summary);
    }
    return 0;
}

int cmd_rnd(const CommonOptions& o) {
    const auto c = load_config(o);
    const auto r = rnd_diagnostic(c);
    Output out(o.out_path);
    write_table(out.stream(), parse_format(o.format),
                {"m_samples", "violations", "over_threshold", "threshold", "max_finite_log_ratio", "p_samples",
                 "p_outside_m"},
                {{std::to_string(r.m_samples), std::to_string(r.violations), std::to_string(r.over_threshold),
                  format_number(r.threshold), format_number(r.max_finite), std::to_string(r.p_samples),
                  std::to_string(r.p_outside_m)}});
    return 0;
}

int cmd_hmc(const CommonOptions& o) {
    const auto c = load_config(o);
    const auto r = hmc_uncertainty(c);
    std::vector<std::vector<std::string>> rows;
    for (Index i = 0; i < r.grid.size(); ++i)
        rows.push_back({format_number(r.grid[i]), format_number(r.point_estimate[i]), format_number(r.stats.mean[i]),
                        format_number(r.stats.stddev[i])});
    Output out(o.out_path);
    write_table(out.stream(), parse_format(o.format), {"x", "map_log_ratio", "posterior_mean", "posterior_std"}, rows);
    std::cerr << "acceptance rate " << format_number(r.acceptance_rate) << ", median |dH| "
              << format_number(r.median_abs_energy_error) << '\n';
    if (r.acceptance_flagged) std::cerr << "warning: acceptance rate outside [0.2, 0.99]; adjust hmc.step_size\n";
    return 0;
}

int cmd_presets(bool as_json) {
    if (as_json) {
        Json arr = Json::array();
        for (const auto& c : all_presets()) arr.push_back(to_json(c));
        std::cout << arr.dump(2) << '\n';
        return 0;
    }
    for (const auto& c : all_presets())
        std::cout << c.name << (c.extended ? " [extended]" : "") << "  " << to_string(c.task) << "  " << c.description
                  << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multinomial density-ratio estimation: experiments, benchmarks and diagnostics"};
    app.require_subcommand(1);

    CommonOptions o;
    std::string from = "p";
    std::optional<Index> n;
    std::string bench_target;
    bool extended = false;
    std::string summary_path;
    bool presets_json = false;

    auto* sample_cmd = app.add_subcommand("sample", "draw samples from p, q or an auxiliary class");
    add_common(sample_cmd, o, false);
    sample_cmd->add_option("--from", from, "p, q, or m1..mK");
    sample_cmd->add_option("-n", n, "number of samples")->check(CLI::PositiveNumber);

    auto* fit_cmd = app.add_subcommand("fit", "fit the configured estimator and write the model as JSON");
    add_common(fit_cmd, o, false);

    auto* kl_cmd = app.add_subcommand("kl", "estimate KL(p || q) for every configured seed");
    add_common(kl_cmd, o, true);

    auto* mi_cmd = app.add_subcommand("mi", "estimate mutual information for every configured seed");
    add_common(mi_cmd, o, true);

    auto* bench_cmd = app.add_subcommand("bench", "run a preset or all estimation presets and check bounds");
    add_common(bench_cmd, o, true);
    bench_cmd->add_option("target", bench_target, "preset name or 'all' (omit with --config)");
    bench_cmd->add_flag("--extended", extended, "include extended presets in 'all'");

    auto* diag_cmd = app.add_subcommand("diagnose", "diagnostics");
    diag_cmd->require_subcommand(1);
    auto* shift_cmd = diag_cmd->add_subcommand("shift", "training/evaluation distribution-shift scatter data");
    add_common(shift_cmd, o, false);
    shift_cmd->add_option("--summary", summary_path, "write per-readout mean abs errors here (default stderr)");
    auto* rnd_cmd = diag_cmd->add_subcommand("rnd", "support check for ln(m/q) on m-samples");
    add_common(rnd_cmd, o, false);

    auto* hmc_cmd = app.add_subcommand("hmc", "posterior spread of the MDRE log-ratio over a grid");
    add_common(hmc_cmd, o, false);

    auto* presets_cmd = app.add_subcommand("presets", "list available presets");
    presets_cmd->add_flag("--json", presets_json, "print full preset configs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*sample_cmd) return cmd_sample(o, from, n);
        if (*fit_cmd) return cmd_fit(o);
        if (*kl_cmd) return cmd_runs(o, TaskKind::kl_1d);
        if (*mi_cmd) return cmd_runs(o, TaskKind::mi_highdim);
        if (*bench_cmd) return cmd_bench(o, bench_target, extended);
        if (*shift_cmd) return cmd_shift(o, summary_path);
        if (*rnd_cmd) return cmd_rnd(o);
        if (*hmc_cmd) return cmd_hmc(o);
        if (*presets_cmd) return cmd_presets(presets_json);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
