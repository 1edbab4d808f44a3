#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "siftroth/siftroth.hpp"

namespace sr = siftroth;

namespace {

enum Exit { ok = 0, check_failure = 1, usage = 2, stage_error = 3 };

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::string out;
};

struct Overrides {
    std::string poly;
    std::optional<std::int64_t> n;
    std::string eq;
    std::string sift_z;
    std::string z;
    std::string set_path;
};

class UsageError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<std::int64_t> parse_int_list(const std::string& text)
{
    std::vector<std::int64_t> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            out.push_back(std::stoll(tok));
        } catch (const std::logic_error&) {
            throw UsageError("not an integer list: " + text);
        }
    }
    return out;
}

double parse_real(const std::string& text, const char* what)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used == text.size())
            return v;
    } catch (const std::logic_error&) {
    }
    throw UsageError(std::string(what) + " must be a number, got '" + text + "'");
}

sr::ExperimentConfig load(const Common& c, const Overrides& o)
{
    sr::ExperimentConfig cfg;
    if (!c.config_path.empty())
        cfg = sr::load_config(c.config_path);
    if (const char* env = std::getenv("SIFT_ROTH_SEED"))
        cfg.seed = std::stoull(env);
    if (const char* env = std::getenv("SIFT_ROTH_THREADS"))
        cfg.threads = static_cast<unsigned>(std::stoul(env));
    if (c.seed)
        cfg.seed = *c.seed;
    if (c.threads)
        cfg.threads = *c.threads;
    if (!o.poly.empty())
        cfg.poly = sr::parse_polynomial(o.poly);
    if (o.n)
        cfg.n_max = *o.n;
    if (!o.eq.empty())
        cfg.equation = sr::TranslationInvariantEquation(parse_int_list(o.eq));
    if (o.sift_z == "brun")
        cfg.sift_rule = sr::ZRule::brun();
    else if (!o.sift_z.empty())
        cfg.sift_rule = sr::ZRule::fixed(parse_real(o.sift_z, "--sift-z"));
    if (o.z == "logN/3")
        cfg.wtrick_z.reset();
    else if (!o.z.empty())
        cfg.wtrick_z = parse_real(o.z, "--z");
    if (!o.set_path.empty()) {
        cfg.subset.kind = sr::SubsetRule::Kind::file;
        cfg.subset.path = o.set_path;
    }
    sr::validate(cfg);
    return cfg;
}

void write_out(const Common& c, const std::string& text)
{
    if (c.out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(c.out, std::ios::binary);
    if (!f)
        throw sr::Error(sr::Errc::io, "cannot write " + c.out);
    f << text;
}

std::vector<std::uint64_t> residues(const std::vector<std::int64_t>& xs, std::uint64_t p)
{
    std::vector<std::uint64_t> out;
    for (auto x : xs)
        out.push_back(sr::detail::reduce(x, p));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void add_poly_options(CLI::App* sub, Overrides& o)
{
    sub->add_option("--F", o.poly, "polynomial, e.g. \"X(X+2)\"");
    sub->add_option("--N", o.n, "upper end of the interval [1, N]");
    sub->add_option("--sift-z", o.sift_z, "sifting level: \"brun\" or a number");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"sift-roth: sifted sets, the W-trick and Fourier counting of linear equations"};
    app.require_subcommand(1);
    Common common;
    Overrides o;
    app.add_option("--config", common.config_path, "JSON configuration file");
    app.add_option("--seed", common.seed, "RNG seed (overrides SIFT_ROTH_SEED)");
    app.add_option("--threads", common.threads, "worker threads, 0 = all (overrides SIFT_ROTH_THREADS)");
    app.add_option("--out", common.out, "output file (default stdout)");

    auto* sift_cmd = app.add_subcommand("sift", "sifted set S_F(N, z)");
    add_poly_options(sift_cmd, o);
    std::string sift_format = "json";
    sift_cmd->add_option("--format", sift_format, "json summary or list of elements")->check(CLI::IsMember({"json", "list"}));

    auto* wtrick_cmd = app.add_subcommand("wtrick", "residue class selection");
    add_poly_options(wtrick_cmd, o);
    wtrick_cmd->add_option("--z", o.z, "W-trick cutoff: \"logN/3\" or a number");
    wtrick_cmd->add_option("--set", o.set_path, "file with A (default: the whole sifted set)");

    auto* project_cmd = app.add_subcommand("project", "choose P and project the normalized class");
    add_poly_options(project_cmd, o);
    project_cmd->add_option("--z", o.z, "W-trick cutoff: \"logN/3\" or a number");
    project_cmd->add_option("--set", o.set_path, "file with A (default: the whole sifted set)");
    project_cmd->add_option("--L", o.eq, "equation coefficients, e.g. 1,1,-2");

    std::string set_path;
    std::uint64_t modulus = 0;
    auto* fourier_cmd = app.add_subcommand("fourier", "|fhat| table of a normalized indicator");
    fourier_cmd->add_option("--set", set_path, "set file")->required();
    fourier_cmd->add_option("--P", modulus, "modulus")->required()->check(CLI::PositiveNumber);

    std::string freqs;
    double width = 0;
    std::string convention = "phase";
    auto* bohr_cmd = app.add_subcommand("bohr", "Bohr set of a frequency set");
    bohr_cmd->add_option("--freqs", freqs, "comma-separated frequencies")->required();
    bohr_cmd->add_option("--width", width, "width")->required();
    bohr_cmd->add_option("--P", modulus, "modulus")->required()->check(CLI::PositiveNumber);
    bohr_cmd->add_option("--convention", convention, "phase or chord")->check(CLI::IsMember({"phase", "chord"}));

    auto* count_cmd = app.add_subcommand("count", "solution counts of L in a set");
    count_cmd->add_option("--set", set_path, "set file")->required();
    count_cmd->add_option("--P", modulus, "modulus")->required()->check(CLI::PositiveNumber);
    count_cmd->add_option("--L", o.eq, "equation coefficients, e.g. 1,1,-2");

    std::size_t max_m = 0;
    std::string cache;
    std::vector<double> etas{0.9, 0.7, 0.5};
    auto* thresholds_cmd = app.add_subcommand("thresholds", "extremal table, ghat, g*^-1 and h_L samples");
    thresholds_cmd->add_option("--L", o.eq, "equation coefficients, e.g. 1,1,-2");
    thresholds_cmd->add_option("--max-m", max_m, "table bound (default: constants.tableMax)");
    thresholds_cmd->add_option("--cache", cache, "table cache file, read if present, written otherwise");
    thresholds_cmd->add_option("--eta", etas, "eta samples");

    std::string report_format = "json";
    auto* pipeline_cmd = app.add_subcommand("pipeline", "end-to-end run with a report");
    pipeline_cmd->add_option("--format", report_format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

    bool corrupt = false;
    unsigned trials = 100;
    auto* verify_cmd = app.add_subcommand("verify", "named verification checks");
    verify_cmd->add_option("--trials", trials, "random trials per check");
    verify_cmd->add_flag("--corrupt-dft", corrupt, "test hook: break the transform normalization");

    app.add_subcommand("scan", "grid of measured constants as CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return usage;
    }

    sr::ExperimentConfig cfg;
    try {
        cfg = load(common, o);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return usage;
    } catch (const sr::Error& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return usage;
    } catch (const std::logic_error& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return usage;
    }

    try {
        const unsigned threads = cfg.threads;
        if (sift_cmd->parsed()) {
            const double z = cfg.resolved_sift_z();
            const auto s = sr::sift(cfg.poly, cfg.n_max, z, threads);
            if (sift_format == "list") {
                std::string text;
                for (auto v : s.elements)
                    text += std::to_string(v) + "\n";
                write_out(common, text);
            } else {
                const double n = static_cast<double>(cfg.n_max);
                sr::Json j;
                j["F"] = sr::to_string(cfg.poly);
                j["N"] = cfg.n_max;
                j["z"] = z;
                j["card"] = s.card();
                j["density"] = static_cast<double>(s.card()) / n;
                j["brun_ratio"] = cfg.n_max >= 3 ? sr::Json(static_cast<double>(s.card()) *
                                                           std::pow(std::log(n), static_cast<double>(cfg.poly.degree())) / n)
                                                 : sr::Json(nullptr);
                j["annihilated"] = s.annihilated;
                write_out(common, j.dump(2) + "\n");
            }
        } else if (wtrick_cmd->parsed() || project_cmd->parsed()) {
            const auto s = sr::sift(cfg.poly, cfg.n_max, cfg.resolved_sift_z(), threads);
            sr::Rng rng(cfg.seed);
            const auto a = sr::select_subset(cfg.subset, s, rng);
            const double delta = sr::relative_density(a, s);
            const auto ctx = sr::select_b0(a, cfg.poly, cfg.n_max, cfg.resolved_wtrick_z(), delta);
            sr::Json j;
            if (wtrick_cmd->parsed()) {
                j["z"] = ctx.z;
                j["M"] = ctx.modulus;
                j["b0"] = ctx.b0;
                j["classCard"] = ctx.class_card();
                j["coprimeResidues"] = ctx.coprime_residues;
                j["gain"] = static_cast<double>(cfg.n_max) > std::exp(std::exp(1.0)) ? sr::Json(sr::wtrick_gain(ctx))
                                                                                      : sr::Json(nullptr);
            } else {
                const auto p = sr::choose_modulus(cfg.n_max, ctx.modulus, cfg.equation);
                const auto proj = sr::project(ctx.normalized, p);
                j["M"] = ctx.modulus;
                j["b0"] = ctx.b0;
                j["P"] = p;
                j["card"] = proj.elements.size();
                j["elements"] = proj.elements;
            }
            write_out(common, j.dump(2) + "\n");
        } else if (fourier_cmd->parsed()) {
            const auto c = residues(sr::read_integer_set(set_path), modulus);
            const auto fh = sr::dft(sr::normalized_indicator(c, modulus), threads);
            std::string text = "t,abs,re,im\n";
            for (std::size_t t = 0; t < modulus; ++t)
                text += std::to_string(t) + "," + fmt(std::abs(fh[t])) + "," + fmt(fh[t].real()) + "," + fmt(fh[t].imag()) + "\n";
            write_out(common, text);
        } else if (bohr_cmd->parsed()) {
            const auto s = residues(parse_int_list(freqs), modulus);
            const auto conv = convention == "phase" ? sr::BohrConvention::phase_distance : sr::BohrConvention::chord;
            const auto b = sr::bohr_set(s, width, conv, modulus, threads);
            sr::Json j;
            j["P"] = modulus;
            j["frequencies"] = s;
            j["width"] = width;
            j["convention"] = convention;
            j["elements"] = b.elements;
            j["card"] = b.elements.size();
            const double bound = sr::bohr_size_bound(width, s.size(), modulus);
            j["sizeBound"] = bound;
            j["sizeBoundHolds"] = static_cast<double>(b.elements.size()) >= bound;
            write_out(common, j.dump(2) + "\n");
        } else if (count_cmd->parsed()) {
            const auto c = residues(sr::read_integer_set(set_path), modulus);
            const auto f = sr::indicator(c, modulus);
            const auto brute = sr::lambda_brute(f, cfg.equation, threads);
            const auto fourier = sr::lambda_fourier(f, cfg.equation, threads);
            const auto total = sr::count_solutions_in_set(c, cfg.equation, modulus, threads);
            sr::Json j;
            j["P"] = modulus;
            j["card"] = c.size();
            j["lambdaBrute"] = brute.real();
            j["lambdaFourier"] = fourier.real();
            j["nontrivialCount"] = total - c.size();
            write_out(common, j.dump(2) + "\n");
        } else if (thresholds_cmd->parsed()) {
            const std::size_t bound = max_m ? max_m : cfg.constants.table_max;
            std::optional<sr::ExtremalTable> table;
            if (!cache.empty()) {
                std::ifstream in(cache);
                if (in) {
                    auto t = sr::read_table(in);
                    if (t.equation() == cfg.equation && t.max_m() >= bound)
                        table = std::move(t);
                }
            }
            if (!table) {
                table = sr::build_extremal_table(cfg.equation, bound, std::max(bound, sr::default_table_guard));
                if (!cache.empty()) {
                    std::ofstream out(cache);
                    if (!out)
                        throw sr::Error(sr::Errc::io, "cannot write " + cache);
                    sr::write_table(out, *table);
                }
            }
            const sr::EnvelopeG env(*table);
            std::string text = "section,key,value,extra\n";
            for (std::size_t m = 1; m <= bound; ++m) {
                const auto& e = table->at(m);
                std::string w;
                for (std::size_t i = 0; i < e.witness.size(); ++i)
                    w += (i ? " " : "") + std::to_string(e.witness[i]);
                text += "table," + std::to_string(m) + "," + std::to_string(e.size) + "," + w + "\n";
            }
            for (std::size_t m = 1; m <= bound; ++m)
                text += "ghat," + std::to_string(m) + "," + fmt(env(m)) + ",\n";
            for (double eta : etas) {
                std::string inv, hv;
                try {
                    inv = std::to_string(sr::g_star_inverse(eta, env));
                } catch (const sr::Error&) {
                }
                try {
                    hv = fmt(sr::hL_varnavides(eta, env));
                } catch (const sr::Error&) {
                }
                text += "ginv," + fmt(eta) + "," + inv + ",\n";
                text += "h_varnavides," + fmt(eta) + "," + hv + ",\n";
                text += "h_closed_form," + fmt(eta) + "," + fmt(sr::hL_closed_form(eta, cfg.h_c)) + ",\n";
            }
            write_out(common, text);
        } else if (pipeline_cmd->parsed()) {
            const auto rep = sr::run_pipeline(cfg);
            write_out(common, sr::render(rep, sr::parse_report_format(report_format)));
            const auto* st = rep.find_stage("solution");
            const auto* found = st ? st->find("found") : nullptr;
            if (found && std::get<bool>(*found) && !sr::pipeline_succeeded(rep))
                return check_failure;
        } else if (verify_cmd->parsed()) {
            sr::SuiteOptions opt;
            opt.corrupt_dft_normalization = corrupt;
            opt.trials = trials;
            const auto result = sr::run_verification_suite(cfg, opt);
            std::string text;
            for (const auto& c : result.checks)
                text += std::string(c.pass ? "PASS " : "FAIL ") + c.name + " " + c.measured.dump() + "\n";
            write_out(common, text);
            return result.all_pass() ? ok : check_failure;
        } else {
            write_out(common, sr::grid_scan(cfg));
        }
    } catch (const sr::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return stage_error;
    }
    return ok;
}
