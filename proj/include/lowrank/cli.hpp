#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "lowrank/bench.hpp"
#include "lowrank/drivers.hpp"
#include "lowrank/matop.hpp"
#include "lowrank/matrix_market.hpp"
#include "lowrank/nystrom.hpp"
#include "lowrank/specnorm.hpp"
#include "lowrank/testgen.hpp"

// Command-line front end:
//
//   lowrank svd       factor a matrix file or a generated matrix
//   lowrank gen       write a test matrix (and its true singular values)
//   lowrank diffsnorm estimate ‖A - U·S·Vᴴ‖ for factors on disk
//   lowrank bench     run a dense or sparse accuracy/runtime sweep
//
// Factor files for prefix P are P_U.mtx, P_V.mtx (Matrix Market arrays) and
// P_S.txt (one value per line, 17 significant digits).

namespace lowrank {

namespace cli_detail {

inline std::string factor_path(const std::string& prefix, const char* which) {
    return prefix + "_" + which + (std::string(which) == "S" ? ".txt" : ".mtx");
}

inline void write_values(const std::string& path, const Vector& values) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open " + path + " for writing");
    }
    for (Index i = 0; i < values.size(); ++i) {
        out << format_double(values[i]) << '\n';
    }
    if (!out) {
        throw std::runtime_error("write to " + path + " failed");
    }
}

inline Vector read_values(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path);
    }
    std::vector<double> values;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.empty() || line == "\r") {
            continue;
        }
        std::istringstream fields(line);
        double v = 0.0;
        std::string extra;
        if (!(fields >> v) || (fields >> extra)) {
            throw ParseError(number, "expected a single number in " + path);
        }
        values.push_back(v);
    }
    return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

inline Matrix read_dense(const std::string& path) {
    const LinearOperator op = read_matrix_market(path);
    if (const Matrix* d = op.dense_storage()) {
        return *d;
    }
    return op.to_dense();
}

// Generated matrix for `svd --gen` and `gen`. Square dists 1-6 become
// nonnegative definite when `psd` is set.
inline LinearOperator generate(const std::string& dist, Index m, Index n, Index k, std::uint64_t seed, bool psd,
                               Vector* sigma) {
    if (dist == "hard30" || dist == "hard100") {
        return LinearOperator(propack_hard_diag(dist == "hard30" ? 30 : 100));
    }
    if (dist == "signflip") {
        if (n < 2) {
            throw ConfigError("signflip needs --n >= 2");
        }
        if (m != 0 && m != n) {
            throw ConfigError("signflip matrices are square");
        }
        return LinearOperator(sign_flipped_gaussian(n, seed));
    }
    const auto parsed = parse_distribution(dist);
    if (!parsed) {
        throw ConfigError("unknown distribution '" + dist + "'");
    }
    if (m < 1 || n < 1) {
        throw ConfigError("--m and --n are required for distribution " + dist);
    }
    const SpectrumSpec spec{*parsed, m, n, k};
    SyntheticMatrix s = psd ? synth_psd(spec, seed) : synth(spec, seed);
    if (sigma != nullptr) {
        *sigma = s.sigma;
    }
    return LinearOperator(std::move(s.a));
}

inline std::pair<Index, Index> parse_size(const std::string& text) {
    const auto x = text.find('x');
    try {
        if (x == std::string::npos) {
            const Index n = std::stoll(text);
            return {n, n};
        }
        return {std::stoll(text.substr(0, x)), std::stoll(text.substr(x + 1))};
    } catch (const std::exception&) {
        throw ConfigError("bad size '" + text + "' (expected N or MxN)");
    }
}

inline std::vector<Method> parse_methods(const std::vector<std::string>& names) {
    std::vector<Method> out;
    for (const auto& s : names) {
        const auto m = parse_method(s);
        if (!m) {
            throw ConfigError("unknown method '" + s + "'");
        }
        out.push_back(*m);
    }
    return out;
}

} // namespace cli_detail

/**
 * Entry point shared by the `lowrank` binary and the tests. Returns the
 * process exit status; usage and runtime errors go to `err`.
 */
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Randomized low-rank approximation: truncated SVD, PCA, Nystrom, spectral-norm estimation"};
    app.require_subcommand(1);

    // svd
    struct {
        std::string input, gen, out_prefix, mode = "svd";
        Index m = 0, n = 0, gen_k = 0, k = 0, oversample = 2;
        int its = 2, norm_its = kDefaultNormIterations;
        std::uint64_t seed = 0;
        bool center = false;
    } svd;
    auto* svd_cmd = app.add_subcommand("svd", "Factor a matrix and report the spectral-norm discrepancy");
    auto* in_opt = svd_cmd->add_option("--input", svd.input, "Matrix Market file");
    auto* gen_opt = svd_cmd->add_option("--gen", svd.gen, "Generate instead: 1..6, hard30, hard100, signflip");
    in_opt->excludes(gen_opt);
    svd_cmd->add_option("--m", svd.m, "Rows of the generated matrix");
    svd_cmd->add_option("--n", svd.n, "Columns of the generated matrix");
    svd_cmd->add_option("--gen-k", svd.gen_k, "Head length of the generated spectrum (default: --k)");
    svd_cmd->add_option("--k", svd.k, "Target rank")->required()->check(CLI::PositiveNumber);
    svd_cmd->add_option("--oversample", svd.oversample, "l - k")->capture_default_str()->check(CLI::NonNegativeNumber);
    svd_cmd->add_option("--its", svd.its, "Power iterations")->capture_default_str()->check(CLI::NonNegativeNumber);
    svd_cmd->add_option("--seed", svd.seed, "RNG seed")->capture_default_str();
    svd_cmd->add_option("--norm-its", svd.norm_its, "Iterations of the error estimate")->capture_default_str()
        ->check(CLI::PositiveNumber);
    svd_cmd->add_flag("--center", svd.center, "Subtract column means (PCA)");
    svd_cmd->add_option("--mode", svd.mode, "svd | eig | nystrom")->capture_default_str()
        ->check(CLI::IsMember({"svd", "eig", "nystrom"}));
    svd_cmd->add_option("--out-prefix", svd.out_prefix, "Prefix of the factor files")->required();

    // gen
    struct {
        std::string dist, out;
        Index m = 0, n = 0, k = 10;
        std::uint64_t seed = 0;
        bool psd = false;
    } gen;
    auto* gen_cmd = app.add_subcommand("gen", "Write a test matrix in Matrix Market format");
    gen_cmd->add_option("--dist", gen.dist, "1..6, hard30, hard100, signflip")->required();
    gen_cmd->add_option("--m", gen.m, "Rows");
    gen_cmd->add_option("--n", gen.n, "Columns");
    gen_cmd->add_option("--k", gen.k, "Head length of the spectrum")->capture_default_str()->check(CLI::PositiveNumber);
    gen_cmd->add_option("--seed", gen.seed, "RNG seed")->capture_default_str();
    gen_cmd->add_flag("--psd", gen.psd, "Nonnegative-definite U·diag(σ)·Uᴴ (square only)");
    gen_cmd->add_option("--out", gen.out, "Output file")->required();

    // diffsnorm
    struct {
        std::string input, factors;
        int its = kDefaultNormIterations;
        std::uint64_t seed = 0;
        bool center = false;
    } dn;
    auto* dn_cmd = app.add_subcommand("diffsnorm", "Estimate the spectral norm of A - U·S·Vᴴ");
    dn_cmd->add_option("--input", dn.input, "Matrix Market file")->required();
    dn_cmd->add_option("--factors", dn.factors, "Prefix of the factor files")->required();
    dn_cmd->add_option("--its", dn.its, "Power iterations")->capture_default_str()->check(CLI::PositiveNumber);
    dn_cmd->add_option("--seed", dn.seed, "RNG seed")->capture_default_str();
    dn_cmd->add_flag("--center", dn.center, "Compare against the column-centered matrix");

    // bench
    struct {
        std::string suite = "dense", csv, plotdata, input_dir;
        std::vector<std::string> methods{"rsvd"}, dists{"1", "2", "3", "4", "5"}, sizes{"1000"};
        std::vector<Index> ks{10}, oversamples{2, 4, 8, 16, 32};
        std::vector<int> its_list{2};
        int trials = 10, norm_its = kBenchNormIterations;
        std::uint64_t seed_base = 0;
        std::vector<std::string> inputs;
    } bn;
    auto* bn_cmd = app.add_subcommand("bench", "Run an accuracy/runtime sweep");
    bn_cmd->add_option("--suite", bn.suite, "dense | sparse")->capture_default_str()->check(CLI::IsMember({"dense", "sparse"}));
    bn_cmd->add_option("--methods", bn.methods, "rsvd, rpca, reig, nystrom")->delimiter(',');
    bn_cmd->add_option("--dists", bn.dists, "Dense suite distributions (1..6)")->delimiter(',');
    bn_cmd->add_option("--sizes", bn.sizes, "Dense suite sizes, N or MxN")->delimiter(',');
    auto* ks_opt = bn_cmd->add_option("--k-list", bn.ks, "Target ranks")->delimiter(',');
    auto* os_opt = bn_cmd->add_option("--oversample-list", bn.oversamples, "Values of l - k (sparse default: 2)")
                       ->delimiter(',');
    auto* its_opt = bn_cmd->add_option("--its-list", bn.its_list, "Power iteration counts (sparse default: 2,5,8)")
                        ->delimiter(',');
    bn_cmd->add_option("--trials", bn.trials, "Trials per tuple")->capture_default_str()->check(CLI::PositiveNumber);
    bn_cmd->add_option("--seed-base", bn.seed_base, "Seed of trial 0")->capture_default_str();
    bn_cmd->add_option("--norm-its", bn.norm_its, "Iterations of the error estimate")->capture_default_str()
        ->check(CLI::PositiveNumber);
    bn_cmd->add_option("--input-dir", bn.input_dir, "Sparse suite: directory of .mtx files");
    bn_cmd->add_option("--inputs", bn.inputs, "Sparse suite: explicit .mtx files")->delimiter(',');
    bn_cmd->add_option("--csv", bn.csv, "Output CSV")->required();
    bn_cmd->add_option("--plotdata", bn.plotdata, "Directory for per-curve plot data");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*svd_cmd) {
            if (svd.input.empty() == svd.gen.empty()) {
                err << "svd: exactly one of --input and --gen is required\n";
                return 2;
            }
            const bool self_adjoint = svd.mode != "svd";
            if (self_adjoint && svd.center) {
                err << "svd: --center applies to --mode svd only\n";
                return 2;
            }
            const LinearOperator op =
                svd.input.empty()
                    ? cli_detail::generate(svd.gen, svd.m, svd.n, svd.gen_k > 0 ? svd.gen_k : svd.k, svd.seed,
                                           self_adjoint, nullptr)
                    : read_matrix_market(svd.input);
            const SketchConfig cfg{svd.k, svd.k + svd.oversample, svd.its, svd.seed};
            const Method method = svd.mode == "eig"       ? Method::reig
                                  : svd.mode == "nystrom" ? Method::nystrom
                                  : svd.center            ? Method::rpca
                                                          : Method::rsvd;
            const MethodRun run = run_method(method, op, cfg);

            Matrix u, v;
            Vector s;
            if (const auto* f = std::get_if<LowRankSVD>(&run.factors)) {
                u = f->u;
                s = f->s;
                v = f->v;
            } else {
                const auto& e = std::get<EigenApprox>(run.factors);
                u = e.u;
                s = e.lam;
                v = e.u;
            }
            write_matrix_market(cli_detail::factor_path(svd.out_prefix, "U"), u);
            write_matrix_market(cli_detail::factor_path(svd.out_prefix, "V"), v);
            cli_detail::write_values(cli_detail::factor_path(svd.out_prefix, "S"), s);

            const double estimate =
                snorm(residual_operator(run), svd.norm_its, detail::mix_seed(svd.seed, 31)).value;
            out << "method=" << method_name(method) << " m=" << op.rows() << " n=" << op.cols() << " k=" << cfg.k
                << " l=" << cfg.width() << " its=" << cfg.its << " seed=" << cfg.seed
                << " diffsnorm=" << format_double(estimate) << " runtime_sec=" << format_double(run.runtime_sec)
                << '\n';
            return 0;
        }

        if (*gen_cmd) {
            Vector sigma;
            const LinearOperator op = cli_detail::generate(gen.dist, gen.m, gen.n, gen.k, gen.seed, gen.psd, &sigma);
            write_matrix_market(gen.out, op);
            if (parse_distribution(gen.dist)) {
                cli_detail::write_values(gen.out + ".sigma", sigma);
            }
            return 0;
        }

        if (*dn_cmd) {
            LinearOperator op = read_matrix_market(dn.input);
            if (dn.center) {
                op = centered(op);
            }
            Matrix u = cli_detail::read_dense(cli_detail::factor_path(dn.factors, "U"));
            Matrix v = cli_detail::read_dense(cli_detail::factor_path(dn.factors, "V"));
            Vector s = cli_detail::read_values(cli_detail::factor_path(dn.factors, "S"));
            const LinearOperator residual = residual_operator(op, std::move(u), std::move(s), std::move(v));
            out << format_double(snorm(residual, dn.its, dn.seed).value) << '\n';
            return 0;
        }

        if (*bn_cmd) {
            std::ofstream csv_file(bn.csv);
            if (!csv_file) {
                err << "bench: cannot open " << bn.csv << '\n';
                return 1;
            }
            CsvAppender csv(csv_file);
            const std::vector<Method> methods = cli_detail::parse_methods(bn.methods);
            if (bn.suite == "dense") {
                DenseSuiteConfig cfg;
                cfg.methods = methods;
                cfg.dists.clear();
                for (const auto& d : bn.dists) {
                    const auto parsed = parse_distribution(d);
                    if (!parsed) {
                        throw ConfigError("unknown distribution '" + d + "'");
                    }
                    cfg.dists.push_back(*parsed);
                }
                cfg.sizes.clear();
                for (const auto& s : bn.sizes) {
                    cfg.sizes.push_back(cli_detail::parse_size(s));
                }
                cfg.ks = bn.ks;
                cfg.oversamples = bn.oversamples;
                cfg.its_list = bn.its_list;
                cfg.trials = bn.trials;
                cfg.seed_base = bn.seed_base;
                cfg.norm_its = bn.norm_its;
                run_dense_suite(cfg, csv, err);
            } else {
                SparseSuiteConfig cfg;
                cfg.methods = methods;
                cfg.inputs = bn.inputs;
                if (!bn.input_dir.empty()) {
                    std::vector<std::string> found;
                    for (const auto& entry : std::filesystem::directory_iterator(bn.input_dir)) {
                        if (entry.is_regular_file() && entry.path().extension() == ".mtx") {
                            found.push_back(entry.path().string());
                        }
                    }
                    std::sort(found.begin(), found.end());
                    cfg.inputs.insert(cfg.inputs.end(), found.begin(), found.end());
                }
                if (cfg.inputs.empty()) {
                    err << "bench: the sparse suite needs --input-dir or --inputs\n";
                    return 2;
                }
                if (ks_opt->count() > 0) {
                    cfg.ks = bn.ks;
                }
                if (os_opt->count() > 0) {
                    cfg.oversamples = bn.oversamples;
                }
                if (its_opt->count() > 0) {
                    cfg.its_list = bn.its_list;
                }
                cfg.trials = bn.trials;
                cfg.seed_base = bn.seed_base;
                cfg.norm_its = bn.norm_its;
                run_sparse_suite(cfg, csv, err, out);
            }
            if (!bn.plotdata.empty()) {
                for (const auto& p : write_plot_data(csv.records(), bn.plotdata, bn.suite == "sparse")) {
                    out << "plotdata " << p.string() << '\n';
                }
            }
            return 0;
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

} // namespace lowrank
